use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::expr::parse_expr;
use super::{
    placeholder_refs, Derivation, Domain, NerStep, ParseError, ParseErrorKind, Placeholder, SearchStep, Segment, Span,
    Trace,
};
use crate::wiki::EntityClass;

static NER_OP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\S+)\s*-NER\(\s*([^()]*?)\s*\)->\s*(\S+)\s*$").expect("valid regex"));
static WIKI_OP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)^(.*\S)?\s*-Wiki->\s*(\S*)\s*$").expect("valid regex"));

/// Parses `text` and checks single assignment and def-before-use.
pub fn parse_trace(text: &str, domain: Domain) -> Result<Trace, ParseError> {
    let trace = scan_trace(text, domain)?;
    check_structure(&trace)?;
    Ok(trace)
}

/// Syntax-only parse. The returned trace may violate single assignment or
/// def-before-use; use [`parse_trace`] unless those violations are what
/// you want to inspect.
pub fn scan_trace(text: &str, domain: Domain) -> Result<Trace, ParseError> {
    let bytes = text.as_bytes();
    let mut segments = Vec::new();
    let mut spans = Vec::new();
    let mut text_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'[' => {
                let rest = &text[i + 1..];
                let Some(off) = rest.find(['[', ']']) else {
                    return Err(ParseError::new(
                        ParseErrorKind::UnbalancedBracket,
                        Span::new(i, i + 1),
                        "'[' is never closed",
                    ));
                };
                let close = i + 1 + off;
                if bytes[close] == b'[' {
                    let end = text[close..].find(']').map_or(text.len(), |o| close + o + 1);
                    return Err(ParseError::new(
                        ParseErrorKind::MalformedOperation,
                        Span::new(i, end),
                        "nested brackets are not allowed",
                    ));
                }
                let content = &text[i + 1..close];
                if is_operation_like(content) {
                    let span = Span::new(i, close + 1);
                    let seg = parse_operation(content, domain)
                        .map_err(|msg| ParseError::new(ParseErrorKind::MalformedOperation, span, msg))?;
                    if text_start < i {
                        segments.push(Segment::Text(text[text_start..i].to_string()));
                        spans.push(Span::new(text_start, i));
                    }
                    segments.push(seg);
                    spans.push(span);
                    text_start = close + 1;
                }
                i = close + 1;
            }
            b']' => {
                return Err(ParseError::new(
                    ParseErrorKind::UnbalancedBracket,
                    Span::new(i, i + 1),
                    "']' without a matching '['",
                ))
            }
            _ => i += 1,
        }
    }
    if text_start < text.len() {
        segments.push(Segment::Text(text[text_start..].to_string()));
        spans.push(Span::new(text_start, text.len()));
    }
    Ok(Trace::from_parts(domain, segments, spans))
}

fn is_operation_like(content: &str) -> bool {
    content.contains('=') || content.contains("->")
}

fn parse_operation(content: &str, domain: Domain) -> Result<Segment, String> {
    if content.contains("->") {
        if domain == Domain::Math {
            return Err("tool operation in a math trace".into());
        }
        if content.contains("-NER(") {
            return parse_ner(content);
        }
        return parse_search(content);
    }
    if domain == Domain::Wiki {
        return Err("derivation in a wiki trace".into());
    }
    let (lhs, rhs) = content.rsplit_once('=').ok_or("missing '='")?;
    let result = placeholder(rhs.trim())?;
    let lhs = parse_expr(lhs)?;
    Ok(Segment::Math(Derivation { lhs, result }))
}

fn parse_ner(content: &str) -> Result<Segment, String> {
    let caps = NER_OP.captures(content).ok_or("expected '[y<j> -NER(class)-> y<k>]'")?;
    let source = placeholder(&caps[1])?;
    let class: EntityClass = caps[2].parse()?;
    let output = placeholder(&caps[3])?;
    Ok(Segment::Ner(NerStep { source, class, output }))
}

fn parse_search(content: &str) -> Result<Segment, String> {
    let caps = WIKI_OP.captures(content).ok_or("expected '[query -Wiki-> y<k>]'")?;
    let query = caps.get(1).map(|m| m.as_str().trim()).unwrap_or("");
    if query.is_empty() {
        return Err("empty search query".into());
    }
    let output = placeholder(&caps[2])?;
    Ok(Segment::Wiki(SearchStep {
        query: query.to_string(),
        output,
    }))
}

fn placeholder(s: &str) -> Result<Placeholder, String> {
    Placeholder::parse(s).ok_or_else(|| format!("expected a placeholder like y1, found {s:?}"))
}

pub(crate) fn check_structure(trace: &Trace) -> Result<(), ParseError> {
    let mut defined = BTreeSet::new();
    for (seg, span) in trace.segments().iter().zip(trace.spans()) {
        if let Segment::Text(t) = seg {
            for (range, p) in placeholder_refs(t) {
                if !defined.contains(&p) {
                    return Err(ParseError::new(
                        ParseErrorKind::UseBeforeDefinition,
                        Span::new(span.start + range.start, span.start + range.end),
                        format!("{p} is mentioned before it is defined"),
                    ));
                }
            }
        } else {
            if let Some(p) = seg.uses().into_iter().find(|p| !defined.contains(p)) {
                return Err(ParseError::new(
                    ParseErrorKind::UseBeforeDefinition,
                    *span,
                    format!("{p} is used before it is defined"),
                ));
            }
            if let Some(p) = seg.defines() {
                if !defined.insert(p) {
                    return Err(ParseError::new(
                        ParseErrorKind::DuplicateDefinition,
                        *span,
                        format!("{p} is defined more than once"),
                    ));
                }
            }
        }
    }
    Ok(())
}
