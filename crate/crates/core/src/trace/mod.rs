//! Abstract reasoning traces.
//!
//! A trace is natural-language text with bracketed operations whose results
//! are abstract placeholders `y1`, `y2`, ... Two operation families exist:
//!
//! * math derivations, `[20 + 35 = y1]`
//! * wiki tool calls, `[director of ... -Wiki-> y1]` and `[y1 -NER(person)-> y2]`
//!
//! Everything outside a well-formed operation is kept verbatim as text.
//! Placeholder mentions in text (for example `The answer is y2.`) are
//! ordinary text that [`Trace::substitute`] still rewrites.
//!
//! Literal `[` in question text has no escape form. A bracketed span is
//! treated as an operation only when it contains `=` or `->`; other
//! balanced spans such as `[sic]` stay text.

mod expr;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{BinOp, Expr};
pub use parse::{parse_trace, scan_trace};

use crate::wiki::EntityClass;

/// Abstract placeholder `y<k>`, `k >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Placeholder(pub u32);

impl Placeholder {
    /// Parses the canonical surface form. `y0`, `y01`, `x` and `Y1` are not
    /// placeholders.
    pub fn parse(s: &str) -> Option<Placeholder> {
        let digits = s.strip_prefix('y')?;
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(Placeholder)
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y{}", self.0)
    }
}

impl Serialize for Placeholder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Placeholder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Placeholder::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("not a placeholder: {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Math,
    Wiki,
}

impl std::str::FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "math" => Ok(Domain::Math),
            "wiki" => Ok(Domain::Wiki),
            other => Err(format!("unknown domain {other:?} (expected math or wiki)")),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Math => "math",
            Domain::Wiki => "wiki",
        })
    }
}

/// Byte range into the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn range(self) -> Range<usize> {
        self.start..self.end
    }
}

/// `[lhs = result]`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub lhs: Expr,
    pub result: Placeholder,
}

/// `[query -Wiki-> output]`; `query` may mention earlier placeholders.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SearchStep {
    pub query: String,
    pub output: Placeholder,
}

impl SearchStep {
    pub fn refs(&self) -> Vec<Placeholder> {
        placeholder_refs(&self.query).into_iter().map(|(_, p)| p).collect()
    }
}

/// `[source -NER(class)-> output]`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NerStep {
    pub source: Placeholder,
    pub class: EntityClass,
    pub output: Placeholder,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Text(String),
    Math(Derivation),
    Wiki(SearchStep),
    Ner(NerStep),
}

impl Segment {
    pub fn is_operation(&self) -> bool {
        !matches!(self, Segment::Text(_))
    }

    /// Placeholder bound by this segment, if it is an operation.
    pub fn defines(&self) -> Option<Placeholder> {
        match self {
            Segment::Text(_) => None,
            Segment::Math(d) => Some(d.result),
            Segment::Wiki(s) => Some(s.output),
            Segment::Ner(n) => Some(n.output),
        }
    }

    /// Placeholders read by this segment, in textual order.
    pub fn uses(&self) -> Vec<Placeholder> {
        match self {
            Segment::Text(t) => placeholder_refs(t).into_iter().map(|(_, p)| p).collect(),
            Segment::Math(d) => d.lhs.var_occurrences(),
            Segment::Wiki(s) => s.refs(),
            Segment::Ner(n) => vec![n.source],
        }
    }

    fn render(&self, out: &mut String) {
        match self {
            Segment::Text(t) => out.push_str(t),
            Segment::Math(d) => {
                out.push('[');
                out.push_str(&d.lhs.to_string());
                out.push_str(" = ");
                out.push_str(&d.result.to_string());
                out.push(']');
            }
            Segment::Wiki(s) => {
                out.push('[');
                out.push_str(&s.query);
                out.push_str(" -Wiki-> ");
                out.push_str(&s.output.to_string());
                out.push(']');
            }
            Segment::Ner(n) => {
                out.push_str(&format!("[{} -NER({})-> {}]", n.source, n.class, n.output));
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ParseErrorKind {
    UnbalancedBracket,
    MalformedOperation,
    DuplicateDefinition,
    UseBeforeDefinition,
}

/// Parse diagnostic with the byte span it refers to.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("{kind:?} at bytes {}..{}: {message}", span.start, span.end)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, span: Span, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            span,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "start": self.span.start,
            "end": self.span.end,
            "message": self.message,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unbound placeholders: {}", .0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))]
pub struct UnboundPlaceholder(pub Vec<Placeholder>);

/// A parsed trace.
///
/// Equality is structural: two traces are equal when their domain and
/// segments are equal, regardless of where the segments sat in the source.
#[derive(Clone, Debug)]
pub struct Trace {
    domain: Domain,
    segments: Vec<Segment>,
    spans: Vec<Span>,
    defined: BTreeSet<Placeholder>,
    used: BTreeSet<Placeholder>,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.segments == other.segments
    }
}

impl Eq for Trace {}

impl Trace {
    pub(crate) fn from_parts(domain: Domain, segments: Vec<Segment>, spans: Vec<Span>) -> Self {
        let mut defined = BTreeSet::new();
        let mut used = BTreeSet::new();
        for seg in &segments {
            used.extend(seg.uses());
            if let Some(p) = seg.defines() {
                defined.insert(p);
            }
        }
        Trace {
            domain,
            segments,
            spans,
            defined,
            used,
        }
    }

    /// Builds a trace from segments, checking the structural invariants.
    pub fn from_segments(domain: Domain, segments: Vec<Segment>) -> Result<Self, ParseError> {
        let spans = vec![Span::new(0, 0); segments.len()];
        let trace = Trace::from_parts(domain, segments, spans);
        parse::check_structure(&trace)?;
        Ok(trace)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Source span of each segment, parallel to [`Trace::segments`].
    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn defined(&self) -> &BTreeSet<Placeholder> {
        &self.defined
    }

    pub fn used(&self) -> &BTreeSet<Placeholder> {
        &self.used
    }

    pub fn operations(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.is_operation())
    }

    pub fn operation_count(&self) -> usize {
        self.operations().count()
    }

    pub fn derivations(&self) -> impl Iterator<Item = &Derivation> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Math(d) => Some(d),
            _ => None,
        })
    }

    /// Canonical text. Parsing it again yields an equal trace.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            seg.render(&mut out);
        }
        out
    }

    /// Replaces every placeholder occurrence with its bound value. Math
    /// operations render as `[expr = value]` with operands substituted.
    pub fn substitute<V: fmt::Display>(
        &self,
        bindings: &BTreeMap<Placeholder, V>,
    ) -> Result<String, UnboundPlaceholder> {
        let missing: Vec<Placeholder> = self
            .used
            .iter()
            .chain(self.defined.iter())
            .filter(|p| !bindings.contains_key(p))
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !missing.is_empty() {
            return Err(UnboundPlaceholder(missing));
        }
        let show = |p: Placeholder| bindings[&p].to_string();
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(&replace_refs(t, &show)),
                Segment::Math(d) => {
                    let lhs = d.lhs.render_with(&|p| group_operand(show(p)));
                    out.push_str(&format!("[{lhs} = {}]", show(d.result)));
                }
                Segment::Wiki(s) => {
                    out.push_str(&format!(
                        "[{} -Wiki-> {}]",
                        replace_refs(&s.query, &show),
                        show(s.output)
                    ));
                }
                Segment::Ner(n) => {
                    out.push_str(&format!("[{} -NER({})-> {}]", show(n.source), n.class, show(n.output)));
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Negative and fractional values are parenthesized when they replace an
/// operand so the substituted expression still evaluates to the same result.
fn group_operand(s: String) -> String {
    if s.starts_with('-') || s.contains('/') {
        format!("({s})")
    } else {
        s
    }
}

/// Placeholder mentions in free text: `y<k>` not glued to neighbouring
/// alphanumerics or underscores.
pub fn placeholder_refs(text: &str) -> Vec<(Range<usize>, Placeholder)> {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    let mut out = Vec::new();
    let mut prev: Option<char> = None;
    for (i, c) in text.char_indices() {
        if c == 'y' && !prev.is_some_and(is_word) {
            let digits_end = text[i + 1..]
                .find(|d: char| !d.is_ascii_digit())
                .map_or(text.len(), |off| i + 1 + off);
            let glued = text[digits_end..].chars().next().is_some_and(is_word);
            if !glued {
                if let Some(p) = Placeholder::parse(&text[i..digits_end]) {
                    out.push((i..digits_end, p));
                }
            }
        }
        prev = Some(c);
    }
    out
}

pub(crate) fn replace_refs(text: &str, show: &dyn Fn(Placeholder) -> String) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (range, p) in placeholder_refs(text) {
        out.push_str(&text[last..range.start]);
        out.push_str(&show(p));
        last = range.end;
    }
    out.push_str(&text[last..]);
    out
}
