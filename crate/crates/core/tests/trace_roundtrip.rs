mod common;

use coa_core::trace::{placeholder_refs, BinOp, Expr};
use coa_core::{parse_trace, Domain, ParseErrorKind, Placeholder};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "the", "number", "of", "books", "so", "then", "find", "city", "answer", "is", "total",
];

fn prose(rng: &mut ChaCha8Rng, defined: &[Placeholder]) -> String {
    let n = rng.random_range(0..5);
    let mut out = Vec::new();
    for _ in 0..n {
        if !defined.is_empty() && rng.random_bool(0.2) {
            out.push(defined[rng.random_range(0..defined.len())].to_string());
        } else {
            out.push(WORDS[rng.random_range(0..WORDS.len())].to_string());
        }
    }
    format!(" {} ", out.join(" "))
}

fn expr(rng: &mut ChaCha8Rng, defined: &[Placeholder], depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.4) {
        return if !defined.is_empty() && rng.random_bool(0.5) {
            Expr::Var(defined[rng.random_range(0..defined.len())])
        } else {
            Expr::num(rng.random_range(0..1000))
        };
    }
    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.random_range(0..4)];
    Expr::bin(op, expr(rng, defined, depth - 1), expr(rng, defined, depth - 1))
}

/// A well-formed trace with fresh, increasing placeholders.
fn random_trace(seed: u64, domain: Domain) -> String {
    let mut rng = common::rng(seed);
    let mut defined: Vec<Placeholder> = Vec::new();
    let mut text = prose(&mut rng, &defined);
    for k in 1..=rng.random_range(1..8u32) {
        let out = Placeholder(k * 2 + rng.random_range(0..2));
        let op = match domain {
            Domain::Math => format!("[{} = {out}]", expr(&mut rng, &defined, 3)),
            Domain::Wiki if !defined.is_empty() && rng.random_bool(0.3) => {
                let src = defined[rng.random_range(0..defined.len())];
                format!("[{src} -NER(person)-> {out}]")
            }
            Domain::Wiki => format!("[find{} -Wiki-> {out}]", prose(&mut rng, &defined).trim_end()),
        };
        text.push_str(&op);
        defined.push(out);
        text.push_str(&prose(&mut rng, &defined));
    }
    text
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>(), wiki in any::<bool>()) {
        let domain = if wiki { Domain::Wiki } else { Domain::Math };
        let text = random_trace(seed, domain);
        let t = parse_trace(&text, domain).unwrap();
        let rendered = t.render();
        let back = parse_trace(&rendered, domain).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.render(), rendered);
    }

    #[test]
    fn defined_and_used_sets(seed in any::<u64>()) {
        let t = parse_trace(&random_trace(seed, Domain::Math), Domain::Math).unwrap();
        let defs: Vec<_> = t.operations().filter_map(|s| s.defines()).collect();
        let mut dedup = defs.clone();
        dedup.sort();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), defs.len());
        prop_assert!(t.used().is_subset(t.defined()));
    }

    #[test]
    fn second_definition_is_rejected(seed in any::<u64>()) {
        let mut text = random_trace(seed, Domain::Math);
        let t = parse_trace(&text, Domain::Math).unwrap();
        let first = *t.defined().iter().next().unwrap();
        text.push_str(&format!(" [1 + 1 = {first}]"));
        let err = parse_trace(&text, Domain::Math).unwrap_err();
        prop_assert_eq!(err.kind, ParseErrorKind::DuplicateDefinition);
    }

    #[test]
    fn arbitrary_input_never_panics(s in "[\\[\\]a-z0-9y=+*/ ().-]{0,60}") {
        for domain in [Domain::Math, Domain::Wiki] {
            if let Ok(t) = parse_trace(&s, domain) {
                let again = parse_trace(&t.render(), domain).unwrap();
                prop_assert_eq!(again, t);
            }
        }
    }

    #[test]
    fn errors_point_inside_the_input(s in "[\\[\\]a-z0-9y= -]{0,40}") {
        if let Err(e) = parse_trace(&s, Domain::Math) {
            prop_assert!(e.span.start <= e.span.end && e.span.end <= s.len());
        }
    }
}

#[test]
fn placeholder_lexing() {
    let refs: Vec<_> = placeholder_refs("y1 y02 xy3 y4_ y5. (y12)")
        .into_iter()
        .map(|r| r.1 .0)
        .collect();
    assert_eq!(refs, [1, 5, 12]);
}
