//! Systematic single-token corruptions of a valid trace.

use serde::Serialize;

use crate::trace::{BinOp, Expr, Placeholder, Segment, Span, Trace};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    /// `+` and `-` swap, `*` and `/` swap.
    OperatorFlip,
    /// A literal operand grows by one.
    OperandBump,
    /// Two derivations exchange their result placeholders.
    ResultSwap,
    /// A derivation's result becomes a fresh placeholder.
    ResultRename,
    /// Every word of a search query, placeholders included, is reversed.
    QueryScramble,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mutation {
    pub kind: MutationKind,
    /// 1-based operation the mutation touches first.
    pub step: usize,
    pub text: String,
}

pub fn math_mutations(trace: &Trace) -> Vec<Mutation> {
    let ops = op_positions(trace);
    let fresh = Placeholder(
        trace
            .defined()
            .iter()
            .chain(trace.used())
            .map(|p| p.0)
            .max()
            .unwrap_or(0)
            + 1,
    );
    let mut out = Vec::new();
    for (step, &i) in ops.iter().enumerate() {
        let Segment::Math(d) = &trace.segments()[i] else {
            continue;
        };
        for kind in [MutationKind::OperatorFlip, MutationKind::OperandBump] {
            for lhs in expr_variants(&d.lhs, kind) {
                let mut segs = trace.segments().to_vec();
                if let Segment::Math(m) = &mut segs[i] {
                    m.lhs = lhs;
                }
                out.push(Mutation {
                    kind,
                    step: step + 1,
                    text: render(trace, segs),
                });
            }
        }
        let mut segs = trace.segments().to_vec();
        if let Segment::Math(m) = &mut segs[i] {
            m.result = fresh;
        }
        out.push(Mutation {
            kind: MutationKind::ResultRename,
            step: step + 1,
            text: render(trace, segs),
        });
        for &j in &ops[step + 1..] {
            let (Segment::Math(a), Segment::Math(b)) = (&trace.segments()[i], &trace.segments()[j]) else {
                continue;
            };
            let mut segs = trace.segments().to_vec();
            let (ra, rb) = (a.result, b.result);
            if let Segment::Math(m) = &mut segs[i] {
                m.result = rb;
            }
            if let Segment::Math(m) = &mut segs[j] {
                m.result = ra;
            }
            out.push(Mutation {
                kind: MutationKind::ResultSwap,
                step: step + 1,
                text: render(trace, segs),
            });
        }
    }
    out
}

pub fn wiki_mutations(trace: &Trace) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (step, &i) in op_positions(trace).iter().enumerate() {
        let Segment::Wiki(s) = &trace.segments()[i] else {
            continue;
        };
        let mut segs = trace.segments().to_vec();
        if let Segment::Wiki(m) = &mut segs[i] {
            m.query = scramble(&s.query);
        }
        out.push(Mutation {
            kind: MutationKind::QueryScramble,
            step: step + 1,
            text: render(trace, segs),
        });
    }
    out
}

/// Reverses the characters of each whitespace-separated word.
pub fn scramble(query: &str) -> String {
    query
        .split(' ')
        .map(|w| w.chars().rev().collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

fn op_positions(trace: &Trace) -> Vec<usize> {
    trace
        .segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_operation())
        .map(|(i, _)| i)
        .collect()
}

fn render(trace: &Trace, segments: Vec<Segment>) -> String {
    let n = segments.len();
    Trace::from_parts(trace.domain(), segments, vec![Span::new(0, 0); n]).render()
}

fn flip(op: BinOp) -> BinOp {
    match op {
        BinOp::Add => BinOp::Sub,
        BinOp::Sub => BinOp::Add,
        BinOp::Mul => BinOp::Div,
        BinOp::Div => BinOp::Mul,
    }
}

fn expr_variants(e: &Expr, kind: MutationKind) -> Vec<Expr> {
    match e {
        Expr::Num(v) if kind == MutationKind::OperandBump => vec![Expr::Num(v + &Value::from_integer(1))],
        Expr::Num(_) | Expr::Var(_) => vec![],
        Expr::Neg(x) => expr_variants(x, kind)
            .into_iter()
            .map(|x| Expr::Neg(Box::new(x)))
            .collect(),
        Expr::Bin(op, l, r) => {
            let mut out = Vec::new();
            if kind == MutationKind::OperatorFlip {
                out.push(Expr::Bin(flip(*op), l.clone(), r.clone()));
            }
            out.extend(
                expr_variants(l, kind)
                    .into_iter()
                    .map(|l| Expr::Bin(*op, Box::new(l), r.clone())),
            );
            out.extend(
                expr_variants(r, kind)
                    .into_iter()
                    .map(|r| Expr::Bin(*op, l.clone(), Box::new(r))),
            );
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, Domain};

    #[test]
    fn enumerates_each_kind() {
        let t = parse_trace("[20 + 35 = y1] [90 - y1 = y2]. The answer is y2.", Domain::Math).unwrap();
        let ms = math_mutations(&t);
        let texts: Vec<&str> = ms.iter().map(|m| m.text.as_str()).collect();
        assert!(texts.contains(&"[20 - 35 = y1] [90 - y1 = y2]. The answer is y2."));
        assert!(texts.contains(&"[21 + 35 = y1] [90 - y1 = y2]. The answer is y2."));
        assert!(texts.contains(&"[20 + 35 = y1] [91 - y1 = y2]. The answer is y2."));
        assert!(texts.contains(&"[20 + 35 = y3] [90 - y1 = y2]. The answer is y2."));
        assert!(texts.contains(&"[20 + 35 = y2] [90 - y1 = y1]. The answer is y2."));
        // 2 flips, 3 bumps, 2 renames, 1 swap
        assert_eq!(ms.len(), 8);
    }

    #[test]
    fn scrambles_queries() {
        assert_eq!(scramble("y2 in what city"), "2y ni tahw ytic");
        let t = parse_trace(
            "[a b -Wiki-> y1] [y1 -NER(person)-> y2] [y2 c -Wiki-> y3]",
            Domain::Wiki,
        )
        .unwrap();
        let ms = wiki_mutations(&t);
        assert_eq!(ms.iter().map(|m| m.step).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(ms[1].text, "[a b -Wiki-> y1] [y1 -NER(person)-> y2] [2y c -Wiki-> y3]");
    }
}
