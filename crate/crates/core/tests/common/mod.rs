//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use coa_core::trace::{BinOp, Derivation, Expr};
use coa_core::wiki::Article;
use coa_core::{Placeholder, Value};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_expr(rng: &mut ChaCha8Rng, defined: &[Placeholder], depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.35) {
        if !defined.is_empty() && rng.random_bool(0.6) {
            return Expr::Var(defined[rng.random_range(0..defined.len())]);
        }
        return Expr::num(rng.random_range(0..50));
    }
    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.random_range(0..4)];
    let l = random_expr(rng, defined, depth - 1);
    let r = random_expr(rng, defined, depth - 1);
    if rng.random_bool(0.1) {
        Expr::Neg(Box::new(Expr::bin(op, l, r)))
    } else {
        Expr::bin(op, l, r)
    }
}

/// An acyclic system over up to `max_vars` placeholders with random,
/// non-contiguous indices, listed in shuffled order.
pub fn random_system(rng: &mut ChaCha8Rng, max_vars: usize) -> Vec<Derivation> {
    let n = rng.random_range(1..=max_vars);
    let mut indices: Vec<u32> = (1..=40).collect();
    indices.shuffle(rng);
    let mut defined = Vec::new();
    let mut out = Vec::new();
    for &ix in &indices[..n] {
        let lhs = random_expr(rng, &defined, 3);
        let p = Placeholder(ix);
        out.push(Derivation { lhs, result: p });
        defined.push(p);
    }
    out.shuffle(rng);
    out
}

fn brute_eval(e: &Expr, env: &HashMap<Placeholder, BigRational>) -> Option<Result<BigRational, ()>> {
    Some(match e {
        Expr::Num(v) => Ok(v.as_big().clone()),
        Expr::Var(p) => Ok(env.get(p)?.clone()),
        Expr::Neg(x) => brute_eval(x, env)?.map(|v| -v),
        Expr::Bin(op, l, r) => {
            let (l, r) = (brute_eval(l, env)?, brute_eval(r, env)?);
            match (l, r) {
                (Ok(a), Ok(b)) => match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div if b.is_zero() => Err(()),
                    BinOp::Div => Ok(a / b),
                },
                _ => Err(()),
            }
        }
    })
}

/// Sweeps the derivation list until nothing changes. `Err` if any
/// derivation divides by zero.
pub fn brute_force_solve(system: &[Derivation]) -> Result<BTreeMap<Placeholder, Value>, ()> {
    let mut env: HashMap<Placeholder, BigRational> = HashMap::new();
    loop {
        let mut changed = false;
        for d in system {
            if env.contains_key(&d.result) {
                continue;
            }
            if let Some(v) = brute_eval(&d.lhs, &env) {
                env.insert(d.result, v?);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(env.into_iter().map(|(k, v)| (k, Value::from_big(v))).collect())
}

pub fn rational(n: i64, d: i64) -> Value {
    Value::from_big(BigRational::new(BigInt::from(n), BigInt::from(d)))
}

const VOCAB: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu",
];

fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    (0..n)
        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<Article> {
    let n = rng.random_range(2..=12);
    (0..n)
        .map(|i| Article {
            id: format!("d{i:02}"),
            title: words(rng, 1, 3),
            text: words(rng, 0, 30),
        })
        .collect()
}

pub fn random_query(rng: &mut ChaCha8Rng) -> String {
    words(rng, 1, 4)
}

/// Okapi BM25 with `ln(1 + (N - df + 0.5)/(df + 0.5))` idf, the title
/// counted `title_weight` times, distinct query terms only. Returns
/// `(id, score)` for documents scoring above zero, best first, ties by id.
pub fn okapi(corpus: &[Article], query: &str, k1: f64, b: f64, title_weight: usize) -> Vec<(String, f64)> {
    let docs: Vec<(String, Vec<String>)> = corpus
        .iter()
        .map(|a| {
            let mut toks = Vec::new();
            for _ in 0..title_weight {
                toks.extend(a.title.split_whitespace().map(str::to_string));
            }
            toks.extend(a.text.split_whitespace().map(str::to_string));
            (a.id.clone(), toks)
        })
        .collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.1.len()).sum::<usize>() as f64 / n;
    let mut terms: Vec<&str> = query.split_whitespace().collect();
    terms.sort();
    terms.dedup();
    let mut out = Vec::new();
    for (id, toks) in &docs {
        let dl = toks.len() as f64;
        let mut score = 0.0;
        for t in &terms {
            let df = docs.iter().filter(|d| d.1.iter().any(|x| x == t)).count() as f64;
            let tf = toks.iter().filter(|x| x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if score > 0.0 {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    out
}

/// Finish times of the two-stage pipeline from the recurrence
/// `E_i = max(F1_i, S2_{i-k})`, `S2_i = max(E_i, F2_{i-1})`,
/// `F2_i = S2_i + T_i`, `F1_i = E_{i-1} + D_i`.
pub fn pipeline_oracle(decode: &[Duration], tool: &[Duration], k: usize) -> Vec<Duration> {
    let n = decode.len();
    let mut enq = vec![Duration::ZERO; n];
    let mut s2 = vec![Duration::ZERO; n];
    let mut f2 = vec![Duration::ZERO; n];
    for i in 0..n {
        let f1 = if i == 0 { decode[0] } else { enq[i - 1] + decode[i] };
        enq[i] = if i >= k { f1.max(s2[i - k]) } else { f1 };
        s2[i] = if i == 0 { enq[0] } else { enq[i].max(f2[i - 1]) };
        f2[i] = s2[i] + tool[i];
    }
    f2
}

#[derive(Debug, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub domain: String,
    pub style: String,
    pub text: String,
    pub gold: String,
    pub expected: Option<String>,
    #[serde(rename = "match")]
    pub matched: bool,
}

pub fn eval_cases() -> Vec<EvalCase> {
    include_str!("../data/eval_cases.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Final value of a math trace by forward evaluation: the placeholder named
/// after the last "answer is", else the last derivation's result. `None`
/// when that placeholder cannot be evaluated.
pub fn oracle_final_answer(text: &str) -> Option<Value> {
    let trace = coa_core::parse_trace(text, coa_core::Domain::Math).ok()?;
    let derivations: Vec<Derivation> = trace.derivations().cloned().collect();
    let values = brute_force_solve(&derivations).ok()?;
    let lower = text.to_ascii_lowercase();
    let named = lower.rfind("answer is").and_then(|i| {
        let rest = &lower[i + "answer is".len()..];
        let word = rest.split_whitespace().next()?;
        let digits: String = word
            .strip_prefix('y')?
            .chars()
            .take_while(char::is_ascii_digit)
            .collect();
        digits.parse().ok().map(Placeholder)
    });
    let var = named.or_else(|| derivations.last().map(|d| d.result))?;
    values.get(&var).cloned()
}

/// Extraction and match both as labelled.
pub fn case_passes(c: &EvalCase) -> bool {
    use coa_core::eval::{exact_match, extract_answer, AnswerStyle, Extracted};
    let style: AnswerStyle = c.style.parse().unwrap();
    let domain = if c.domain == "math" {
        coa_core::Domain::Math
    } else {
        coa_core::Domain::Wiki
    };
    let got = extract_answer(&c.text, style);
    let extraction_ok = match (&got, &c.expected) {
        (None, None) => true,
        (Some(Extracted::Number(v)), Some(e)) => Value::parse_number(e).as_ref() == Some(v),
        (Some(Extracted::Text(t)), Some(e)) => t == e,
        _ => false,
    };
    extraction_ok && exact_match(got.as_ref(), &c.gold, domain) == c.matched
}
