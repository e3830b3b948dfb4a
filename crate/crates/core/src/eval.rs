//! Answer extraction, exact match, reasoning-step counting and
//! stratification of evaluation records.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::trace::Domain;
use crate::value::Value;

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(-)?([$€£])?(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?").expect("valid regex"));
static BRACKETED_DERIVATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[[^\[\]]*=[^\[\]]*\]").expect("valid regex"));
static EQUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"=\s*[$€£]?-?\d").expect("valid regex"));
static SENTENCE_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?](?:\s+|$)|\n").expect("valid regex"));

const ANSWER_MARKER: &str = "The answer is ";
const FINISH_MARKER: &str = "Action: finish[";

/// Last number in `text`: optional sign, optional leading currency symbol,
/// comma-grouped digits, optional decimals. A `-` glued to a preceding
/// letter or digit is read as subtraction, not a sign.
pub fn extract_math_answer(text: &str) -> Option<Value> {
    let caps = NUMBER.captures_iter(text).last()?;
    let whole = caps.get(0)?;
    let negative = caps.get(1).is_some()
        && !text[..whole.start()]
            .chars()
            .next_back()
            .is_some_and(char::is_alphanumeric);
    let digits: String = caps[3].chars().filter(|&c| c != ',').collect();
    let frac = caps.get(4).map_or("", |m| m.as_str());
    let v = Value::parse_literal(&format!("{digits}{frac}"))?;
    Some(if negative { -v } else { v })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStyle {
    /// Last number anywhere in the text.
    LastNumber,
    /// Text after the last "The answer is ".
    AnswerIs,
    /// Text inside the last "Action: finish[...]".
    FireActFinish,
}

impl AnswerStyle {
    pub fn default_for(domain: Domain) -> Self {
        match domain {
            Domain::Math => AnswerStyle::LastNumber,
            Domain::Wiki => AnswerStyle::AnswerIs,
        }
    }
}

impl std::str::FromStr for AnswerStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "last-number" | "last_number" => Ok(AnswerStyle::LastNumber),
            "answer-is" | "answer_is" => Ok(AnswerStyle::AnswerIs),
            "fireact" | "finish" => Ok(AnswerStyle::FireActFinish),
            other => Err(format!(
                "unknown answer style {other:?} (expected last-number, answer-is or fireact)"
            )),
        }
    }
}

pub fn extract_text_answer(text: &str, style: AnswerStyle) -> Option<String> {
    match style {
        AnswerStyle::LastNumber => extract_math_answer(text).map(|v| v.to_string()),
        AnswerStyle::AnswerIs => {
            let start = text.rfind(ANSWER_MARKER)? + ANSWER_MARKER.len();
            let line = text[start..].lines().next().unwrap_or("");
            let answer = line.trim().trim_end_matches(['.', '!', '?', ';', ':', ',']).trim_end();
            (!answer.is_empty()).then(|| answer.to_string())
        }
        AnswerStyle::FireActFinish => {
            let start = text.rfind(FINISH_MARKER)? + FINISH_MARKER.len();
            let mut depth = 0usize;
            for (i, c) in text[start..].char_indices() {
                match c {
                    '[' => depth += 1,
                    ']' if depth == 0 => return Some(text[start..start + i].trim().to_string()),
                    ']' => depth -= 1,
                    _ => {}
                }
            }
            None
        }
    }
}

/// Case-folded, whitespace-collapsed, with leading and trailing punctuation removed.
pub fn normalize_answer(s: &str) -> String {
    let words: Vec<String> = s.split_whitespace().map(str::to_lowercase).collect();
    words.join(" ").trim_matches(|c: char| !c.is_alphanumeric()).to_string()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extracted {
    Number(Value),
    Text(String),
}

impl fmt::Display for Extracted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extracted::Number(v) => write!(f, "{v}"),
            Extracted::Text(t) => f.write_str(t),
        }
    }
}

impl Serialize for Extracted {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn extract_answer(text: &str, style: AnswerStyle) -> Option<Extracted> {
    match style {
        AnswerStyle::LastNumber => extract_math_answer(text).map(Extracted::Number),
        _ => extract_text_answer(text, style).map(Extracted::Text),
    }
}

/// Math compares numbers as rationals; wiki compares normalized strings.
pub fn exact_match(extracted: Option<&Extracted>, gold: &str, domain: Domain) -> bool {
    let Some(extracted) = extracted else { return false };
    match domain {
        Domain::Math => {
            let got = match extracted {
                Extracted::Number(v) => Some(v.clone()),
                Extracted::Text(t) => extract_math_answer(t),
            };
            got.is_some() && got == gold_number(gold)
        }
        Domain::Wiki => normalize_answer(&extracted.to_string()) == normalize_answer(gold),
    }
}

/// A gold answer that is a single number, fractions included, is read
/// whole; otherwise its last number counts.
fn gold_number(gold: &str) -> Option<Value> {
    Value::parse_number(gold.trim()).or_else(|| extract_math_answer(gold))
}

/// Reasoning steps in a trace or answer.
///
/// Math: bracketed derivations if any are present, otherwise sentences that
/// contain `=` followed by a number. Wiki: search steps.
pub fn count_steps(text: &str, domain: Domain) -> usize {
    match domain {
        Domain::Math => {
            let bracketed = BRACKETED_DERIVATION.find_iter(text).count();
            if bracketed > 0 {
                return bracketed;
            }
            SENTENCE_END.split(text).filter(|s| EQUATION.is_match(s)).count()
        }
        Domain::Wiki => text.matches("-Wiki->").count(),
    }
}

/// Step-count bucket: 0 through 5, then everything above 5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepBucket(u8);

impl StepBucket {
    pub const OVER_FIVE: StepBucket = StepBucket(6);

    pub fn of(steps: usize) -> Self {
        StepBucket(steps.min(6) as u8)
    }

    pub fn all() -> impl Iterator<Item = StepBucket> {
        (0..=6).map(StepBucket)
    }
}

impl fmt::Display for StepBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 > 5 {
            f.write_str(">5")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for StepBucket {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub id: String,
    pub prediction_text: String,
    pub extracted_answer: Option<Extracted>,
    pub gold_answer: String,
    #[serde(rename = "match")]
    pub matched: bool,
    pub predicted_steps: usize,
    pub gold_steps: usize,
}

impl EvalRecord {
    pub fn score(id: &str, prediction: &str, gold_answer: &str, domain: Domain, style: AnswerStyle) -> EvalRecord {
        let extracted = extract_answer(prediction, style);
        let matched = exact_match(extracted.as_ref(), gold_answer, domain);
        EvalRecord {
            id: id.to_string(),
            prediction_text: prediction.to_string(),
            extracted_answer: extracted,
            gold_answer: gold_answer.to_string(),
            matched,
            predicted_steps: count_steps(prediction, domain),
            gold_steps: count_steps(gold_answer, domain),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Cell {
    pub count: usize,
    pub correct: usize,
    /// `None` when the cell is masked.
    pub accuracy: Option<f64>,
    pub masked: bool,
}

/// Accuracy by (predicted steps, gold steps) bucket.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StratifiedTable {
    pub cells: BTreeMap<(StepBucket, StepBucket), Cell>,
}

impl StratifiedTable {
    pub fn total(&self) -> usize {
        self.cells.values().map(|c| c.count).sum()
    }

    /// `predicted_bucket,gold_bucket,count,correct,accuracy`; masked cells
    /// leave accuracy empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("predicted_bucket,gold_bucket,count,correct,accuracy\n");
        for ((p, g), c) in &self.cells {
            let acc = c.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            out.push_str(&format!("{p},{g},{},{},{acc}\n", c.count, c.correct));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cells: Vec<_> = self
            .cells
            .iter()
            .map(|((p, g), c)| serde_json::json!({"predicted": p, "gold": g, "count": c.count, "correct": c.correct, "accuracy": c.accuracy, "masked": c.masked}))
            .collect();
        serde_json::Value::Array(cells)
    }
}

/// Off-diagonal cells with fewer than `min_cell` records are masked; their
/// counts are kept.
pub fn stratify<'a>(records: impl IntoIterator<Item = &'a EvalRecord>, min_cell: usize) -> StratifiedTable {
    let mut table = StratifiedTable::default();
    for r in records {
        let cell = table
            .cells
            .entry((StepBucket::of(r.predicted_steps), StepBucket::of(r.gold_steps)))
            .or_default();
        cell.count += 1;
        cell.correct += r.matched as usize;
    }
    for ((p, g), c) in table.cells.iter_mut() {
        c.masked = p != g && c.count < min_cell;
        c.accuracy = (!c.masked).then(|| c.correct as f64 / c.count as f64);
    }
    table
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BucketSummary {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    pub n: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
    /// Keyed by gold step bucket.
    pub by_gold_steps: BTreeMap<StepBucket, BucketSummary>,
}

pub fn summarize<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> EvalSummary {
    let mut n = 0;
    let mut correct = 0;
    let mut by: BTreeMap<StepBucket, BucketSummary> = BTreeMap::new();
    for r in records {
        n += 1;
        correct += r.matched as usize;
        let b = by.entry(StepBucket::of(r.gold_steps)).or_insert(BucketSummary {
            n: 0,
            correct: 0,
            accuracy: 0.0,
        });
        b.n += 1;
        b.correct += r.matched as usize;
    }
    for b in by.values_mut() {
        b.accuracy = b.correct as f64 / b.n as f64;
    }
    EvalSummary {
        n,
        correct,
        accuracy: (n > 0).then(|| correct as f64 / n as f64),
        by_gold_steps: by,
    }
}

impl EvalSummary {
    /// `bucket,n,correct,accuracy` by gold step bucket.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,n,correct,accuracy\n");
        for (b, s) in &self.by_gold_steps {
            out.push_str(&format!("{b},{},{},{:.6}\n", s.n, s.correct, s.accuracy));
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot vote over an empty list")]
pub struct EmptyList;

/// Most frequent answer under `eq`; ties go to the answer seen first.
pub fn majority_vote_by<T: Clone>(answers: &[T], eq: impl Fn(&T, &T) -> bool) -> Result<T, EmptyList> {
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (i, a) in answers.iter().enumerate() {
        match groups.iter_mut().find(|(rep, _)| eq(&answers[*rep], a)) {
            Some(g) => g.1 += 1,
            None => groups.push((i, 1)),
        }
    }
    let mut best: Option<(usize, usize)> = None;
    for g in groups {
        if best.is_none_or(|b| g.1 > b.1) {
            best = Some(g);
        }
    }
    best.map(|(rep, _)| answers[rep].clone()).ok_or(EmptyList)
}

pub fn majority_vote<T: Clone + PartialEq>(answers: &[T]) -> Result<T, EmptyList> {
    majority_vote_by(answers, |a, b| a == b)
}

/// Majority vote with the domain's answer equality.
pub fn majority_vote_answers(answers: &[Extracted], domain: Domain) -> Result<Extracted, EmptyList> {
    majority_vote_by(answers, |a, b| match domain {
        Domain::Math => exact_match(Some(a), &b.to_string(), Domain::Math),
        Domain::Wiki => normalize_answer(&a.to_string()) == normalize_answer(&b.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_number() {
        let t = "So 5 * 4 = 20 computers were added. 9 + 20 is 29. The answer is 29.";
        assert_eq!(extract_math_answer(t), Some(Value::from_integer(29)));
        assert_eq!(extract_math_answer("no numbers here"), None);
        assert_eq!(
            extract_math_answer("costs $1,234.50 total"),
            Some(Value::from_ratio(2469, 2))
        );
        assert_eq!(extract_math_answer("so 21-15=6"), Some(Value::from_integer(6)));
        assert_eq!(extract_math_answer("it was 21-15"), Some(Value::from_integer(15)));
        assert_eq!(extract_math_answer("a loss of -5."), Some(Value::from_integer(-5)));
        assert_eq!(extract_math_answer("1.5 then 16.0"), Some(Value::from_integer(16)));
    }

    #[test]
    fn text_answers() {
        let a = AnswerStyle::AnswerIs;
        assert_eq!(
            extract_text_answer("... The answer is Greenwich Village.", a).as_deref(),
            Some("Greenwich Village")
        );
        assert_eq!(
            extract_text_answer("The answer is wrong. Actually The answer is 25 June 1961.\nmore", a).as_deref(),
            Some("25 June 1961")
        );
        assert_eq!(extract_text_answer("nothing", a), None);
        let f = AnswerStyle::FireActFinish;
        assert_eq!(
            extract_text_answer("Action: finish[World War II]", f).as_deref(),
            Some("World War II")
        );
        assert_eq!(
            extract_text_answer("Action: finish[a [b] c] tail", f).as_deref(),
            Some("a [b] c")
        );
        assert_eq!(extract_text_answer("Action: finish[unterminated", f), None);
    }

    #[test]
    fn matching() {
        let n = |v: i64| Extracted::Number(Value::from_integer(v));
        assert!(exact_match(Some(&n(29)), "29", Domain::Math));
        assert!(exact_match(Some(&n(16)), "16.0", Domain::Math));
        assert!(!exact_match(None, "29", Domain::Math));
        let t = |s: &str| Extracted::Text(s.into());
        assert!(exact_match(
            Some(&t("greenwich village")),
            "Greenwich Village",
            Domain::Wiki
        ));
        assert!(exact_match(
            Some(&t("  New   York City. ")),
            "new york city",
            Domain::Wiki
        ));
        assert!(!exact_match(Some(&t("New York")), "New York City", Domain::Wiki));
    }

    #[test]
    fn step_counts() {
        assert_eq!(count_steps("[20 + 35 = y1] and [90 - y1 = y2].", Domain::Math), 2);
        assert_eq!(count_steps("", Domain::Math), 0);
        assert_eq!(
            count_steps(
                "The clay pot costs $20 + $9 = $29. The bag of soil costs $9 - $2 = $7.",
                Domain::Math
            ),
            2
        );
        assert_eq!(
            count_steps("So there must have been 21-15=6. The answer is 6.", Domain::Math),
            1
        );
        assert_eq!(count_steps("Sam makes $460 / 23 hrs = $20/hr. Done.", Domain::Math), 1);
        assert_eq!(
            count_steps("[a -Wiki-> y1] [y1 -NER(person)-> y2] [y2 -Wiki-> y3]", Domain::Wiki),
            2
        );
    }

    fn rec(p: usize, g: usize, ok: bool) -> EvalRecord {
        EvalRecord {
            id: String::new(),
            prediction_text: String::new(),
            extracted_answer: None,
            gold_answer: String::new(),
            matched: ok,
            predicted_steps: p,
            gold_steps: g,
        }
    }

    #[test]
    fn stratification_masks_small_off_diagonal_cells() {
        let mut rs: Vec<EvalRecord> = (0..10).map(|i| rec(2, 2, i % 2 == 0)).collect();
        let t = stratify(&rs, 15);
        assert_eq!(t.cells.len(), 1);
        assert_eq!(t.cells[&(StepBucket::of(2), StepBucket::of(2))].accuracy, Some(0.5));
        rs.extend((0..14).map(|_| rec(3, 1, true)));
        rs.extend((0..15).map(|_| rec(9, 1, false)));
        let t = stratify(&rs, 15);
        let small = &t.cells[&(StepBucket::of(3), StepBucket::of(1))];
        assert!(small.masked && small.accuracy.is_none() && small.count == 14);
        assert_eq!(t.cells[&(StepBucket::OVER_FIVE, StepBucket::of(1))].accuracy, Some(0.0));
        assert_eq!(t.total(), rs.len());
        assert!(stratify(&[], 15).cells.is_empty());
    }

    #[test]
    fn voting() {
        assert_eq!(majority_vote(&[16, 16, 15]), Ok(16));
        assert_eq!(majority_vote(&["a", "b"]), Ok("a"));
        assert_eq!(majority_vote::<i32>(&[]), Err(EmptyList));
        let xs = vec![
            Extracted::Text("Sri Lanka".into()),
            Extracted::Text("india".into()),
            Extracted::Text("sri lanka.".into()),
        ];
        assert_eq!(majority_vote_answers(&xs, Domain::Wiki), Ok(xs[0].clone()));
    }
}
