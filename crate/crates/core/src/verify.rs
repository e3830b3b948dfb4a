//! Keep/discard checks for rewritten traces against gold data.

pub mod mutations;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::eval::{count_steps, extract_math_answer, StepBucket};
use crate::math::{reify_math, MathError};
use crate::trace::{parse_trace, Domain, ParseError, ParseErrorKind, Placeholder, Trace};
use crate::value::Value;
use crate::wiki::{execute_plan, PlanError, WikiTools};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    #[serde(default)]
    pub question: String,
    pub gold_answer: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_titles: Vec<String>,
}

impl GoldRecord {
    /// Last number in the gold answer.
    pub fn gold_final_number(&self) -> Option<Value> {
        extract_math_answer(&self.gold_answer)
    }
}

/// A gold record with a candidate rewriting to check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    #[serde(flatten)]
    pub gold: GoldRecord,
    pub candidate: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    ParseError,
    SolveError,
    AnswerMismatch,
    TitleMismatch { step: usize },
    StructureError,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::ParseError => "parse_error",
            RejectReason::SolveError => "solve_error",
            RejectReason::AnswerMismatch => "answer_mismatch",
            RejectReason::TitleMismatch { .. } => "title_mismatch",
            RejectReason::StructureError => "structure_error",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationResult {
    pub id: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    /// Reasoning steps in the candidate, for bucketed statistics.
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl VerificationResult {
    fn new(id: &str, steps: usize, verdict: Verdict, detail: Option<String>) -> Self {
        VerificationResult {
            id: id.to_string(),
            verdict,
            steps,
            detail,
        }
    }

    fn reject(id: &str, steps: usize, reason: RejectReason, detail: impl Into<String>) -> Self {
        VerificationResult::new(id, steps, Verdict::Reject(reason), Some(detail.into()))
    }

    pub fn is_accept(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

fn parse_reason(e: &ParseError) -> RejectReason {
    match e.kind {
        ParseErrorKind::UnbalancedBracket | ParseErrorKind::MalformedOperation => RejectReason::ParseError,
        ParseErrorKind::DuplicateDefinition | ParseErrorKind::UseBeforeDefinition => RejectReason::StructureError,
    }
}

fn parse_candidate(candidate: &str, domain: Domain, id: &str, steps: usize) -> Result<Trace, VerificationResult> {
    let trace = parse_trace(candidate, domain)
        .map_err(|e| VerificationResult::reject(id, steps, parse_reason(&e), e.to_string()))?;
    if trace.operation_count() == 0 {
        return Err(VerificationResult::reject(
            id,
            steps,
            RejectReason::ParseError,
            "no operations",
        ));
    }
    Ok(trace)
}

/// Parses and solves the candidate and compares its final answer with the
/// gold final number as rationals.
pub fn verify_math(candidate: &str, gold: &GoldRecord) -> VerificationResult {
    let id = gold.id.as_str();
    let steps = count_steps(candidate, Domain::Math);
    let trace = match parse_candidate(candidate, Domain::Math, id, steps) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let reified = match reify_math(&trace) {
        Ok(r) => r,
        Err(e) => {
            let reason = match e {
                MathError::CyclicDependency(_) | MathError::Redefinition(_) => RejectReason::StructureError,
                _ => RejectReason::SolveError,
            };
            return VerificationResult::reject(id, steps, reason, e.to_string());
        }
    };
    let Some(expected) = gold.gold_final_number() else {
        return VerificationResult::reject(id, steps, RejectReason::AnswerMismatch, "gold answer has no number");
    };
    match reified.final_answer() {
        Some(v) if *v == expected => VerificationResult::new(id, steps, Verdict::Accept, None),
        got => VerificationResult::reject(
            id,
            steps,
            RejectReason::AnswerMismatch,
            format!(
                "got {}, expected {expected}",
                got.map_or("nothing".to_string(), |v| v.to_string())
            ),
        ),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiCheck {
    /// Accept a step when any retrieved top-k title is gold, not only the
    /// reranked top-1.
    pub match_any_topk: bool,
}

/// NFC, lowercase, whitespace collapsed.
pub fn normalize_title(title: &str) -> String {
    let nfc: String = title.nfc().collect();
    nfc.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Executes the candidate plan and requires every search result to be one
/// of the gold titles.
pub fn verify_wiki(candidate: &str, gold: &GoldRecord, tools: &WikiTools<'_>, check: WikiCheck) -> VerificationResult {
    let id = gold.id.as_str();
    let steps = count_steps(candidate, Domain::Wiki);
    let trace = match parse_candidate(candidate, Domain::Wiki, id, steps) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let outcome = execute_plan(&trace, tools, &gold.question);
    let gold_titles: BTreeSet<String> = gold.gold_titles.iter().map(|t| normalize_title(t)).collect();
    for rec in outcome
        .reified
        .steps
        .iter()
        .filter(|s| s.tool == crate::reified::ToolKind::WikiSearch)
    {
        let bound = outcome
            .reified
            .bindings
            .get(&rec.output)
            .and_then(|b| b.article())
            .map(|a| a.title.as_str());
        let ok = if check.match_any_topk {
            rec.candidates.iter().any(|t| gold_titles.contains(&normalize_title(t)))
        } else {
            bound.is_some_and(|t| gold_titles.contains(&normalize_title(t)))
        };
        if !ok {
            return VerificationResult::reject(
                id,
                steps,
                RejectReason::TitleMismatch { step: rec.step },
                format!("step {} retrieved {:?}", rec.step, bound.unwrap_or("")),
            );
        }
    }
    match outcome.error {
        None => VerificationResult::new(id, steps, Verdict::Accept, None),
        Some(e) => {
            let reason = match e {
                PlanError::NoSearchResult { step, .. } => RejectReason::TitleMismatch { step },
                PlanError::NoEntityFound { .. } | PlanError::PlanStructure { .. } => RejectReason::StructureError,
            };
            VerificationResult::reject(id, steps, reason, e.to_string())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureViolation {
    DuplicateDefinition {
        var: Placeholder,
    },
    /// Two placeholders solve to the same value. Reported, never rejected.
    CoincidentValueWarning {
        first: Placeholder,
        second: Placeholder,
    },
}

/// Duplicate definitions and, for math traces, distinct placeholders whose
/// solved values coincide. Works on unchecked traces from
/// [`crate::trace::scan_trace`].
pub fn check_single_assignment(trace: &Trace) -> Vec<StructureViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for p in trace.segments().iter().filter_map(|s| s.defines()) {
        if !seen.insert(p) && reported.insert(p) {
            out.push(StructureViolation::DuplicateDefinition { var: p });
        }
    }
    if trace.domain() == Domain::Math && out.is_empty() {
        if let Ok(bindings) = crate::math::EquationSystem::from_trace(trace).and_then(|s| crate::math::solve(&s)) {
            let mut by_value: BTreeMap<&Value, Vec<Placeholder>> = BTreeMap::new();
            for (p, v) in &bindings {
                by_value.entry(v).or_default().push(*p);
            }
            let mut pairs = Vec::new();
            for ps in by_value.values() {
                for (i, &a) in ps.iter().enumerate() {
                    for &b in &ps[i + 1..] {
                        pairs.push((a, b));
                    }
                }
            }
            pairs.sort();
            out.extend(
                pairs
                    .into_iter()
                    .map(|(first, second)| StructureViolation::CoincidentValueWarning { first, second }),
            );
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BucketStats {
    pub total: usize,
    pub accepted: usize,
    pub acceptance_rate: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StatsReport {
    pub total: usize,
    pub accepted: usize,
    /// Absent when there are no results.
    pub acceptance_rate: Option<f64>,
    pub rejections: BTreeMap<String, usize>,
    /// Rejections per reason over all results.
    pub rejection_rates: BTreeMap<String, f64>,
    pub by_steps: BTreeMap<StepBucket, BucketStats>,
}

pub fn verification_stats<'a>(results: impl IntoIterator<Item = &'a VerificationResult>) -> StatsReport {
    let mut s = StatsReport::default();
    for r in results {
        s.total += 1;
        let b = s.by_steps.entry(StepBucket::of(r.steps)).or_default();
        b.total += 1;
        match r.verdict {
            Verdict::Accept => {
                s.accepted += 1;
                b.accepted += 1;
            }
            Verdict::Reject(reason) => *s.rejections.entry(reason.name().to_string()).or_default() += 1,
        }
    }
    let rate = |a: usize, n: usize| (n > 0).then(|| a as f64 / n as f64);
    s.acceptance_rate = rate(s.accepted, s.total);
    s.rejection_rates = s
        .rejections
        .iter()
        .map(|(k, &n)| (k.clone(), n as f64 / s.total as f64))
        .collect();
    for b in s.by_steps.values_mut() {
        b.acceptance_rate = rate(b.accepted, b.total);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::scan_trace;

    fn gold(answer: &str) -> GoldRecord {
        GoldRecord {
            id: "g".into(),
            question: String::new(),
            gold_answer: answer.into(),
            gold_titles: vec![],
        }
    }

    #[test]
    fn math_verdicts() {
        let good = "[20 + 35 = y1] and [90 - y1 = y2]. The answer is y2.";
        assert!(verify_math(good, &gold("35")).is_accept());
        let bad = "[20 + 35 = y1] and [90 + y1 = y2]. The answer is y2.";
        assert_eq!(
            verify_math(bad, &gold("35")).verdict,
            Verdict::Reject(RejectReason::AnswerMismatch)
        );
        let early = "[y2 + 35 = y1] and [90 - y1 = y2].";
        assert_eq!(
            verify_math(early, &gold("35")).verdict,
            Verdict::Reject(RejectReason::StructureError)
        );
        assert_eq!(
            verify_math("", &gold("35")).verdict,
            Verdict::Reject(RejectReason::ParseError)
        );
        assert_eq!(
            verify_math("[1 + = y1]", &gold("35")).verdict,
            Verdict::Reject(RejectReason::ParseError)
        );
        assert_eq!(
            verify_math("[1 / 0 = y1]", &gold("35")).verdict,
            Verdict::Reject(RejectReason::SolveError)
        );
    }

    #[test]
    fn single_assignment_checks() {
        let t = scan_trace("[1 = y1] [2 = y1] [3 = y1]", Domain::Math).unwrap();
        assert_eq!(
            check_single_assignment(&t),
            vec![StructureViolation::DuplicateDefinition { var: Placeholder(1) }]
        );
        let t = parse_trace("[20 + 35 = y1] [y1 * 2 = y2] [50 + 5 = y3]", Domain::Math).unwrap();
        assert_eq!(
            check_single_assignment(&t),
            vec![StructureViolation::CoincidentValueWarning {
                first: Placeholder(1),
                second: Placeholder(3)
            }]
        );
    }

    #[test]
    fn title_normalization() {
        assert_eq!(normalize_title("  Big  Stone\tGap (FILM) "), "big stone gap (film)");
        assert_eq!(normalize_title("Te\u{0301}a"), normalize_title("Téa"));
    }

    #[test]
    fn stats() {
        let r = |v| VerificationResult {
            id: String::new(),
            verdict: v,
            steps: 2,
            detail: None,
        };
        let xs = vec![
            r(Verdict::Accept),
            r(Verdict::Accept),
            r(Verdict::Accept),
            r(Verdict::Reject(RejectReason::SolveError)),
        ];
        let s = verification_stats(&xs);
        assert_eq!(s.acceptance_rate, Some(0.75));
        assert_eq!(s.rejections["solve_error"], 1);
        assert_eq!(s.by_steps[&StepBucket::of(2)].total, 4);
        assert_eq!(verification_stats(&[]).acceptance_rate, None);
    }
}
