use std::collections::BTreeMap;

use thiserror::Error;

use super::{tokenize, Article};

/// Similarity between a question and a piece of text. Implementations must
/// be deterministic and safe to share across threads.
pub trait SimilarityScorer: Send + Sync {
    fn score(&self, question: &str, text: &str) -> f64;
}

/// Cosine similarity of raw term-frequency vectors.
#[derive(Clone, Copy, Debug, Default)]
pub struct LexicalCosine;

impl SimilarityScorer for LexicalCosine {
    fn score(&self, question: &str, text: &str) -> f64 {
        let q = term_counts(question);
        let t = term_counts(text);
        if q.is_empty() || t.is_empty() {
            return 0.0;
        }
        let dot: f64 = q.iter().filter_map(|(w, &a)| t.get(w).map(|&b| a * b)).sum();
        let norm = |m: &BTreeMap<String, f64>| m.values().map(|v| v * v).sum::<f64>().sqrt();
        dot / (norm(&q) * norm(&t))
    }
}

fn term_counts(text: &str) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for w in tokenize(text) {
        *m.entry(w).or_insert(0.0) += 1.0;
    }
    m
}

/// Text handed to the scorer for an article: title followed by body.
pub fn scoring_text(article: &Article) -> String {
    format!("{} {}", article.title, article.text)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RerankError {
    #[error("no candidates to rerank")]
    EmptyCandidates,
}

/// Index of the candidate with the highest score against `question`.
/// Ties go to the earlier candidate, so pass candidates in retrieval order.
pub fn rerank(
    candidates: &[&Article],
    question: &str,
    scorer: &dyn SimilarityScorer,
) -> Result<(usize, f64), RerankError> {
    let scores: Vec<f64> = candidates
        .iter()
        .map(|a| scorer.score(question, &scoring_text(a)))
        .collect();
    argmax(&scores).ok_or(RerankError::EmptyCandidates)
}

/// First index of the maximum. NaN never wins.
pub(crate) fn argmax(scores: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            _ if s.is_nan() => {}
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.or_else(|| (!scores.is_empty()).then(|| (0, scores[0])))
}
