//! Bundled example traces and corpora.

use crate::verify::CandidateRecord;
use crate::wiki::{read_corpus, Article};

pub const MATH_TRACES: &str = include_str!("../fixtures/math_traces.jsonl");
pub const WIKI_TRACES: &str = include_str!("../fixtures/wiki_traces.jsonl");
pub const WIKI_CORPUS: &str = include_str!("../fixtures/wiki_corpus.jsonl");
pub const TWO_ARTICLE_CORPUS: &str = include_str!("../fixtures/two_article_corpus.jsonl");

fn records(src: &str) -> Vec<CandidateRecord> {
    src.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("bundled fixture is valid"))
        .collect()
}

pub fn math_records() -> Vec<CandidateRecord> {
    records(MATH_TRACES)
}

pub fn wiki_records() -> Vec<CandidateRecord> {
    records(WIKI_TRACES)
}

pub fn wiki_corpus() -> Vec<Article> {
    read_corpus(WIKI_CORPUS.as_bytes()).expect("bundled corpus is valid")
}

/// The film and author articles only.
pub fn two_article_corpus() -> Vec<Article> {
    read_corpus(TWO_ARTICLE_CORPUS.as_bytes()).expect("bundled corpus is valid")
}
