//! Retrieval, reranking and entity extraction for wiki traces, and the
//! executor that runs a wiki trace as a tool plan.

mod index;
mod ner;
mod plan;
mod rerank;

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{tokenize, Bm25Params, Chunking, Index, IndexError, Posting, SearchHit};
pub use ner::{
    ner_extract, surface_form, EntityClass, EntityExtractor, Extraction, FineTag, GazetteerExtractor, NamedEntity,
    TaggedSpan,
};
pub use plan::{
    collect_search_context, execute_plan, AnswerGenerator, GroundedReplay, PlanConfig, PlanError, PlanOutcome,
    RerankTarget, Retrieved, WikiBinding, WikiTools,
};
pub use rerank::{rerank, scoring_text, LexicalCosine, RerankError, SimilarityScorer};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads `{"id","title","text"}` objects, one per line. Blank lines are skipped.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<Article>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let a: Article = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(a);
    }
    Ok(out)
}
