use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rerank::{argmax, scoring_text};
use super::{ner_extract, Article, EntityClass, EntityExtractor, Index, SimilarityScorer};
use crate::reified::{ReifiedTrace, StepRecord, ToolKind};
use crate::trace::{replace_refs, Domain, NerStep, Placeholder, SearchStep, Segment, Trace};

/// Value bound to a placeholder by a wiki tool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WikiBinding {
    Article(Article),
    Entity(String),
}

impl WikiBinding {
    pub fn article(&self) -> Option<&Article> {
        match self {
            WikiBinding::Article(a) => Some(a),
            WikiBinding::Entity(_) => None,
        }
    }
}

/// Articles substitute as their title, entities as their surface string.
impl fmt::Display for WikiBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WikiBinding::Article(a) => f.write_str(&a.title),
            WikiBinding::Entity(e) => f.write_str(e),
        }
    }
}

/// What the reranker compares retrieved articles against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankTarget {
    Question,
    /// Sum of the similarity to the question and to the substituted query.
    #[default]
    QuestionAndQuery,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub top_k: usize,
    pub rerank: RerankTarget,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            top_k: 10,
            rerank: RerankTarget::default(),
        }
    }
}

#[derive(Clone, Copy)]
pub struct WikiTools<'a> {
    pub index: &'a Index,
    pub ner: &'a dyn EntityExtractor,
    pub scorer: &'a dyn SimilarityScorer,
    pub config: PlanConfig,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum PlanError {
    #[error("step {step}: no search result for {query:?}")]
    NoSearchResult { step: usize, query: String },
    #[error("step {step}: no {class} entity found")]
    NoEntityFound { step: usize, class: EntityClass },
    #[error("plan structure: {message}")]
    PlanStructure { step: usize, message: String },
}

impl PlanError {
    pub fn step(&self) -> usize {
        match self {
            PlanError::NoSearchResult { step, .. }
            | PlanError::NoEntityFound { step, .. }
            | PlanError::PlanStructure { step, .. } => *step,
        }
    }
}

/// Result of running a plan. On failure the bindings made before the
/// failing step are kept.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub reified: ReifiedTrace<WikiBinding>,
    pub error: Option<PlanError>,
}

impl PlanOutcome {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// Bound article titles of the search steps, in step order.
    pub fn search_titles(&self) -> Vec<(usize, &str)> {
        self.reified
            .steps
            .iter()
            .filter(|s| s.tool == ToolKind::WikiSearch)
            .filter_map(|s| Some((s.step, self.reified.bindings.get(&s.output)?.article()?.title.as_str())))
            .collect()
    }
}

/// One search step after reranking.
#[derive(Clone, Debug)]
pub struct Retrieved<'a> {
    pub article: &'a Article,
    /// Similarity of the chosen article to the question alone.
    pub question_score: f64,
    /// Titles returned by BM25, in rank order.
    pub candidates: Vec<String>,
}

impl<'a> WikiTools<'a> {
    /// BM25 top-k followed by reranking; `None` when nothing matches.
    pub fn retrieve(&self, query: &str, question: &str) -> Option<Retrieved<'a>> {
        let hits = self.index.search(query, self.config.top_k.max(1));
        let texts: Vec<String> = hits.iter().map(|h| scoring_text(h.article)).collect();
        let scores: Vec<f64> = texts
            .iter()
            .map(|t| {
                let s = self.scorer.score(question, t);
                match self.config.rerank {
                    RerankTarget::Question => s,
                    RerankTarget::QuestionAndQuery => s + self.scorer.score(query, t),
                }
            })
            .collect();
        let (best, _) = argmax(&scores)?;
        Some(Retrieved {
            article: hits[best].article,
            question_score: self.scorer.score(question, &texts[best]),
            candidates: hits.iter().map(|h| h.article.title.clone()).collect(),
        })
    }

    /// Entity surfaces of `class` in `text`, first occurrence order, deduplicated.
    pub fn entities(&self, text: &str, class: EntityClass) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in ner_extract(self.ner, text).entities {
            if e.class == class && !out.contains(&e.surface) {
                out.push(e.surface);
            }
        }
        out
    }
}

/// Executes the tool steps of a wiki trace in order.
///
/// When an NER step finds several entities, each is tried in the next
/// search step that reads its output and the entity whose provisional
/// article is most similar to the question wins (ties to the earlier
/// entity). If no later search reads the output, entities are scored
/// against the question directly.
pub fn execute_plan(trace: &Trace, tools: &WikiTools<'_>, question: &str) -> PlanOutcome {
    let mut reified = ReifiedTrace::new(trace.clone());
    let error = run(trace, tools, question, &mut reified).err();
    PlanOutcome { reified, error }
}

fn run(
    trace: &Trace,
    tools: &WikiTools<'_>,
    question: &str,
    out: &mut ReifiedTrace<WikiBinding>,
) -> Result<(), PlanError> {
    if trace.domain() != Domain::Wiki {
        return Err(PlanError::PlanStructure {
            step: 0,
            message: "not a wiki trace".into(),
        });
    }
    let ops: Vec<&Segment> = trace.operations().collect();
    for (i, op) in ops.iter().enumerate() {
        let step = i + 1;
        let started = Instant::now();
        match op {
            Segment::Wiki(s) => {
                let query = substitute_query(s, &out.bindings, step)?;
                let r = tools
                    .retrieve(&query, question)
                    .ok_or_else(|| PlanError::NoSearchResult {
                        step,
                        query: query.clone(),
                    })?;
                out.bindings.insert(s.output, WikiBinding::Article(r.article.clone()));
                out.steps.push(record(
                    step,
                    s.output,
                    ToolKind::WikiSearch,
                    query,
                    r.candidates,
                    started,
                ));
            }
            Segment::Ner(n) => {
                let entity = choose_entity(n, &ops, i, tools, question, &out.bindings)?;
                let source = out.bindings[&n.source].to_string();
                out.steps
                    .push(record(step, n.output, ToolKind::Ner, source, entity.1, started));
                out.bindings.insert(n.output, WikiBinding::Entity(entity.0));
            }
            Segment::Math(_) | Segment::Text(_) => {
                return Err(PlanError::PlanStructure {
                    step,
                    message: "derivation in a wiki plan".into(),
                });
            }
        }
    }
    Ok(())
}

fn record(
    step: usize,
    output: Placeholder,
    tool: ToolKind,
    input: String,
    candidates: Vec<String>,
    started: Instant,
) -> StepRecord {
    StepRecord {
        step,
        output,
        tool,
        input,
        candidates,
        latency: started.elapsed(),
    }
}

fn substitute_query(
    s: &SearchStep,
    bindings: &BTreeMap<Placeholder, WikiBinding>,
    step: usize,
) -> Result<String, PlanError> {
    if let Some(p) = s.refs().into_iter().find(|p| !bindings.contains_key(p)) {
        return Err(PlanError::PlanStructure {
            step,
            message: format!("{p} is not bound"),
        });
    }
    Ok(replace_refs(&s.query, &|p| bindings[&p].to_string()))
}

/// Picks the entity for an NER step. Returns it with all candidates seen.
fn choose_entity(
    n: &NerStep,
    ops: &[&Segment],
    i: usize,
    tools: &WikiTools<'_>,
    question: &str,
    bindings: &BTreeMap<Placeholder, WikiBinding>,
) -> Result<(String, Vec<String>), PlanError> {
    let step = i + 1;
    let article = match bindings.get(&n.source) {
        Some(WikiBinding::Article(a)) => a,
        _ => {
            return Err(PlanError::PlanStructure {
                step,
                message: format!("NER source {} is not a search result", n.source),
            })
        }
    };
    let found = tools.entities(&article.text, n.class);
    match found.len() {
        0 => Err(PlanError::NoEntityFound { step, class: n.class }),
        1 => Ok((found[0].clone(), found)),
        _ => {
            let next = ops.iter().enumerate().skip(i + 1).find_map(|(j, op)| match op {
                Segment::Wiki(s) if s.refs().contains(&n.output) => Some((j + 1, s)),
                _ => None,
            });
            let scores: Vec<f64> = match next {
                Some((next_step, s)) => {
                    let scores: Vec<f64> = found
                        .iter()
                        .map(|e| {
                            let mut trial = bindings.clone();
                            trial.insert(n.output, WikiBinding::Entity(e.clone()));
                            let query =
                                replace_refs(&s.query, &|p| trial.get(&p).map_or(p.to_string(), |b| b.to_string()));
                            tools
                                .retrieve(&query, question)
                                .map_or(f64::NEG_INFINITY, |r| r.question_score)
                        })
                        .collect();
                    if scores.iter().all(|s| *s == f64::NEG_INFINITY) {
                        return Err(PlanError::NoSearchResult {
                            step: next_step,
                            query: format!("every candidate for {} ({})", n.output, found.join(", ")),
                        });
                    }
                    scores
                }
                None => found.iter().map(|e| tools.scorer.score(question, e)).collect(),
            };
            let (best, _) = argmax(&scores).expect("non-empty");
            Ok((found[best].clone(), found))
        }
    }
}

/// `title > text` for each bound search result in step order, one per line.
/// NER bindings are left out.
pub fn collect_search_context(reified: &ReifiedTrace<WikiBinding>) -> String {
    let mut blocks = Vec::new();
    for op in reified.trace.operations() {
        if let Segment::Wiki(s) = op {
            if let Some(WikiBinding::Article(a)) = reified.bindings.get(&s.output) {
                blocks.push(format!("{} > {}", a.title, a.text));
            }
        }
    }
    blocks.join("\n")
}

/// Produces final answer text from a question and search context.
pub trait AnswerGenerator: Send + Sync {
    fn generate(&self, question: &str, context: &str) -> Option<String>;
}

/// Replays known answers, but only when the answer is present in the context.
#[derive(Clone, Debug, Default)]
pub struct GroundedReplay {
    answers: BTreeMap<String, String>,
}

impl GroundedReplay {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        GroundedReplay {
            answers: pairs.into_iter().collect(),
        }
    }
}

impl AnswerGenerator for GroundedReplay {
    fn generate(&self, question: &str, context: &str) -> Option<String> {
        let answer = self.answers.get(question)?;
        context
            .contains(answer.as_str())
            .then(|| format!("The answer is {answer}."))
    }
}
