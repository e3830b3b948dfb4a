use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::Serialize;

use crate::trace::{Placeholder, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    Solver,
    WikiSearch,
    Ner,
}

/// One executed tool call.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// 1-based position among the trace's operations.
    pub step: usize,
    pub output: Placeholder,
    pub tool: ToolKind,
    /// Tool input after substitution.
    pub input: String,
    /// Retrieved titles before reranking, or extracted entity surfaces.
    pub candidates: Vec<String>,
    pub latency: Duration,
}

/// A trace together with the values its tools produced.
#[derive(Clone, Debug)]
pub struct ReifiedTrace<B> {
    pub trace: Trace,
    pub bindings: BTreeMap<Placeholder, B>,
    pub steps: Vec<StepRecord>,
    /// Placeholder holding the final answer, when the domain defines one.
    pub answer_var: Option<Placeholder>,
}

impl<B> ReifiedTrace<B> {
    pub fn new(trace: Trace) -> Self {
        ReifiedTrace {
            trace,
            bindings: BTreeMap::new(),
            steps: Vec::new(),
            answer_var: None,
        }
    }

    pub fn final_answer(&self) -> Option<&B> {
        self.answer_var.and_then(|p| self.bindings.get(&p))
    }

    pub fn is_complete(&self) -> bool {
        self.trace.defined().iter().all(|p| self.bindings.contains_key(p))
    }

    pub fn total_latency(&self) -> Duration {
        self.steps.iter().map(|s| s.latency).sum()
    }
}

impl<B: fmt::Display> ReifiedTrace<B> {
    /// Trace text with every placeholder replaced, if all are bound.
    pub fn text(&self) -> Option<String> {
        self.trace.substitute(&self.bindings).ok()
    }
}
