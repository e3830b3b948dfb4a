pub mod bench;
pub mod eval;
pub mod index;
pub mod reify;
pub mod verify;

use std::path::{Path, PathBuf};

use coa_core::wiki::{GazetteerExtractor, Index, LexicalCosine, PlanConfig, RerankTarget, WikiTools};
use serde_json::{json, Value};

use crate::output::read_input;
use crate::{CliError, Ctx, DomainArg, RetrievalArgs};

pub fn domain(ctx: &Ctx, flag: Option<DomainArg>) -> Result<DomainArg, CliError> {
    ctx.settings
        .pick_opt(flag, "domain")?
        .ok_or_else(|| CliError::usage("--domain math|wiki is required"))
}

pub fn path(ctx: &Ctx, flag: Option<PathBuf>, key: &str, flag_name: &str) -> Result<PathBuf, CliError> {
    ctx.settings
        .pick_opt(flag, key)?
        .ok_or_else(|| CliError::usage(format!("{flag_name} is required")))
}

pub fn plan_config(ctx: &Ctx, r: &RetrievalArgs) -> Result<PlanConfig, CliError> {
    let top_k = ctx.settings.pick(r.top_k, "top_k", PlanConfig::default().top_k)?;
    if top_k == 0 {
        return Err(CliError::usage("--top-k must be at least 1"));
    }
    let rerank = match ctx.settings.pick_opt(r.rerank.clone(), "rerank")?.as_deref() {
        None => RerankTarget::default(),
        Some("question") => RerankTarget::Question,
        Some("question-and-query") => RerankTarget::QuestionAndQuery,
        Some(other) => return Err(CliError::usage(format!("unknown rerank target {other:?}"))),
    };
    Ok(PlanConfig { top_k, rerank })
}

pub fn plan_config_json(c: &PlanConfig) -> Value {
    json!({"top_k": c.top_k, "rerank": c.rerank})
}

/// A loaded index with its gazetteer.
pub struct WikiEnv {
    pub index: Index,
    pub ner: GazetteerExtractor,
    pub bytes: Vec<u8>,
}

impl WikiEnv {
    pub fn load(path: &Path) -> Result<WikiEnv, CliError> {
        let bytes = read_input(path)?;
        let index = Index::from_bytes(&bytes).map_err(|e| CliError::data(path, e.to_string()))?;
        let ner = GazetteerExtractor::from_corpus(index.articles());
        Ok(WikiEnv { index, ner, bytes })
    }

    pub fn tools(&self, config: PlanConfig) -> WikiTools<'_> {
        WikiTools {
            index: &self.index,
            ner: &self.ner,
            scorer: &LexicalCosine,
            config,
        }
    }
}
