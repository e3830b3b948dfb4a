use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use coa_core::verify::{verification_stats, verify_math, verify_wiki, GoldRecord, VerificationResult, WikiCheck};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use super::{domain, path, plan_config, plan_config_json, WikiEnv};
use crate::output::{jsonl_records, manifest_path_for, read_input, require_files, to_jsonl, write_atomic, Manifest};
use crate::{CliError, Ctx, DomainArg, Outcome, RetrievalArgs};

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    domain: Option<DomainArg>,
    /// JSONL `{"id","candidate"}`; gold fields may sit on the same line.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// JSONL `{"id","question","gold_answer","gold_titles"?}` joined by id.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept a search step when any top-k title is gold.
    #[arg(long)]
    match_any_topk: bool,
    #[command(flatten)]
    retrieval: RetrievalArgs,
}

#[derive(Deserialize)]
struct CandidateLine {
    id: String,
    candidate: String,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    gold_answer: Option<String>,
    #[serde(default)]
    gold_titles: Vec<String>,
}

pub fn run(ctx: &Ctx, a: VerifyArgs) -> Result<Outcome, CliError> {
    let dom = domain(ctx, a.domain)?;
    let cand_path = path(ctx, a.candidates, "candidates", "--candidates")?;
    let out = path(ctx, a.out, "out", "--out")?;
    let gold_path = ctx.settings.pick_opt(a.gold, "gold")?;
    let index = ctx.settings.pick_opt(a.index, "index")?;
    let plan = plan_config(ctx, &a.retrieval)?;
    let check = WikiCheck {
        match_any_topk: ctx
            .settings
            .pick(Some(a.match_any_topk).filter(|b| *b), "match_any_topk", false)?,
    };
    if dom == DomainArg::Wiki && index.is_none() {
        return Err(CliError::usage("wiki verification needs --index"));
    }
    let mut files = vec![cand_path.as_path()];
    files.extend(gold_path.as_deref());
    files.extend(index.as_deref());
    require_files(&files)?;

    let mut config = json!({
        "domain": format!("{dom:?}").to_lowercase(), "candidates": cand_path, "gold": gold_path, "out": out,
    });
    if dom == DomainArg::Wiki {
        config["index"] = json!(index);
        config["plan"] = plan_config_json(&plan);
        config["match_any_topk"] = json!(check.match_any_topk);
    }
    let mut manifest = Manifest::new("verify", config);

    let bytes = read_input(&cand_path)?;
    manifest.input(&cand_path, &bytes);
    let lines: Vec<CandidateLine> = jsonl_records(&cand_path, &bytes)?;
    let golds: HashMap<String, GoldRecord> = match &gold_path {
        Some(p) => {
            let bytes = read_input(p)?;
            manifest.input(p, &bytes);
            jsonl_records::<GoldRecord>(p, &bytes)?
                .into_iter()
                .map(|g| (g.id.clone(), g))
                .collect()
        }
        None => HashMap::new(),
    };
    let mut pairs = Vec::with_capacity(lines.len());
    for l in lines {
        let gold = match golds.get(&l.id) {
            Some(g) => g.clone(),
            None => GoldRecord {
                id: l.id.clone(),
                question: l.question.unwrap_or_default(),
                gold_answer: l
                    .gold_answer
                    .ok_or_else(|| CliError::data(&cand_path, format!("no gold record for {:?}", l.id)))?,
                gold_titles: l.gold_titles,
            },
        };
        pairs.push((l.candidate, gold));
    }

    let results: Vec<VerificationResult> = match dom {
        DomainArg::Math => pairs.par_iter().map(|(c, g)| verify_math(c, g)).collect(),
        DomainArg::Wiki => {
            let ipath = index.expect("checked above");
            let env = WikiEnv::load(&ipath)?;
            manifest.input(&ipath, &env.bytes);
            let tools = env.tools(plan);
            pairs
                .par_iter()
                .map(|(c, g)| verify_wiki(c, g, &tools, check))
                .collect()
        }
    };
    write_atomic(&out, to_jsonl(&results).as_bytes())?;
    manifest.output(&out);
    manifest.write(&manifest_path_for(&out))?;

    let stats = verification_stats(&results);
    let rate = stats.acceptance_rate.map_or("n/a".to_string(), |r| format!("{r:.4}"));
    Ok(Outcome {
        code: 0,
        text: format!(
            "accepted {}/{} (rate {rate}) -> {}",
            stats.accepted,
            stats.total,
            out.display()
        ),
        summary: json!({"stats": stats, "out": out}),
    })
}
