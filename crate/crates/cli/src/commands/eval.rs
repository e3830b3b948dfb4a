use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use coa_core::eval::{stratify, summarize, AnswerStyle, EvalRecord};
use coa_core::Domain;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use super::{domain, path};
use crate::output::{jsonl_records, read_input, require_files, to_jsonl, write_atomic, Manifest};
use crate::{CliError, Ctx, Outcome};

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    domain: Option<crate::DomainArg>,
    /// JSONL `{"id","gold_answer","gold_steps"?}`.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// JSONL `{"id","output"}`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Directory for records.jsonl, summary.json, buckets.csv and heatmap.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// last-number, answer-is or fireact.
    #[arg(long)]
    style: Option<String>,
    /// Off-diagonal heatmap cells below this count are masked.
    #[arg(long)]
    min_cell: Option<usize>,
}

#[derive(Deserialize)]
struct GoldLine {
    id: String,
    gold_answer: String,
    #[serde(default)]
    gold_steps: Option<usize>,
}

#[derive(Deserialize)]
struct PredictionLine {
    id: String,
    output: String,
}

pub fn run(ctx: &Ctx, a: EvalArgs) -> Result<Outcome, CliError> {
    let dom: Domain = domain(ctx, a.domain)?.into();
    let gold_path = path(ctx, a.gold, "gold", "--gold")?;
    let pred_path = path(ctx, a.predictions, "predictions", "--predictions")?;
    let out = path(ctx, a.out, "out", "--out")?;
    let style = match ctx.settings.pick_opt(a.style, "style")? {
        Some(s) => s.parse::<AnswerStyle>().map_err(CliError::usage)?,
        None => AnswerStyle::default_for(dom),
    };
    let min_cell = ctx.settings.pick(a.min_cell, "min_cell", 15)?;
    require_files(&[&gold_path, &pred_path])?;

    let config = json!({
        "domain": dom, "gold": gold_path, "predictions": pred_path, "out": out,
        "style": style, "min_cell": min_cell,
    });
    let mut manifest = Manifest::new("eval", config);
    let gold_bytes = read_input(&gold_path)?;
    let pred_bytes = read_input(&pred_path)?;
    manifest.input(&gold_path, &gold_bytes);
    manifest.input(&pred_path, &pred_bytes);
    let golds: HashMap<String, GoldLine> = jsonl_records::<GoldLine>(&gold_path, &gold_bytes)?
        .into_iter()
        .map(|g| (g.id.clone(), g))
        .collect();
    let preds: Vec<PredictionLine> = jsonl_records(&pred_path, &pred_bytes)?;
    let pairs = preds
        .iter()
        .map(|p| {
            golds
                .get(&p.id)
                .map(|g| (p, g))
                .ok_or_else(|| CliError::data(&pred_path, format!("no gold record for {:?}", p.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let records: Vec<EvalRecord> = pairs
        .par_iter()
        .map(|(p, g)| {
            let mut r = EvalRecord::score(&p.id, &p.output, &g.gold_answer, dom, style);
            if let Some(s) = g.gold_steps {
                r.gold_steps = s;
            }
            r
        })
        .collect();
    let summary = summarize(&records);
    let table = stratify(&records, min_cell);

    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let step_note = match dom {
        Domain::Math => "steps count bracketed derivations, else sentences with `=` followed by a number",
        Domain::Wiki => "steps count `-Wiki->` search calls",
    };
    let summary_json = json!({
        "n": summary.n,
        "correct": summary.correct,
        "accuracy": summary.accuracy,
        "style": style,
        "step_counter": step_note,
        "by_gold_steps": summary.by_gold_steps,
        "min_cell": min_cell,
        "stratified": table.to_json(),
    });
    let files = [
        ("records.jsonl", to_jsonl(&records)),
        (
            "summary.json",
            serde_json::to_string_pretty(&summary_json).expect("summary serializes"),
        ),
        ("buckets.csv", summary.to_csv()),
        ("heatmap.csv", table.to_csv()),
    ];
    for (name, body) in &files {
        let p = out.join(name);
        write_atomic(&p, body.as_bytes())?;
        manifest.output(&p);
    }
    manifest.write(&out.join("manifest.json"))?;

    let acc = summary.accuracy.map_or("n/a".to_string(), |a| format!("{a:.4}"));
    Ok(Outcome {
        code: 0,
        text: format!(
            "accuracy {acc} ({}/{}) -> {}",
            summary.correct,
            summary.n,
            out.display()
        ),
        summary: json!({"n": summary.n, "correct": summary.correct, "accuracy": summary.accuracy, "out": out}),
    })
}
