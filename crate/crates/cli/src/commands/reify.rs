use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use coa_core::wiki::{collect_search_context, execute_plan, WikiBinding};
use coa_core::{parse_trace, reify_math, Domain};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{domain, path, plan_config, plan_config_json, WikiEnv};
use crate::output::{jsonl_values, manifest_path_for, read_input, require_files, to_jsonl, write_atomic, Manifest};
use crate::{CliError, Ctx, DomainArg, Outcome, RetrievalArgs};

#[derive(Args)]
pub struct ReifyArgs {
    #[arg(long)]
    domain: Option<DomainArg>,
    /// One trace per line, or JSONL `{"id","trace","question"?}`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Index file, required for wiki traces.
    #[arg(long)]
    index: Option<PathBuf>,
    #[command(flatten)]
    retrieval: RetrievalArgs,
}

struct TraceRecord {
    id: String,
    trace: String,
    question: String,
}

/// JSON objects with a `trace` (or `candidate`) field; any other line is
/// a bare trace named by its line number.
fn read_traces(path: &Path, bytes: &[u8]) -> Result<Vec<TraceRecord>, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::data(path, format!("not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if line.trim_start().starts_with('{') {
            let v = jsonl_values(path, line.as_bytes())?
                .pop()
                .map(|x| x.1)
                .unwrap_or(Value::Null);
            let field = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_string);
            let trace = field("trace")
                .or_else(|| field("candidate"))
                .ok_or_else(|| CliError::data(path, format!("line {}: no \"trace\" field", i + 1)))?;
            let id = match v.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => (i + 1).to_string(),
            };
            out.push(TraceRecord {
                id,
                trace,
                question: field("question").unwrap_or_default(),
            });
        } else {
            out.push(TraceRecord {
                id: (i + 1).to_string(),
                trace: line.to_string(),
                question: String::new(),
            });
        }
    }
    Ok(out)
}

fn failed(id: &str, error: Value) -> Value {
    json!({"id": id, "status": "failed", "error": error})
}

fn reify_math_record(r: &TraceRecord) -> Value {
    let trace = match parse_trace(&r.trace, Domain::Math) {
        Ok(t) => t,
        Err(e) => return failed(&r.id, e.to_json()),
    };
    match reify_math(&trace) {
        Err(e) => failed(&r.id, json!({"kind": "solve_error", "message": e.to_string()})),
        Ok(reified) => {
            let bindings: BTreeMap<String, String> = reified
                .bindings
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            json!({
                "id": r.id,
                "status": "ok",
                "reified_text": reified.text(),
                "bindings": bindings,
                "final_answer": reified.final_answer().map(|v| v.to_string()),
            })
        }
    }
}

fn reify_wiki_record(r: &TraceRecord, env: &WikiEnv, config: coa_core::wiki::PlanConfig) -> Value {
    let trace = match parse_trace(&r.trace, Domain::Wiki) {
        Ok(t) => t,
        Err(e) => return failed(&r.id, e.to_json()),
    };
    let outcome = execute_plan(&trace, &env.tools(config), &r.question);
    let bindings: Vec<Value> = outcome
        .reified
        .bindings
        .iter()
        .map(|(var, b)| match b {
            WikiBinding::Article(a) => json!({"var": var.to_string(), "kind": "article", "title": a.title}),
            WikiBinding::Entity(e) => json!({"var": var.to_string(), "kind": "entity", "entity": e}),
        })
        .collect();
    let mut row = json!({
        "id": r.id,
        "status": if outcome.is_ok() { "ok" } else { "failed" },
        "bindings": bindings,
        "context": collect_search_context(&outcome.reified),
    });
    if let Some(e) = &outcome.error {
        row["error"] = json!({"detail": e, "message": e.to_string()});
    }
    row
}

pub fn run(ctx: &Ctx, a: ReifyArgs) -> Result<Outcome, CliError> {
    let dom = domain(ctx, a.domain)?;
    let input = path(ctx, a.input, "input", "--input")?;
    let out = path(ctx, a.out, "out", "--out")?;
    let index = ctx.settings.pick_opt(a.index, "index")?;
    let plan = plan_config(ctx, &a.retrieval)?;
    if dom == DomainArg::Wiki && index.is_none() {
        return Err(CliError::usage("wiki traces need --index"));
    }
    let mut files = vec![input.as_path()];
    files.extend(index.as_deref());
    require_files(&files)?;

    let mut config = json!({"domain": format!("{dom:?}").to_lowercase(), "input": input, "out": out});
    if dom == DomainArg::Wiki {
        config["index"] = json!(index);
        config["plan"] = plan_config_json(&plan);
    }
    let mut manifest = Manifest::new("reify", config);
    let bytes = read_input(&input)?;
    manifest.input(&input, &bytes);
    let records = read_traces(&input, &bytes)?;

    let rows: Vec<Value> = match dom {
        DomainArg::Math => records.par_iter().map(reify_math_record).collect(),
        DomainArg::Wiki => {
            let ipath = index.expect("checked above");
            let env = WikiEnv::load(&ipath)?;
            manifest.input(&ipath, &env.bytes);
            records.par_iter().map(|r| reify_wiki_record(r, &env, plan)).collect()
        }
    };
    write_atomic(&out, to_jsonl(&rows).as_bytes())?;
    manifest.output(&out);
    manifest.write(&manifest_path_for(&out))?;

    let failures = rows.iter().filter(|r| r["status"] != "ok").count();
    Ok(Outcome {
        code: if failures > 0 { 3 } else { 0 },
        summary: json!({"records": rows.len(), "failed": failures, "out": out}),
        text: format!("reified {} records, {failures} failed -> {}", rows.len(), out.display()),
    })
}
