use std::path::PathBuf;

use clap::Args;
use coa_core::pipeline::{
    compare_modes, run_decoupled, run_interleaved, Clock, Mode, RealClock, RunReport, SimParams, SimWorkload,
    VirtualClock, DEFAULT_QUEUE_CAPACITY,
};
use serde_json::json;

use super::path;
use crate::output::{write_atomic, Manifest};
use crate::{CliError, Ctx, Outcome};

#[derive(Args)]
pub struct BenchArgs {
    /// decoupled, interleaved or both.
    #[arg(long)]
    mode: Option<String>,
    /// Simulated decoding speed in tokens per second.
    #[arg(long)]
    sim_decode_tps: Option<f64>,
    /// Mean simulated tool latency in milliseconds.
    #[arg(long)]
    sim_tool_ms: Option<f64>,
    /// Items allowed to wait between the stages.
    #[arg(long)]
    queue: Option<usize>,
    #[arg(long)]
    questions: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    tokens_per_step: Option<u32>,
    #[arg(long)]
    prefix_tokens: Option<u32>,
    /// Relative spread of token counts and latencies, in [0, 1).
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sleep for real instead of advancing a virtual clock.
    #[arg(long)]
    real_clock: bool,
    /// Directory for report.json, report.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn modes(s: &str) -> Result<Vec<Mode>, CliError> {
    match s {
        "both" => Ok(vec![Mode::Decoupled, Mode::Interleaved]),
        other => Ok(vec![other.parse::<Mode>().map_err(CliError::usage)?]),
    }
}

pub fn run(ctx: &Ctx, a: BenchArgs) -> Result<Outcome, CliError> {
    let s = &ctx.settings;
    let d = SimParams::default();
    let p = SimParams {
        questions: s.pick(a.questions, "questions", d.questions)?,
        max_steps: s.pick(a.max_steps, "max_steps", d.max_steps)?,
        decode_tps: s.pick(a.sim_decode_tps, "sim_decode_tps", d.decode_tps)?,
        tool_ms: s.pick(a.sim_tool_ms, "sim_tool_ms", d.tool_ms)?,
        prefix_tokens: s.pick(a.prefix_tokens, "prefix_tokens", d.prefix_tokens)?,
        tokens_per_step: s.pick(a.tokens_per_step, "tokens_per_step", d.tokens_per_step)?,
        jitter: s.pick(a.jitter, "jitter", d.jitter)?,
    };
    let mode = s.pick(a.mode, "mode", "both".to_string())?;
    let queue = s.pick(a.queue, "queue", DEFAULT_QUEUE_CAPACITY)?;
    let seed = s.pick(a.seed, "seed", 0)?;
    let real_clock = s.pick(Some(a.real_clock).filter(|b| *b), "real_clock", false)?;
    let out = path(ctx, a.out, "out", "--out")?;

    if !(p.decode_tps.is_finite() && p.decode_tps > 0.0) {
        return Err(CliError::usage("--sim-decode-tps must be positive"));
    }
    if !(p.tool_ms.is_finite() && p.tool_ms >= 0.0) {
        return Err(CliError::usage("--sim-tool-ms must be non-negative"));
    }
    if !(0.0..1.0).contains(&p.jitter) {
        return Err(CliError::usage("--jitter must lie in [0, 1)"));
    }
    if queue == 0 {
        return Err(CliError::usage("--queue must be at least 1"));
    }
    if p.questions == 0 || p.max_steps == 0 {
        return Err(CliError::usage("--questions and --max-steps must be at least 1"));
    }
    let modes = modes(&mode)?;

    let config = json!({
        "mode": mode, "queue": queue, "seed": seed, "real_clock": real_clock, "sim": p,
    });
    let mut manifest = Manifest::new("bench", config.clone());
    let workload = SimWorkload::generate(seed, &p);
    let questions = workload.questions();
    let runs: Vec<RunReport> = modes
        .iter()
        .map(|m| {
            let clock: Box<dyn Clock> = if real_clock {
                Box::new(RealClock::new())
            } else {
                Box::new(VirtualClock::new())
            };
            log::info!("running {m} over {} questions", questions.len());
            match m {
                Mode::Decoupled => run_decoupled(&questions, &workload, &workload, clock.as_ref(), queue)
                    .map_err(|e| CliError::failed("pipeline", e.to_string())),
                Mode::Interleaved => Ok(run_interleaved(&questions, &workload, &workload, clock.as_ref())),
            }
        })
        .collect::<Result<_, _>>()?;

    let speedup = match (
        runs.iter().find(|r| r.mode == Mode::Interleaved),
        runs.iter().find(|r| r.mode == Mode::Decoupled),
    ) {
        (Some(i), Some(d)) => Some(compare_modes(i, d).map_err(|e| CliError::failed("pipeline", e.to_string()))?),
        _ => None,
    };

    let mut csv = String::new();
    for (n, r) in runs.iter().enumerate() {
        let body = r.to_csv();
        csv.push_str(if n == 0 {
            &body
        } else {
            body.split_once('\n').map_or("", |x| x.1)
        });
    }
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let report = json!({"config": config, "runs": runs, "speedup": speedup});
    let json_path = out.join("report.json");
    let csv_path = out.join("report.csv");
    write_atomic(
        &json_path,
        serde_json::to_string_pretty(&report)
            .expect("report serializes")
            .as_bytes(),
    )?;
    write_atomic(&csv_path, csv.as_bytes())?;
    manifest.output(&json_path);
    manifest.output(&csv_path);
    manifest.write(&out.join("manifest.json"))?;

    let mut text: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "{}: makespan {:.3}s over {} items",
                r.mode,
                r.makespan_seconds,
                r.items.len()
            )
        })
        .collect();
    if let Some(s) = &speedup {
        text.push(format!("speedup interleaved/decoupled {:.3}x", s.overall_ratio));
    }
    let makespans: serde_json::Map<String, serde_json::Value> = runs
        .iter()
        .map(|r| (r.mode.to_string(), json!(r.makespan_seconds)))
        .collect();
    Ok(Outcome {
        code: if runs.iter().any(|r| r.failures() > 0) { 3 } else { 0 },
        summary: json!({
            "makespan_seconds": makespans,
            "speedup": speedup.as_ref().map(|s| s.overall_ratio),
            "out": out,
        }),
        text: text.join("\n"),
    })
}
