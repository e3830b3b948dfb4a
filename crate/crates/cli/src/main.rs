mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use config::Settings;

#[derive(Parser)]
#[command(
    name = "coa",
    version,
    about = "Parse, reify, verify, schedule and score abstract reasoning traces"
)]
struct Cli {
    /// Machine-readable output and diagnostics.
    #[arg(long, global = true)]
    json: bool,
    /// Flat `key = value` file. Flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: logical CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect a BM25 index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Reify traces with the solver or the wiki tools.
    Reify(commands::reify::ReifyArgs),
    /// Keep or discard candidate traces against gold data.
    Verify(commands::verify::VerifyArgs),
    /// Simulate decoupled and interleaved scheduling.
    Bench(commands::bench::BenchArgs),
    /// Extract answers, score them and stratify by reasoning steps.
    Eval(commands::eval::EvalArgs),
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Index a JSONL corpus of `{"id","title","text"}` articles.
    Build(commands::index::BuildArgs),
    /// Print statistics or a JSON dump of an index file.
    Dump(commands::index::DumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Math,
    Wiki,
}

impl std::str::FromStr for DomainArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <DomainArg as ValueEnum>::from_str(s, true)
    }
}

impl From<DomainArg> for coa_core::Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Math => coa_core::Domain::Math,
            DomainArg::Wiki => coa_core::Domain::Wiki,
        }
    }
}

/// Shared BM25 and plan options.
#[derive(Args, Clone, Debug, Default)]
pub struct RetrievalArgs {
    /// Articles kept from BM25 before reranking.
    #[arg(long)]
    top_k: Option<usize>,
    /// Rerank against the question only, or question plus query.
    #[arg(long, value_parser = ["question", "question-and-query"])]
    rerank: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {message}", path.display())]
    Missing { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{message}")]
    Failed { kind: &'static str, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn missing(path: &Path, e: std::io::Error) -> Self {
        CliError::Missing {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn data(path: &Path, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn failed(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Failed {
            kind,
            message: message.into(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Missing { .. } => "missing_input",
            CliError::Io { .. } => "io",
            CliError::Data { .. } => "bad_input",
            CliError::Failed { kind, .. } => kind,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Missing { .. } => 2,
            _ => 1,
        }
    }
}

/// What a finished command reports.
pub struct Outcome {
    /// 0, or 3 when some records failed.
    pub code: u8,
    pub summary: serde_json::Value,
    pub text: String,
}

pub struct Ctx {
    pub settings: Settings,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(n) = settings.pick_opt(cli.workers, "workers")? {
        if n == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::failed("worker_pool", e.to_string()))?;
    }
    let ctx = Ctx { settings };
    match cli.command {
        Command::Index(IndexCommand::Build(a)) => commands::index::build(&ctx, a),
        Command::Index(IndexCommand::Dump(a)) => commands::index::dump(&ctx, a),
        Command::Reify(a) => commands::reify::run(&ctx, a),
        Command::Verify(a) => commands::verify::run(&ctx, a),
        Command::Bench(a) => commands::bench::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("COA_LOG", "warn")).init();
    let json_mode = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if json_mode && code == 2 {
                eprintln!("{}", json!({"error": "usage", "message": e.to_string().trim()}));
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(o) => {
            if json {
                println!("{}", o.summary);
            } else if !o.text.is_empty() {
                println!("{}", o.text);
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            if json {
                eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
