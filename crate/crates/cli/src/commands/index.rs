use std::path::PathBuf;

use clap::Args;
use coa_core::wiki::{read_corpus, Bm25Params, Chunking, Index, IndexError};
use serde_json::json;

use super::path;
use crate::output::{manifest_path_for, read_input, require_files, write_atomic, Manifest};
use crate::{CliError, Ctx, Outcome};

#[derive(Args)]
pub struct BuildArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Times the title counts toward term frequency.
    #[arg(long)]
    title_weight: Option<u32>,
    /// One document per article or per blank-line paragraph.
    #[arg(long, value_parser = ["article", "paragraph"])]
    chunking: Option<String>,
}

#[derive(Args)]
pub struct DumpArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value = "summary", value_parser = ["summary", "json"])]
    format: String,
}

fn index_error(e: IndexError) -> CliError {
    let kind = match e {
        IndexError::EmptyCorpus => "empty_corpus",
        IndexError::DuplicateArticleId(_) => "duplicate_article_id",
        IndexError::EmptyTitle(_) => "empty_title",
        IndexError::InvalidParameter(_) => "invalid_parameter",
        _ => "index",
    };
    CliError::failed(kind, format!("{kind}: {e}"))
}

pub fn build(ctx: &Ctx, a: BuildArgs) -> Result<Outcome, CliError> {
    let s = &ctx.settings;
    let corpus_path = path(ctx, a.corpus, "corpus", "--corpus")?;
    let out = path(ctx, a.out, "out", "--out")?;
    let d = Bm25Params::default();
    let params = Bm25Params {
        k1: s.pick(a.k1, "k1", d.k1)?,
        b: s.pick(a.b, "b", d.b)?,
        title_weight: s.pick(a.title_weight, "title_weight", d.title_weight)?,
    };
    let chunking = match s.pick(a.chunking, "chunking", "article".to_string())?.as_str() {
        "article" => Chunking::PerArticle,
        "paragraph" => Chunking::PerParagraph,
        other => return Err(CliError::usage(format!("unknown chunking {other:?}"))),
    };
    require_files(&[&corpus_path])?;

    let config = json!({
        "corpus": corpus_path, "out": out, "k1": params.k1, "b": params.b,
        "title_weight": params.title_weight, "chunking": chunking,
    });
    let mut manifest = Manifest::new("index build", config);
    let bytes = read_input(&corpus_path)?;
    manifest.input(&corpus_path, &bytes);
    let corpus = read_corpus(bytes.as_slice()).map_err(|e| CliError::data(&corpus_path, e.to_string()))?;
    let index = Index::build(corpus, params, chunking).map_err(index_error)?;
    write_atomic(&out, &index.to_bytes())?;
    manifest.output(&out);
    manifest.write(&manifest_path_for(&out))?;
    log::info!("indexed {} documents into {}", index.doc_count(), out.display());

    Ok(Outcome {
        code: 0,
        summary: json!({
            "doc_count": index.doc_count(),
            "avg_doc_length": index.avg_doc_length(),
            "terms": index.terms().count(),
            "out": out,
            "config_hash": manifest.config_hash(),
        }),
        text: format!(
            "doc_count={} avg_doc_length={}",
            index.doc_count(),
            index.avg_doc_length()
        ),
    })
}

pub fn dump(_ctx: &Ctx, a: DumpArgs) -> Result<Outcome, CliError> {
    let bytes = read_input(&a.index)?;
    let index = Index::from_bytes(&bytes).map_err(|e| CliError::data(&a.index, e.to_string()))?;
    let summary = json!({
        "doc_count": index.doc_count(),
        "avg_doc_length": index.avg_doc_length(),
        "terms": index.terms().count(),
        "params": index.params(),
        "chunking": index.chunking(),
    });
    if a.format == "json" {
        let dump = index.to_json();
        return Ok(Outcome {
            code: 0,
            text: serde_json::to_string_pretty(&dump).expect("json"),
            summary: dump,
        });
    }
    let text = format!(
        "doc_count={} avg_doc_length={} terms={}",
        index.doc_count(),
        index.avg_doc_length(),
        index.terms().count()
    );
    Ok(Outcome { code: 0, summary, text })
}
