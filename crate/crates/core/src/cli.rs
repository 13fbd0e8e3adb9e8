//! The pipeline commands behind the `eqemb` executable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::bundle::{ingest_dir, read_bundle, write_bundle, Bundle, IngestStats};
use crate::config::RunConfig;
use crate::corpus::Split;
use crate::error::{Error, Result};
use crate::eval::{grid_select, write_grid_report, GridRow};
use crate::eval::EvalReport;
use crate::model::{inspect_model, read_model, write_atomic, write_model, Model, ModelHeader, Param, PassTrace, Trainer};
use crate::retrieval::{equations_for_words, nearest_equations, nearest_words, Metric, Ranking};

/// `ingest`: read the corpus directory and write the bundle.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestStats> {
    let corpus = config.corpus_dir()?;
    let bundle = ingest_dir(corpus, &config.ingest)?;
    write_bundle(&config.bundle_dir, &bundle)?;
    info!("bundle written to {}", config.bundle_dir.display());
    Ok(bundle.stats)
}

/// Sidecar path holding the JSON-lines epoch trace of a model file.
pub fn trace_path(model_path: &Path) -> PathBuf {
    sibling(model_path, ".trace.jsonl")
}

/// Where the last good parameters go when training diverges.
pub fn last_good_path(model_path: &Path) -> PathBuf {
    sibling(model_path, ".last-good")
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn trace_jsonl(config: &RunConfig, traces: &[PassTrace]) -> String {
    let echo = serde_json::json!({ "format": 1, "config": config.to_kv() });
    let mut out = format!("{echo}\n");
    for t in traces {
        for e in &t.epochs {
            out.push_str(&e.to_json());
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub traces: Vec<PassTrace>,
    pub untokenizable: usize,
}

/// `train`: fit the configured mode on the bundle and write the model file
/// plus its trace. On divergence the last good parameters are written to
/// [`last_good_path`] and the divergence error is returned.
pub fn cmd_train(config: &RunConfig) -> Result<TrainSummary> {
    let bundle = read_bundle(&config.bundle_dir)?;
    let data = bundle.training_data();
    let mut trainer = Trainer::new(&data, config.mode, config.model.clone())?;
    let outcome = trainer.run();
    let traces = trainer.traces().to_vec();
    write_atomic(&trace_path(&config.model_path), trace_jsonl(config, &traces).as_bytes())?;
    if let Err(e) = outcome {
        let path = last_good_path(&config.model_path);
        warn!("{e}; keeping last good parameters in {}", path.display());
        write_model(&path, &trainer.model())?;
        return Err(e);
    }
    let untokenizable = trainer.untokenizable();
    write_model(&config.model_path, &trainer.into_model())?;
    info!("model written to {}", config.model_path.display());
    Ok(TrainSummary { traces, untokenizable })
}

/// `eval`: train every grid configuration, score the held-out splits and
/// write the TSV report.
pub fn cmd_eval(config: &RunConfig) -> Result<Vec<GridRow>> {
    let bundle = read_bundle(&config.bundle_dir)?;
    let data = bundle.training_data();
    let points = config.grid.points();
    if points.is_empty() {
        return Err(Error::Config("evaluation grid is empty".into()));
    }
    let rows = grid_select(&data, &bundle.heldout.test, &config.model, &points, config.pseudo_ll);
    let mut out = Vec::new();
    write_grid_report(&mut out, &rows, &config.to_kv())?;
    write_atomic(&config.report_path, &out)?;
    Ok(rows)
}

/// Held-out scores of the configured model file on both splits.
pub fn cmd_score(config: &RunConfig) -> Result<Vec<EvalReport>> {
    let bundle = read_bundle(&config.bundle_dir)?;
    let model = load_model(&config.model_path, &bundle)?;
    Ok([Split::Validation, Split::Test]
        .into_iter()
        .map(|split| EvalReport::new(&model, bundle.split(split), split, config.pseudo_ll))
        .collect())
}

/// Read a model file and check it against the bundle it was trained on.
pub fn load_model(path: &Path, bundle: &Bundle) -> Result<Model> {
    let model = read_model(path)?;
    if model.words.rows() != bundle.vocabulary.len() || model.equations.rows() != bundle.registry.len() {
        return Err(Error::Usage(format!(
            "model {} ({} words, {} equations) does not match the bundle ({} words, {} equations)",
            path.display(),
            model.words.rows(),
            model.equations.rows(),
            bundle.vocabulary.len(),
            bundle.registry.len()
        )));
    }
    Ok(model.with_eq_units(bundle.units.sequences.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Eq2Eq { id: u32 },
    Eq2Word { id: u32 },
    /// Comma-separated words; unknown words are reported and dropped.
    Word2Eq { words: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOptions {
    pub k: usize,
    /// Overrides the default metric of the query type.
    pub metric: Option<Metric>,
    /// Equation vector compared in `word2eq`.
    pub param: Param,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            k: 5,
            metric: None,
            param: Param::Rho,
        }
    }
}

/// Run one query against a loaded model.
pub fn run_query(model: &Model, bundle: &Bundle, query: &Query, opts: &QueryOptions) -> Result<Ranking> {
    match query {
        Query::Eq2Eq { id } => nearest_equations(model, *id, opts.k, opts.metric.unwrap_or(Metric::Euclidean)),
        Query::Eq2Word { id } => nearest_words(model, *id, opts.k, opts.metric.unwrap_or(Metric::Cosine)),
        Query::Word2Eq { words } => {
            let mut ids = Vec::new();
            for w in words.split(',').map(str::trim).filter(|w| !w.is_empty()) {
                match bundle.vocabulary.id(&w.to_lowercase()) {
                    Some(id) => ids.push(id),
                    None => warn!("query word {w:?} is not in the vocabulary; dropped"),
                }
            }
            equations_for_words(model, &ids, opts.k, opts.param, opts.metric.unwrap_or(Metric::Cosine))
        }
    }
}

/// TSV rows `rank, id, score, surface` for a ranking.
pub fn ranking_tsv(ranking: &Ranking, query: &Query, bundle: &Bundle) -> String {
    let mut out = String::new();
    for (rank, hit) in ranking.hits.iter().enumerate() {
        let surface = match query {
            Query::Eq2Word { .. } => bundle.vocabulary.form(hit.id).unwrap_or("?").to_string(),
            _ => bundle
                .registry
                .get(hit.id)
                .map_or_else(|| "?".to_string(), |r| r.latex.replace(['\t', '\n'], " ")),
        };
        let _ = writeln!(out, "{}\t{}\t{:.6}\t{}", rank + 1, hit.id, hit.score, surface);
    }
    out
}

/// `query`: rank against the configured model and bundle.
pub fn cmd_query(config: &RunConfig, query: &Query, opts: &QueryOptions) -> Result<String> {
    let bundle = read_bundle(&config.bundle_dir)?;
    let model = load_model(&config.model_path, &bundle)?;
    let ranking = run_query(&model, &bundle, query, opts)?;
    Ok(ranking_tsv(&ranking, query, &bundle))
}

/// `inspect`: the verified header of a model file.
pub fn cmd_inspect(path: &Path) -> Result<ModelHeader> {
    inspect_model(path)
}
