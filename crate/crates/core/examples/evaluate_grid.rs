//! Run a small selection grid and print the TSV report. The
//! validation-best row of each (mode, K) is marked selected.
//!
//! Usage: cargo run --release --example evaluate_grid

use eqemb::bundle::{ingest_documents, IngestParams};
use eqemb::corpus::Split;
use eqemb::eval::{grid_configs, grid_select, write_grid_report, PseudoReading};
use eqemb::model::{Mode, ModelConfig};
use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let corpus = planted_corpus(&PlantedParams::default());
    let bundle = ingest_documents(corpus.documents, &IngestParams::default())?;
    let base = ModelConfig {
        learning_rate: 0.02,
        max_epochs: 5,
        ..ModelConfig::default()
    };
    let points = grid_configs(&[Mode::Baseline, Mode::EqEmb], &[10, 25], &[4, 8], &[16]);
    let rows = grid_select(&bundle.training_data(), bundle.split(Split::Test), &base, &points, PseudoReading::Bernoulli);
    let mut out = std::io::stdout().lock();
    write_grid_report(&mut out, &rows, &base.to_kv())
}
