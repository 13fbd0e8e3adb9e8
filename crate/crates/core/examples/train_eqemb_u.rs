//! Train the three model variants on one corpus and compare their test
//! pseudo log-likelihood. EqEmb-U builds each equation from its SLT units.
//!
//! Usage: cargo run --release --example train_eqemb_u -- [mean|sum]

use eqemb::bundle::{ingest_documents, IngestParams};
use eqemb::corpus::Split;
use eqemb::eval::{EvalReport, PseudoReading};
use eqemb::model::{train, Mode, ModelConfig, UnitContext};
use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let unit_context = match std::env::args().nth(1).as_deref() {
        Some("mean") => UnitContext::Mean,
        _ => UnitContext::Sum,
    };
    let corpus = planted_corpus(&PlantedParams::default());
    let bundle = ingest_documents(corpus.documents, &IngestParams::default())?;
    let data = bundle.training_data();
    println!("{} equations over {} distinct units", bundle.stats.equations, bundle.stats.units);

    let config = ModelConfig {
        dim: 25,
        learning_rate: 0.02,
        unit_context,
        ..ModelConfig::default()
    };
    for mode in Mode::ALL {
        let trained = train(&data, mode, &config)?;
        let report = EvalReport::new(&trained.model, bundle.split(Split::Test), Split::Test, PseudoReading::Bernoulli);
        let epochs: Vec<String> = trained.traces.iter().map(|t| format!("{}={}", t.pass, t.best_epoch)).collect();
        println!("{mode}\t{report}\tbest epochs {}", epochs.join(" "));
        if trained.untokenizable > 0 {
            println!("  {} equations had no units", trained.untokenizable);
        }
    }
    Ok(())
}
