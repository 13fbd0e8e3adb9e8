//! Train an EqEmb model on the planted corpus and score it on held-out
//! equations.
//!
//! Usage: cargo run --release --example train_eqemb -- [SEED]

use eqemb::bundle::{ingest_documents, IngestParams};
use eqemb::corpus::Split;
use eqemb::eval::{EvalReport, PseudoReading};
use eqemb::model::{train, Mode, ModelConfig};
use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let corpus = planted_corpus(&PlantedParams::default());
    let bundle = ingest_documents(corpus.documents.clone(), &IngestParams::default())?;
    let config = ModelConfig {
        dim: 25,
        learning_rate: 0.02,
        seed,
        ..ModelConfig::default()
    };

    let trained = train(&bundle.training_data(), Mode::EqEmb, &config)?;
    for trace in &trained.traces {
        let scores: Vec<String> = trace.scores().iter().map(|s| format!("{s:.4}")).collect();
        println!("{} pass: best epoch {} of [{}]", trace.pass, trace.best_epoch, scores.join(", "));
    }
    for split in [Split::Validation, Split::Test] {
        println!("{}", EvalReport::new(&trained.model, bundle.split(split), split, PseudoReading::Bernoulli));
    }
    println!("eq2eq purity@5\t{:.3}", corpus.eq2eq_purity(&trained.model, &bundle, 5)?);
    println!("eq2word precision@5\t{:.3}", corpus.eq2word_precision(&trained.model, &bundle, 5)?);
    Ok(())
}
