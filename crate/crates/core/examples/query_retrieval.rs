//! Nearest-neighbour queries against a trained model: similar equations,
//! words describing an equation, and equations for a set of words.
//!
//! Usage: cargo run --release --example query_retrieval -- [EQ_ID]

use eqemb::bundle::{ingest_documents, IngestParams};
use eqemb::model::{train, Mode, ModelConfig, Param};
use eqemb::retrieval::{equations_for_words, nearest_equations, nearest_words, Metric};
use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let eq: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let corpus = planted_corpus(&PlantedParams::default());
    let bundle = ingest_documents(corpus.documents.clone(), &IngestParams::default())?;
    let config = ModelConfig {
        dim: 25,
        learning_rate: 0.02,
        ..ModelConfig::default()
    };
    let model = train(&bundle.training_data(), Mode::EqEmb, &config)?.model;
    let latex = |id: u32| bundle.registry.get(id).map_or("?", |r| r.latex.as_str());

    println!("query equation {eq}: {}", latex(eq));
    println!("\nsimilar equations (euclidean):");
    for hit in nearest_equations(&model, eq, 5, Metric::Euclidean)?.hits {
        println!("  {:>4}  {:.4}  {}", hit.id, hit.score, latex(hit.id));
    }
    println!("\ndescribing words (cosine):");
    for hit in nearest_words(&model, eq, 8, Metric::Cosine)?.hits {
        println!("  {:<14} {:.4}", bundle.vocabulary.form(hit.id).unwrap_or("?"), hit.score);
    }

    let words = &corpus.topic_words[0][..3];
    let ids: Vec<u32> = words.iter().filter_map(|w| bundle.vocabulary.id(w)).collect();
    println!("\nequations for {words:?}:");
    for hit in equations_for_words(&model, &ids, 5, Param::Rho, Metric::Cosine)?.hits {
        let class = corpus.class_of_equation(latex(hit.id)).map_or("-".to_string(), |c| c.to_string());
        println!("  {:>4}  {:.4}  class {class}  {}", hit.id, hit.score, latex(hit.id));
    }
    Ok(())
}
