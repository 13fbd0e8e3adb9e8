//! Save a trained model, read back its header and detect corruption.
//!
//! Usage: cargo run --example model_file -- [PATH]

use std::fs;
use std::path::PathBuf;

use eqemb::bundle::{ingest_documents, IngestParams};
use eqemb::model::{inspect_model, read_model, train, write_model, Mode, ModelConfig};
use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let path = std::env::args().nth(1).map_or_else(|| PathBuf::from("example.eqemb"), PathBuf::from);
    let params = PlantedParams {
        docs_per_class: 10,
        ..PlantedParams::default()
    };
    let bundle = ingest_documents(planted_corpus(&params).documents, &IngestParams::default())?;
    let config = ModelConfig {
        dim: 8,
        max_epochs: 3,
        ..ModelConfig::default()
    };
    let model = train(&bundle.training_data(), Mode::EqEmbU, &config)?.model;
    write_model(&path, &model)?;
    println!("{}", inspect_model(&path)?);

    let back = read_model(&path)?.with_eq_units(bundle.units.sequences.clone());
    println!("\nreloaded {} word, {} equation rows", back.words.rows(), back.equations.rows());

    let mut bytes = fs::read(&path).map_err(|e| eqemb::Error::io(&path, e))?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    fs::write(&path, &bytes).map_err(|e| eqemb::Error::io(&path, e))?;
    match read_model(&path) {
        Err(e) => println!("flipped one byte: {e} (exit code {})", e.exit_code()),
        Ok(_) => println!("flipped byte went unnoticed"),
    }
    Ok(())
}
