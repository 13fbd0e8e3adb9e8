//! Generate the planted-signal corpus and write it as `.tex` files.
//!
//! Usage: cargo run --example planted_corpus -- [OUT_DIR]

use std::path::PathBuf;

use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("planted"), PathBuf::from);
    let corpus = planted_corpus(&PlantedParams::default());
    corpus.write_to_dir(&out)?;
    println!("wrote {} documents to {}", corpus.documents.len(), out.display());
    for (class, words) in corpus.topic_words.iter().enumerate() {
        println!("class {class}: {}", words[..6].join(" "));
    }
    let first = &corpus.documents[0];
    println!("\n--- {} ---\n{}", first.doc_id, &first.source_text[..first.source_text.len().min(600)]);
    Ok(())
}
