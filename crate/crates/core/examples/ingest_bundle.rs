//! Ingest a directory of `.tex` files (or the planted corpus when no
//! directory is given) and write the token bundle.
//!
//! Usage: cargo run --example ingest_bundle -- [CORPUS_DIR] [BUNDLE_DIR]

use std::path::PathBuf;

use eqemb::bundle::{ingest_dir, ingest_documents, write_bundle, IngestParams};
use eqemb::synth::{planted_corpus, PlantedParams};

fn main() -> eqemb::Result<()> {
    let mut args = std::env::args().skip(1);
    let corpus = args.next().map(PathBuf::from);
    let out = args.next().map_or_else(|| PathBuf::from("bundle"), PathBuf::from);
    let params = IngestParams::default();
    let bundle = match &corpus {
        Some(dir) => ingest_dir(dir, &params)?,
        None => ingest_documents(planted_corpus(&PlantedParams::default()).documents, &params)?,
    };
    write_bundle(&out, &bundle)?;

    println!("{}", bundle.stats);
    println!("validation items\t{}", bundle.heldout.validation.len());
    println!("test items\t{}", bundle.heldout.test.len());
    for record in bundle.registry.records().iter().take(5) {
        println!("eq {}\t{}", record.eq_id, record.latex);
    }
    println!("bundle written to {}", out.display());
    Ok(())
}
