use std::fs;

use eqemb::cli::cmd_train;
use eqemb::config::RunConfig;
use eqemb::model::read_model;

const TEXT: [&str; 4] = [
    "vectors measure similarity between documents and words in the corpus",
    "the distance between two vectors grows when the words differ",
    "documents with similar words share similar vectors and small distance",
    "a corpus of documents gives words and vectors for every measure",
];

#[test]
fn equation_free_corpus_trains_identical_word_tables() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    for i in 0..12 {
        let body: Vec<&str> = (0..6).map(|j| TEXT[(i + j) % TEXT.len()]).collect();
        fs::write(corpus.join(format!("d{i:02}.tex")), body.join(".\n")).unwrap();
    }
    let mut config = RunConfig {
        corpus_dir: Some(corpus),
        bundle_dir: dir.path().join("bundle"),
        ..RunConfig::default()
    };
    for (k, v) in [("vocab_min_tf", "1"), ("vocab_top_stop", "0"), ("k", "6"), ("max_epochs", "3")] {
        config.set(k, v).unwrap();
    }
    let stats = eqemb::cli::cmd_ingest(&config).unwrap();
    assert_eq!(stats.equations, 0);

    let mut tables = Vec::new();
    for mode in ["baseline", "eqemb", "eqemb_u"] {
        config.set("mode", mode).unwrap();
        config.model_path = dir.path().join(format!("{mode}.bin"));
        cmd_train(&config).unwrap();
        let model = read_model(&config.model_path).unwrap();
        tables.push((model.words.rho_matrix().to_vec(), model.words.alpha_matrix().to_vec()));
    }
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    for t in &tables[1..] {
        assert_eq!(bits(&t.0), bits(&tables[0].0));
        assert_eq!(bits(&t.1), bits(&tables[0].1));
    }
}
