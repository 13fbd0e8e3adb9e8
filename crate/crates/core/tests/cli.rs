use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eqemb::eval::GRID_REPORT_HEADER;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny")
}

const TINY: [&str; 4] = ["--set", "vocab_min_tf=1", "--set", "vocab_top_stop=0"];

fn eqemb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqemb")).args(args).output().expect("run eqemb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ingest(dir: &Path) -> PathBuf {
    let bundle = dir.join("bundle");
    let fx = fixture();
    let mut args = vec!["ingest", "--corpus", fx.to_str().unwrap(), "--bundle", bundle.to_str().unwrap()];
    args.extend(TINY);
    let out = eqemb(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    bundle
}

fn train(bundle: &Path, model: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--bundle",
        bundle.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--set",
        "k=8",
    ];
    args.extend(extra);
    eqemb(&args)
}

#[test]
fn ingest_prints_four_counts() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    let fx = fixture();
    let mut args = vec!["ingest", "--corpus", fx.to_str().unwrap(), "--bundle", bundle.to_str().unwrap()];
    args.extend(TINY);
    let out = eqemb(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "documents\twords\tequations\tunits");
    let counts: Vec<usize> = lines[1].split('\t').map(|c| c.parse().unwrap()).collect();
    assert_eq!(counts.len(), 4);
    assert_eq!(counts[0], 3);
    assert_eq!(counts[2], 5);
    assert!(bundle.join("manifest.txt").exists());
}

#[test]
fn missing_corpus_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = eqemb(&["ingest", "--corpus", missing.to_str().unwrap(), "--bundle", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn empty_corpus_dir_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqemb(&["ingest", "--corpus", dir.path().to_str().unwrap(), "--bundle", "unused"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_override_is_a_usage_error() {
    assert_eq!(eqemb(&["inspect", "x", "--set", "no_such_key=1"]).status.code(), Some(2));
    assert_eq!(eqemb(&["inspect", "x", "--set", "k=zero"]).status.code(), Some(2));
    assert_eq!(eqemb(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn train_inspect_query_eval() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = ingest(dir.path());
    let model = dir.path().join("model.bin");
    let out = train(&bundle, &model, &["--mode", "eqemb_u"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());
    let trace = fs::read_to_string(dir.path().join("model.bin.trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["format"], 1);
    assert!(first["config"].as_str().unwrap().contains("mode=eqemb_u"));
    for line in trace.lines().skip(1) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["epoch"].as_u64().unwrap() >= 1);
        assert!(v["wall_secs"].as_f64().unwrap() >= 0.0);
    }

    let out = eqemb(&["inspect", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let header = stdout(&out);
    assert!(header.contains("mode\teqemb_u"));
    assert!(header.contains("config.k\t8"));

    let (b, m) = (bundle.to_str().unwrap(), model.to_str().unwrap());
    let out = eqemb(&["query", "--bundle", b, "--model", m, "word2eq", "--words", "similarity,distance,cosine", "-k", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<Vec<String>> = stdout(&out)
        .lines()
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 4);
        assert_eq!(row[0], (i + 1).to_string());
    }

    let out = eqemb(&["query", "--bundle", b, "--model", m, "eq2eq", "--id", "0", "-k", "10"]);
    assert_eq!(stdout(&out).lines().count(), 4);
    let out = eqemb(&["query", "--bundle", b, "--model", m, "eq2word", "--id", "1", "-k", "3"]);
    assert_eq!(stdout(&out).lines().count(), 3);
    let out = eqemb(&["query", "--bundle", b, "--model", m, "eq2eq", "--id", "99"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eqemb(&["query", "--bundle", b, "--model", m, "word2eq", "--words", "zzz,qqq"]);
    assert_eq!(out.status.code(), Some(2));

    let out = eqemb(&["eval", "--bundle", b, "--model", m]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("valid\t"));

    let report = dir.path().join("grid.tsv");
    let out = eqemb(&[
        "eval", "--bundle", b, "--report", report.to_str().unwrap(), "--set", "grid_modes=baseline,eqemb", "--set",
        "grid_k=4", "--set", "grid_w=4,8", "--set", "grid_e=8,16", "--set", "max_epochs=3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], GRID_REPORT_HEADER);
    assert!(lines[1].starts_with("#config\t"));
    // baseline: W in {4, 8}; eqemb: (4,8), (4,16), (8,8), (8,16)
    assert_eq!(lines.len() - 2, 6);
    assert_eq!(stdout(&out), text);
}

#[test]
fn truncated_model_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = ingest(dir.path());
    let model = dir.path().join("model.bin");
    assert!(train(&bundle, &model, &[]).status.success());
    let bytes = fs::read(&model).unwrap();
    fs::write(&model, &bytes[..bytes.len() / 2]).unwrap();
    let out = eqemb(&["inspect", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt"));
}

#[test]
fn divergence_keeps_last_good_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = ingest(dir.path());
    let model = dir.path().join("model.bin");
    let out = train(&bundle, &model, &["--set", "learning_rate=1e300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
    assert!(!model.exists());
    let last_good = dir.path().join("model.bin.last-good");
    let out = eqemb(&["inspect", last_good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .flatten()
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn config_file_and_override_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = ingest(dir.path());
    let conf = dir.path().join("run.conf");
    let model = dir.path().join("m.bin");
    fs::write(
        &conf,
        format!("bundle_dir={}\nmodel_path={}\nk=6\nmode=baseline\nmax_epochs=2\n", bundle.display(), model.display()),
    )
    .unwrap();
    let out = eqemb(&["train", "--config", conf.to_str().unwrap(), "--set", "k=5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = stdout(&eqemb(&["inspect", model.to_str().unwrap()]));
    assert!(header.contains("mode\tbaseline"));
    assert!(header.contains("config.k\t5"));
    assert!(header.contains("config.max_epochs\t2"));
}
