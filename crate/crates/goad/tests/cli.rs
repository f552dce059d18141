mod common;

use std::path::Path;
use std::process::{Command, Output};

use goad::harness::{self, Method};
use goad::{ModelFile, RunConfig};

use common::setup;

fn goad(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_goad"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    out
}

fn ok(args: &[&str]) -> Output {
    let out = goad(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn same_seed_gives_byte_identical_models_and_scores() {
    let (dir, cfg) = setup();
    let m1 = dir.path().join("a.goad");
    let m2 = dir.path().join("b.goad");
    let m3 = dir.path().join("c.goad");
    ok(&["train", "--config", s(&cfg), "--seed", "11", "--out", s(&m1)]);
    ok(&["train", "--config", s(&cfg), "--seed", "11", "--out", s(&m2)]);
    ok(&["train", "--config", s(&cfg), "--seed", "12", "--out", s(&m3)]);
    let (b1, b2, b3) = (std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap(), std::fs::read(&m3).unwrap());
    assert_eq!(b1, b2);
    assert_ne!(b1, b3);

    let data = dir.path().join("toy.csv");
    let s1 = ok(&["score", "--model", s(&m1), "--data", s(&data)]).stdout;
    let s2 = ok(&["score", "--model", s(&m2), "--data", s(&data)]).stdout;
    assert_eq!(s1, s2);
    let text = String::from_utf8(s1).unwrap();
    assert_eq!(text.lines().count(), 340);
    assert!(text.lines().all(|l| l.parse::<f64>().unwrap().is_finite()));
}

#[test]
fn saved_model_scores_bit_identically() {
    let (dir, cfg_path) = setup();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let prep = harness::prepare(&cfg).unwrap();
    let file = harness::train_model_file(&prep, &cfg).unwrap();
    let path = dir.path().join("m.goad");
    file.save(&path).unwrap();
    let back = ModelFile::load(&path).unwrap();
    assert_eq!(back, file);

    let table = goad::table::load_table(&dir.path().join("toy.csv"), &back.schema).unwrap();
    let a = file.score_table(&table).unwrap();
    let b = back.score_table(&table).unwrap();
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());

    // The CLI stream round-trips the same bits.
    let out = ok(&["score", "--model", s(&path), "--data", s(&dir.path().join("toy.csv"))]);
    let streamed: Vec<u64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse::<f64>().unwrap().to_bits())
        .collect();
    assert_eq!(streamed, a.iter().map(|v| v.to_bits()).collect::<Vec<_>>());

    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    assert!(ModelFile::from_bytes(&bytes).is_err());
}

#[test]
fn normals_score_lower_than_anomalies() {
    let (_dir, cfg_path) = setup();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let prep = harness::prepare(&cfg).unwrap();
    let mut aucs = Vec::new();
    for k in 0..3 {
        let (scores, truth) = harness::run_scores(&prep, &cfg, Method::Goad, k).unwrap();
        let normal: f64 = scores.iter().zip(&truth).filter(|(_, &t)| !t).map(|(s, _)| s).sum::<f64>()
            / truth.iter().filter(|&&t| !t).count() as f64;
        let anomalous: f64 = scores.iter().zip(&truth).filter(|(_, &t)| t).map(|(s, _)| s).sum::<f64>()
            / truth.iter().filter(|&&t| t).count() as f64;
        assert!(normal < anomalous, "run {k}: {normal} vs {anomalous}");
        aucs.push(goad_core::metrics::roc_auc(&scores, &truth).unwrap());
    }
    assert!(aucs.iter().all(|&a| a > 0.8), "{aucs:?}");
}

#[test]
fn eval_and_baseline_write_reports() {
    let (dir, cfg) = setup();
    let out = dir.path().join("reports");
    let stdout = ok(&["eval", "--config", s(&cfg), "--out", s(&out), "--jobs", "2"]).stdout;
    let table = String::from_utf8(stdout).unwrap();
    assert!(table.contains("toy") && table.contains("n/a"), "{table}");
    let jsonl = std::fs::read_to_string(out.join("eval_toy_goad.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 4);

    // Thread count does not change results.
    let serial = dir.path().join("serial");
    ok(&["eval", "--config", s(&cfg), "--out", s(&serial), "--jobs", "1"]);
    assert_eq!(std::fs::read_to_string(serial.join("eval_toy_goad.jsonl")).unwrap(), jsonl);

    ok(&["baseline", "--config", s(&cfg), "--out", s(&out), "--method", "lof"]);
    assert!(out.join("eval_toy_lof.jsonl").is_file());
    let bad = goad(&["baseline", "--config", s(&cfg), "--method", "svm"]);
    assert!(!bad.status.success());
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("available") && err.contains("lof"), "{err}");
}

#[test]
fn sweeps_validate_and_emit_xy_columns() {
    let (dir, cfg) = setup();
    let out = dir.path().join("sw");
    let stdout = ok(&["sweep", "--config", s(&cfg), "--runs", "1", "--axis", "tasks", "--values", "2,4", "--out", s(&out)]).stdout;
    let text = String::from_utf8(stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("2 ") && rows[1].starts_with("4 "));

    ok(&["sweep", "--config", s(&cfg), "--runs", "1", "--axis", "contamination", "--values", "0,0.05", "--out", s(&out)]);
    for vals in ["4,2", "2,2"] {
        assert!(!goad(&["sweep", "--config", s(&cfg), "--axis", "tasks", "--values", vals]).status.success());
    }
    let cfg_v = RunConfig::load(&cfg).unwrap();
    let prep = harness::prepare(&cfg_v).unwrap();
    assert!(harness::sweep_tasks(&prep, &cfg_v, &[], 1).is_err());
}

#[test]
fn encode_writes_a_loadable_cache() {
    let (dir, cfg) = setup();
    let path = dir.path().join("toy.goaddata");
    ok(&["encode", "--config", s(&cfg), "--out", s(&path)]);
    let ds = goad::cache::load_dataset(&path).unwrap();
    assert_eq!((ds.x.rows(), ds.x.cols()), (340, 8));
    assert_eq!(ds.anomaly_count(), 40);
}

#[test]
fn bad_inputs_are_reported() {
    let (dir, cfg) = setup();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2,3,4,5,tcp,ok\n1,2,x,4,5,tcp,ok\n").unwrap();
    let out = goad(&["eval", "--config", s(&cfg), "--data", s(&bad)]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!out.status.success());
    assert!(err.contains("row 2") && err.contains("v2"), "{err}");

    let missing = goad(&["eval", "--config", s(&cfg), "--data", "/nonexistent.csv"]);
    assert!(!missing.status.success());
    assert!(!goad(&["eval"]).status.success());

    let preset = ok(&["preset", "thyroid"]).stdout;
    let text = String::from_utf8(preset).unwrap();
    assert!(text.contains("tasks = 256") && text.contains("reduced_dim = 32"), "{text}");
}
