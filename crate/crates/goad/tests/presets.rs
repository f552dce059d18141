//! Benchmark presets run end to end on synthetic files in the benchmark
//! layouts (the real files are not shipped).

use std::io::Write as _;
use std::path::Path;

use flate2::write::GzEncoder;
use goad::harness::{self, Method};
use goad::schema::KDD_COLUMNS;
use goad::RunConfig;
use goad_core::dataset::ColumnKind;
use goad_core::seed::rng_from_seed;
use rand::RngExt;

fn odds_table(path: &Path, features: usize, normals: usize, anomalies: usize, seed: u64) {
    let mut rng = rng_from_seed(seed);
    let mut text = String::new();
    for i in 0..normals + anomalies {
        let anomaly = i >= normals;
        let shift = if anomaly { 3.0 } else { 0.0 };
        let row: Vec<String> = (0..features)
            .map(|j| {
                let base = 1.0 + (j % 5) as f64;
                format!("{:.5}", base + shift * ((j % 3) as f64 - 1.0) + rng.random_range(-0.5..0.5))
            })
            .collect();
        text.push_str(&format!("{},{}\n", row.join(","), anomaly as u8));
    }
    std::fs::write(path, text).unwrap();
}

/// KDD layout, gzip compressed; `attacks` rows use attack labels.
fn kdd_table(path: &Path, normals: usize, attacks: usize) {
    let mut rng = rng_from_seed(3);
    let mut text = String::new();
    for i in 0..normals + attacks {
        let attack = i >= normals;
        let fields: Vec<String> = KDD_COLUMNS
            .iter()
            .enumerate()
            .map(|(j, &(name, kind))| match kind {
                ColumnKind::Categorical => match name {
                    "protocol_type" => ["tcp", "udp", "icmp"][if attack { 2 } else { i % 2 }].to_owned(),
                    "service" => ["http", "smtp", "ecr_i", "private"][if attack { 2 + i % 2 } else { i % 2 }].to_owned(),
                    "flag" => if attack { "S0" } else { "SF" }.to_owned(),
                    _ => ((i + j) % 2).to_string(),
                },
                _ => {
                    let centre = if attack { 5.0 } else { 1.0 } * (1 + j % 4) as f64;
                    format!("{:.3}", centre + rng.random_range(0.0..1.0))
                }
            })
            .collect();
        let label = if attack { ["smurf.", "neptune."][i % 2] } else { "normal." };
        text.push_str(&format!("{},{label}\n", fields.join(",")));
    }
    let mut gz = GzEncoder::new(std::fs::File::create(path).unwrap(), flate2::Compression::fast());
    gz.write_all(text.as_bytes()).unwrap();
    gz.finish().unwrap();
}

fn quick(mut cfg: RunConfig, data: &Path) -> RunConfig {
    cfg.data = Some(data.to_owned());
    cfg.n_runs = 2;
    cfg.bank.tasks = cfg.bank.tasks.min(16);
    cfg.validate().unwrap();
    cfg
}

#[test]
fn small_presets_run_both_modes_and_lof() {
    let dir = tempfile::tempdir().unwrap();
    for (name, width) in [("thyroid", 6), ("arrhythmia", 274)] {
        let path = dir.path().join(format!("{name}.csv"));
        odds_table(&path, width, 200, 20, 1);
        let cfg = quick(RunConfig::preset(name).unwrap(), &path);
        let prep = harness::prepare(&cfg).unwrap();
        assert_eq!((prep.dataset.x.cols(), prep.dataset.anomaly_count()), (width, 20));
        for k in 0..cfg.n_runs {
            let [open, soft] = harness::run_once_both_modes(&prep, &cfg, k).unwrap();
            assert!(open.f1 > 0.5, "{name} openset run {k}: {}", open.f1);
            assert!((0.0..=1.0).contains(&soft.f1));
        }
        let lof = harness::run_repeated(&prep, &cfg, Method::Lof, 1).unwrap();
        assert!(lof.f1.mean > 0.5, "{name} lof {}", lof.f1.mean);
        assert_eq!(lof.f1.std, 0.0, "LOF is deterministic with a fixed split");
    }
}

#[test]
fn kdd_presets_follow_their_label_rules() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kddcup.data_10_percent.gz");
    kdd_table(&path, 120, 200);

    // normal traffic is the anomaly class
    let kdd = quick(RunConfig::preset("kdd").unwrap(), &path);
    let prep = harness::prepare(&kdd).unwrap();
    assert_eq!(prep.dataset.anomaly_count(), 120);
    assert_eq!(prep.dataset.x.rows(), 320);
    // 34 continuous columns plus one-hot blocks
    assert_eq!(prep.dataset.continuous_mask.iter().filter(|&&c| c).count(), 34);
    let r = harness::run_repeated(&prep, &kdd, Method::Goad, 1).unwrap();
    assert!(r.f1.mean > 0.5, "kdd {}", r.f1.mean);

    // attacks subsampled to a quarter of the normal rows
    let rev = quick(RunConfig::preset("kddrev").unwrap(), &path);
    let prep = harness::prepare(&rev).unwrap();
    assert_eq!(prep.dataset.anomaly_count(), 30);
    assert_eq!(prep.dataset.x.rows(), 150);
    let r = harness::run_repeated(&prep, &rev, Method::Goad, 1).unwrap();
    assert!(r.f1.mean > 0.5, "kddrev {}", r.f1.mean);

    let curve = harness::contamination_curve(&harness::prepare(&kdd).unwrap(), &kdd, Method::Goad, &[0.0, 0.05], 1).unwrap();
    assert_eq!(curve.reports.len(), 2);
}
