//! Synthetic table shared by the integration tests.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use tempfile::TempDir;

const SCHEMA: &str = r#"
[label]
rule = "custom"
anomalous = ["bad"]

[[columns]]
name = "v"
kind = "continuous"
count = 5

[[columns]]
name = "proto"
kind = "categorical"

[[columns]]
name = "class"
kind = "label"
"#;

/// 300 normals around a plane, 40 anomalies off it.
pub fn write_table(dir: &Path) -> PathBuf {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let n = Normal::new(0.0, 1.0).unwrap();
    let mut text = String::new();
    for i in 0..340 {
        let anomaly = i >= 300;
        let (a, b): (f64, f64) = (n.sample(&mut rng), n.sample(&mut rng));
        let mut v = [3.0 + a, 2.0 + b, 1.0 + a - b, 4.0 + 0.5 * a, 1.0 + b];
        if anomaly {
            for x in &mut v {
                *x += 2.5 * n.sample(&mut rng);
            }
        }
        let proto = ["tcp", "udp", "icmp"][i % 3];
        let cols: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        text.push_str(&format!("{},{proto},{}\n", cols.join(","), if anomaly { "bad" } else { "ok" }));
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_table(dir.path());
    std::fs::write(dir.path().join("toy.toml"), SCHEMA).unwrap();
    let cfg = r#"
dataset = "toy"
data = "toy.csv"
schema = "toy.toml"
n_runs = 3
output = "out"

[bank]
tasks = 16
reduced_dim = 4

[train]
epochs = 2
batch_size = 32
"#;
    let path = dir.path().join("run.toml");
    std::fs::write(&path, cfg).unwrap();
    (dir, path)
}
