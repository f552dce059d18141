//! Run configuration: one TOML file layered over a per-dataset preset, then
//! command-line overrides.
//!
//! ```toml
//! dataset = "thyroid"
//! data = "data/thyroid.csv"   # relative to this file
//! n_runs = 20
//!
//! [train]
//! epochs = 2
//! ```

use std::path::{Path, PathBuf};

use goad_core::dataset::{label_rules, LabelRule, SplitSpec, Standardization};
use goad_core::{NetSpec, TrainConfig, TransformFamily};
use serde::{Deserialize, Serialize};

use crate::error::{GoadError, Result};
use crate::schema::SchemaFile;

/// Environment variable naming the directory searched for benchmark files.
pub const DATA_DIR_ENV: &str = "GOAD_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankConfig {
    /// Number of transformations `M`.
    pub tasks: usize,
    pub reduced_dim: usize,
    #[serde(default)]
    pub family: TransformFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name (`thyroid`, `arrhythmia`, `kdd`, `kddrev`) or any label
    /// for a custom table.
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Schema file; the preset layout is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_rule: Option<LabelRule>,
    pub standardization: Standardization,
    pub n_runs: usize,
    pub base_seed: u64,
    /// Re-draw the train/test split for every run instead of only the model.
    pub vary_split: bool,
    pub lof_k: usize,
    pub output: PathBuf,
    pub split: SplitSpec,
    pub bank: BankConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    /// Published settings for one of the benchmark datasets.
    pub fn preset(dataset: &str) -> Result<Self> {
        let rule = label_rules(dataset)?;
        let small = |tasks| RunConfig {
            dataset: dataset.to_ascii_lowercase(),
            data: None,
            schema: None,
            label_rule: None,
            standardization: Standardization::ScaleOnly,
            n_runs: 100,
            base_seed: 0,
            vary_split: false,
            lof_k: 20,
            output: PathBuf::from("out"),
            split: SplitSpec::default(),
            bank: BankConfig {
                tasks,
                reduced_dim: 32,
                family: TransformFamily::AffineNormalized,
            },
            train: TrainConfig {
                epochs: 1,
                batch_size: 64,
                net: NetSpec::linear(8),
                ..TrainConfig::default()
            },
        };
        let large = |tasks, reduced_dim, width| RunConfig {
            standardization: Standardization::ZScore,
            n_runs: 5,
            bank: BankConfig {
                tasks,
                reduced_dim,
                family: TransformFamily::AffineNormalized,
            },
            // Trained features sit far apart (squared distances in the
            // hundreds), where any ε > 0 swamps every exp(−d²) and all
            // scores collapse to M ln M.
            train: TrainConfig {
                epochs: 25,
                batch_size: 64,
                epsilon: 0.0,
                net: NetSpec::deep(vec![width], width),
                ..TrainConfig::default()
            },
            ..small(tasks)
        };
        Ok(match rule {
            LabelRule::Thyroid | LabelRule::Arrhythmia => small(256),
            LabelRule::KddRev => large(256, 64, 128),
            LabelRule::KddCup99 => large(64, 128, 32),
            LabelRule::Custom { .. } => unreachable!("label_rules only returns named rules"),
        })
    }

    /// Generic settings for a custom table: the small-dataset preset
    /// (linear extractor, so the mean is kept when scaling) with 5 runs.
    pub fn custom(dataset: &str) -> Self {
        let mut c = Self::preset("thyroid").expect("thyroid preset exists");
        c.dataset = dataset.to_owned();
        c.n_runs = 5;
        c
    }

    /// Parses a config file. Keys missing from the file take the preset value
    /// of its `dataset`; relative paths are resolved against the file.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| GoadError::Config(e.to_string()))?;
        let dataset = user
            .get("dataset")
            .and_then(|v| v.as_str())
            .ok_or_else(|| GoadError::Config("missing string key `dataset`".into()))?;
        let base = Self::preset(dataset).unwrap_or_else(|_| Self::custom(dataset));
        let mut merged = toml::Table::try_from(&base).map_err(|e| GoadError::Config(e.to_string()))?;
        merge(&mut merged, user);
        let mut cfg: Self = merged.try_into().map_err(|e: toml::de::Error| GoadError::Config(e.to_string()))?;
        for p in [&mut cfg.data, &mut cfg.schema].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base_dir.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GoadError::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn label_rule(&self, schema: &SchemaFile) -> Result<LabelRule> {
        if let Some(rule) = &self.label_rule {
            return Ok(rule.clone());
        }
        if let Some(rule) = &schema.label {
            return Ok(rule.clone());
        }
        label_rules(&self.dataset).map_err(|_| {
            GoadError::Config(format!(
                "dataset `{}` has no built-in label rule; set `label_rule` or a `[label]` table in the schema",
                self.dataset
            ))
        })
    }

    pub fn schema_file(&self) -> Result<SchemaFile> {
        match &self.schema {
            Some(p) => SchemaFile::load(p),
            None => SchemaFile::preset(&self.dataset).map_err(|_| {
                GoadError::Config(format!("dataset `{}` has no built-in layout; set `schema`", self.dataset))
            }),
        }
    }

    /// Explicit `data`, else the conventional file name of the preset under
    /// `$GOAD_DATA_DIR` or `./data`.
    pub fn data_path(&self) -> Result<PathBuf> {
        if let Some(p) = &self.data {
            return Ok(p.clone());
        }
        let dirs: Vec<PathBuf> = std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .into_iter()
            .chain(std::iter::once(PathBuf::from("data")))
            .collect();
        let names = default_file_names(&self.dataset);
        find_data_file(&dirs, names).ok_or_else(|| {
            GoadError::Config(format!(
                "no data file for `{}`: set `data` or place one of {names:?} in ${DATA_DIR_ENV} or ./data",
                self.dataset
            ))
        })
    }

    /// Checks values and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.n_runs == 0 {
            return Err(GoadError::Config("n_runs must be at least 1".into()));
        }
        if self.bank.tasks == 0 || self.bank.reduced_dim == 0 {
            return Err(GoadError::Config("bank.tasks and bank.reduced_dim must be positive".into()));
        }
        if self.lof_k == 0 {
            return Err(GoadError::Config("lof_k must be at least 1".into()));
        }
        let f = self.split.train_fraction_of_normals;
        if !(f > 0.0 && f < 1.0) {
            return Err(GoadError::Config(format!("split.train_fraction_of_normals must lie in (0, 1), got {f}")));
        }
        let c = self.split.contamination_fraction;
        if !(0.0..1.0).contains(&c) {
            return Err(GoadError::Config(format!("split.contamination_fraction must lie in [0, 1), got {c}")));
        }
        if let Some(s) = &self.schema {
            if !s.is_file() {
                return Err(GoadError::Config(format!("schema file {} does not exist", s.display())));
            }
        }
        let data = self.data_path()?;
        if !data.is_file() {
            return Err(GoadError::Config(format!("data file {} does not exist", data.display())));
        }
        Ok(())
    }
}

pub fn default_file_names(dataset: &str) -> &'static [&'static str] {
    match dataset.to_ascii_lowercase().as_str() {
        "thyroid" => &["thyroid.csv", "thyroid.csv.gz"],
        "arrhythmia" => &["arrhythmia.csv", "arrhythmia.csv.gz"],
        "kdd" | "kddcup99" | "kddrev" | "kddcup99-rev" | "kdd-rev" => &[
            "kddcup.data_10_percent.gz",
            "kddcup.data_10_percent",
            "kddcup.data_10_percent_corrected",
            "kddcup.data_10_percent.csv",
        ],
        _ => &[],
    }
}

pub fn find_data_file(dirs: &[PathBuf], names: &[&str]) -> Option<PathBuf> {
    dirs.iter()
        .flat_map(|d| names.iter().map(move |n| d.join(n)))
        .find(|p| p.is_file())
}

/// Recursive table merge; `over` wins.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_published_settings() {
        let t = RunConfig::preset("thyroid").unwrap();
        assert_eq!((t.bank.tasks, t.bank.reduced_dim, t.train.epochs), (256, 32, 1));
        assert!(t.train.net.hidden.is_empty());
        let r = RunConfig::preset("kddrev").unwrap();
        assert_eq!((r.bank.tasks, r.bank.reduced_dim, r.train.epochs), (256, 64, 25));
        assert_eq!(r.train.net.hidden, [128]);
        let k = RunConfig::preset("kdd").unwrap();
        assert_eq!((k.bank.tasks, k.bank.reduced_dim), (64, 128));
        assert_eq!(k.train.net.hidden, [32]);
        assert_eq!(k.train.learning_rate, 1e-3);
        assert_eq!(k.train.margin, 1.0);
        assert_eq!((t.train.epsilon, k.train.epsilon), (1e-12, 0.0));
        assert_eq!(t.bank.family, TransformFamily::AffineNormalized);
    }

    #[test]
    fn file_overrides_only_named_keys() {
        let c = RunConfig::from_toml(
            "dataset = \"kddrev\"\ndata = \"x.csv\"\n[train]\nepochs = 3\n[bank]\ntasks = 16\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.net.hidden, [128]);
        assert_eq!((c.bank.tasks, c.bank.reduced_dim), (16, 64));
        assert_eq!(c.data.as_deref(), Some(Path::new("/cfg/x.csv")));
        assert!(RunConfig::from_toml("dataset = \"thyroid\"\nbogus = 1\n", Path::new(".")).is_err());
        assert!(RunConfig::from_toml("n_runs = 1\n", Path::new(".")).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::preset("arrhythmia").unwrap();
        let back = RunConfig::from_toml(&c.to_toml(), Path::new("")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn custom_dataset_needs_a_rule() {
        let c = RunConfig::custom("mine");
        let schema: SchemaFile = toml::from_str("[[columns]]\nname = \"y\"\nkind = \"label\"\n").unwrap();
        assert!(c.label_rule(&schema).is_err());
        assert!(c.schema_file().is_err());
    }
}
