//! The evaluation protocol shared by every command: load, encode, split,
//! normalise with training statistics, fit, score, pick the top-`N_a`
//! threshold and aggregate over seeds.

use std::fmt;
use std::str::FromStr;

use goad_core::dataset::{
    encode, split, DataSplit, EncodedDataset, Encoder, LabelRule, NormalizationStats, SplitSpec,
};
use goad_core::lof::LofModel;
use goad_core::metrics::{evaluate_scores, MetricsReport, RunMetrics};
use goad_core::seed::SeedStreams;
use goad_core::{score_batch, train, BankSpec, GoadModel, Matrix, ScoreMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{GoadError, Result};
use crate::model_file::ModelFile;
use crate::schema::SchemaFile;
use crate::table::load_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Goad,
    Lof,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Goad, Method::Lof];

    pub fn name(self) -> &'static str {
        match self {
            Method::Goad => "goad",
            Method::Lof => "lof",
        }
    }

    /// Row label in the published comparison table.
    pub fn reference_name(self) -> &'static str {
        match self {
            Method::Goad => "GOAD",
            Method::Lof => "LOF",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = GoadError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                GoadError::Config(format!("unknown method `{s}`; available: {}", names.join(", ")))
            })
    }
}

/// A labelled, encoded table ready for repeated splitting.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: EncodedDataset,
    pub encoder: Encoder,
    pub schema: SchemaFile,
    pub rule: LabelRule,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let schema = cfg.schema_file()?;
    let rule = cfg.label_rule(&schema)?;
    let path = cfg.data_path()?;
    let table = load_table(&path, &schema)?;
    prepare_table(&table, schema, rule, cfg.split.seed)
}

pub fn prepare_table(
    table: &goad_core::dataset::RawTable,
    schema: SchemaFile,
    rule: LabelRule,
    seed: u64,
) -> Result<Prepared> {
    let (dataset, encoder) = encode(table, &rule, seed)?;
    log::info!(
        "encoded {} rows x {} features, {} anomalies",
        dataset.x.rows(),
        dataset.x.cols(),
        dataset.anomaly_count()
    );
    Ok(Prepared {
        dataset,
        encoder,
        schema,
        rule,
    })
}

/// Train/test matrices of one run after normalisation.
#[derive(Clone, Debug)]
pub struct RunData {
    pub split: DataSplit,
    pub train: Matrix,
    pub test: Matrix,
    pub truth: Vec<bool>,
    pub stats: NormalizationStats,
}

/// Root seed of run `k`.
pub fn run_seed(cfg: &RunConfig, k: usize) -> u64 {
    cfg.base_seed.wrapping_add(k as u64)
}

pub fn split_spec(cfg: &RunConfig, k: usize) -> SplitSpec {
    SplitSpec {
        seed: if cfg.vary_split {
            cfg.split.seed.wrapping_add(k as u64)
        } else {
            cfg.split.seed
        },
        ..cfg.split
    }
}

pub fn run_data(prep: &Prepared, cfg: &RunConfig, k: usize) -> Result<RunData> {
    let split = split(&prep.dataset, &split_spec(cfg, k))?;
    let stats = NormalizationStats::fit_with(&split.train, &prep.dataset.continuous_mask, cfg.standardization)?;
    Ok(RunData {
        train: stats.apply(&split.train)?,
        test: stats.apply(&split.test)?,
        truth: split.test_truth(),
        split,
        stats,
    })
}

/// Bank and training seeds both derive from the run's root seed.
pub fn fit_goad(train_x: &Matrix, cfg: &RunConfig, seed: u64) -> Result<GoadModel> {
    let streams = SeedStreams::from_root(seed);
    let bank = BankSpec {
        seed: streams.bank,
        tasks: cfg.bank.tasks,
        input_dim: train_x.cols(),
        reduced_dim: cfg.bank.reduced_dim,
        family: cfg.bank.family,
    };
    let config = goad_core::TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    Ok(train(train_x, &config, &bank)?)
}

/// Scores of one run, aligned with `RunData::truth`.
pub fn run_scores(prep: &Prepared, cfg: &RunConfig, method: Method, k: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    let data = run_data(prep, cfg, k)?;
    let scores = match method {
        Method::Goad => score_batch(&fit_goad(&data.train, cfg, run_seed(cfg, k))?, &data.test)?,
        Method::Lof => LofModel::fit(&data.train, cfg.lof_k)?.score_batch(&data.test)?,
    };
    Ok((scores, data.truth))
}

pub fn run_once(prep: &Prepared, cfg: &RunConfig, method: Method, k: usize) -> Result<RunMetrics> {
    let (scores, truth) = run_scores(prep, cfg, method, k)?;
    let m = evaluate_scores(&scores, &truth)?;
    log::debug!("{method} run {k}: f1 {:.4} auc {:.4}", m.f1, m.roc_auc);
    Ok(m)
}

/// One GOAD fit per seed, evaluated under both scoring rules.
pub fn run_once_both_modes(prep: &Prepared, cfg: &RunConfig, k: usize) -> Result<[RunMetrics; 2]> {
    let data = run_data(prep, cfg, k)?;
    let model = fit_goad(&data.train, cfg, run_seed(cfg, k))?;
    let open = score_batch(&model.clone().with_score_mode(ScoreMode::OpenSetDistance), &data.test)?;
    let closed = score_batch(&model.with_score_mode(ScoreMode::ClosedSetSoftmax), &data.test)?;
    Ok([evaluate_scores(&open, &data.truth)?, evaluate_scores(&closed, &data.truth)?])
}

/// Runs `f(k)` for `k < n` on `jobs` threads; results keep run order.
pub fn parallel_runs<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if jobs <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| GoadError::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// `cfg.n_runs` seeded runs (`base_seed + k`), aggregated in run order.
pub fn run_repeated(prep: &Prepared, cfg: &RunConfig, method: Method, jobs: usize) -> Result<MetricsReport> {
    let runs = parallel_runs(cfg.n_runs, jobs, |k| run_once(prep, cfg, method, k))?;
    Ok(MetricsReport::from_runs(runs))
}

/// Trains on run 0's split and bundles everything needed to score raw rows.
pub fn train_model_file(prep: &Prepared, cfg: &RunConfig) -> Result<ModelFile> {
    let data = run_data(prep, cfg, 0)?;
    Ok(ModelFile {
        model: fit_goad(&data.train, cfg, run_seed(cfg, 0))?,
        normalization: data.stats,
        encoder: prep.encoder.clone(),
        schema: prep.schema.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tasks,
    Contamination,
}

impl FromStr for SweepAxis {
    type Err = GoadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tasks" => Ok(SweepAxis::Tasks),
            "contamination" => Ok(SweepAxis::Contamination),
            _ => Err(GoadError::Config(format!("unknown sweep axis `{s}`; available: tasks, contamination"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Tasks => "tasks",
            SweepAxis::Contamination => "contamination",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub reports: Vec<MetricsReport>,
}

fn check_axis(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(GoadError::Config("sweep axis is empty".into()));
    }
    if let Some(w) = values.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(GoadError::Config(format!(
            "sweep axis must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn sweep(
    prep: &Prepared,
    cfg: &RunConfig,
    method: Method,
    axis: SweepAxis,
    values: &[f64],
    jobs: usize,
) -> Result<SweepResult> {
    check_axis(values)?;
    let mut reports = Vec::with_capacity(values.len());
    for &v in values {
        let mut point = cfg.clone();
        match axis {
            SweepAxis::Tasks => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(GoadError::Config(format!("task count {v} is not a positive integer")));
                }
                point.bank.tasks = v as usize;
            }
            SweepAxis::Contamination => point.split.contamination_fraction = v,
        }
        log::info!("sweep {axis} = {v}");
        reports.push(run_repeated(prep, &point, method, jobs)?);
    }
    Ok(SweepResult {
        axis,
        values: values.to_vec(),
        reports,
    })
}

pub fn sweep_tasks(prep: &Prepared, cfg: &RunConfig, counts: &[usize], jobs: usize) -> Result<SweepResult> {
    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    sweep(prep, cfg, Method::Goad, SweepAxis::Tasks, &values, jobs)
}

pub fn contamination_curve(
    prep: &Prepared,
    cfg: &RunConfig,
    method: Method,
    fractions: &[f64],
    jobs: usize,
) -> Result<SweepResult> {
    sweep(prep, cfg, method, SweepAxis::Contamination, fractions, jobs)
}
