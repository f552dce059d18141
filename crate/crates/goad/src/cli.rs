//! Command-line surface.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use goad_core::ScoreMode;

use crate::cache::save_dataset;
use crate::config::RunConfig;
use crate::harness::{self, Method, SweepAxis};
use crate::model_file::ModelFile;
use crate::report;
use crate::table::load_table;

#[derive(Debug, Parser)]
#[command(name = "goad", version, about = "Transformation-classification anomaly detection for tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the configured split and write a model file.
    Train(Common),
    /// Score every row of a table with a saved model.
    Score(ScoreArgs),
    /// Repeated seeded runs with the top-N_a threshold protocol.
    Eval(EvalArgs),
    /// Repeat the evaluation along the task-count or contamination axis.
    Sweep(SweepArgs),
    /// Evaluate a baseline detector under the same protocol.
    Baseline(BaselineArgs),
    /// Encode a table and write the binary dataset cache.
    Encode(Common),
    /// Print the full configuration of a dataset preset.
    Preset { dataset: String },
    /// Print the published comparison table.
    Reference,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Preset to start from when no config file is given.
    #[arg(long, conflicts_with = "config")]
    pub dataset: Option<String>,
    /// Data file, overriding the config.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Root seed (overrides `base_seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for repeated runs.
    #[arg(long, short, default_value_t = 1)]
    pub jobs: usize,
    /// Output file or directory, depending on the command.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Number of runs (overrides `n_runs`).
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScoreModeArg {
    Openset,
    Softmax,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Table laid out like the training file.
    #[arg(long)]
    pub data: PathBuf,
    /// Score file; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub score_mode: Option<ScoreModeArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub score_mode: Option<ScoreModeArg>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// `tasks` or `contamination`.
    #[arg(long, default_value = "tasks")]
    pub axis: String,
    /// Comma-separated, strictly increasing axis values. Defaults to
    /// 2,4,…,256 tasks or 0,1,2,5,10 % contamination.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, default_value = "goad")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "lof")]
    pub method: String,
}

pub const BASELINES: [Method; 1] = [Method::Lof];

fn score_mode(arg: ScoreModeArg) -> ScoreMode {
    match arg {
        ScoreModeArg::Openset => ScoreMode::OpenSetDistance,
        ScoreModeArg::Softmax => ScoreMode::ClosedSetSoftmax,
    }
}

impl Common {
    pub fn load_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match (&self.config, &self.dataset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => bail!("pass --config <file> or --dataset <preset>"),
        };
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(n) = self.runs {
            cfg.n_runs = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| cfg.output.clone());
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load_config()?;
            let prep = harness::prepare(&cfg)?;
            let file = harness::train_model_file(&prep, &cfg)?;
            let path = match &c.out {
                Some(p) => p.clone(),
                None => c.out_dir(&cfg)?.join(format!("{}.goad", cfg.dataset)),
            };
            file.save(&path)?;
            log::info!("wrote {}", path.display());
        }
        Command::Score(a) => {
            let mut file = ModelFile::load(&a.model)?;
            if let Some(m) = a.score_mode {
                file.model = file.model.with_score_mode(score_mode(m));
            }
            let table = load_table(&a.data, &file.schema)?;
            let text = report::score_stream(&file.score_table(&table)?);
            match &a.out {
                Some(p) => write_file(p, &text)?,
                None => std::io::stdout().lock().write_all(text.as_bytes())?,
            }
        }
        Command::Eval(a) => {
            let mut cfg = a.common.load_config()?;
            if let Some(m) = a.score_mode {
                cfg.train.score_mode = score_mode(m);
                cfg.train.validate()?;
            }
            evaluate(&a.common, &cfg, Method::Goad)?;
        }
        Command::Baseline(a) => {
            let method: Method = a.method.parse()?;
            if !BASELINES.contains(&method) {
                let names: Vec<&str> = BASELINES.iter().map(|m| m.name()).collect();
                bail!("`{}` is not a baseline; available: {}", a.method, names.join(", "));
            }
            let cfg = a.common.load_config()?;
            evaluate(&a.common, &cfg, method)?;
        }
        Command::Sweep(a) => {
            let cfg = a.common.load_config()?;
            let axis: SweepAxis = a.axis.parse()?;
            let method: Method = a.method.parse()?;
            let values = a.values.clone().unwrap_or_else(|| match axis {
                SweepAxis::Tasks => vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
                SweepAxis::Contamination => vec![0.0, 0.01, 0.02, 0.05, 0.10],
            });
            let prep = harness::prepare(&cfg)?;
            let result = harness::sweep(&prep, &cfg, method, axis, &values, a.common.jobs)?;
            let dir = a.common.out_dir(&cfg)?;
            let stem = format!("sweep_{}_{}_{}", cfg.dataset, method, axis);
            let xy = report::sweep_xy(&result);
            write_file(&dir.join(format!("{stem}.txt")), &xy)?;
            write_file(&dir.join(format!("{stem}.json")), &serde_json::to_string_pretty(&result)?)?;
            print!("{xy}");
        }
        Command::Encode(c) => {
            let cfg = c.load_config()?;
            let prep = harness::prepare(&cfg)?;
            let path = match &c.out {
                Some(p) => p.clone(),
                None => c.out_dir(&cfg)?.join(format!("{}.goaddata", cfg.dataset)),
            };
            save_dataset(&path, &prep.dataset)?;
            log::info!("wrote {}", path.display());
        }
        Command::Preset { dataset } => print!("{}", RunConfig::preset(&dataset)?.to_toml()),
        Command::Reference => print!("{}", report::reference_table()),
    }
    Ok(())
}

fn evaluate(common: &Common, cfg: &RunConfig, method: Method) -> anyhow::Result<()> {
    let prep = harness::prepare(cfg)?;
    let r = harness::run_repeated(&prep, cfg, method, common.jobs)?;
    let dir = common.out_dir(cfg)?;
    let stem = format!("eval_{}_{}", cfg.dataset, method);
    write_file(&dir.join(format!("{stem}.jsonl")), &report::json_lines(&cfg.dataset, method, &r))?;
    let table = report::comparison_table(&[(&cfg.dataset, method, &r)]);
    write_file(&dir.join(format!("{stem}.txt")), &table)?;
    print!("{table}");
    Ok(())
}
