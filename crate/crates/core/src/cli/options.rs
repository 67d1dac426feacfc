//! Flag and config-file parsing shared by the subcommands.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::diagnostics::default_histogram_grid;
use crate::ensemble::ExperimentConfig;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::kernels::SelectionKind;
use crate::objectives::ObjectiveFunction;
use crate::samplers::{ChainConfig, Method};
use crate::schedule::CoolingSchedule;

pub const SEED_ENV: &str = "KINANNEAL_SEED";

pub const DEFAULT_OBJECTIVE: &str = "ackley";
pub const DEFAULT_T0: f64 = 2.0;
pub const DEFAULT_SCHEDULE: &str = "constant";
pub const DEFAULT_RUNS: usize = 50_000;

/// A configuration problem reported with exit status 2.
#[derive(Debug)]
pub enum UsageError {
    Missing(&'static str),
    Invalid(Error),
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UsageError::Missing(key) => write!(f, "missing required `--{key}` (flag or config file)"),
            UsageError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError::Invalid(e)
    }
}

/// Config file contents; keys mirror the long flag names.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub method: Option<String>,
    pub methods: Option<Vec<String>>,
    pub objective: Option<String>,
    pub dim: Option<usize>,
    pub epsilon: Option<f64>,
    pub dt: Option<f64>,
    pub t0: Option<f64>,
    pub schedule: Option<String>,
    #[serde(alias = "t_final")]
    pub t_final: Option<f64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<(f64, f64, usize)>,
    #[serde(alias = "init_interval")]
    pub init_interval: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub selection: Option<String>,
    pub snapshots: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config("config", e.to_string()))
    }
}

/// Flags describing one ensemble experiment.
#[derive(Args, Clone, Debug, Default)]
pub struct ExperimentArgs {
    /// JSON file whose keys mirror these flags; flags win conflicts
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Objective: ackley, quadratic or doublewell [default: ackley]
    #[arg(long)]
    pub objective: Option<String>,

    /// Dimension of the objective [default: 1]
    #[arg(long)]
    pub dim: Option<usize>,

    /// Scaling parameter ε of the kinetic step (required)
    #[arg(long, visible_alias = "eps")]
    pub epsilon: Option<f64>,

    /// Time step; KSA and MSA need dt ≤ ε [default: ε]
    #[arg(long)]
    pub dt: Option<f64>,

    /// Initial temperature T0 [default: 2]
    #[arg(long)]
    pub t0: Option<f64>,

    /// Cooling schedule: constant or log, T(t) = T0/log(t + 2) [default: constant]
    #[arg(long)]
    pub schedule: Option<String>,

    /// Final time (required)
    #[arg(long)]
    pub t_final: Option<f64>,

    /// Number of independent runs [default: 50000]
    #[arg(long)]
    pub runs: Option<usize>,

    /// Master seed [default: $KINANNEAL_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Histogram grid: lower bound, upper bound, cell count [default: -4 4 160]
    #[arg(long, num_args = 3, value_names = ["A", "B", "N"], allow_negative_numbers = true)]
    pub grid: Option<Vec<f64>>,

    /// Interval of the uniform initial law [default: -3 3]
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub init_interval: Option<Vec<f64>>,

    /// Output directory [default: depends on the subcommand]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long)]
    pub threads: Option<usize>,

    /// Selection density: normal or uniform [default: normal]
    #[arg(long)]
    pub selection: Option<String>,

    /// Comma-separated times for density dumps besides t_final [default: none]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snapshots: Option<Vec<f64>>,
}

/// Flags merged with the config file.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub file: FileConfig,
    pub objective: ObjectiveFunction,
    pub eps: Option<f64>,
    pub dt: Option<f64>,
    pub schedule: CoolingSchedule,
    pub t_final: Option<f64>,
    pub runs: usize,
    pub seed: u64,
    pub grid: Grid1D,
    pub init_interval: (f64, f64),
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub selection: SelectionKind,
    pub snapshots: Vec<f64>,
}

fn env_seed() -> std::result::Result<Option<u64>, UsageError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(SEED_ENV, format!("not an unsigned integer: `{v}`")).into()),
        Err(_) => Ok(None),
    }
}

fn grid_from(v: (f64, f64, usize)) -> Result<Grid1D> {
    Grid1D::new(v.0, v.1, v.2).map_err(|e| Error::config("grid", e.to_string()))
}

impl ExperimentArgs {
    pub fn resolve(&self) -> std::result::Result<Resolved, UsageError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let name = self
            .objective
            .clone()
            .or_else(|| file.objective.clone())
            .unwrap_or_else(|| DEFAULT_OBJECTIVE.to_string());
        let dim = self.dim.or(file.dim).unwrap_or(1);
        let objective = ObjectiveFunction::by_name(&name, dim)?;
        let t0 = self.t0.or(file.t0).unwrap_or(DEFAULT_T0);
        let kind = self
            .schedule
            .clone()
            .or_else(|| file.schedule.clone())
            .unwrap_or_else(|| DEFAULT_SCHEDULE.to_string());
        let schedule = CoolingSchedule::from_kind(&kind, t0)?;
        let grid = match &self.grid {
            Some(v) => {
                let n = v[2];
                if !(n >= 1.0 && n.fract() == 0.0) {
                    return Err(
                        Error::config("grid", format!("cell count must be a positive integer, got {n}")).into(),
                    );
                }
                grid_from((v[0], v[1], n as usize))?
            }
            None => match file.grid {
                Some(g) => grid_from(g)?,
                None => default_histogram_grid(),
            },
        };
        let init_interval = match &self.init_interval {
            Some(v) => (v[0], v[1]),
            None => file.init_interval.unwrap_or((-3.0, 3.0)),
        };
        let selection = match self.selection.clone().or_else(|| file.selection.clone()) {
            Some(s) => s.parse()?,
            None => SelectionKind::Normal,
        };
        let seed = match self.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        };
        Ok(Resolved {
            objective,
            eps: self.epsilon.or(file.epsilon),
            dt: self.dt.or(file.dt),
            schedule,
            t_final: self.t_final.or(file.t_final),
            runs: self.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
            seed,
            grid,
            init_interval,
            out: self.out.clone().or_else(|| file.out.clone()),
            threads: self.threads.or(file.threads).unwrap_or(0),
            selection,
            snapshots: self
                .snapshots
                .clone()
                .or_else(|| file.snapshots.clone())
                .unwrap_or_default(),
            file,
        })
    }
}

pub fn parse_method(s: &str) -> std::result::Result<Method, UsageError> {
    Ok(s.parse::<Method>()?)
}

impl Resolved {
    pub fn t_final(&self) -> std::result::Result<f64, UsageError> {
        self.t_final.ok_or(UsageError::Missing("t-final"))
    }

    pub fn chain(&self, method: Method) -> std::result::Result<ChainConfig, UsageError> {
        let eps = self.eps.ok_or(UsageError::Missing("epsilon"))?;
        let t_final = self.t_final()?;
        let mut chain = ChainConfig::new(method, self.objective.clone(), eps, t_final)
            .with_schedule(self.schedule.clone())
            .with_seed(self.seed)
            .with_selection(self.selection)
            .with_init_interval(self.init_interval.0, self.init_interval.1);
        if let Some(dt) = self.dt {
            chain = chain.with_dt(dt);
        }
        chain.validate()?;
        Ok(chain)
    }

    pub fn experiment(&self, method: Method) -> std::result::Result<ExperimentConfig, UsageError> {
        let cfg = ExperimentConfig::new(self.chain(method)?, self.runs)
            .with_grid(self.grid)
            .with_snapshots(self.snapshots.clone())
            .with_threads(self.threads);
        cfg.validate()?;
        Ok(cfg)
    }
}
