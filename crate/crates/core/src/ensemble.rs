//! Ensembles of independent chains, pooled diagnostics and result files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{FokkerPlanck, FpConfig};
use crate::diagnostics::{
    default_histogram_grid, density_csv, snapshot_stats, DiagnosticSeries, Histogram, SeriesMetadata,
};
use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::objectives::gibbs_density;
use crate::samplers::{run_chain_with, ChainConfig, Point};
use crate::stream::{run_rng, run_seed};

/// Refinement factor of the Fokker–Planck reference grid relative to the
/// histogram grid, and its padding in histogram cells on each side.
pub const REFERENCE_REFINEMENT: usize = 5;
pub const REFERENCE_PADDING: usize = 40;

fn default_tolerance() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// The chain configuration; `chain.seed` is the master seed.
    pub chain: ChainConfig,
    pub runs: usize,
    /// Times at which densities are dumped in addition to `t_final`.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub grid: Grid1D,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    /// Max-norm radius around the known minimizer counted as success.
    #[serde(default = "default_tolerance")]
    pub success_tol: f64,
}

impl ExperimentConfig {
    pub fn new(chain: ChainConfig, runs: usize) -> Self {
        ExperimentConfig {
            chain,
            runs,
            snapshot_times: Vec::new(),
            grid: default_histogram_grid(),
            out_dir: None,
            threads: 0,
            success_tol: default_tolerance(),
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_grid(mut self, grid: Grid1D) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn master_seed(&self) -> u64 {
        self.chain.seed
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        if self.runs == 0 {
            return Err(Error::config("runs", "need at least one run"));
        }
        if self.chain.objective.dim() != 1 {
            return Err(Error::config(
                "objective",
                "ensemble diagnostics compare against a one-dimensional Gibbs density",
            ));
        }
        if !(self.success_tol > 0.0) {
            return Err(Error::config("success_tol", "must be positive"));
        }
        crate::samplers::snapshot_steps(&self.chain, &self.snapshot_times)?;
        Ok(())
    }

    /// Density dump times: the requested snapshots plus `t_final`.
    pub fn dump_times(&self) -> Vec<f64> {
        merge_times(&self.snapshot_times, &[self.chain.t_final])
    }

    /// Series times: t = 0, the requested snapshots and `t_final`.
    pub fn series_times(&self) -> Vec<f64> {
        merge_times(&self.snapshot_times, &[0.0, self.chain.t_final])
    }
}

fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = a.iter().chain(b).copied().collect();
    t.sort_by(f64::total_cmp);
    t.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    t
}

/// A pooled snapshot: histogram and Gibbs density at T(t).
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySnapshot {
    pub time: f64,
    pub histogram: Histogram,
    pub gibbs: DensityField,
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub config: ExperimentConfig,
    /// Final position of every run, in run order.
    pub finals: Vec<Point>,
    /// First coordinate of every run at each series time.
    pub samples: Vec<Vec<f64>>,
    pub series: DiagnosticSeries,
    /// Snapshots at the dump times.
    pub densities: Vec<DensitySnapshot>,
    pub seeds: Vec<u64>,
    pub wall_clock: Duration,
}

/// Equality of outcomes; wall-clock time is ignored.
impl PartialEq for EnsembleResult {
    fn eq(&self, other: &Self) -> bool {
        self.finals == other.finals
            && self.samples == other.samples
            && self.series == other.series
            && self.densities == other.densities
            && self.seeds == other.seeds
    }
}

impl EnsembleResult {
    pub fn final_density(&self) -> &DensitySnapshot {
        self.densities.last().expect("t_final is always dumped")
    }

    pub fn final_samples(&self) -> &[f64] {
        self.samples.last().expect("t_final is always sampled")
    }
}

fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Runs `cfg.runs` chains, run i on stream `(master seed, i)`, and pools
/// their positions at every series time.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    if let Some(dir) = &cfg.out_dir {
        check_writable(dir)?;
    }
    let start = Instant::now();
    let chain = &cfg.chain;
    let series_times = cfg.series_times();
    let master = cfg.master_seed();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let trajectories = pool.install(|| {
        (0..cfg.runs as u64)
            .into_par_iter()
            .map(|i| run_chain_with(chain, &series_times, &mut run_rng(master, i)))
            .collect::<Result<Vec<_>>>()
    })?;

    let seeds = (0..cfg.runs as u64).map(|i| run_seed(master, i)).collect();
    let mut positions: Vec<Vec<Point>> = vec![Vec::with_capacity(cfg.runs); series_times.len()];
    let mut finals = Vec::with_capacity(cfg.runs);
    for tr in trajectories {
        for (k, s) in tr.snapshots.into_iter().enumerate() {
            positions[k].push(s.position);
        }
        finals.push(tr.last.position);
    }

    let mut series = DiagnosticSeries::new(SeriesMetadata {
        method: chain.method.name().to_string(),
        epsilon: chain.eps,
        schedule: chain.schedule.kind_name().to_string(),
        runs: cfg.runs,
    });
    let dump_times = cfg.dump_times();
    let mut densities = Vec::with_capacity(dump_times.len());
    let x_star = chain.objective.known_minimizer();
    for (t, pos) in series_times.iter().zip(&positions) {
        let gibbs = gibbs_density(&chain.objective, chain.schedule.temperature(*t), &cfg.grid)?;
        let stats = snapshot_stats(*t, pos, &cfg.grid, gibbs, x_star, cfg.success_tol)?;
        series.push(&stats);
        if dump_times.iter().any(|d| (d - t).abs() <= 1e-12) {
            densities.push(DensitySnapshot {
                time: *t,
                histogram: stats.histogram,
                gibbs: stats.gibbs,
            });
        }
    }
    let samples = positions.iter().map(|p| p.iter().map(|x| x[0]).collect()).collect();

    Ok(EnsembleResult {
        config: cfg.clone(),
        finals,
        samples,
        series,
        densities,
        seeds,
        wall_clock: start.elapsed(),
    })
}

/// Fokker–Planck solution for the chain's objective and schedule started
/// from the uniform initial law, computed on a refined, padded copy of
/// `grid` and transferred back onto `grid` at each requested time.
pub fn fp_reference(chain: &ChainConfig, grid: &Grid1D, times: &[f64]) -> Result<Vec<(f64, DensityField)>> {
    let fine = grid.refined(REFERENCE_REFINEMENT, REFERENCE_PADDING);
    let (a, b) = chain.init_interval;
    let f0 = DensityField::uniform_on(fine, a, b)?;
    let solver = FokkerPlanck::new(FpConfig {
        grid: fine,
        dt: None,
        schedule: chain.schedule.clone(),
        objective: chain.objective.clone(),
    })?;
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let mut out = solver.evolve(&f0, t_end, times)?;
    out.truncate(times.len());
    Ok(out.into_iter().map(|(t, f)| (t, f.rebin(grid))).collect())
}

/// File name of the density dump at time `t`.
pub fn density_file_name(t: f64) -> String {
    format!("density_t{t}.csv")
}

pub const INCOMPLETE_MARKER: &str = ".incomplete";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    /// Run i draws from ChaCha8 seeded with `run_seed(master_seed, i)` on
    /// stream i.
    pub seed_derivation: String,
    pub config: ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Writes `series.csv`, one `density_t{t}.csv` per dump time and
/// `manifest.json` into `dir`. A `.incomplete` marker exists while writing.
pub fn write_results(res: &EnsembleResult, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, INCOMPLETE_MARKER, "")?;
    let mut files = vec!["series.csv".to_string()];
    write_file(dir, "series.csv", &res.series.to_csv())?;
    for d in &res.densities {
        let name = density_file_name(d.time);
        let csv = density_csv(
            d.gibbs.grid(),
            &[
                ("f_empirical", d.histogram.density.values()),
                ("f_gibbs", d.gibbs.values()),
            ],
        );
        write_file(dir, &name, &csv)?;
        files.push(name);
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: res.config.master_seed(),
        seed_derivation: "chacha8(run_seed(master_seed, i)), stream i".to_string(),
        config: res.config.clone(),
        wall_clock_seconds: res.wall_clock.as_secs_f64(),
        files,
        warnings: res.series.warnings.clone(),
    };
    write_file(dir, "manifest.json", &serde_json::to_string_pretty(&manifest)?)?;
    let marker = dir.join(INCOMPLETE_MARKER);
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(manifest)
}

/// Re-runs the experiment recorded in a manifest.
pub fn rerun_from_manifest(path: &Path) -> Result<EnsembleResult> {
    run_ensemble(&Manifest::load(path)?.config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveFunction;
    use crate::samplers::Method;

    fn small(method: Method) -> ExperimentConfig {
        let chain = ChainConfig::new(method, ObjectiveFunction::ackley(1), 0.05, 0.5).with_seed(3);
        ExperimentConfig::new(chain, 40).with_snapshots(vec![0.25])
    }

    #[test]
    fn series_covers_start_snapshots_and_end() {
        let res = run_ensemble(&small(Method::Ksa)).unwrap();
        assert_eq!(res.series.times, vec![0.0, 0.25, 0.5]);
        assert_eq!(res.densities.len(), 2);
        assert_eq!(res.finals.len(), 40);
        assert_eq!(res.final_samples().len(), 40);
        assert!(res.series.entropy.iter().all(|h| *h >= -1e-9));
    }

    #[test]
    fn single_run_is_flagged() {
        let mut cfg = small(Method::Mfl);
        cfg.runs = 1;
        let res = run_ensemble(&cfg).unwrap();
        assert!(res.series.warnings.iter().any(|w| w.contains("samples")));
    }

    #[test]
    fn zero_runs_rejected() {
        let mut cfg = small(Method::Msa);
        cfg.runs = 0;
        assert!(matches!(run_ensemble(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn empty_snapshot_list_dumps_only_the_end() {
        let cfg = small(Method::Ksa).with_snapshots(vec![]);
        assert_eq!(cfg.dump_times(), vec![0.5]);
        assert_eq!(density_file_name(0.5), "density_t0.5.csv");
        assert_eq!(density_file_name(2.0), "density_t2.csv");
    }

    #[test]
    fn reference_keeps_unit_mass_on_the_window() {
        let chain = ChainConfig::new(Method::Mfl, ObjectiveFunction::ackley(1), 0.01, 0.5);
        let grid = default_histogram_grid();
        let r = fp_reference(&chain, &grid, &[0.0, 0.5]).unwrap();
        assert_eq!(r.len(), 2);
        for (_, f) in r {
            assert!((f.mass() - 1.0).abs() < 1e-12);
        }
    }
}
