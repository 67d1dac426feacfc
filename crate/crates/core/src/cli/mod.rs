//! Command-line driver.

pub mod check;
mod options;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::continuum::{FokkerPlanck, FpConfig};
use crate::diagnostics::{density_csv, l1_distance, laplace_probe, relative_entropy};
use crate::ensemble::{
    fp_reference, run_ensemble, write_results, EnsembleResult, REFERENCE_PADDING, REFERENCE_REFINEMENT,
};
use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::objectives::{gibbs_density, ObjectiveFunction};
use crate::samplers::Method;

pub use check::{run_suites, run_suites_with, Acceptance, Suite, SuiteReport};
pub use options::{ExperimentArgs, FileConfig, UsageError, SEED_ENV};

#[derive(Parser, Debug)]
#[command(name = "kinanneal", version, about = "Kinetic simulated annealing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an ensemble of one method and write its diagnostics
    Run(RunArgs),
    /// Run several methods with shared settings next to the Fokker-Planck reference
    Compare(CompareArgs),
    /// Solve the Fokker-Planck equation on a grid
    FpReference(ExperimentArgs),
    /// Evaluate -T log of the Gibbs-weighted mass of a uniform law
    Laplace(LaplaceArgs),
    /// Run the invariant suites
    Check(CheckArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Sampler: ksa, msa or mfl (required)
    #[arg(long)]
    pub method: Option<String>,

    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Comma-separated samplers [default: ksa,msa,mfl]
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,

    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct LaplaceArgs {
    /// Objective: ackley, quadratic or doublewell
    #[arg(long, default_value = "quadratic")]
    pub objective: String,

    /// Support of the uniform law g
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, default_values_t = [-1.0, 1.0])]
    pub support: Vec<f64>,

    /// Comma-separated temperatures
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01,0.001")]
    pub temperatures: Vec<f64>,

    /// Quadrature grid: lower bound, upper bound, cell count
    #[arg(long, num_args = 3, value_names = ["A", "B", "N"], allow_negative_numbers = true, default_values_t = [-6.0, 6.0, 2048.0])]
    pub grid: Vec<f64>,

    /// Also write laplace.csv into this directory [default: none]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Run only these suites (repeatable) [default: all]
    #[arg(long, value_enum)]
    pub suite: Vec<Suite>,
}

enum Failure {
    Usage(UsageError),
    Fault(Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(UsageError::Invalid(e)),
            other => Failure::Fault(other),
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit status.
pub fn main_from<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let (name, result) = match &cli.command {
        Command::Run(a) => ("run", cmd_run(a, out, err)),
        Command::Compare(a) => ("compare", cmd_compare(a, out, err)),
        Command::FpReference(a) => ("fp-reference", cmd_fp_reference(a, out)),
        Command::Laplace(a) => ("laplace", cmd_laplace(a, out)),
        Command::Check(a) => return cmd_check(&a.suite, crate::kernels::acceptance_from_delta, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(err, "error: {e}");
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(name) {
                let _ = writeln!(err, "\n{}", sub.render_usage());
            }
            2
        }
        Err(Failure::Fault(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn report_warnings(res: &EnsembleResult, err: &mut dyn Write) {
    for w in &res.series.warnings {
        let _ = writeln!(err, "warning ({}): {w}", res.series.metadata.method);
    }
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<(), Failure> {
    let resolved = a.experiment.resolve()?;
    let method = a
        .method
        .clone()
        .or_else(|| resolved.file.method.clone())
        .ok_or(UsageError::Missing("method"))?;
    let method = options::parse_method(&method)?;
    let dir = resolved.out.clone().unwrap_or_else(|| PathBuf::from("kinanneal-out"));
    let cfg = resolved.experiment(method)?.with_out_dir(&dir);
    let res = run_ensemble(&cfg)?;
    write_results(&res, &dir)?;
    report_warnings(&res, err);
    let last = res.series.len() - 1;
    let _ = writeln!(
        out,
        "{} eps={} runs={} t={}: H={:.6} L1={:.6} success={:.4} ({:.1}s) -> {}",
        method,
        cfg.chain.eps,
        cfg.runs,
        res.series.times[last],
        res.series.entropy[last],
        res.series.l1[last],
        res.series.success[last],
        res.wall_clock.as_secs_f64(),
        dir.display()
    );
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<(), Failure> {
    let resolved = a.experiment.resolve()?;
    let names = a
        .methods
        .clone()
        .or_else(|| resolved.file.methods.clone())
        .unwrap_or_else(|| vec!["ksa".into(), "msa".into(), "mfl".into()]);
    let methods = names
        .iter()
        .map(|n| options::parse_method(n.trim()))
        .collect::<std::result::Result<Vec<Method>, _>>()?;
    if methods.is_empty() {
        return Err(UsageError::Missing("methods").into());
    }
    let dir = resolved
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("kinanneal-compare"));
    let configs = methods
        .iter()
        .map(|m| Ok(resolved.experiment(*m)?.with_out_dir(dir.join(m.name()))))
        .collect::<std::result::Result<Vec<_>, UsageError>>()?;

    let mut results = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let res = run_ensemble(cfg)?;
        write_results(&res, &dir.join(cfg.chain.method.name()))?;
        report_warnings(&res, err);
        results.push(res);
    }
    let t_final = configs[0].chain.t_final;
    let reference = fp_reference(&configs[0].chain, &resolved.grid, &[t_final])?
        .pop()
        .expect("one reference time")
        .1;
    let gibbs = &results[0].final_density().gibbs;

    let names: Vec<String> = methods.iter().map(|m| format!("f_{}", m.name())).collect();
    let mut columns: Vec<(&str, &[f64])> = names
        .iter()
        .zip(&results)
        .map(|(n, r)| (n.as_str(), r.final_density().histogram.density.values()))
        .collect();
    columns.push(("f_reference", reference.values()));
    columns.push(("f_gibbs", gibbs.values()));
    write_text(&dir, "compare.csv", &density_csv(&resolved.grid, &columns))?;

    for (m, r) in methods.iter().zip(&results) {
        let h = &r.final_density().histogram.density;
        let _ = writeln!(
            out,
            "{} eps={} t={}: L1 to reference={:.6} L1 to Gibbs={:.6} H={:.6}",
            m,
            r.config.chain.eps,
            t_final,
            l1_distance(h, &reference)?,
            l1_distance(h, gibbs)?,
            r.series.entropy[r.series.len() - 1]
        );
    }
    let _ = writeln!(
        out,
        "reference: L1 to Gibbs={:.6} -> {}",
        l1_distance(&reference, gibbs)?,
        dir.display()
    );
    Ok(())
}

fn cmd_fp_reference(a: &ExperimentArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let resolved = a.resolve()?;
    let t_final = resolved.t_final()?;
    let obj: ObjectiveFunction = resolved.objective.clone();
    let grid = resolved.grid.refined(REFERENCE_REFINEMENT, REFERENCE_PADDING);
    let solver = FokkerPlanck::new(FpConfig {
        grid,
        dt: resolved.dt,
        schedule: resolved.schedule.clone(),
        objective: obj.clone(),
    })?;
    let (lo, hi) = resolved.init_interval;
    let f0 = DensityField::uniform_on(grid, lo, hi)?;
    let points = 200;
    let mut times: Vec<f64> = (0..=points).map(|k| t_final * k as f64 / points as f64).collect();
    times.extend(resolved.snapshots.iter().copied());
    times.sort_by(f64::total_cmp);
    times.dedup();
    let states = solver.evolve(&f0, t_final, &times)?;

    let mut series = String::from("t,entropy,l1_to_gibbs\n");
    for (t, f) in &states[..times.len()] {
        let g = gibbs_density(&obj, resolved.schedule.temperature(*t), &grid)?;
        series.push_str(&format!("{},{},{}\n", t, relative_entropy(f, &g)?, l1_distance(f, &g)?));
    }
    let (_, last) = states.last().expect("final state");
    let g = gibbs_density(&obj, resolved.schedule.temperature(t_final), &grid)?;
    let dir = resolved.out.clone().unwrap_or_else(|| PathBuf::from("kinanneal-fp"));
    write_text(&dir, "fp_series.csv", &series)?;
    write_text(
        &dir,
        "fp_density.csv",
        &density_csv(&grid, &[("f", last.values()), ("f_gibbs", g.values())]),
    )?;
    let _ = writeln!(
        out,
        "fp t={}: H={:.6e} L1 to Gibbs={:.6e} on {} cells -> {}",
        t_final,
        relative_entropy(last, &g)?,
        l1_distance(last, &g)?,
        grid.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_laplace(a: &LaplaceArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let obj = ObjectiveFunction::by_name(&a.objective, 1)?;
    let n = a.grid[2];
    if !(n >= 1.0 && n.fract() == 0.0) {
        return Err(Error::config("grid", format!("cell count must be a positive integer, got {n}")).into());
    }
    let grid = Grid1D::new(a.grid[0], a.grid[1], n as usize).map_err(|e| Error::config("grid", e.to_string()))?;
    if a.temperatures.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::config("temperatures", "must all be positive").into());
    }
    let g = DensityField::uniform_on(grid, a.support[0], a.support[1])
        .map_err(|e| Error::config("support", e.to_string()))?;
    let values = laplace_probe(&g, &obj, &a.temperatures);
    let mut csv = String::from("T,value\n");
    for (t, v) in a.temperatures.iter().zip(&values) {
        csv.push_str(&format!("{t},{v}\n"));
    }
    let _ = write!(out, "{csv}");
    if let Some(dir) = &a.out {
        write_text(dir, "laplace.csv", &csv)?;
    }
    Ok(())
}

/// Runs the selected suites (all when empty) and prints one line each.
/// Returns 0 when every suite passes, 1 otherwise.
pub fn cmd_check(suites: &[Suite], accept: Acceptance, out: &mut dyn Write) -> i32 {
    let selected: Vec<Suite> = if suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        suites.to_vec()
    };
    let reports = match run_suites_with(&selected, accept) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return 1;
        }
    };
    let mut ok = true;
    for r in &reports {
        let _ = writeln!(
            out,
            "{:<16} {} max residual {:.3e} (tolerance {:.0e})",
            r.suite,
            if r.passed { "PASS" } else { "FAIL" },
            r.max_residual,
            r.tolerance
        );
        if let Some(case) = &r.failing_case {
            let _ = writeln!(out, "  failing case: {case}");
        }
        ok &= r.passed;
    }
    if ok {
        0
    } else {
        1
    }
}
