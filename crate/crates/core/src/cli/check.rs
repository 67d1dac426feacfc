//! Invariant suites run by `kinanneal check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::continuum::{FokkerPlanck, FpConfig, KineticOperator};
use crate::diagnostics::{detailed_balance_residual_with, symmetry_identity_residual};
use crate::error::Result;
use crate::grid::{DensityField, Grid1D};
use crate::kernels::{acceptance_from_delta, SelectionDensity};
use crate::objectives::{gibbs_density, ObjectiveFunction};
use crate::schedule::CoolingSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    DetailedBalance,
    Dissipation,
    Fp,
    Symmetry,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::DetailedBalance, Suite::Dissipation, Suite::Fp, Suite::Symmetry];

    pub fn name(self) -> &'static str {
        match self {
            Suite::DetailedBalance => "detailed-balance",
            Suite::Dissipation => "dissipation",
            Suite::Fp => "fp",
            Suite::Symmetry => "symmetry",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    /// The worst case, serialized, when the suite fails.
    pub failing_case: Option<serde_json::Value>,
}

impl SuiteReport {
    fn new(suite: Suite, max_residual: f64, tolerance: f64, worst: serde_json::Value) -> Self {
        let passed = max_residual <= tolerance;
        SuiteReport {
            suite: suite.name(),
            passed,
            max_residual,
            tolerance,
            failing_case: (!passed).then_some(worst),
        }
    }
}

/// Acceptance rule `accept(F(to) − F(from), T)` under test.
pub type Acceptance = fn(f64, f64) -> f64;

/// Runs `suites` with the library acceptance rule.
pub fn run_suites(suites: &[Suite]) -> Result<Vec<SuiteReport>> {
    run_suites_with(suites, acceptance_from_delta)
}

pub fn run_suites_with(suites: &[Suite], accept: Acceptance) -> Result<Vec<SuiteReport>> {
    suites
        .iter()
        .map(|s| match s {
            Suite::DetailedBalance => detailed_balance(accept),
            Suite::Dissipation => dissipation(),
            Suite::Fp => fp(),
            Suite::Symmetry => symmetry(),
        })
        .collect()
}

fn detailed_balance(accept: Acceptance) -> Result<SuiteReport> {
    let obj = ObjectiveFunction::ackley(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xDB);
    let mut worst = (0.0, json!(null));
    for _ in 0..10_000 {
        let x = rng.random_range(-4.0..4.0);
        let xp = rng.random_range(-4.0..4.0);
        let t = 10f64.powf(rng.random_range(-2.0..1.0));
        let r = detailed_balance_residual_with(accept, &obj, t, x, xp).abs();
        if !(r <= worst.0) {
            worst = (r, json!({ "x": x, "x_prime": xp, "temperature": t, "residual": r }));
        }
    }
    Ok(SuiteReport::new(Suite::DetailedBalance, worst.0, 1e-12, worst.1))
}

fn dissipation() -> Result<SuiteReport> {
    let obj = ObjectiveFunction::ackley(1);
    let grid = Grid1D::new(-4.0, 4.0, 200)?;
    let op = KineticOperator::new(&obj, 2.0, 0.2, &SelectionDensity::normal(1), &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1);
    // the functionals are nonnegative, so only negative values count
    let mut worst = (0.0, json!(null));
    for k in 0..20 {
        let values = (0..grid.len()).map(|_| rng.random_range(0.01..1.0)).collect();
        let f = DensityField::normalized(grid, values)?;
        let i = op.entropy_dissipation(&f)?;
        let d = op.dirichlet_form(&f)?;
        let bad = (-i).max(-d).max(0.0);
        if bad > worst.0 || worst.1.is_null() {
            worst = (
                bad,
                json!({ "density": k, "entropy_dissipation": i, "dirichlet_form": d }),
            );
        }
    }
    let mut report = SuiteReport::new(Suite::Dissipation, worst.0, 1e-12, worst.1);
    let stationarity = op.apply(op.gibbs())?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if stationarity > 1e-8 {
        report.passed = false;
        report.failing_case = Some(json!({ "kinetic_operator_at_gibbs": stationarity }));
    }
    Ok(report)
}

fn fp() -> Result<SuiteReport> {
    let grid = Grid1D::new(-6.0, 6.0, 600)?;
    let mut worst = (0.0, json!(null));
    for obj in [ObjectiveFunction::ackley(1), ObjectiveFunction::double_well(1)] {
        for t in [0.5, 2.0] {
            let solver = FokkerPlanck::new(FpConfig {
                grid,
                dt: None,
                schedule: CoolingSchedule::constant(t)?,
                objective: obj.clone(),
            })?;
            let g = gibbs_density(&obj, t, &grid)?;
            let next = solver.step(&g, 0.0)?;
            let r = g
                .values()
                .iter()
                .zip(next.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if !(r <= worst.0) {
                worst = (
                    r,
                    json!({ "objective": obj.name(), "temperature": t, "max_cell_change": r }),
                );
            }
        }
    }
    Ok(SuiteReport::new(Suite::Fp, worst.0, 1e-12, worst.1))
}

fn symmetry() -> Result<SuiteReport> {
    let g = |x: f64, y: f64| (x - y) * (-x * x - y * y).exp();
    let r = symmetry_identity_residual(g, &SelectionDensity::normal(1), 0.5);
    Ok(SuiteReport::new(
        Suite::Symmetry,
        r,
        1e-8,
        json!({ "test_function": "(x - y) exp(-x^2 - y^2)", "sigma": 0.5, "residual": r }),
    ))
}
