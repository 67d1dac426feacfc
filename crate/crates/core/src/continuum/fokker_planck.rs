//! Structure-preserving explicit solver for
//!
//! ```text
//! ∂f/∂t = ∂x(F′ f) + T ∂xx f,   zero flux at both ends,
//! ```
//!
//! using Chang–Cooper / exponential-fitting interface weights. With
//! w = (F_{i+1} − F_i)/T and the Bernoulli function B(w) = w/(eᵂ − 1), the
//! interface flux is `T/Δx · (B(−w) f_{i+1} − B(w) f_i)`, which vanishes
//! exactly when f_{i+1}/f_i = e^{−w}, i.e. on the discrete Gibbs density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::objectives::{ObjectiveFunction, ObjectiveSpec};
use crate::schedule::CoolingSchedule;

const MAX_HALVINGS: u32 = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FpConfig {
    pub grid: Grid1D,
    /// Time step; `None` picks a step inside the positivity bound at T(0).
    pub dt: Option<f64>,
    pub schedule: CoolingSchedule,
    #[serde(with = "objective_by_name")]
    pub objective: ObjectiveFunction,
}

mod objective_by_name {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(o: &ObjectiveFunction, s: S) -> std::result::Result<S::Ok, S::Error> {
        ObjectiveSpec::from(o).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ObjectiveFunction, D::Error> {
        ObjectiveSpec::deserialize(d)?.build().map_err(serde::de::Error::custom)
    }
}

/// B(w) = w / (eʷ − 1), with B(0) = 1.
#[inline]
pub fn bernoulli(w: f64) -> f64 {
    if w.abs() < 1e-8 {
        1.0 - 0.5 * w
    } else {
        w / w.exp_m1()
    }
}

/// Chang–Cooper weight δ = 1/w + 1/(1 − eʷ) on the drift term; the flux
/// `T/Δx·(w((1 − δ) f_{i+1} + δ f_i) + f_{i+1} − f_i)` equals the Bernoulli
/// form above.
pub fn chang_cooper_delta(w: f64) -> f64 {
    if w.abs() < 1e-5 {
        0.5 - w / 12.0
    } else {
        1.0 / w - 1.0 / w.exp_m1()
    }
}

/// Interface weights (B(w), B(−w)) at one temperature.
#[derive(Clone, Debug)]
struct Weights {
    temperature: f64,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

pub struct FokkerPlanck {
    cfg: FpConfig,
    values: Vec<f64>,
}

impl FokkerPlanck {
    pub fn new(cfg: FpConfig) -> Result<Self> {
        cfg.schedule.validate()?;
        if cfg.objective.dim() != 1 {
            return Err(Error::config("objective", "the grid solver is one-dimensional"));
        }
        if let Some(dt) = cfg.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("dt_pde", format!("must be positive, got {dt}")));
            }
        }
        let values = cfg.objective.on_grid(&cfg.grid);
        Ok(FokkerPlanck { cfg, values })
    }

    pub fn config(&self) -> &FpConfig {
        &self.cfg
    }

    fn weights(&self, temperature: f64) -> Weights {
        let (forward, backward) = self
            .values
            .windows(2)
            .map(|v| {
                let w = (v[1] - v[0]) / temperature;
                (bernoulli(w), bernoulli(-w))
            })
            .unzip();
        Weights {
            temperature,
            forward,
            backward,
        }
    }

    /// Largest step keeping every diagonal coefficient nonnegative.
    fn positivity_bound(&self, w: &Weights) -> f64 {
        let n = self.values.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let right = if i + 1 < n { w.forward[i] } else { 0.0 };
            let left = if i > 0 { w.backward[i - 1] } else { 0.0 };
            worst = worst.max(right + left);
        }
        let dx = self.cfg.grid.dx();
        dx * dx / (w.temperature * worst.max(f64::MIN_POSITIVE))
    }

    /// A step size safely inside the positivity bound at temperature `t`.
    pub fn stable_dt(&self, temperature: f64) -> f64 {
        0.9 * self.positivity_bound(&self.weights(temperature))
    }

    fn dt(&self) -> f64 {
        self.cfg
            .dt
            .unwrap_or_else(|| self.stable_dt(self.cfg.schedule.initial()))
    }

    fn advance(&self, f: &mut [f64], scratch: &mut [f64], w: &Weights, h: f64) {
        let n = f.len();
        let dx = self.cfg.grid.dx();
        let c = h * w.temperature / (dx * dx);
        let mut inflow_left = 0.0;
        for i in 0..n {
            let flux_right = if i + 1 < n {
                w.backward[i] * f[i + 1] - w.forward[i] * f[i]
            } else {
                0.0
            };
            scratch[i] = f[i] + c * (flux_right - inflow_left);
            inflow_left = flux_right;
        }
        f.copy_from_slice(scratch);
    }

    fn step_with(&self, f: &DensityField, w: &Weights, dt: f64) -> Result<DensityField> {
        if !self.cfg.grid.same_as(f.grid()) {
            return Err(Error::GridMismatch);
        }
        let mut scratch = vec![0.0; f.values().len()];
        for halvings in 0..=MAX_HALVINGS {
            let pieces = 1usize << halvings;
            let h = dt / pieces as f64;
            let mut v = f.values().to_vec();
            let mut ok = true;
            for _ in 0..pieces {
                self.advance(&mut v, &mut scratch, w, h);
                if v.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(DensityField::from_raw(self.cfg.grid, v));
            }
        }
        Err(Error::PositivityLost { halvings: MAX_HALVINGS })
    }

    /// Advances `f` by one configured step from time `t`, with T frozen at
    /// T(t). A step that would create negative values is retried as 2, 4,
    /// … substeps of the same total length.
    pub fn step(&self, f: &DensityField, t: f64) -> Result<DensityField> {
        let w = self.weights(self.cfg.schedule.temperature(t));
        self.step_with(f, &w, self.dt())
    }

    /// Integrates from t = 0 to `t_final`, returning the density at each
    /// requested time (sorted, within [0, t_final]) and at `t_final`.
    pub fn evolve(&self, f0: &DensityField, t_final: f64, times: &[f64]) -> Result<Vec<(f64, DensityField)>> {
        self.evolve_observed(f0, t_final, times, |_, _| {})
    }

    /// Like [`evolve`](Self::evolve), calling `observe(t, f)` after every step.
    pub fn evolve_observed(
        &self,
        f0: &DensityField,
        t_final: f64,
        times: &[f64],
        mut observe: impl FnMut(f64, &DensityField),
    ) -> Result<Vec<(f64, DensityField)>> {
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| *t < 0.0 || *t > t_final) {
            return Err(Error::config("snapshots", "times must be sorted within [0, t_final]"));
        }
        let dt = self.dt();
        let constant = self.cfg.schedule.is_constant();
        let mut weights = self.weights(self.cfg.schedule.initial());
        let mut out = Vec::with_capacity(times.len() + 1);
        let mut pending = times.iter().copied().peekable();
        let mut f = f0.clone();
        let mut t = 0.0;
        loop {
            while let Some(&s) = pending.peek() {
                if s <= t + 1e-12 {
                    out.push((s, f.clone()));
                    pending.next();
                } else {
                    break;
                }
            }
            if t >= t_final - 1e-12 {
                break;
            }
            let target = pending.peek().copied().unwrap_or(t_final).min(t_final);
            let h = dt.min(target - t);
            if !constant {
                weights = self.weights(self.cfg.schedule.temperature(t));
            }
            f = self.step_with(&f, &weights, h)?;
            // land exactly on snapshot times without accumulating drift
            t = if (target - t - h).abs() <= 1e-12 { target } else { t + h };
            observe(t, &f);
        }
        out.push((t_final, f));
        Ok(out)
    }
}

/// One step of the solver described by `cfg` starting at time `t`.
pub fn fp_step(f: &DensityField, cfg: &FpConfig, t: f64) -> Result<DensityField> {
    FokkerPlanck::new(cfg.clone())?.step(f, t)
}
