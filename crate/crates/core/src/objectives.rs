//! Test objectives, their gradients, and the Gibbs density they induce.
//!
//! Built-in objectives are addressed by name (`ackley`, `quadratic`,
//! `doublewell`). Ackley uses the usual benchmark constants a = 20, b = 0.2,
//! c = 2π and has its global minimum 0 at the origin.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::grid::{DensityField, Grid1D};

pub const ACKLEY_A: f64 = 20.0;
pub const ACKLEY_B: f64 = 0.2;
pub const ACKLEY_C: f64 = 2.0 * PI;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum Kind {
    Quadratic,
    DoubleWell,
    Ackley,
    Custom {
        value: Arc<ScalarFn>,
        gradient: Option<Arc<VectorFn>>,
    },
}

/// A cost function F: R^d → R with optional analytic gradient and known
/// minimizer metadata.
#[derive(Clone)]
pub struct ObjectiveFunction {
    name: String,
    dim: usize,
    kind: Kind,
    minimizer: Option<Vec<f64>>,
    minimum: Option<f64>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("minimizer", &self.minimizer)
            .field("minimum", &self.minimum)
            .finish()
    }
}

impl ObjectiveFunction {
    /// F(x) = |x|²/2.
    pub fn quadratic(dim: usize) -> Self {
        Self::builtin("quadratic", dim, Kind::Quadratic, vec![0.0; dim])
    }

    /// F(x) = Σ (x_i² − 1)², minimizers at every x with x_i = ±1.
    pub fn double_well(dim: usize) -> Self {
        Self::builtin("doublewell", dim, Kind::DoubleWell, vec![1.0; dim])
    }

    /// Ackley: −a·exp(−b·√(mean x²)) − exp(mean cos(c·x)) + a + e.
    pub fn ackley(dim: usize) -> Self {
        Self::builtin("ackley", dim, Kind::Ackley, vec![0.0; dim])
    }

    fn builtin(name: &str, dim: usize, kind: Kind, minimizer: Vec<f64>) -> Self {
        assert!(dim > 0, "objective dimension must be positive");
        ObjectiveFunction {
            name: name.to_string(),
            dim,
            kind,
            minimizer: Some(minimizer),
            minimum: Some(0.0),
        }
    }

    /// Looks up a built-in objective by the names used on the command line.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("objective", "dimension must be positive"));
        }
        match name {
            "ackley" => Ok(Self::ackley(dim)),
            "quadratic" => Ok(Self::quadratic(dim)),
            "doublewell" | "double-well" => Ok(Self::double_well(dim)),
            other => Err(Error::config(
                "objective",
                format!("unknown objective `{other}` (expected ackley, quadratic or doublewell)"),
            )),
        }
    }

    /// A user-supplied objective. Without a gradient, [`gradient`](Self::gradient)
    /// falls back to central differences.
    pub fn custom<F>(name: impl Into<String>, dim: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(dim > 0, "objective dimension must be positive");
        ObjectiveFunction {
            name: name.into(),
            dim,
            kind: Kind::Custom {
                value: Arc::new(value),
                gradient: None,
            },
            minimizer: None,
            minimum: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if let Kind::Custom { gradient: g, .. } = &mut self.kind {
            *g = Some(Arc::new(gradient));
        }
        self
    }

    pub fn with_minimizer(mut self, x: Vec<f64>, minimum: f64) -> Self {
        assert_eq!(x.len(), self.dim);
        self.minimizer = Some(x);
        self.minimum = Some(minimum);
        self
    }

    /// Drops the analytic gradient so [`gradient`](Self::gradient) uses
    /// finite differences.
    pub fn without_gradient(&self) -> Self {
        let this = self.clone();
        let value: Arc<ScalarFn> = Arc::new(move |x: &[f64]| this.value(x));
        ObjectiveFunction {
            name: self.name.clone(),
            dim: self.dim,
            kind: Kind::Custom { value, gradient: None },
            minimizer: self.minimizer.clone(),
            minimum: self.minimum,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn known_minimizer(&self) -> Option<&[f64]> {
        self.minimizer.as_deref()
    }

    pub fn known_minimum(&self) -> Option<f64> {
        self.minimum
    }

    pub fn has_analytic_gradient(&self) -> bool {
        !matches!(self.kind, Kind::Custom { gradient: None, .. })
    }

    /// F(x) without a finiteness check.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            Kind::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Kind::DoubleWell => x.iter().map(|v| (v * v - 1.0).powi(2)).sum(),
            Kind::Ackley => ackley(x),
            Kind::Custom { value, .. } => value(x),
        }
    }

    /// F(x), failing when the result is not finite.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let value = self.value(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteObjective { x: x.to_vec(), value })
        }
    }

    /// Writes ∇F(x) into `out`: analytic when available, otherwise central
    /// differences with h = 1e-6·max(1, |x_i|).
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            Kind::Quadratic => out.copy_from_slice(x),
            Kind::DoubleWell => {
                for (g, v) in out.iter_mut().zip(x) {
                    *g = 4.0 * v * (v * v - 1.0);
                }
            }
            Kind::Ackley => {
                ackley_with_gradient(x, out);
            }
            Kind::Custom { gradient: Some(g), .. } => g(x, out),
            Kind::Custom { gradient: None, .. } => self.central_difference(x, out),
        }
    }

    /// F(x) and ∇F(x) together, sharing work where the formula allows.
    #[inline]
    pub fn value_and_gradient_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        match &self.kind {
            Kind::Ackley => ackley_with_gradient(x, out),
            _ => {
                self.gradient_into(x, out);
                self.value(x)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.gradient_into(x, &mut out);
        out
    }

    fn central_difference(&self, x: &[f64], out: &mut [f64]) {
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = self.value(&probe);
            probe[i] = x[i] - h;
            let down = self.value(&probe);
            probe[i] = x[i];
            out[i] = (up - down) / (2.0 * h);
        }
    }

    /// F evaluated at every cell centre of a 1D grid.
    pub fn on_grid(&self, grid: &Grid1D) -> Vec<f64> {
        assert_eq!(self.dim, 1, "grid evaluation needs a one-dimensional objective");
        grid.centers().iter().map(|x| self.value(&[*x])).collect()
    }
}

/// Shared pieces of the Ackley formula: r = √(mean x²), e^{−br} and
/// exp(mean cos(cx)).
#[inline]
fn ackley_parts(x: &[f64]) -> (f64, f64, f64) {
    let (r, c) = if let [v] = x {
        (v.abs(), (ACKLEY_C * v).cos())
    } else {
        let d = x.len() as f64;
        let r = (x.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
        (r, x.iter().map(|v| (ACKLEY_C * v).cos()).sum::<f64>() / d)
    };
    (r, (-ACKLEY_B * r).exp(), c.exp())
}

#[inline]
fn ackley_from_parts(radial: f64, oscillation: f64) -> f64 {
    // grouped so the origin gives exactly 0
    ACKLEY_A * (1.0 - radial) + (E - oscillation)
}

#[inline]
fn ackley(x: &[f64]) -> f64 {
    let (_, radial, oscillation) = ackley_parts(x);
    ackley_from_parts(radial, oscillation)
}

#[inline]
fn ackley_with_gradient(x: &[f64], out: &mut [f64]) -> f64 {
    let (r, radial, oscillation) = ackley_parts(x);
    let d = x.len() as f64;
    // non-differentiable at the origin; report a stationary point there
    if r == 0.0 {
        out.iter_mut().for_each(|g| *g = 0.0);
    } else {
        let pull = ACKLEY_A * ACKLEY_B * radial / (d * r);
        let wiggle = oscillation * ACKLEY_C / d;
        for (g, v) in out.iter_mut().zip(x) {
            *g = pull * v + wiggle * (ACKLEY_C * v).sin();
        }
    }
    ackley_from_parts(radial, oscillation)
}

/// Discrete Gibbs density f_i ∝ exp(−F(x_i)/T) with unit mass on `grid`.
///
/// The exponent is shifted by min_i F(x_i) before exponentiation, so very
/// small temperatures stay representable.
pub fn gibbs_density(obj: &ObjectiveFunction, temperature: f64, grid: &Grid1D) -> Result<DensityField> {
    gibbs_from_values(&obj.on_grid(grid), temperature, grid)
}

pub(crate) fn gibbs_from_values(values: &[f64], temperature: f64, grid: &Grid1D) -> Result<DensityField> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::config(
            "temperature",
            format!("must be positive, got {temperature}"),
        ));
    }
    let shift = values.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = values.iter().map(|f| (-(f - shift) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum::<f64>() * grid.dx();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::GibbsUnderflow { temperature });
    }
    Ok(DensityField::from_raw(
        *grid,
        weights.into_iter().map(|w| w / total).collect(),
    ))
}

/// Serializable handle to a built-in objective.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: String,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<ObjectiveFunction> {
        ObjectiveFunction::by_name(&self.name, self.dim)
    }
}

impl From<&ObjectiveFunction> for ObjectiveSpec {
    fn from(o: &ObjectiveFunction) -> Self {
        ObjectiveSpec {
            name: o.name.clone(),
            dim: o.dim,
        }
    }
}
