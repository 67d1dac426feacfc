//! Symmetric selection densities and the Metropolis transition kernel.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ObjectiveFunction;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Shape of the selection density; both kinds have mean 0 and identity
/// covariance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionKind {
    #[default]
    Normal,
    /// Uniform on [−√3, √3] per coordinate.
    Uniform,
}

impl std::str::FromStr for SelectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(SelectionKind::Normal),
            "uniform" => Ok(SelectionKind::Uniform),
            other => Err(Error::config(
                "kernel.selection",
                format!("unknown selection density `{other}` (expected normal or uniform)"),
            )),
        }
    }
}

/// A one-dimensional density of the jump variable ξ, used by the
/// grid quadratures.
pub trait JumpDensity {
    fn pdf(&self, xi: f64) -> f64;

    /// Radius outside which the density is treated as zero.
    fn support_radius(&self) -> f64;
}

/// The selection density p(ξ) on R^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionDensity {
    pub kind: SelectionKind,
    pub dim: usize,
}

impl SelectionDensity {
    pub fn new(kind: SelectionKind, dim: usize) -> Self {
        assert!(dim > 0);
        SelectionDensity { kind, dim }
    }

    pub fn normal(dim: usize) -> Self {
        Self::new(SelectionKind::Normal, dim)
    }

    pub fn uniform(dim: usize) -> Self {
        Self::new(SelectionKind::Uniform, dim)
    }

    /// One coordinate of ξ.
    #[inline]
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            SelectionKind::Normal => rng.sample(StandardNormal),
            SelectionKind::Uniform => rng.random_range(-SQRT_3..=SQRT_3),
        }
    }

    /// Fills `out` with one draw of ξ.
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = self.sample_one(rng));
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut xi = vec![0.0; self.dim];
        self.sample_into(rng, &mut xi);
        xi
    }

    /// Product density p(ξ) = Π p₁(ξ_i).
    pub fn density(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|v| self.pdf(*v)).product()
    }
}

impl JumpDensity for SelectionDensity {
    fn pdf(&self, xi: f64) -> f64 {
        match self.kind {
            SelectionKind::Normal => (-0.5 * xi * xi).exp() / (2.0 * PI).sqrt(),
            SelectionKind::Uniform => {
                if xi.abs() <= SQRT_3 {
                    1.0 / (2.0 * SQRT_3)
                } else {
                    0.0
                }
            }
        }
    }

    fn support_radius(&self) -> f64 {
        match self.kind {
            SelectionKind::Normal => 6.0,
            SelectionKind::Uniform => SQRT_3,
        }
    }
}

/// min{1, exp(−ΔF/T)} evaluated in the exponent; ties accept.
#[inline]
pub fn acceptance_from_delta(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

/// Probability B(x → x′) of accepting the trial point x′ from x.
pub fn acceptance_probability(obj: &ObjectiveFunction, temperature: f64, x: &[f64], x_new: &[f64]) -> f64 {
    acceptance_from_delta(obj.value(x_new) - obj.value(x), temperature)
}

/// Gain kernel k(x′, x) = p((x′ − x)/σ)/σ · B(x′ → x) for d = 1.
pub fn transition_kernel_k<P: JumpDensity + ?Sized>(
    obj: &ObjectiveFunction,
    temperature: f64,
    sigma: f64,
    p: &P,
    x_from: f64,
    x_to: f64,
) -> f64 {
    p.pdf((x_from - x_to) / sigma) / sigma * acceptance_probability(obj, temperature, &[x_from], &[x_to])
}
