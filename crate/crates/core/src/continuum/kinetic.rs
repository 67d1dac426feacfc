//! Grid quadrature of the linear kinetic (Metropolis) operator
//!
//! ```text
//! L(f)(x) = ∫ k(x′, x) f(x′) dx′ − f(x) ∫ k(x, x′) dx′
//! k(x′, x) = p((x′ − x)/σ)/σ · B(x′ → x)
//! ```
//!
//! and of its entropy functionals. Jumps are restricted to the grid and to
//! the truncated support of p, symmetrically in gain and loss, so mass is
//! conserved and the discrete Gibbs density stays an exact equilibrium.

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::kernels::{acceptance_from_delta, JumpDensity};
use crate::objectives::{gibbs_from_values, ObjectiveFunction};

/// Entropy quadratures floor densities here (with 0·log 0 = 0).
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Banded matrix of jump rates between grid cells at a fixed temperature.
#[derive(Clone, Debug)]
pub struct KineticOperator {
    grid: Grid1D,
    gibbs: DensityField,
    band: usize,
    /// `rates[i * width + (j + band - i)]` = k(x_i, x_j)·Δx, the rate of
    /// jumping from cell i to cell j.
    rates: Vec<f64>,
    /// Total outgoing rate of each cell.
    exit: Vec<f64>,
}

impl KineticOperator {
    pub fn new<P: JumpDensity + ?Sized>(
        obj: &ObjectiveFunction,
        temperature: f64,
        sigma: f64,
        p: &P,
        grid: &Grid1D,
    ) -> Result<Self> {
        let dx = grid.dx();
        if !(sigma >= 2.0 * dx) {
            return Err(Error::KernelUnresolved { sigma, dx });
        }
        let values = obj.on_grid(grid);
        let gibbs = gibbs_from_values(&values, temperature, grid)?;
        let n = grid.len();
        let band = ((p.support_radius() * sigma / dx).floor() as usize).min(n.saturating_sub(1));
        let width = 2 * band + 1;
        let mut rates = vec![0.0; n * width];
        let mut exit = vec![0.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(band);
            let hi = (i + band).min(n - 1);
            let mut out = 0.0;
            for j in lo..=hi {
                if j == i {
                    continue;
                }
                let xi = (j as f64 - i as f64) * dx / sigma;
                let rate = p.pdf(xi) / sigma * acceptance_from_delta(values[j] - values[i], temperature) * dx;
                rates[i * width + (j + band - i)] = rate;
                out += rate;
            }
            exit[i] = out;
        }
        Ok(KineticOperator {
            grid: *grid,
            gibbs,
            band,
            rates,
            exit,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// The discrete Gibbs density this operator leaves invariant.
    pub fn gibbs(&self) -> &DensityField {
        &self.gibbs
    }

    #[inline]
    fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from * (2 * self.band + 1) + (to + self.band - from)]
    }

    fn neighbours(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        i.saturating_sub(self.band)..=(i + self.band).min(self.grid.len() - 1)
    }

    /// L(f) at every cell.
    pub fn apply(&self, f: &DensityField) -> Result<Vec<f64>> {
        if !self.grid.same_as(f.grid()) {
            return Err(Error::GridMismatch);
        }
        let v = f.values();
        Ok((0..self.grid.len())
            .map(|i| {
                let gain: f64 = self.neighbours(i).map(|j| self.rate(j, i) * v[j]).sum();
                gain - v[i] * self.exit[i]
            })
            .collect())
    }

    /// Explicit Euler step `f + Δt·L(f)`; a convex combination of densities
    /// while Δt times the largest exit rate stays below 1.
    pub fn explicit_step(&self, f: &DensityField, dt: f64) -> Result<DensityField> {
        let l = self.apply(f)?;
        let values = f.values().iter().zip(&l).map(|(v, d)| v + dt * d).collect();
        DensityField::new(self.grid, values)
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// ½ ΣΣ k(x_i, x_j) f∞(x_i) h(u_j, u_i) Δx² with u = f/f∞.
    pub fn dissipation_with(&self, f: &DensityField, h: impl Fn(f64, f64) -> f64) -> Result<f64> {
        if !self.grid.same_as(f.grid()) {
            return Err(Error::GridMismatch);
        }
        let g = self.gibbs.values();
        let u: Vec<f64> = f
            .values()
            .iter()
            .zip(g)
            .map(|(fv, gv)| fv.max(DENSITY_FLOOR) / gv.max(DENSITY_FLOOR))
            .collect();
        let mut total = 0.0;
        for i in 0..self.grid.len() {
            let row: f64 = self
                .neighbours(i)
                .filter(|j| *j != i)
                .map(|j| self.rate(i, j) * h(u[j], u[i]))
                .sum();
            total += g[i] * row;
        }
        Ok(0.5 * total * self.grid.dx())
    }

    /// Entropy dissipation I[f] with h(a, b) = (a − b)(ln a − ln b).
    pub fn entropy_dissipation(&self, f: &DensityField) -> Result<f64> {
        self.dissipation_with(f, |a, b| (a - b) * (a.ln() - b.ln()))
    }

    /// Dirichlet form D[f] with h(a, b) = (a − b)².
    pub fn dirichlet_form(&self, f: &DensityField) -> Result<f64> {
        self.dissipation_with(f, |a, b| (a - b) * (a - b))
    }

    /// H_Φ(f | f∞) = Σ f∞ Φ(f/f∞) Δx.
    pub fn convex_entropy(&self, f: &DensityField, phi: impl Fn(f64) -> f64) -> Result<f64> {
        if !self.grid.same_as(f.grid()) {
            return Err(Error::GridMismatch);
        }
        let sum: f64 = f
            .values()
            .iter()
            .zip(self.gibbs.values())
            .map(|(fv, gv)| gv * phi(fv / gv.max(DENSITY_FLOOR)))
            .sum();
        Ok(sum * self.grid.dx())
    }
}

/// L(f) for density `f` at temperature T with jump scale σ.
pub fn kinetic_operator_apply<P: JumpDensity + ?Sized>(
    f: &DensityField,
    obj: &ObjectiveFunction,
    temperature: f64,
    sigma: f64,
    p: &P,
) -> Result<Vec<f64>> {
    KineticOperator::new(obj, temperature, sigma, p, f.grid())?.apply(f)
}

/// Entropy dissipation I[f] of the kinetic operator.
pub fn entropy_dissipation<P: JumpDensity + ?Sized>(
    f: &DensityField,
    obj: &ObjectiveFunction,
    temperature: f64,
    sigma: f64,
    p: &P,
) -> Result<f64> {
    KineticOperator::new(obj, temperature, sigma, p, f.grid())?.entropy_dissipation(f)
}

/// Dirichlet form D[f] of the kinetic operator.
pub fn dirichlet_form<P: JumpDensity + ?Sized>(
    f: &DensityField,
    obj: &ObjectiveFunction,
    temperature: f64,
    sigma: f64,
    p: &P,
) -> Result<f64> {
    KineticOperator::new(obj, temperature, sigma, p, f.grid())?.dirichlet_form(f)
}
