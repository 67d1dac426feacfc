//! Ensemble measurements: histogram estimates, relative entropy and L1
//! distance to the Gibbs density, the Laplace probe and residual checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::kernels::{acceptance_from_delta, JumpDensity};
use crate::objectives::ObjectiveFunction;

/// Walkers outside the histogram window above this fraction raise a warning.
pub const CLIPPED_WARNING_FRACTION: f64 = 0.01;

/// Default window for ensemble histograms (bin width 0.05).
pub fn default_histogram_grid() -> Grid1D {
    Grid1D::new(-4.0, 4.0, 160).expect("static grid")
}

/// Default grid for smooth quadratures.
pub fn default_quadrature_grid() -> Grid1D {
    Grid1D::new(-6.0, 6.0, 2048).expect("static grid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub density: DensityField,
    /// Fraction of samples that fell outside the grid and were counted in
    /// the nearest boundary cell.
    pub clipped_fraction: f64,
    pub samples: usize,
}

/// Normalized histogram of `samples`, clipping strays into the edge cells.
pub fn histogram(samples: &[f64], grid: &Grid1D) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut counts = vec![0u64; grid.len()];
    let mut clipped = 0usize;
    for &x in samples {
        let (i, was_clipped) = grid.locate_clipped(x);
        counts[i] += 1;
        clipped += was_clipped as usize;
    }
    let norm = samples.len() as f64 * grid.dx();
    let values = counts.iter().map(|c| *c as f64 / norm).collect();
    Ok(Histogram {
        density: DensityField::new(*grid, values)?,
        clipped_fraction: clipped as f64 / samples.len() as f64,
        samples: samples.len(),
    })
}

pub fn histogram_density(samples: &[f64], grid: &Grid1D) -> Result<DensityField> {
    histogram(samples, grid).map(|h| h.density)
}

fn check_grids(f: &DensityField, g: &DensityField) -> Result<()> {
    if f.grid().same_as(g.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// H(f | g) = Σ f log(f/g) Δx over cells with f > 0.
pub fn relative_entropy(f: &DensityField, g: &DensityField) -> Result<f64> {
    check_grids(f, g)?;
    let grid = f.grid();
    let mut sum = 0.0;
    for (i, (&fv, &gv)) in f.values().iter().zip(g.values()).enumerate() {
        if fv > 0.0 {
            if gv <= 0.0 {
                return Err(Error::NotAbsolutelyContinuous { x: grid.center(i) });
            }
            sum += fv * (fv / gv).ln();
        }
    }
    Ok(sum * grid.dx())
}

pub fn l1_distance(f: &DensityField, g: &DensityField) -> Result<f64> {
    check_grids(f, g)?;
    let sum: f64 = f.values().iter().zip(g.values()).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum * f.grid().dx())
}

/// Both readings of the Csiszár–Kullback bound, as residuals that are
/// nonpositive when the bound holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkResiduals {
    /// ‖f − g‖₁² − 2 H(f|g), the standard inequality.
    pub squared: f64,
    /// ‖f − g‖₁ / (2‖f‖₁) − H(f|g), the bound without the square.
    pub unsquared: f64,
}

pub fn csiszar_kullback_residuals(f: &DensityField, g: &DensityField) -> Result<CkResiduals> {
    let h = relative_entropy(f, g)?;
    let l1 = l1_distance(f, g)?;
    Ok(CkResiduals {
        squared: l1 * l1 - 2.0 * h,
        unsquared: l1 / (2.0 * f.mass()) - h,
    })
}

/// −T log Σ g_i e^{−F(x_i)/T} Δx for each temperature, evaluated with the
/// exponent shifted by the smallest F on the support of g.
pub fn laplace_probe(g: &DensityField, obj: &ObjectiveFunction, temperatures: &[f64]) -> Vec<f64> {
    let f = obj.on_grid(g.grid());
    let support: Vec<(f64, f64)> = g
        .values()
        .iter()
        .zip(&f)
        .filter(|(gv, _)| **gv > 0.0)
        .map(|(gv, fv)| (*gv, *fv))
        .collect();
    let m = support.iter().map(|(_, fv)| *fv).fold(f64::INFINITY, f64::min);
    let dx = g.grid().dx();
    temperatures
        .iter()
        .map(|&t| {
            let s: f64 = support.iter().map(|(gv, fv)| gv * (-(fv - m) / t).exp()).sum();
            m - t * (s * dx).ln()
        })
        .collect()
}

/// B(x′→x) f∞(x′) − B(x→x′) f∞(x) with Gibbs weights scaled so the larger
/// one is 1, which makes the residual already normalized.
pub fn detailed_balance_residual(obj: &ObjectiveFunction, temperature: f64, x: f64, x_prime: f64) -> f64 {
    detailed_balance_residual_with(acceptance_from_delta, obj, temperature, x, x_prime)
}

/// As [`detailed_balance_residual`] with the acceptance rule
/// `accept(F(to) − F(from), T)` supplied by the caller.
pub fn detailed_balance_residual_with(
    accept: impl Fn(f64, f64) -> f64,
    obj: &ObjectiveFunction,
    temperature: f64,
    x: f64,
    x_prime: f64,
) -> f64 {
    let fx = obj.value(&[x]);
    let fp = obj.value(&[x_prime]);
    let m = fx.min(fp);
    let wx = (-(fx - m) / temperature).exp();
    let wp = (-(fp - m) / temperature).exp();
    accept(fx - fp, temperature) * wp - accept(fp - fx, temperature) * wx
}

/// |∫∫ p(ξ) g(x′, x) dx dξ − ∫∫ p(ξ) g(x, x′) dx dξ| with x′ = x + σξ, by
/// midpoint quadrature on the default quadrature grid.
pub fn symmetry_identity_residual<G, P>(g: G, p: &P, sigma: f64) -> f64
where
    G: Fn(f64, f64) -> f64,
    P: JumpDensity + ?Sized,
{
    symmetry_identity_residual_on(g, p, sigma, &default_quadrature_grid(), 2048)
}

pub fn symmetry_identity_residual_on<G, P>(g: G, p: &P, sigma: f64, grid: &Grid1D, xi_cells: usize) -> f64
where
    G: Fn(f64, f64) -> f64,
    P: JumpDensity + ?Sized,
{
    let r = p.support_radius();
    let dxi = 2.0 * r / xi_cells as f64;
    let xs = grid.centers();
    let mut forward = 0.0;
    let mut backward = 0.0;
    for k in 0..xi_cells {
        let xi = -r + (k as f64 + 0.5) * dxi;
        let w = p.pdf(xi);
        if w == 0.0 {
            continue;
        }
        let (mut a, mut b) = (0.0, 0.0);
        for &x in &xs {
            let xp = x + sigma * xi;
            a += g(xp, x);
            b += g(x, xp);
        }
        forward += w * a;
        backward += w * b;
    }
    ((forward - backward) * grid.dx() * dxi).abs()
}

/// Fraction of points within `tol` of `x_star` in the max norm.
pub fn success_rate<V: AsRef<[f64]>>(finals: &[V], x_star: &[f64], tol: f64) -> f64 {
    if finals.is_empty() {
        return 0.0;
    }
    let hits = finals
        .iter()
        .filter(|x| x.as_ref().iter().zip(x_star).all(|(a, b)| (a - b).abs() <= tol))
        .count();
    hits as f64 / finals.len() as f64
}

/// Delta-method standard error of the plug-in functional Σ π_i φ_i of the
/// cell probabilities π of a histogram built from `n` samples.
fn plug_in_se(hist: &DensityField, phi: impl Fn(usize) -> f64, n: usize) -> f64 {
    let dx = hist.grid().dx();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, &v) in hist.values().iter().enumerate() {
        if v > 0.0 {
            let pi = v * dx;
            let y = phi(i);
            m1 += pi * y;
            m2 += pi * y * y;
        }
    }
    ((m2 - m1 * m1).max(0.0) / n as f64).sqrt()
}

/// Standard error of `relative_entropy(hist, g)` for a histogram of `n`
/// independent samples.
pub fn entropy_standard_error(hist: &DensityField, g: &DensityField, n: usize) -> Result<f64> {
    check_grids(hist, g)?;
    let (h, gv) = (hist.values(), g.values());
    Ok(plug_in_se(hist, |i| (h[i] / gv[i]).ln(), n))
}

/// Standard error of `l1_distance(hist, g)` for a histogram of `n`
/// independent samples; at most 1/√n.
pub fn l1_standard_error(hist: &DensityField, g: &DensityField, n: usize) -> Result<f64> {
    check_grids(hist, g)?;
    let (h, gv) = (hist.values(), g.values());
    Ok(plug_in_se(hist, |i| (h[i] - gv[i]).signum(), n))
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a − F_b|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Measurements of one pooled snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotStats {
    pub time: f64,
    pub histogram: Histogram,
    pub gibbs: DensityField,
    pub entropy: f64,
    pub entropy_se: f64,
    pub l1: f64,
    pub l1_se: f64,
    pub success: f64,
}

/// Pools the first coordinate of `positions` into a histogram on `grid`
/// and compares it with `gibbs`. Success is measured on full vectors
/// against `x_star` when one is given, NaN otherwise.
pub fn snapshot_stats<V: AsRef<[f64]>>(
    time: f64,
    positions: &[V],
    grid: &Grid1D,
    gibbs: DensityField,
    x_star: Option<&[f64]>,
    tol: f64,
) -> Result<SnapshotStats> {
    let first: Vec<f64> = positions.iter().map(|x| x.as_ref()[0]).collect();
    let histogram = histogram(&first, grid)?;
    let n = histogram.samples;
    let entropy = relative_entropy(&histogram.density, &gibbs)?;
    let entropy_se = entropy_standard_error(&histogram.density, &gibbs, n)?;
    let l1 = l1_distance(&histogram.density, &gibbs)?;
    let l1_se = l1_standard_error(&histogram.density, &gibbs, n)?;
    let success = x_star.map_or(f64::NAN, |xs| success_rate(positions, xs, tol));
    Ok(SnapshotStats {
        time,
        histogram,
        gibbs,
        entropy,
        entropy_se,
        l1,
        l1_se,
        success,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub method: String,
    pub epsilon: f64,
    pub schedule: String,
    pub runs: usize,
}

/// Time series of ensemble diagnostics; every column has one entry per time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub entropy_se: Vec<f64>,
    pub l1: Vec<f64>,
    pub l1_se: Vec<f64>,
    pub success: Vec<f64>,
    pub clipped_fraction: Vec<f64>,
    pub metadata: SeriesMetadata,
    pub warnings: Vec<String>,
}

impl DiagnosticSeries {
    pub fn new(metadata: SeriesMetadata) -> Self {
        DiagnosticSeries {
            times: Vec::new(),
            entropy: Vec::new(),
            entropy_se: Vec::new(),
            l1: Vec::new(),
            l1_se: Vec::new(),
            success: Vec::new(),
            clipped_fraction: Vec::new(),
            metadata,
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, s: &SnapshotStats) {
        self.times.push(s.time);
        self.entropy.push(s.entropy);
        self.entropy_se.push(s.entropy_se);
        self.l1.push(s.l1);
        self.l1_se.push(s.l1_se);
        self.success.push(s.success);
        self.clipped_fraction.push(s.histogram.clipped_fraction);
        if s.histogram.clipped_fraction > CLIPPED_WARNING_FRACTION {
            self.warnings.push(format!(
                "t = {}: {:.2}% of walkers outside the histogram window",
                s.time,
                100.0 * s.histogram.clipped_fraction
            ));
        }
        if s.histogram.samples < 100 && self.times.len() == 1 {
            self.warnings
                .push(format!("only {} samples per snapshot", s.histogram.samples));
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Whether H never rises by more than `k` combined standard errors
    /// between consecutive snapshots.
    pub fn entropy_nonincreasing_within(&self, k: f64) -> bool {
        self.entropy_violations(k).is_empty()
    }

    /// Indices i where H(t_{i+1}) exceeds H(t_i) by more than `k` combined
    /// standard errors.
    pub fn entropy_violations(&self, k: f64) -> Vec<usize> {
        (0..self.len().saturating_sub(1))
            .filter(|&i| {
                let se = self.entropy_se[i].hypot(self.entropy_se[i + 1]);
                self.entropy[i + 1] > self.entropy[i] + k * se
            })
            .collect()
    }

    /// `t,H,l1,clipped_fraction` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,H,l1,clipped_fraction\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.times[i], self.entropy[i], self.l1[i], self.clipped_fraction[i]
            ));
        }
        out
    }
}

/// `x,<columns...>` rows over the cell centres of `grid`.
pub fn density_csv(grid: &Grid1D, columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("x");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..grid.len() {
        out.push_str(&grid.center(i).to_string());
        for (_, v) in columns {
            out.push(',');
            out.push_str(&v[i].to_string());
        }
        out.push('\n');
    }
    out
}
