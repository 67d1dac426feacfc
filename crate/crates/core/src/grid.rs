//! Uniform cell-centred grids on an interval and nonnegative densities over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` equal cells covering `[lower, upper]`; values live at cell centres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid1D {
    lower: f64,
    upper: f64,
    cells: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    lower: f64,
    upper: f64,
    cells: usize,
}

impl TryFrom<GridRepr> for Grid1D {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Grid1D::new(r.lower, r.upper, r.cells)
    }
}

impl From<Grid1D> for GridRepr {
    fn from(g: Grid1D) -> Self {
        GridRepr {
            lower: g.lower,
            upper: g.upper,
            cells: g.cells,
        }
    }
}

impl Grid1D {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::config(
                "grid",
                format!("bounds must be finite with lower < upper, got [{lower}, {upper}]"),
            ));
        }
        if cells == 0 {
            return Err(Error::config("grid", "cell count must be positive"));
        }
        Ok(Grid1D { lower, upper, cells })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    pub fn dx(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    /// Left edge of cell `i` (`i == len()` gives the upper bound).
    pub fn edge(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.dx()
    }

    /// Cell containing `x`, or `None` outside `[lower, upper]`. The upper
    /// bound itself belongs to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x <= self.upper) {
            return None;
        }
        let i = ((x - self.lower) / self.dx()) as usize;
        Some(i.min(self.cells - 1))
    }

    /// Cell containing `x`, with out-of-range points assigned to the nearest
    /// boundary cell. The flag is true when clipping happened.
    pub fn locate_clipped(&self, x: f64) -> (usize, bool) {
        match self.locate(x) {
            Some(i) => (i, false),
            None if x < self.lower => (0, true),
            None => (self.cells - 1, true),
        }
    }

    /// Refine every cell into `factor` subcells and pad `pad_cells` coarse
    /// cells on each side.
    pub fn refined(&self, factor: usize, pad_cells: usize) -> Grid1D {
        let dx = self.dx();
        let pad = pad_cells as f64 * dx;
        Grid1D {
            lower: self.lower - pad,
            upper: self.upper + pad,
            cells: (self.cells + 2 * pad_cells) * factor.max(1),
        }
    }

    pub(crate) fn same_as(&self, other: &Grid1D) -> bool {
        self.cells == other.cells
            && (self.lower - other.lower).abs() <= 1e-12 * (1.0 + self.lower.abs())
            && (self.upper - other.upper).abs() <= 1e-12 * (1.0 + self.upper.abs())
    }
}

/// Nonnegative cell values on a [`Grid1D`], interpreted as a density under
/// the midpoint rule.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl DensityField {
    /// Wraps raw values; negative or non-finite entries are rejected.
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(
                "density",
                format!("value {} at cell {i} is not a finite nonnegative number", values[i]),
            ));
        }
        Ok(DensityField { grid, values })
    }

    /// Same as [`DensityField::new`] followed by [`DensityField::normalize`].
    pub fn normalized(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::new(grid, values)?;
        f.normalize()?;
        Ok(f)
    }

    pub(crate) fn from_raw(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        DensityField { grid, values }
    }

    /// Density of the uniform law on `[a, b]`, cell-averaged so that partial
    /// overlap is weighted exactly.
    pub fn uniform_on(grid: Grid1D, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::config("init_interval", format!("need a < b, got [{a}, {b}]")));
        }
        let values = (0..grid.len())
            .map(|i| {
                let lo = grid.edge(i).max(a);
                let hi = grid.edge(i + 1).min(b);
                (hi - lo).max(0.0)
            })
            .collect();
        Self::normalized(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Rescale to unit mass.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::config("density", format!("cannot normalize mass {mass}")));
        }
        let inv = 1.0 / mass;
        self.values.iter_mut().for_each(|v| *v *= inv);
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, f)| self.grid.center(i) * f * dx)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let dx = self.grid.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, f)| (self.grid.center(i) - m).powi(2) * f * dx)
            .sum()
    }

    /// Midpoint-rule integral of `phi` against this density.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, f)| phi(self.grid.center(i)) * f * dx)
            .sum()
    }

    /// Transfers mass onto `target` by exact interval overlap. Mass beyond
    /// the target span lands in the nearest boundary cell, matching the
    /// clipping rule of histogram estimation.
    pub fn rebin(&self, target: &Grid1D) -> DensityField {
        let mut mass = vec![0.0; target.len()];
        for (i, &f) in self.values.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let (lo, hi) = (self.grid.edge(i), self.grid.edge(i + 1));
            let below = (target.lower().min(hi) - lo).max(0.0);
            let above = (hi - target.upper().max(lo)).max(0.0);
            mass[0] += below * f;
            *mass.last_mut().unwrap() += above * f;
            let inner_lo = lo.max(target.lower());
            let inner_hi = hi.min(target.upper());
            if inner_hi <= inner_lo {
                continue;
            }
            let (first, _) = target.locate_clipped(inner_lo);
            let (last, _) = target.locate_clipped(inner_hi);
            for (j, m) in mass.iter_mut().enumerate().take(last + 1).skip(first) {
                let overlap = inner_hi.min(target.edge(j + 1)) - inner_lo.max(target.edge(j));
                if overlap > 0.0 {
                    *m += overlap * f;
                }
            }
        }
        let tdx = target.dx();
        DensityField::from_raw(*target, mass.into_iter().map(|m| m / tdx).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_increase_and_width_is_positive() {
        let g = Grid1D::new(-6.0, 6.0, 2048).unwrap();
        assert!(g.dx() > 0.0);
        assert!(g.centers().windows(2).all(|w| w[1] > w[0]));
        assert!((g.center(0) - (-6.0 + g.dx() / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(Grid1D::new(1.0, 1.0, 4).is_err());
        assert!(Grid1D::new(0.0, 1.0, 0).is_err());
        assert!(Grid1D::new(f64::NAN, 1.0, 3).is_err());
    }

    #[test]
    fn locate_handles_edges() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        assert_eq!(g.locate(0.0), Some(0));
        assert_eq!(g.locate(1.0), Some(9));
        assert_eq!(g.locate(0.55), Some(5));
        assert_eq!(g.locate_clipped(-3.0), (0, true));
        assert_eq!(g.locate_clipped(7.0), (9, true));
    }

    #[test]
    fn uniform_has_unit_mass_and_exact_support() {
        let g = Grid1D::new(-4.0, 4.0, 160).unwrap();
        let u = DensityField::uniform_on(g, -3.0, 3.0).unwrap();
        assert!((u.mass() - 1.0).abs() < 1e-12);
        assert!((u.values()[100] - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(u.values()[0], 0.0);
    }

    #[test]
    fn rebin_conserves_mass_and_clips_tails() {
        let fine = Grid1D::new(-6.0, 6.0, 1200).unwrap();
        let coarse = Grid1D::new(-4.0, 4.0, 160).unwrap();
        let f = DensityField::uniform_on(fine, -5.0, 5.0).unwrap();
        let r = f.rebin(&coarse);
        assert!((r.mass() - 1.0).abs() < 1e-12);
        // [-5,-4] folds onto the first 0.05-wide cell
        assert!((r.values()[0] - (0.1 + 0.1 * 0.05) / 0.05).abs() < 1e-9);
        assert!((r.values()[80] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn negative_values_rejected() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        assert!(DensityField::new(g, vec![1.0, -0.5]).is_err());
    }
}
