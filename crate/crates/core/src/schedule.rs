//! Cooling laws T(t) over physical time and the per-step noise scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonincreasing, strictly positive temperature law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoolingSchedule {
    /// T(t) = t0.
    Constant { t0: f64 },
    /// T(t) = t0 / ln(t + 2).
    #[serde(alias = "log")]
    Logarithmic { t0: f64 },
    /// Piecewise-linear interpolation of `(t, T)` knots, holding the end
    /// values outside the table.
    Table { points: Vec<(f64, f64)> },
}

impl CoolingSchedule {
    pub fn constant(t0: f64) -> Result<Self> {
        check_t0(t0)?;
        Ok(CoolingSchedule::Constant { t0 })
    }

    pub fn logarithmic(t0: f64) -> Result<Self> {
        check_t0(t0)?;
        Ok(CoolingSchedule::Logarithmic { t0 })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        let s = CoolingSchedule::Table { points };
        s.validate()?;
        Ok(s)
    }

    /// Parses the command-line kind names `constant`, `log`/`logarithmic`.
    pub fn from_kind(kind: &str, t0: f64) -> Result<Self> {
        match kind {
            "constant" => Self::constant(t0),
            "log" | "logarithmic" => Self::logarithmic(t0),
            other => Err(Error::config(
                "schedule.kind",
                format!("unknown schedule `{other}` (expected constant or log)"),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoolingSchedule::Constant { t0 } | CoolingSchedule::Logarithmic { t0 } => check_t0(*t0),
            CoolingSchedule::Table { points } => {
                if points.is_empty() {
                    return Err(Error::config("schedule.points", "table needs at least one knot"));
                }
                if points
                    .iter()
                    .any(|&(t, temp)| !(t.is_finite() && temp > 0.0 && temp.is_finite()))
                {
                    return Err(Error::config("schedule.points", "knots need finite t and positive T"));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::config("schedule.points", "knot times must increase"));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::config("schedule.points", "temperatures must not increase"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CoolingSchedule::Constant { .. } => "constant",
            CoolingSchedule::Logarithmic { .. } => "log",
            CoolingSchedule::Table { .. } => "table",
        }
    }

    pub fn initial(&self) -> f64 {
        self.temperature(0.0)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            CoolingSchedule::Constant { .. } => true,
            CoolingSchedule::Logarithmic { .. } => false,
            CoolingSchedule::Table { points } => points.iter().all(|p| p.1 == points[0].1),
        }
    }

    /// T(t) for physical time t ≥ 0.
    pub fn temperature(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            CoolingSchedule::Constant { t0 } => *t0,
            CoolingSchedule::Logarithmic { t0 } => t0 / (t + 2.0).ln(),
            CoolingSchedule::Table { points } => interpolate(points, t),
        }
    }
}

fn check_t0(t0: f64) -> Result<()> {
    if t0 > 0.0 && t0.is_finite() {
        Ok(())
    } else {
        Err(Error::config("schedule.t0", format!("must be positive, got {t0}")))
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|p| p.0 <= t);
    let (t0, v0) = points[k - 1];
    let (t1, v1) = points[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Per-step standard deviation √(2·ε·T) shared by all samplers.
#[inline]
pub fn noise_scale(temperature: f64, eps: f64) -> f64 {
    (2.0 * eps * temperature).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logarithmic_starts_at_two_for_fig2_constant() {
        let s = CoolingSchedule::logarithmic(2.0 * 2f64.ln()).unwrap();
        assert!((s.temperature(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_is_flat() {
        let s = CoolingSchedule::constant(2.0).unwrap();
        for t in [0.0, 0.5, 20.0, 1e6] {
            assert_eq!(s.temperature(t), 2.0);
        }
    }

    #[test]
    fn logarithmic_halves_at_e_squared() {
        let s = CoolingSchedule::logarithmic(1.0).unwrap();
        let t = std::f64::consts::E.powi(2) - 2.0;
        assert!((s.temperature(t) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_scale_examples() {
        assert!((noise_scale(2.0, 0.01) - 0.2).abs() < 1e-15);
        assert!((noise_scale(0.5, 1.0) - 1.0).abs() < 1e-15);
        assert!((noise_scale(2.0, 1e-4) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn table_interpolates_and_holds() {
        let s = CoolingSchedule::table(vec![(0.0, 2.0), (1.0, 1.0), (3.0, 0.5)]).unwrap();
        assert_eq!(s.temperature(0.5), 1.5);
        assert_eq!(s.temperature(2.0), 0.75);
        assert_eq!(s.temperature(10.0), 0.5);
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        assert!(CoolingSchedule::constant(0.0).is_err());
        assert!(CoolingSchedule::logarithmic(-1.0).is_err());
        assert!(CoolingSchedule::table(vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(CoolingSchedule::table(vec![(1.0, 1.0), (0.0, 0.5)]).is_err());
        assert!(CoolingSchedule::from_kind("geometric", 1.0).is_err());
    }

    #[test]
    fn serde_uses_kind_tag() {
        let s: CoolingSchedule = serde_json::from_str(r#"{"kind":"log","t0":1.5}"#).unwrap();
        assert_eq!(s, CoolingSchedule::Logarithmic { t0: 1.5 });
        let back = serde_json::to_string(&s).unwrap();
        assert!(back.contains("logarithmic"));
    }

    #[test]
    fn logarithmic_cools_slowly() {
        // |T'(t)| / T(t)^2 stays below c / t with c = 1 for t ≥ 1
        let s = CoolingSchedule::logarithmic(2.0 * 2f64.ln()).unwrap();
        let t0 = 2.0 * 2f64.ln();
        for k in 0..200 {
            let t = 1.0 + k as f64 * 0.5;
            let h = 1e-5 * t;
            let slope = (s.temperature(t + h) - s.temperature(t - h)) / (2.0 * h);
            let temp = s.temperature(t);
            assert!(slope.abs() / (temp * temp) <= 1.0 / (t0 * t) * 1.0001);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn temperature_never_increases(t1 in 0.0f64..1e4, dt in 0.0f64..1e4, t0 in 0.01f64..10.0) {
            for s in [
                CoolingSchedule::constant(t0).unwrap(),
                CoolingSchedule::logarithmic(t0).unwrap(),
                CoolingSchedule::table(vec![(0.0, t0), (10.0, t0 / 2.0), (100.0, t0 / 8.0)]).unwrap(),
            ] {
                let t2 = t1 + dt;
                prop_assert!(s.temperature(t2) <= s.temperature(t1) + 1e-15);
                prop_assert!(s.temperature(t2) > 0.0);
            }
        }
    }
}
