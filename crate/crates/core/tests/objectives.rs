use kinanneal::objectives::gibbs_density;
use kinanneal::samplers::{run_chain, ChainConfig, Method};
use kinanneal::{Grid1D, ObjectiveFunction};
use proptest::prelude::*;

const ACKLEY_AT_ONE: f64 = 3.625_384_938_440_363;
const ACKLEY_SLOPE_AT_0_7: f64 = -0.909_710_339_851_763_4;

fn shifted_ackley(c: f64) -> ObjectiveFunction {
    let base = ObjectiveFunction::ackley(1);
    ObjectiveFunction::custom("shifted", 1, move |x| base.value(x) + c)
}

#[test]
fn built_in_values() {
    assert_eq!(ObjectiveFunction::ackley(1).value(&[0.0]), 0.0);
    assert_eq!(ObjectiveFunction::quadratic(1).value(&[2.0]), 2.0);
    assert_eq!(ObjectiveFunction::double_well(1).value(&[1.0]), 0.0);
    assert!((ObjectiveFunction::ackley(1).value(&[1.0]) - ACKLEY_AT_ONE).abs() <= 1e-13);
}

#[test]
fn gradients_at_reference_points() {
    assert_eq!(ObjectiveFunction::quadratic(1).gradient(&[3.0]), vec![3.0]);
    assert_eq!(ObjectiveFunction::ackley(1).gradient(&[0.0]), vec![0.0]);
    let g = ObjectiveFunction::ackley(1).gradient(&[0.7])[0];
    assert!((g - ACKLEY_SLOPE_AT_0_7).abs() <= 1e-5 * ACKLEY_SLOPE_AT_0_7.abs());
    let fd = ObjectiveFunction::ackley(1).without_gradient().gradient(&[0.7])[0];
    assert!((fd - ACKLEY_SLOPE_AT_0_7).abs() <= 1e-5 * ACKLEY_SLOPE_AT_0_7.abs());
}

#[test]
fn gibbs_peak_of_half_square() {
    let grid = Grid1D::new(-8.0, 8.0, 4096).unwrap();
    let g = gibbs_density(&ObjectiveFunction::quadratic(1), 1.0, &grid).unwrap();
    let i = grid.locate(0.0).unwrap();
    assert!((g.values()[i] - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() <= 1e-4);
}

#[test]
fn chains_never_undercut_the_known_minimum() {
    for method in [Method::Ksa, Method::Msa, Method::Mfl] {
        let obj = ObjectiveFunction::ackley(1);
        let cfg = ChainConfig::new(method, obj.clone(), 1e-2, 5.0).with_seed(3);
        let snaps: Vec<f64> = (1..50).map(|k| k as f64 * 0.1).collect();
        let tr = run_chain(&cfg, &snaps).unwrap();
        for s in tr.snapshots.iter().chain([&tr.last]) {
            assert!(s.value >= obj.known_minimum().unwrap() - 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn ackley_is_nonnegative(x in -40.0f64..40.0, y in -40.0f64..40.0) {
        prop_assert!(ObjectiveFunction::ackley(1).value(&[x]) >= 0.0);
        prop_assert!(ObjectiveFunction::ackley(2).value(&[x, y]) >= 0.0);
    }

    #[test]
    fn gibbs_has_unit_mass(t in 0.01f64..10.0, which in 0usize..3) {
        let obj = [ObjectiveFunction::ackley(1), ObjectiveFunction::double_well(1), ObjectiveFunction::quadratic(1)][which].clone();
        let grid = Grid1D::new(-6.0, 6.0, 2048).unwrap();
        let g = gibbs_density(&obj, t, &grid).unwrap();
        prop_assert!((g.mass() - 1.0).abs() <= 1e-12);
        prop_assert!(g.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn gibbs_ignores_constant_shifts(t in 0.05f64..5.0, c in -50.0f64..50.0) {
        let grid = Grid1D::new(-4.0, 4.0, 400).unwrap();
        let a = gibbs_density(&ObjectiveFunction::ackley(1), t, &grid).unwrap();
        let b = gibbs_density(&shifted_ackley(c), t, &grid).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn analytic_gradient_matches_differences(x in prop_oneof![-5.0f64..-0.01, 0.01f64..5.0]) {
        for obj in [ObjectiveFunction::ackley(1), ObjectiveFunction::double_well(1), ObjectiveFunction::quadratic(1)] {
            let a = obj.gradient(&[x])[0];
            let n = obj.without_gradient().gradient(&[x])[0];
            prop_assert!((a - n).abs() <= 1e-5 * a.abs().max(1.0), "{} at {x}: {a} vs {n}", obj.name());
        }
    }
}
