use kinanneal::continuum::{
    dirichlet_form, entropy_dissipation, fp_step, kinetic_operator_apply, FokkerPlanck, FpConfig, KineticOperator,
};
use kinanneal::diagnostics::{l1_distance, relative_entropy};
use kinanneal::kernels::{transition_kernel_k, JumpDensity, SelectionDensity};
use kinanneal::objectives::gibbs_density;
use kinanneal::{CoolingSchedule, DensityField, Grid1D, ObjectiveFunction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fp_solver(grid: Grid1D, obj: &ObjectiveFunction, t: f64) -> FokkerPlanck {
    FokkerPlanck::new(FpConfig {
        grid,
        dt: None,
        schedule: CoolingSchedule::Constant { t0: t },
        objective: obj.clone(),
    })
    .unwrap()
}

fn random_density(grid: Grid1D, rng: &mut ChaCha8Rng) -> DensityField {
    let values = (0..grid.len()).map(|_| rng.random_range(0.01..1.0)).collect();
    DensityField::normalized(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fp_leaves_gibbs_unchanged(t in 0.3f64..5.0, which in 0usize..3) {
        let obj = [ObjectiveFunction::ackley(1), ObjectiveFunction::double_well(1), ObjectiveFunction::quadratic(1)][which].clone();
        let grid = Grid1D::new(-6.0, 6.0, 480).unwrap();
        let g = gibbs_density(&obj, t, &grid).unwrap();
        let cfg = FpConfig { grid, dt: None, schedule: CoolingSchedule::Constant { t0: t }, objective: obj };
        let next = fp_step(&g, &cfg, 0.0).unwrap();
        for (a, b) in g.values().iter().zip(next.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn fp_conserves_mass(seed in any::<u64>()) {
        let grid = Grid1D::new(-4.0, 4.0, 300).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_density(grid, &mut rng);
        let solver = fp_solver(grid, &ObjectiveFunction::ackley(1), 2.0);
        let mut g = f;
        for _ in 0..20 {
            g = solver.step(&g, 0.0).unwrap();
        }
        prop_assert!((g.mass() - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn kinetic_operator_conserves_mass(seed in any::<u64>(), sigma in 0.05f64..0.5) {
        let grid = Grid1D::new(-4.0, 4.0, 400).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_density(grid, &mut rng);
        let l = kinetic_operator_apply(&f, &ObjectiveFunction::ackley(1), 2.0, sigma, &SelectionDensity::normal(1)).unwrap();
        prop_assert!((l.iter().sum::<f64>() * grid.dx()).abs() <= 1e-10);
    }
}

#[test]
fn fp_mass_conserved_from_uniform_start() {
    let grid = Grid1D::new(-6.0, 6.0, 1200).unwrap();
    let f = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
    let next = fp_step(
        &f,
        &FpConfig {
            grid,
            dt: Some(1e-3),
            schedule: CoolingSchedule::Constant { t0: 2.0 },
            objective: ObjectiveFunction::ackley(1),
        },
        0.0,
    )
    .unwrap();
    assert!((next.mass() - 1.0).abs() <= 1e-13);
}

#[test]
fn fp_tracks_ornstein_uhlenbeck_moments() {
    let grid = Grid1D::new(-8.0, 8.0, 1600).unwrap();
    let obj = ObjectiveFunction::quadratic(1);
    let (t, m0, v0) = (1.0, 1.0, 0.25);
    let values = grid
        .centers()
        .iter()
        .map(|x| (-(x - m0) * (x - m0) / (2.0 * v0)).exp())
        .collect();
    let f0 = DensityField::normalized(grid, values).unwrap();
    let times = [0.5, 1.0, 1.5, 2.0];
    let out = fp_solver(grid, &obj, t).evolve(&f0, 2.0, &times).unwrap();
    for (s, f) in &out[..times.len()] {
        let m = m0 * (-s).exp();
        let v = t + (v0 - t) * (-2.0 * s).exp();
        assert!((f.mean() - m).abs() <= 1e-3, "t = {s}: mean {} vs {m}", f.mean());
        assert!(
            (f.variance() - v).abs() <= 1e-3,
            "t = {s}: variance {} vs {v}",
            f.variance()
        );
    }
}

#[test]
fn fp_relative_entropy_never_increases() {
    let grid = Grid1D::new(-6.0, 6.0, 600).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let g = gibbs_density(&obj, 2.0, &grid).unwrap();
    let f0 = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
    let mut previous = relative_entropy(&f0, &g).unwrap();
    let mut worst_rise = f64::NEG_INFINITY;
    fp_solver(grid, &obj, 2.0)
        .evolve_observed(&f0, 1.0, &[], |_, f| {
            let h = relative_entropy(f, &g).unwrap();
            worst_rise = worst_rise.max(h - previous);
            previous = h;
        })
        .unwrap();
    assert!(worst_rise <= 1e-9, "entropy rose by {worst_rise}");
}

#[test]
fn fp_at_t2_agrees_with_a_four_times_finer_oracle() {
    let obj = ObjectiveFunction::ackley(1);
    let window = Grid1D::new(-4.0, 4.0, 160).unwrap();
    let solve = |cells: usize| {
        let grid = Grid1D::new(-6.0, 6.0, cells).unwrap();
        let f0 = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
        let out = fp_solver(grid, &obj, 2.0).evolve(&f0, 2.0, &[]).unwrap();
        out.last().unwrap().1.rebin(&window)
    };
    let coarse = solve(480);
    let fine = solve(1920);
    let gap = l1_distance(&coarse, &fine).unwrap();
    assert!(gap <= 1e-3, "L1 gap {gap}");
}

#[test]
fn fp_settles_on_gibbs() {
    let grid = Grid1D::new(-6.0, 6.0, 600).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let g = gibbs_density(&obj, 2.0, &grid).unwrap();
    let f0 = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
    let out = fp_solver(grid, &obj, 2.0).evolve(&f0, 8.0, &[2.0]).unwrap();
    let at_two = l1_distance(&out[0].1, &g).unwrap();
    let at_eight = l1_distance(&out[1].1, &g).unwrap();
    assert!(at_eight <= 1e-3, "L1 at t = 8: {at_eight}");
    assert!(at_eight < at_two / 50.0);
}

#[test]
fn log_schedule_solve_keeps_unit_mass() {
    let grid = Grid1D::new(-6.0, 6.0, 300).unwrap();
    let solver = FokkerPlanck::new(FpConfig {
        grid,
        dt: None,
        schedule: CoolingSchedule::Logarithmic { t0: 2.0 * 2f64.ln() },
        objective: ObjectiveFunction::ackley(1),
    })
    .unwrap();
    let f0 = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
    let out = solver.evolve(&f0, 5.0, &[1.0, 2.5]).unwrap();
    assert_eq!(out.len(), 3);
    for (_, f) in out {
        assert!((f.mass() - 1.0).abs() <= 1e-12);
        assert!(f.values().iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn kinetic_operator_vanishes_on_gibbs_at_fine_resolution() {
    let grid = Grid1D::new(-6.0, 6.0, 2048).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let g = gibbs_density(&obj, 2.0, &grid).unwrap();
    let l = kinetic_operator_apply(&g, &obj, 2.0, 0.2, &SelectionDensity::normal(1)).unwrap();
    assert!(l.iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn kinetic_operator_lowers_mean_energy_from_uniform() {
    let grid = Grid1D::new(-4.0, 4.0, 400).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let f = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
    let l = kinetic_operator_apply(&f, &obj, 2.0, 0.2, &SelectionDensity::normal(1)).unwrap();
    let drift: f64 = l.iter().zip(obj.on_grid(&grid)).map(|(li, fi)| li * fi).sum::<f64>() * grid.dx();
    assert!(drift < 0.0, "mean energy rate {drift}");
}

#[test]
fn dissipation_functionals_are_nonnegative() {
    let grid = Grid1D::new(-4.0, 4.0, 300).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let p = SelectionDensity::normal(1);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let f = random_density(grid, &mut rng);
        assert!(entropy_dissipation(&f, &obj, 2.0, 0.2, &p).unwrap() >= -1e-12);
        assert!(dirichlet_form(&f, &obj, 2.0, 0.2, &p).unwrap() >= -1e-12);
    }
}

#[test]
fn dirichlet_form_matches_a_brute_force_double_sum() {
    let grid = Grid1D::new(-4.0, 4.0, 200).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let p = SelectionDensity::normal(1);
    let (t, sigma) = (2.0, 0.2);
    let xs = grid.centers();
    let dx = grid.dx();
    // Gibbs weights and the perturbed density, built directly
    let w: Vec<f64> = xs.iter().map(|x| (-obj.value(&[*x]) / t).exp()).collect();
    let z: f64 = w.iter().sum::<f64>() * dx;
    let ginf: Vec<f64> = w.iter().map(|v| v / z).collect();
    let raw: Vec<f64> = xs.iter().zip(&ginf).map(|(x, g)| g * (1.0 + 0.1 * x.cos())).collect();
    let mass: f64 = raw.iter().sum::<f64>() * dx;
    let f: Vec<f64> = raw.iter().map(|v| v / mass).collect();
    let u: Vec<f64> = f.iter().zip(&ginf).map(|(a, b)| a / b).collect();
    let mut oracle = 0.0;
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            if i == j || (xs[j] - xs[i]).abs() > p.support_radius() * sigma + 1e-12 {
                continue;
            }
            let k = transition_kernel_k(&obj, t, sigma, &p, xs[i], xs[j]);
            oracle += k * ginf[i] * (u[j] - u[i]).powi(2);
        }
    }
    oracle *= 0.5 * dx * dx;
    let density = DensityField::new(grid, f).unwrap();
    let value = dirichlet_form(&density, &obj, t, sigma, &p).unwrap();
    assert!(value > 0.0);
    assert!((value - oracle).abs() <= 1e-8, "{value} vs {oracle}");
}

fn kinetic_setup() -> (KineticOperator, DensityField) {
    let grid = Grid1D::new(-4.0, 4.0, 400).unwrap();
    let obj = ObjectiveFunction::ackley(1);
    let op = KineticOperator::new(&obj, 2.0, 0.2, &SelectionDensity::normal(1), &grid).unwrap();
    let uniform = DensityField::uniform_on(grid, -3.0, 3.0).unwrap();
    let mixed = uniform
        .values()
        .iter()
        .zip(op.gibbs().values())
        .map(|(u, g)| 0.9 * u + 0.1 * g)
        .collect();
    (op, DensityField::new(grid, mixed).unwrap())
}

#[test]
fn entropy_rate_matches_minus_dissipation() {
    let (op, f) = kinetic_setup();
    let dt = 1e-4;
    let h = |f: &DensityField| relative_entropy(f, op.gibbs()).unwrap();
    let next = op.explicit_step(&f, dt).unwrap();
    let rate = (h(&next) - h(&f)) / dt;
    let i = op.entropy_dissipation(&f).unwrap();
    assert!(i > 0.0);
    assert!((rate + i).abs() <= 0.05 * i, "dH/dt = {rate}, I = {i}");
}

#[test]
fn convex_entropies_decay_along_kinetic_evolution() {
    let (op, f0) = kinetic_setup();
    let dt = 0.5 / op.max_exit_rate();
    let log_entropy = |x: f64| if x > 0.0 { x * x.ln() - x + 1.0 } else { 1.0 };
    let quadratic = |x: f64| 0.5 * (x - 1.0) * (x - 1.0);
    let mut f = f0;
    let mut last = (
        op.convex_entropy(&f, log_entropy).unwrap(),
        op.convex_entropy(&f, quadratic).unwrap(),
    );
    for _ in 0..200 {
        f = op.explicit_step(&f, dt).unwrap();
        let now = (
            op.convex_entropy(&f, log_entropy).unwrap(),
            op.convex_entropy(&f, quadratic).unwrap(),
        );
        assert!(now.0 <= last.0 + 1e-9 && now.1 <= last.1 + 1e-9);
        last = now;
    }
}
