//! Single-walker update rules and the chain driver.
//!
//! * KSA — kinetic simulated annealing: Metropolis accept/reject of the trial
//!   point `x + √(2εT)·ξ`.
//! * MSA — Maxwellian simulated annealing: always moves, by the fraction
//!   `B(x → x̃)` of the way toward the trial point.
//! * MFL — Euler–Maruyama for `dX = −∇F(X) dt + √(2T) dB`.
//!
//! The temperature of a step is read from the schedule at the step's start
//! time `t = n·Δt`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::kernels::{acceptance_from_delta, SelectionDensity, SelectionKind};
use crate::objectives::{ObjectiveFunction, ObjectiveSpec};
use crate::schedule::{noise_scale, CoolingSchedule};
use crate::stream::{self, RunRng};

/// A search point; inline for d ≤ 4.
pub type Point = SmallVec<[f64; 4]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ksa,
    Msa,
    Mfl,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ksa => "ksa",
            Method::Msa => "msa",
            Method::Mfl => "mfl",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ksa" => Ok(Method::Ksa),
            "msa" => Ok(Method::Msa),
            "mfl" => Ok(Method::Mfl),
            other => Err(Error::config(
                "method",
                format!("unknown method `{other}` (expected ksa, msa or mfl)"),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WalkerState {
    pub position: Point,
    /// F(position), carried along so each step evaluates F once.
    pub value: f64,
    pub time: f64,
    pub iteration: u64,
    /// ∇F at the stored point, reused by the next Langevin step while the
    /// position is unchanged.
    grad_cache: Option<(Point, Point)>,
}

impl PartialEq for WalkerState {
    fn eq(&self, other: &Self) -> bool {
        self.position == other.position
            && self.value == other.value
            && self.time == other.time
            && self.iteration == other.iteration
    }
}

impl WalkerState {
    pub fn new(obj: &ObjectiveFunction, position: &[f64]) -> Result<Self> {
        Ok(WalkerState {
            value: obj.evaluate(position)?,
            position: Point::from_slice(position),
            time: 0.0,
            iteration: 0,
            grad_cache: None,
        })
    }

    #[inline]
    fn tick(&mut self, dt: f64) {
        self.iteration += 1;
        self.time = self.iteration as f64 * dt;
    }
}

/// Everything one chain needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ChainConfigRepr", into = "ChainConfigRepr")]
pub struct ChainConfig {
    pub method: Method,
    /// Scaling parameter ε.
    pub eps: f64,
    /// Time step; KSA/MSA require Δt ≤ ε.
    pub dt: f64,
    pub t_final: f64,
    pub schedule: CoolingSchedule,
    pub objective: ObjectiveFunction,
    pub selection: SelectionKind,
    pub seed: u64,
    pub init_interval: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct ChainConfigRepr {
    method: Method,
    eps: f64,
    dt: f64,
    t_final: f64,
    schedule: CoolingSchedule,
    objective: ObjectiveSpec,
    selection: SelectionKind,
    seed: u64,
    init_interval: (f64, f64),
}

impl TryFrom<ChainConfigRepr> for ChainConfig {
    type Error = Error;

    fn try_from(r: ChainConfigRepr) -> Result<Self> {
        let cfg = ChainConfig {
            method: r.method,
            eps: r.eps,
            dt: r.dt,
            t_final: r.t_final,
            schedule: r.schedule,
            objective: r.objective.build()?,
            selection: r.selection,
            seed: r.seed,
            init_interval: r.init_interval,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<ChainConfig> for ChainConfigRepr {
    fn from(c: ChainConfig) -> Self {
        ChainConfigRepr {
            method: c.method,
            eps: c.eps,
            dt: c.dt,
            t_final: c.t_final,
            schedule: c.schedule,
            objective: ObjectiveSpec::from(&c.objective),
            selection: c.selection,
            seed: c.seed,
            init_interval: c.init_interval,
        }
    }
}

impl ChainConfig {
    /// Defaults: Δt = ε, constant T = 2, normal selection, seed 0,
    /// initial points uniform on [−3, 3].
    pub fn new(method: Method, objective: ObjectiveFunction, eps: f64, t_final: f64) -> Self {
        ChainConfig {
            method,
            eps,
            dt: eps,
            t_final,
            schedule: CoolingSchedule::Constant { t0: 2.0 },
            objective,
            selection: SelectionKind::Normal,
            seed: 0,
            init_interval: (-3.0, 3.0),
        }
    }

    pub fn with_schedule(mut self, schedule: CoolingSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_selection(mut self, selection: SelectionKind) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_init_interval(mut self, a: f64, b: f64) -> Self {
        self.init_interval = (a, b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::config("epsilon", format!("must be positive, got {}", self.eps)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.method != Method::Mfl && self.dt > self.eps * (1.0 + 1e-12) {
            return Err(Error::config(
                "dt",
                format!(
                    "Δt = {} exceeds ε = {}; the kinetic scheme needs Δt ≤ ε",
                    self.dt, self.eps
                ),
            ));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(
                "t_final",
                format!("must be nonnegative, got {}", self.t_final),
            ));
        }
        if self.t_final > 0.0 && self.t_final < self.dt * (1.0 - 1e-9) {
            return Err(Error::config("t_final", "must be at least one time step"));
        }
        let (a, b) = self.init_interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::config("init_interval", format!("need a < b, got [{a}, {b}]")));
        }
        self.schedule.validate()
    }

    pub fn steps(&self) -> u64 {
        (self.t_final / self.dt + 1e-9).floor() as u64
    }

    /// Step index of the last step not exceeding physical time `t`.
    pub fn step_at(&self, t: f64) -> u64 {
        ((t / self.dt + 1e-9).floor() as u64).min(self.steps())
    }

    pub fn selection_density(&self) -> SelectionDensity {
        SelectionDensity::new(self.selection, self.objective.dim())
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WalkerState> {
        let (a, b) = self.init_interval;
        let x: Point = (0..self.objective.dim()).map(|_| rng.random_range(a..b)).collect();
        WalkerState::new(&self.objective, &x)
    }

    /// True when the kinetic convex combination keeps the walker in place
    /// this step (only possible for Δt < ε).
    #[inline]
    fn idles<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.dt < self.eps && rng.random::<f64>() >= self.dt / self.eps
    }
}

fn checked(obj: &ObjectiveFunction, x: &[f64]) -> Result<f64> {
    obj.evaluate(x)
}

#[inline]
fn trial_point<R: Rng + ?Sized>(position: &[f64], cfg: &ChainConfig, sigma: f64, rng: &mut R) -> Point {
    let selection = cfg.selection_density();
    let mut trial = Point::from_slice(position);
    for v in trial.iter_mut() {
        *v += sigma * selection.sample_one(rng);
    }
    trial
}

/// In-place form of [`metropolis_step`].
#[inline]
pub fn metropolis_advance<R: Rng + ?Sized>(state: &mut WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<()> {
    let temperature = cfg.schedule.temperature(state.time);
    state.tick(cfg.dt);
    if cfg.idles(rng) {
        return Ok(());
    }
    let trial = trial_point(&state.position, cfg, noise_scale(temperature, cfg.eps), rng);
    let trial_value = checked(&cfg.objective, &trial)?;
    let b = acceptance_from_delta(trial_value - state.value, temperature);
    if b >= 1.0 || rng.random::<f64>() < b {
        state.position = trial;
        state.value = trial_value;
    }
    Ok(())
}

/// One KSA step: propose `x + √(2εT)ξ`, accept with probability B(x → x̃).
pub fn metropolis_step<R: Rng + ?Sized>(state: &WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<WalkerState> {
    let mut next = state.clone();
    metropolis_advance(&mut next, cfg, rng)?;
    Ok(next)
}

/// Rejection-free Maxwellian move from `x` toward `trial`: the full step when
/// downhill, otherwise the fraction exp(−ΔF/T) of it.
pub fn maxwellian_update(
    obj: &ObjectiveFunction,
    temperature: f64,
    x: &[f64],
    value: f64,
    trial: &[f64],
    trial_value: f64,
) -> Result<(Point, f64)> {
    let weight = acceptance_from_delta(trial_value - value, temperature);
    if weight >= 1.0 {
        return Ok((Point::from_slice(trial), trial_value));
    }
    let mut moved = Point::from_slice(x);
    for (a, b) in moved.iter_mut().zip(trial) {
        *a += weight * (b - *a);
    }
    let moved_value = checked(obj, &moved)?;
    Ok((moved, moved_value))
}

/// In-place form of [`msa_step`].
#[inline]
pub fn msa_advance<R: Rng + ?Sized>(state: &mut WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<()> {
    let temperature = cfg.schedule.temperature(state.time);
    state.tick(cfg.dt);
    if cfg.idles(rng) {
        return Ok(());
    }
    let trial = trial_point(&state.position, cfg, noise_scale(temperature, cfg.eps), rng);
    let trial_value = checked(&cfg.objective, &trial)?;
    let (position, value) = maxwellian_update(
        &cfg.objective,
        temperature,
        &state.position,
        state.value,
        &trial,
        trial_value,
    )?;
    state.position = position;
    state.value = value;
    Ok(())
}

/// One MSA step.
pub fn msa_step<R: Rng + ?Sized>(state: &WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<WalkerState> {
    let mut next = state.clone();
    msa_advance(&mut next, cfg, rng)?;
    Ok(next)
}

fn checked_gradient(x: &[f64], grad: &[f64]) -> Result<()> {
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteGradient { x: x.to_vec() })
    }
}

#[inline]
fn langevin_move(x: &[f64], grad: &[f64], temperature: f64, dt: f64, noise: &[f64]) -> Point {
    let scale = (2.0 * temperature * dt).sqrt();
    let mut out = Point::from_slice(x);
    for ((v, g), z) in out.iter_mut().zip(grad).zip(noise) {
        *v = *v - g * dt + scale * z;
    }
    out
}

/// Euler–Maruyama update `x − ∇F(x)Δt + √(2TΔt)·noise` for a given noise
/// vector.
pub fn langevin_update(obj: &ObjectiveFunction, temperature: f64, dt: f64, x: &[f64], noise: &[f64]) -> Result<Point> {
    let mut grad = Point::from_elem(0.0, x.len());
    obj.gradient_into(x, &mut grad);
    checked_gradient(x, &grad)?;
    Ok(langevin_move(x, &grad, temperature, dt, noise))
}

/// In-place form of [`mfl_step`].
#[inline]
pub fn mfl_advance<R: Rng + ?Sized>(state: &mut WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<()> {
    let temperature = cfg.schedule.temperature(state.time);
    state.tick(cfg.dt);
    let mut grad = match state.grad_cache.take() {
        Some((at, g)) if at == state.position => g,
        _ => {
            let mut g = Point::from_elem(0.0, state.position.len());
            cfg.objective.gradient_into(&state.position, &mut g);
            g
        }
    };
    checked_gradient(&state.position, &grad)?;
    let mut noise = Point::from_elem(0.0, state.position.len());
    for z in noise.iter_mut() {
        *z = rng.sample(StandardNormal);
    }
    let moved = langevin_move(&state.position, &grad, temperature, cfg.dt, &noise);
    let value = cfg.objective.value_and_gradient_into(&moved, &mut grad);
    if !value.is_finite() {
        return Err(Error::NonFiniteObjective {
            x: moved.to_vec(),
            value,
        });
    }
    state.grad_cache = Some((moved.clone(), grad));
    state.position = moved;
    state.value = value;
    Ok(())
}

/// One MFL step with standard normal noise.
pub fn mfl_step<R: Rng + ?Sized>(state: &WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<WalkerState> {
    let mut next = state.clone();
    mfl_advance(&mut next, cfg, rng)?;
    Ok(next)
}

/// Advances `state` by one step of `cfg.method`.
#[inline]
pub fn advance<R: Rng + ?Sized>(state: &mut WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<()> {
    match cfg.method {
        Method::Ksa => metropolis_advance(state, cfg, rng),
        Method::Msa => msa_advance(state, cfg, rng),
        Method::Mfl => mfl_advance(state, cfg, rng),
    }
}

/// Dispatches on `cfg.method`.
pub fn step<R: Rng + ?Sized>(state: &WalkerState, cfg: &ChainConfig, rng: &mut R) -> Result<WalkerState> {
    let mut next = state.clone();
    advance(&mut next, cfg, rng)?;
    Ok(next)
}

/// States recorded by [`run_chain`].
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: WalkerState,
    /// One state per requested snapshot time.
    pub snapshots: Vec<WalkerState>,
    pub last: WalkerState,
}

/// Runs one chain seeded from `cfg.seed` (stream 0 of that master seed).
pub fn run_chain(cfg: &ChainConfig, snapshot_times: &[f64]) -> Result<Trajectory> {
    let mut rng = stream::run_rng(cfg.seed, 0);
    run_chain_with(cfg, snapshot_times, &mut rng)
}

pub(crate) fn snapshot_steps(cfg: &ChainConfig, snapshot_times: &[f64]) -> Result<Vec<u64>> {
    if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("snapshots", "times must be sorted"));
    }
    if let Some(bad) = snapshot_times
        .iter()
        .find(|t| !(**t >= 0.0 && **t <= cfg.t_final * (1.0 + 1e-12) + 1e-12))
    {
        return Err(Error::config(
            "snapshots",
            format!("time {bad} outside [0, {}]", cfg.t_final),
        ));
    }
    Ok(snapshot_times.iter().map(|t| cfg.step_at(*t)).collect())
}

/// Runs one chain on the given stream, starting from a uniform draw on the
/// initial interval.
pub fn run_chain_with(cfg: &ChainConfig, snapshot_times: &[f64], rng: &mut RunRng) -> Result<Trajectory> {
    cfg.validate()?;
    let marks = snapshot_steps(cfg, snapshot_times)?;
    let initial = cfg.initial_state(rng)?;
    let total = cfg.steps();
    let mut snapshots = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    let mut state = initial.clone();
    loop {
        while next_mark < marks.len() && marks[next_mark] == state.iteration {
            snapshots.push(state.clone());
            next_mark += 1;
        }
        if state.iteration >= total {
            break;
        }
        advance(&mut state, cfg, rng)?;
    }
    Ok(Trajectory {
        initial,
        snapshots,
        last: state,
    })
}
