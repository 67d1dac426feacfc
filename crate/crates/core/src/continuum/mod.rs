//! Deterministic grid solvers for the density evolution of the samplers.

mod fokker_planck;
mod kinetic;

pub use fokker_planck::{bernoulli, chang_cooper_delta, fp_step, FokkerPlanck, FpConfig};
pub use kinetic::{dirichlet_form, entropy_dissipation, kinetic_operator_apply, KineticOperator, DENSITY_FLOOR};
