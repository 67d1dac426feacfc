//! Kinetic simulated annealing and Metropolis/Langevin samplers, with
//! continuum reference solvers and ensemble diagnostics.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuum;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod objectives;
pub mod samplers;
pub mod schedule;
pub mod stream;

pub use error::{Error, Result};
pub use grid::{DensityField, Grid1D};
pub use objectives::ObjectiveFunction;
pub use schedule::CoolingSchedule;
