use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("objective is not finite at x = {x:?} (value {value})")]
    NonFiniteObjective { x: Vec<f64>, value: f64 },

    #[error("gradient is not finite at x = {x:?}")]
    NonFiniteGradient { x: Vec<f64> },

    #[error("every Gibbs weight underflowed at T = {temperature}; evaluate the exponent in the log domain")]
    GibbsUnderflow { temperature: f64 },

    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("density fields live on different grids")]
    GridMismatch,

    #[error("no samples to estimate a density from")]
    EmptySamples,

    #[error("reference density vanishes at x = {x} where the density is positive")]
    NotAbsolutelyContinuous { x: f64 },

    #[error("selection kernel unresolved: sigma = {sigma} but cell width is {dx} (need sigma >= 2 dx)")]
    KernelUnresolved { sigma: f64, dx: f64 },

    #[error("Fokker-Planck step lost nonnegativity after {halvings} halvings; grid too coarse")]
    PositivityLost { halvings: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
