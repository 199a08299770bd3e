use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected a {expected}-component field, got {got}")]
    ComponentMismatch { expected: usize, got: usize },

    #[error("non-finite sample in field")]
    NonFinite,

    #[error("coefficients are not Hermitian: imaginary residue {residue:e} relative to field magnitude")]
    NonHermitian { residue: f64 },

    #[error("mean mode {magnitude:e} exceeds tolerance {tolerance:e}: the forcing has a nonzero space-time mean that the periodic problem cannot absorb")]
    MeanModeNonzero { magnitude: f64, tolerance: f64 },

    #[error("field is not solenoidal: relative spectral divergence {divergence:e}")]
    NotSolenoidal { divergence: f64 },

    #[error("pressure source is not a gradient: transverse residue {residue:e}")]
    NotAGradient { residue: f64 },

    #[error("no convergence after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64, history: Vec<f64> },

    #[error("iteration diverging at step {iterations} (update ratio {ratio:e})")]
    Diverging { iterations: usize, ratio: f64, history: Vec<f64> },

    #[error("analytic field is not periodic: boundary mismatch {mismatch:e}")]
    NotPeriodic { mismatch: f64 },

    #[error("exponent {value} outside the admissible range {range} for {norm}")]
    InvalidExponent { norm: &'static str, value: f64, range: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
