use thiserror::Error;

use crate::hilbert::HilbertSpace;

/// Errors produced by the simulation and compilation layers.
///
/// Variants carry enough context to identify the offending coordinate,
/// segment, or compilation node without a debugger.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("basis coordinate {name} = {value} outside 0..={max}")]
    CoordinateOutOfRange {
        name: &'static str,
        value: usize,
        max: usize,
    },

    #[error("operands live on different spaces: {left} vs {right}")]
    SpaceMismatch {
        left: HilbertSpace,
        right: HilbertSpace,
    },

    #[error("state norm {norm} is not 1 within 1e-9")]
    NotNormalized { norm: f64 },

    #[error("state has no support (all amplitudes zero)")]
    ZeroState,

    #[error("matrix is not Hermitian: max |H - H^dag| element = {max_dev:.3e}")]
    NotHermitian { max_dev: f64 },

    #[error("qubit frequency coincides with {which}; detuning-based expressions diverge")]
    DegenerateDetuning { which: &'static str },

    #[error(
        "Stark-shift matching violated: |step_a - step_b| = {mismatch:.6e} rad/s exceeds \
         {tol:.6e} rad/s (1e-3 relative)"
    )]
    MatchingViolated { mismatch: f64, tol: f64 },

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("schedule segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },

    #[error(
        "drive amplitude {amplitude:.6e} rad/s exceeds the selectivity bound {bound:.6e} rad/s"
    )]
    AmplitudeBound { amplitude: f64, bound: f64 },

    #[error("segment {index}: integrator norm drift {drift:.3e} exceeds 1e-6")]
    NormDrift { index: usize, drift: f64 },

    #[error("truncation (n_a <= {na_max}, n_b <= {nb_max}) too small: {reason}")]
    TruncationTooSmall {
        na_max: usize,
        nb_max: usize,
        reason: String,
    },

    #[error(
        "zeroing failed at node (column {column}, row {row}): residual amplitude \
         {residual:.3e} after {retries} corrective retries"
    )]
    ZeroingFailed {
        column: usize,
        row: usize,
        residual: f64,
        retries: usize,
    },

    #[error("inverse pass left residual population {residual:.3e} outside the vacuum state")]
    ResidualAfterInverse { residual: f64 },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("JSON schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
