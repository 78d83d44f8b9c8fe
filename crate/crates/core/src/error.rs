//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix contains NaN/Inf entries, or dimensions are inconsistent.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Gram matrix of a sketch is numerically singular; the caller may
    /// regenerate the sketch with a fresh stream id.
    #[error("sketch Gram matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularSketch { cond: f64 },

    /// The matrix-exponential action did not reach the requested accuracy
    /// within the configured substep budget. Carries the best estimate's
    /// error bound.
    #[error("matrix exponential action did not converge: error bound {bound:.3e} > tol {tol:.3e}")]
    AccuracyNotReached { bound: f64, tol: f64 },

    /// Step-size underflow or step budget exhausted in the explicit inner
    /// solver; usually means stiffness leaked into the nonstiff subproblem.
    #[error("stiffness detected in inner solver at t = {t:.6e} (step size {h:.3e})")]
    StiffnessDetected { t: f64, h: f64 },

    /// Dense reference path refused: the problem exceeds the densification guard.
    #[error("problem too large to densify: {entries} entries > guard {guard}")]
    ProblemTooLarge { entries: usize, guard: usize },

    /// Adaptive rangefinder hit its basis-size cap before the residual
    /// estimator dropped below the threshold.
    #[error("rangefinder tolerance not reached: estimator {estimator:.3e} > threshold {threshold:.3e} at basis size {basis}")]
    ToleranceNotReached {
        estimator: f64,
        threshold: f64,
        basis: usize,
    },

    /// The truncated core of a generalized Nystrom step is too ill-conditioned
    /// to invert; increase the extra oversampling or decrease the rank.
    #[error("ill-conditioned Nystrom core: sigma_min/sigma_max = {ratio:.3e}; increase extra oversampling or reduce the rank")]
    IllConditionedCore { ratio: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Relative error against a zero reference is undefined.
    #[error("relative error undefined: reference has zero norm")]
    UndefinedRelativeError,

    /// A simulation produced non-finite state; the last finite snapshot was kept.
    #[error("simulation diverged at step {step} (t = {t:.6e})")]
    SimulationDiverged { step: usize, t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
