//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix must be square with even dimension, got {rows}x{cols}")]
    BadDimension { rows: usize, cols: usize },

    #[error("mode count must be positive")]
    ZeroModes,

    #[error("matrix is not symplectic (defect {defect:.3e} exceeds {tol:.1e})")]
    NotSymplectic { defect: f64, tol: f64 },

    #[error("matrix is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),

    #[error("covariance violates the Heisenberg bound (min symplectic eigenvalue {0})")]
    Unphysical(f64),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("chain length must be at least 2, got {0}")]
    ChainTooShort(usize),

    #[error("site {site} out of range 1..={max}")]
    SiteOutOfRange { site: usize, max: usize },

    #[error("generator index {0} out of range 1..=3")]
    GeneratorIndex(usize),

    #[error("matrix lies outside the generator span (trace residual {0:.3e})")]
    OutsideGeneratorSpan(f64),

    #[error("phonon index {k} invalid for chain length {n}")]
    BadPhononIndex { k: i64, n: usize },

    #[error("k = 0 is the conserved total-displacement mode and cannot be targeted")]
    ZeroModeTargeted,

    #[error("squeezing parameter must be non-negative, got {0}")]
    NegativeSqueeze(f64),

    #[error("k = 0 sector failed to decouple (defect {0:.3e}); construction bug")]
    ZeroModeCoupling(f64),

    #[error(
        "decorrelation stage failed (mode {mode}, site {site}): \
         residual {residual:.3e} after {restarts} restarts"
    )]
    SolverFailure {
        mode: usize,
        site: usize,
        residual: f64,
        restarts: usize,
    },

    #[error("trace endpoint has {got} entangled pairs, target state has {expected}")]
    TraceMismatch { got: usize, expected: usize },

    #[error("rwa ratio {0} too large (must be <= {1})")]
    RwaRatioTooLarge(f64, f64),

    #[error("integration step too coarse: symplectic defect {0:.3e} exceeds budget")]
    IntegrationDrift(f64),

    #[error("time step {dt} too coarse: must be <= {max}")]
    StepTooCoarse { dt: f64, max: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
