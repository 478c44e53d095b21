use std::path::PathBuf;

use thiserror::Error;

/// Why a parameter set cannot define a collision system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellPosedness {
    /// `g + h` must be positive.
    NonPositiveLambda,
    /// `rho^2 + sigma^2` must equal one.
    DispersionNotNormalized,
    /// Drift magnitudes and dispersions must be nonnegative.
    NegativeCoefficient,
    /// `eta + zeta = 0`: no solution, or no uniqueness when both vanish.
    EtaPlusZetaZero,
    /// The skewness `eta / (eta + zeta)` falls outside `[0, 1]`.
    AlphaOutOfRange,
    /// A field is NaN or infinite.
    NonFinite,
}

impl std::fmt::Display for WellPosedness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            WellPosedness::NonPositiveLambda => "lambda = g + h must be > 0",
            WellPosedness::DispersionNotNormalized => "rho^2 + sigma^2 must equal 1",
            WellPosedness::NegativeCoefficient => "g, h, rho, sigma must be >= 0",
            WellPosedness::EtaPlusZetaZero => "eta + zeta = 0 (system is ill-posed)",
            WellPosedness::AlphaOutOfRange => "alpha = eta/(eta+zeta) lies outside [0, 1]",
            WellPosedness::NonFinite => "parameters must be finite",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("well-posedness violation: {0}")]
    WellPosedness(WellPosedness),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("bandwidth {bandwidth} too small for step {dt} (estimator unstable)")]
    Bandwidth { bandwidth: f64, dt: f64 },

    #[error("quadrature did not converge: estimate {value}, error {error} > tolerance {tol}")]
    Quadrature { value: f64, error: f64, tol: f64 },

    #[error("query point outside the support: {0}")]
    Region(String),

    #[error("planar case does not match the parameters: {0}")]
    CaseMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("unknown figure {0} (expected 1-4)")]
    UnknownFigure(u32),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<WellPosedness> for Error {
    fn from(v: WellPosedness) -> Self {
        Error::WellPosedness(v)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
