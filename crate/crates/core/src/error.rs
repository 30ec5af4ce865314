use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("log-gamma pole at z = {re} + {im}i")]
    GammaPole { re: f64, im: f64 },

    #[error("Barnes G vanishes at z = {re}; its logarithm is undefined")]
    BarnesZero { re: f64 },

    #[error("zero base in complex power")]
    ZeroBase,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("symbol evaluated at singular point omega = {omega}")]
    SingularPoint { omega: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("symbol vanishes near omega = {omega}")]
    VanishingSymbol { omega: f64 },

    #[error("zero one-sided limit in jump computation")]
    ZeroLimit,

    #[error("singularity at {location} is not removable: one-sided limits differ by {gap:e}")]
    NonRemovable { location: f64, gap: f64 },

    #[error("quadrature did not converge for {what}: {report}")]
    Quadrature { what: &'static str, report: String },

    #[error("log-branch discontinuity near omega = {omega}")]
    BranchDiscontinuity { omega: f64 },

    #[error("symbol has winding number {winding:.3}, factorization needs 0")]
    Winding { winding: f64 },

    #[error("matrix is numerically singular at pivot {index} (|pivot| = {magnitude:e})")]
    SingularMatrix { index: usize, magnitude: f64 },

    #[error("Fourier transform of log b decays too slowly: {0}")]
    SlowDecay(String),

    #[error("phase unwrap failed between T = {from} and T = {to}")]
    Unwrap { from: f64, to: f64 },

    #[error("series does not converge: {0}")]
    NonConvergentSum(String),

    #[error("Wiener-Hopf factor value vanishes: {0}")]
    ZeroFactor(&'static str),

    #[error("not enough sweep rows for a fit ({rows} < 4)")]
    TooFewRows { rows: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
