use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("|G({x})| = {g} > 0 where K({x}) = 0: K does not dominate G")]
    DominationFailure { x: f64, g: f64 },

    #[error("{what} did not converge on the truncation ladder (last radius {radius})")]
    NonIntegrable { what: String, radius: f64 },

    #[error("even kernel has non-positive discrete mass {mass}")]
    DegenerateKernel { mass: f64 },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("non-finite value at node {index} (t = {t})")]
    NonFinite { index: usize, t: f64 },

    #[error("mass drift at t = {t}: mass {mass} vs initial {mass0}")]
    MassDrift { t: f64, mass: f64, mass0: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("requested {what} = {value} outside available range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no admissible normalization constant for m = {m}, A = {a}, B = {b}")]
    NoAdmissibleConstant { m: f64, a: f64, b: f64 },

    #[error("bisection failed: {0}")]
    BisectionFailure(String),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("function takes negative value {min} (nonnegative input required)")]
    NegativityViolation { min: f64 },

    #[error("insufficient data: {found} points in window, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },

    #[error("run mass {run} differs from profile mass {profile}")]
    MassMismatch { run: f64, profile: f64 },

    #[error("radius {radius}: 2R must be smaller than the half-period {half_length}")]
    RangeError { radius: f64, half_length: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
