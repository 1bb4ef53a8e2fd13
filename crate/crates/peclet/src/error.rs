use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no finite vanishing order at y = {location}: derivatives of u up to order 6 vanish")]
    NoFiniteOrder { location: f64 },

    #[error("profile `{0}` has no derivative evaluators")]
    NonSmooth(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("partition spacing delta = {delta} is below four grid cells (h = {h})")]
    DegenerateSpacing { delta: f64, h: f64 },

    #[error("constraint `{name}` violated, margin {margin:e}")]
    ConstraintViolated { name: String, margin: f64 },

    #[error("banded solve failed: pivot {pivot:e} at row {row}")]
    SolveFailure { row: usize, pivot: f64 },

    #[error("power iteration did not converge; value lies in [{lower}, {upper}]")]
    NoConvergence { lower: f64, upper: f64 },

    #[error("fit window [{lo:e}, {hi:e}] holds {found} samples, at least {needed} required")]
    WindowEmpty {
        lo: f64,
        hi: f64,
        found: usize,
        needed: usize,
    },

    #[error("all localized pieces of f vanish")]
    ZeroInput,

    #[error("certificate failed at t = {time}: {reason}")]
    CertificateFailed { time: f64, reason: String },

    #[error("unknown lemma `{0}`")]
    UnknownLemma(String),

    #[error("grid mismatch: expected {expected} samples, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("covariance tail not reached by T = {t_max}: |v(T)|^2/|v(0)|^2 = {ratio:e}")]
    TailNotReached { t_max: f64, ratio: f64 },

    #[error("domain truncation did not converge after {doublings} doublings (last change {last_change:e})")]
    TruncationNotConverged { doublings: usize, last_change: f64 },
}
