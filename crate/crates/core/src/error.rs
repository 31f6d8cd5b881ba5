use crate::integrate::LiftStatus;
use crate::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies on the critical leaf (xi = 0)")]
    CriticalLeaf,

    #[error("tangency denominator {modulus:e} below tolerance at zeta = {zeta}")]
    SingularDenominator { zeta: Complex64, modulus: f64 },

    #[error("leaf lift stopped with status {status:?} at zeta = {zeta}")]
    Lift { status: LiftStatus, zeta: Complex64 },

    #[error("u = {0} lies outside the local chart |u| < 1")]
    OutsideChart(Complex64),

    #[error("return value w = {w} left the local chart (|w| >= 1)")]
    BranchOverflow { w: Complex64, xi_end: Complex64 },

    #[error("contour passes within {min_modulus:e} of a zero")]
    ContourThroughZero { min_modulus: f64 },

    #[error("leading term e^(2 pi m eps) - 1 vanishes; guesses collapse to 0")]
    DegenerateLeadingTerm,

    #[error(
        "Newton iteration did not converge after {iterations} iterations (last |F| = {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Newton iteration converged to the trivial fixed point u = 0")]
    ConvergedToZero,

    #[error("orbit has a proper sub-period (separation {separation:e})")]
    PeriodTooLow { separation: f64 },

    #[error(
        "no certified orbit found ({newton_successes} Newton successes, winding count {winding:?})"
    )]
    EmptyResult {
        winding: Option<i64>,
        newton_successes: usize,
        failures: Vec<String>,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
