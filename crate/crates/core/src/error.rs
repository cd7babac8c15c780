use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge for {what}: successive node doublings differ by {diff:e}")]
    QuadratureNonConvergence { what: String, diff: f64 },
    #[error("no finite leap: every Hermite coefficient of order >= 1 is below {tol:e}")]
    NoFiniteLeap { tol: f64 },
    #[error("constant target has no leap index")]
    ConstantTarget,
    #[error("{0} requires a polynomial link function")]
    NonPolynomialLink(&'static str),
    #[error("spike direction is zero: the target has no first-order Hermite component (leap index >= 2), so the conditional equivalence does not apply")]
    ZeroSpike,
    #[error("no closed form: {0}")]
    NoClosedForm(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
