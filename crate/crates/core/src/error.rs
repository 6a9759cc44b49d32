//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet context mismatch: ({0}, order {1}) vs ({2}, order {3})")]
    ContextMismatch(usize, usize, usize, usize),
    #[error("variable index {index} out of range for {nvars} jet variables")]
    VariableOutOfRange { index: usize, nvars: usize },
    #[error("derivative order {requested} exceeds jet order {max}")]
    OrderExceeded { requested: usize, max: usize },
    #[error("multi-index has {got} entries, expected {expected}")]
    MultiIndexLength { got: usize, expected: usize },
    #[error("division by a value of zero")]
    DivisionByZero,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },

    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("time variable 't' not allowed here (offset {offset})")]
    TimeNotAllowed { offset: usize },
    #[error("exponent must be a numeric literal (offset {offset})")]
    NonConstantExponent { offset: usize },
    #[error("expression needs {needed} variables, environment has {given}")]
    Environment { needed: usize, given: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("time {t} outside the curve's time window [{lo}, {hi}]")]
    OutsideTimeWindow { t: f64, lo: f64, hi: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular Jacobian (|det| = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("curve is not the identity at t = 0 (deviation {deviation:e})")]
    NotThroughIdentity { deviation: f64 },

    #[error("flow left the domain at t = {t}")]
    FlowLeftDomain { t: f64 },
    #[error("flow exceeded the step limit of {0}")]
    StepLimit(usize),

    #[error("order precondition violated: derivative of order {order} has size {size:e} > {eps:e}")]
    OrderPrecondition { order: usize, size: f64, eps: f64 },
    #[error("no non-vanishing derivative up to order {0}")]
    NoNonVanishingDerivative(usize),

    #[error("configuration error in scenario '{scenario}': {msg}")]
    Config { scenario: String, msg: String },
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
