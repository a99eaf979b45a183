use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative argument {0}; Young functions are defined on [0, inf)")]
    NegativeArgument(f64),

    #[error("{what} did not converge after {iterations} iterations (last estimate {last})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: f64,
    },

    #[error("conjugate is +inf beyond slope {slope}: the function grows only linearly")]
    UnboundedConjugate { slope: f64 },

    #[error("invalid Young function: {0}")]
    InvalidFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("constraint rectangles infeasible: min slack {min_slack} at s = {argmin_s}")]
    InfeasibleConstraints { min_slack: f64, argmin_s: f64 },

    #[error("rectangle family is not nested near action {action}")]
    NonMonotoneFamily { action: f64 },

    #[error("point with action {action} lies outside the domain disc of capacity {capacity}")]
    OutOfDomain { action: f64, capacity: f64 },

    #[error("stencil at {point:?} is too close to a seam of the boundary parameterization")]
    SeamProximity { point: [f64; 2] },

    #[error("containment violated: {what} = {value} exceeds bound {bound} at {witness:?}")]
    ContainmentViolation {
        what: &'static str,
        value: f64,
        bound: f64,
        witness: Vec<f64>,
    },
}
