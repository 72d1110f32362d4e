use thiserror::Error;

/// Errors shared across the library.
#[derive(Error, Debug)]
pub enum Error {
    /// A point lies on or outside the boundary of a constraint set.
    #[error("point is not strictly interior: {0}")]
    NotInterior(String),

    /// A matrix expected to be positive definite failed to factorize.
    #[error("factorization failed: {0}")]
    Factorization(String),

    /// Vector/matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Matrix shape violates a precondition (e.g. m < d for the Vaidya metric).
    #[error("shape error: {0}")]
    Shape(String),

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    Convergence { iters: usize, residual: f64 },

    /// A metric descriptor is missing the parameter required by a combinator.
    #[error("missing parameter: {0}")]
    MissingParameter(String),

    /// Scaling factors below 1 do not preserve the certified properties.
    #[error("invalid scale {0}: scaling must be >= 1")]
    InvalidScale(f64),

    /// A composite metric is singular at an interior point, which signals a
    /// coverage gap (the feasible set contains a straight line).
    #[error("composite metric is singular at an interior point: {0}")]
    SingularMetric(String),

    /// Constraint set has empty interior.
    #[error("barrier domain has empty interior: {0}")]
    InfeasibleBarrier(String),

    /// A potential kind that the epigraph reduction does not support.
    #[error("unsupported potential term: {0}")]
    UnsupportedTerm(String),

    /// No strictly feasible starting point available or constructible.
    #[error("need a strictly feasible point: {0}")]
    NeedFeasiblePoint(String),

    /// Rejection sampling stalled.
    #[error("sampling failed: {0}")]
    Sampling(String),

    /// The rejection oracle cannot produce samples at a workable rate.
    #[error("oracle infeasible: {0}")]
    OracleInfeasible(String),

    /// Not enough data for a statistical comparison.
    #[error("statistics error: {0}")]
    Statistics(String),
}

pub type Result<T> = std::result::Result<T, Error>;
