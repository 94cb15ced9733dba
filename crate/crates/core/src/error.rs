use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// The target of a root solve is not bracketed by the function values
    /// at the interval ends.
    #[error("target {target} not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// The sample has zero standard deviation, so the t statistic is undefined.
    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),

    /// The requested significance level cannot be reached at this sample size.
    #[error("level {alpha} is infeasible for n = {n}: the smallest attainable level is 2^-{n} = {min_level}")]
    Infeasible {
        n: usize,
        alpha: f64,
        min_level: f64,
    },

    /// Exhaustive computation is not available at this size.
    #[error("exact computation supports n <= {max}, got n = {n}; use the lower bound instead")]
    Capability { n: usize, max: usize },

    /// An iterative method failed to converge.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A scale-mixture description is invalid.
    #[error("invalid mixture spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(func: &'static str, detail: impl Into<String>) -> Result<T> {
    Err(Error::Domain {
        func,
        detail: detail.into(),
    })
}
