//! Numerical library for calculus of fractional order `alpha` in `(0, 1]`
//! built on the weight `x^(alpha-1)`: the order-`alpha` derivative, weighted
//! integrals in one and two dimensions, a mean value theorem for the weighted
//! difference quotient, two covariance-style functionals with dual-route
//! identity checks, and inequality bounds in published, corrected, and
//! provably safe variants.
//!
//! The crate is organized bottom-up:
//!
//! - [`expr`]: a small expression language with exact derivatives via dual
//!   numbers, used to describe test functions everywhere else.
//! - [`corpus`]: seeded random generation of screened expression functions.
//! - [`quad`]: adaptive quadrature over fallible integrands.
//! - [`calculus`]: the order-`alpha` derivative and weighted integrals.
//! - [`pompeiu`]: the mean value theorem and a witness-point search.
//! - [`gruss`]: the functionals, identities, and bounds.
//! - [`harness`]: configuration-driven sweeps, randomized searches, and
//!   report emission for the command line front end.

pub mod calculus;
pub mod corpus;
pub mod expr;
pub mod gruss;
pub mod harness;
pub mod pompeiu;
pub mod quad;

#[cfg(doctest)]
mod book_doctests;

pub use calculus::AlphaInterval;
pub use expr::{parse_expr, ExpressionFn};
pub use quad::{QuadResult, QuadratureSpec};

/// Version string embedded in reports so archived output names the code
/// that produced it.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Unified error type of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on a numeric argument failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Expression source text failed to parse.
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    /// An expression hit a domain violation or overflow at some point.
    #[error(transparent)]
    Eval(#[from] expr::EvalError),
    /// A quadrature result was demanded as a plain number but did not
    /// converge; callers that can represent partial results inspect
    /// [`QuadResult::converged`] instead of hitting this.
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),
    /// Random function generation ran out of attempts.
    #[error("function generation exhausted {attempts} attempts for seed {seed}")]
    CorpusExhausted { seed: u64, attempts: u32 },
    /// A sweep or fuzz configuration failed validation; `field` names the
    /// offending entry.
    #[error("invalid config: {field}: {message}")]
    InvalidConfig { field: String, message: String },
    /// Report serialization or deserialization failed.
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
