//! Buy-at-bulk spanners with per-pair distance budgets.
//!
//! Everything is generic over [`scalar::Scalar`]; [`Rational`] gives exact
//! arithmetic and `f64` a fast approximate mode.

pub mod cost;
pub mod error;
pub mod generate;
pub mod instance;
pub mod junction;
pub mod lpflow;
pub mod oracle;
pub mod rcsp;
pub mod rng;
pub mod scalar;
pub mod simplex;
pub mod solvers;

pub use error::{Error, Result};
pub use instance::{Demand, Edge, Instance, RouteSolution};
pub use rng::Seed;
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;
pub type ExactInstance = Instance<Rational>;
pub type FloatInstance = Instance<f64>;
pub type ExactSolution = RouteSolution<Rational>;
pub type FloatSolution = RouteSolution<f64>;

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
