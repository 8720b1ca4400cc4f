//! Large deviations of strongly additive functions.
//!
//! The crate computes both sides of the correspondence between the
//! distribution of a strongly additive `g` on the integers and the law of
//! its values on the primes:
//!
//! - integer side: `mu(g; x)`, `B(g; x)^2` and the empirical tail
//!   `D_g(x; delta)` ([`additive`]);
//! - prime side: the measure `K_f(x; t)`, its moments and distances to a
//!   target step law ([`prime_side`]);
//! - the coefficient recurrences and series inversion ([`series`]);
//! - saddle-point parameters ([`saddle`]) and tail asymptotics ([`tails`]);
//! - Monte Carlo for the centered compound-Poisson law ([`levy`]);
//! - pipelines for both directions of the correspondence ([`converse`]).

pub mod additive;
pub mod converse;
pub mod error;
pub mod levy;
pub mod nnls;
pub mod prime_side;
pub mod series;
pub mod sieve;
pub mod saddle;
pub mod step;
pub mod summation;
pub mod tails;
pub mod tolerances;

pub use error::{Error, Result};
