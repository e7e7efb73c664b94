//! Moment, Orlicz-norm and tail bounds for weighted sums of independent
//! sub-Weibull(α, L) random variables, together with exact samplers for the
//! extremal laws and Monte Carlo checks of the bounds' tightness.

// NaN inputs must fail these checks, so `!(x > 0.0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod covapp;
pub mod error;
pub mod model;
pub mod norms;
pub mod orlicz;
pub mod quad;
pub mod root;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use model::{beta_of, lbar, BetaExponent, ProblemConfig, WeightedSumProblem};
