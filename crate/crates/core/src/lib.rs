//! Bayesian estimation of a periodic Poisson intensity with a free-knot
//! B-spline prior, sampled by reversible-jump MCMC.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bspline;
pub mod data;
pub mod dump;
pub mod error;
pub mod math;
pub mod metrics;
pub mod model;
pub mod prior;
pub mod quadrature;
pub mod sampler;
pub mod simulate;
pub mod summary;

pub use error::{Error, Result};
