//! Wasserstein tail quantiles for empirical measures on the unit interval and
//! square: exact transport distances, Brownian-bridge limit simulation,
//! confidence regions and Bayesian optimization over the simplex.

pub mod bridge;
pub mod confidence;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod normal;
pub mod optimizer;
pub mod quantiles;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
