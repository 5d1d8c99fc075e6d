//! Martingale-measure polytopes of finite multinomial markets.
//!
//! The set of martingale measures of a one-period market with `b` outcomes
//! is the intersection of the probability simplex with an affine space. This
//! crate enumerates the vertices of that polytope exactly and builds on them
//! to decide viability and completeness, bound derivative prices, complete
//! incomplete markets, analyse multi-period event trees, and study a
//! discretised birth-death price model.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod exactmath;
pub mod geometry;
pub mod market;
pub mod models;
pub mod multiperiod;

pub use error::{Error, Result};
