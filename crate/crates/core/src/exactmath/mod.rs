//! Exact rational scalars, dense matrices and linear-system solving.
//!
//! Every decision in this crate (strict inequalities, ranks, supports) is
//! taken on exact values; there is no floating-point path.

mod matrix;
mod rational;

pub use matrix::{rref, solve, RationalMatrix, Rref, SolutionSpace};
pub use rational::{
    dot, format_rational, format_vector, int, int_vector, is_probability_vector, parse_list,
    parse_rational, parse_vector, ratio, sum, Rational, RationalVector,
};
