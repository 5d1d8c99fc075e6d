//! Structured market families: multiplicative factor models and the
//! birth-death lattice built on top of them.

mod factor;
mod kkl;

pub use factor::{
    factor_completeness, factor_viability, trinomial_completion_condition, trinomial_emms,
    trinomial_price_interval, FactorModel, TrinomialCase, TrinomialEmmFamily,
};
pub use kkl::{
    kkl_backward_induction, kkl_backward_induction_with, kkl_build, kkl_completion_check,
    kkl_perturb_terminal, kkl_viability, node_emm, node_id, put_payoff, with_derivative,
    DerivativeSurface, KklLattice, KklParams, Perturbation, PERTURBATION_ATTEMPTS,
    PERTURBATION_DENOMINATOR,
};
