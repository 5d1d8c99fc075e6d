//! Discrete-time birth-death price model on a recombining integer lattice.
//!
//! The price is an integer `k`. Over a step of length `Δt = T/n` it moves to
//! `k - 1`, `k`, `k + 1` with physical probabilities `η k Δt`,
//! `1 - (λ + η) k Δt`, `λ k Δt`; the state `0` is absorbing. Each nonzero
//! state is a three-factor market with factors `(1 - 1/k, 1, 1 + 1/k)` and
//! per-step rate `r Δt`, so the generic machinery applies node by node.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::factor::trinomial_family;
use crate::error::{Error, Result};
use crate::exactmath::{format_rational, Rational, RationalVector};
use crate::multiperiod::{EventTree, NodeSpec, TreeMarket};

/// Resolution of the perturbation grid: offsets are multiples of `1/2^16`.
pub const PERTURBATION_DENOMINATOR: u64 = 1 << 16;
pub const PERTURBATION_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KklParams {
    pub s0: u64,
    pub lambda: Rational,
    pub eta: Rational,
    pub rate: Rational,
    pub horizon: Rational,
    pub steps: usize,
}

impl KklParams {
    pub fn dt(&self) -> Rational {
        &self.horizon / Rational::from_integer(self.steps.into())
    }

    /// Largest price reachable before the last step, `s0 + n - 1`.
    pub fn max_branching_state(&self) -> u64 {
        self.s0 + self.steps as u64 - 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if self.s0 == 0 {
            return bad("initial price s0 must be a positive integer");
        }
        if self.steps == 0 {
            return bad("number of steps must be positive");
        }
        if !self.lambda.is_positive() || !self.eta.is_positive() {
            return bad("lambda and eta must be positive");
        }
        if !self.horizon.is_positive() {
            return bad("horizon must be positive");
        }
        // keeps every transition probability strictly inside (0, 1)
        let load = (&self.lambda + &self.eta)
            * Rational::from_integer(self.max_branching_state().into())
            * self.dt();
        if load >= Rational::one() {
            return Err(Error::InvalidParams(format!(
                "(lambda + eta)(s0 + n - 1)T/n = {} must be below 1",
                format_rational(&load)
            )));
        }
        Ok(())
    }

    fn step_growth(&self) -> Rational {
        Rational::one() + &self.rate * self.dt()
    }
}

pub fn node_id(t: usize, k: u64) -> String {
    format!("t{t}k{k}")
}

/// The lattice as a tree market (one asset priced `k` at state `k`) plus the
/// physical transition law.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KklLattice {
    pub params: KklParams,
    pub market: TreeMarket,
    /// Reachable states per step, ascending.
    pub layers: Vec<Vec<u64>>,
    /// Transition probabilities from `(t, k)` in child order (down, stay, up);
    /// a single `1` at the absorbing state.
    pub physical: BTreeMap<(usize, u64), RationalVector>,
}

impl KklLattice {
    pub fn steps(&self) -> usize {
        self.params.steps
    }

    pub fn terminal_states(&self) -> &[u64] {
        &self.layers[self.steps()]
    }

    pub fn contains(&self, t: usize, k: u64) -> bool {
        self.layers
            .get(t)
            .is_some_and(|l| l.binary_search(&k).is_ok())
    }
}

fn successors(k: u64) -> Vec<u64> {
    if k == 0 {
        vec![0]
    } else {
        vec![k - 1, k, k + 1]
    }
}

pub fn kkl_build(params: &KklParams) -> Result<KklLattice> {
    params.validate()?;
    let n = params.steps;
    let dt = params.dt();

    let mut layers = vec![vec![params.s0]];
    for t in 0..n {
        let mut next: Vec<u64> = layers[t].iter().flat_map(|&k| successors(k)).collect();
        next.sort_unstable();
        next.dedup();
        layers.push(next);
    }

    let mut specs = Vec::new();
    let mut prices = Vec::new();
    let mut physical = BTreeMap::new();
    for (t, layer) in layers.iter().enumerate() {
        for &k in layer {
            let children = if t < n {
                successors(k)
                    .into_iter()
                    .map(|c| node_id(t + 1, c))
                    .collect()
            } else {
                Vec::new()
            };
            specs.push(NodeSpec {
                id: node_id(t, k),
                time: t,
                children,
            });
            prices.push(vec![Rational::from_integer(k.into())]);

            if t < n {
                let law = if k == 0 {
                    vec![Rational::one()]
                } else {
                    let kd = Rational::from_integer(k.into()) * &dt;
                    let down = &params.eta * &kd;
                    let up = &params.lambda * &kd;
                    let stay = Rational::one() - &down - &up;
                    vec![down, stay, up]
                };
                if law.iter().any(|p| !p.is_positive() || p > &Rational::one()) {
                    return Err(Error::InvalidParams(format!(
                        "transition probabilities at state {k} leave (0, 1]"
                    )));
                }
                physical.insert((t, k), law);
            }
        }
    }

    let rates = vec![&params.rate * &dt; n];
    let market = TreeMarket::new(EventTree::new(specs)?, 1, prices, rates)?;
    Ok(KklLattice {
        params: params.clone(),
        market,
        layers,
        physical,
    })
}

/// `T |r| (s0 + n - 1) < n`: every node satisfies `1 - 1/k < 1 + rΔt < 1 + 1/k`.
pub fn kkl_viability(params: &KklParams) -> bool {
    let lhs = &params.horizon
        * params.rate.abs()
        * Rational::from_integer(params.max_branching_state().into());
    lhs < Rational::from_integer(params.steps.into())
}

/// Martingale measure at state `k ≥ 1` for mixing parameter `p`, in child order.
pub fn node_emm(k: u64, growth: &Rational, p: &Rational) -> Result<RationalVector> {
    let inv = Rational::new(1.into(), k.into());
    let f = [
        Rational::one() - &inv,
        Rational::one(),
        Rational::one() + &inv,
    ];
    trinomial_family([&f[0], &f[1], &f[2]], growth)?.measure(p)
}

/// Values `F(t, k)` on the reachable lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivativeSurface {
    steps: usize,
    values: BTreeMap<(usize, u64), Rational>,
}

impl DerivativeSurface {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, t: usize, k: u64) -> Option<&Rational> {
        self.values.get(&(t, k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64, &Rational)> + '_ {
        self.values.iter().map(|(&(t, k), v)| (t, k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with header `t,k,value`, rational strings, ordered by `t` then `k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,k,value\n");
        for (t, k, v) in self.iter() {
            writeln!(out, "{t},{k},{}", format_rational(v)).expect("writing to a String");
        }
        out
    }
}

/// Put with strike 1 on the integer price: pays 1 at state 0, else 0.
pub fn put_payoff(lattice: &KklLattice) -> BTreeMap<u64, Rational> {
    lattice
        .terminal_states()
        .iter()
        .map(|&k| {
            (
                k,
                if k == 0 {
                    Rational::one()
                } else {
                    Rational::zero()
                },
            )
        })
        .collect()
}

pub fn kkl_backward_induction(
    lattice: &KklLattice,
    terminal: &BTreeMap<u64, Rational>,
    emm_p: &Rational,
) -> Result<DerivativeSurface> {
    kkl_backward_induction_with(lattice, terminal, |_, _| emm_p.clone())
}

/// Backward induction where `choose(t, k)` picks the mixing parameter of the
/// node measure at each nonzero state.
pub fn kkl_backward_induction_with<F>(
    lattice: &KklLattice,
    terminal: &BTreeMap<u64, Rational>,
    mut choose: F,
) -> Result<DerivativeSurface>
where
    F: FnMut(usize, u64) -> Rational,
{
    if !kkl_viability(&lattice.params) {
        return Err(Error::NotViable);
    }
    let n = lattice.steps();
    let growth = lattice.params.step_growth();
    let mut values = BTreeMap::new();

    for &k in lattice.terminal_states() {
        let v = terminal
            .get(&k)
            .ok_or_else(|| Error::InvalidParams(format!("missing terminal value for state {k}")))?;
        values.insert((n, k), v.clone());
    }

    for t in (0..n).rev() {
        for &k in &lattice.layers[t] {
            let next = |j: u64| {
                values
                    .get(&(t + 1, j))
                    .cloned()
                    .expect("successor is on the lattice")
            };
            let expectation = if k == 0 {
                next(0)
            } else {
                let q = node_emm(k, &growth, &choose(t, k))?;
                q.iter().zip(successors(k)).map(|(p, j)| p * next(j)).sum()
            };
            values.insert((t, k), expectation / &growth);
        }
    }

    Ok(DerivativeSurface { steps: n, values })
}

/// Nodes `(t, k)`, `t < n`, `k ≥ 1`, where the derivative's next-step values
/// have zero second difference, so stock and derivative do not span that
/// node's three outcomes.
pub fn kkl_completion_check(surface: &DerivativeSurface) -> Vec<(usize, u64)> {
    surface
        .values
        .keys()
        .filter(|&&(t, k)| t < surface.steps && k >= 1)
        .filter(|&&(t, k)| {
            let at = |j: u64| surface.get(t + 1, j).expect("successor is on the lattice");
            let second = at(k - 1) - at(k) * Rational::from_integer(2.into()) + at(k + 1);
            second.is_zero()
        })
        .copied()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Perturbation {
    pub terminal: BTreeMap<u64, Rational>,
    pub surface: DerivativeSurface,
    pub attempts: usize,
}

impl Perturbation {
    /// Sup-norm distance from `reference` over the terminal states.
    pub fn deviation_from(&self, reference: &BTreeMap<u64, Rational>) -> Rational {
        self.terminal
            .iter()
            .map(|(k, v)| (v - &reference[k]).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Terminal values within `epsilon` of the put payoff whose induced surface
/// passes [`kkl_completion_check`]. Offsets are `epsilon · u_k` with `u_k`
/// drawn from `{1, …, D-1}/D`, `D = 2^16`; all offsets are redrawn on
/// failure, up to [`PERTURBATION_ATTEMPTS`] times.
pub fn kkl_perturb_terminal(
    lattice: &KklLattice,
    emm_p: &Rational,
    epsilon: &Rational,
    seed: u64,
) -> Result<Perturbation> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParams("epsilon must be positive".into()));
    }
    let put = put_payoff(lattice);
    let denom = Rational::from_integer(PERTURBATION_DENOMINATOR.into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for attempt in 1..=PERTURBATION_ATTEMPTS {
        let terminal: BTreeMap<u64, Rational> = put
            .iter()
            .map(|(&k, v)| {
                let u = Rational::from_integer(rng.gen_range(1..PERTURBATION_DENOMINATOR).into())
                    / &denom;
                (k, v + epsilon * u)
            })
            .collect();
        let surface = kkl_backward_induction(lattice, &terminal, emm_p)?;
        if kkl_completion_check(&surface).is_empty() {
            return Ok(Perturbation {
                terminal,
                surface,
                attempts: attempt,
            });
        }
    }
    Err(Error::RetryLimit {
        attempts: PERTURBATION_ATTEMPTS,
    })
}

/// The lattice market with the derivative added as a second asset.
pub fn with_derivative(lattice: &KklLattice, surface: &DerivativeSurface) -> Result<TreeMarket> {
    let tm = &lattice.market;
    let tree = tm.tree().clone();
    let mut prices = Vec::with_capacity(tree.len());
    for node in 0..tree.len() {
        let t = tree.time(node);
        let k = tm.prices_at(node)[0].to_integer().try_into().map_err(|_| {
            Error::InvalidParams("lattice state is not a nonnegative integer".into())
        })?;
        let f = surface
            .get(t, k)
            .ok_or_else(|| Error::InvalidParams(format!("surface has no value at ({t}, {k})")))?;
        prices.push(vec![tm.prices_at(node)[0].clone(), f.clone()]);
    }
    TreeMarket::new(tree, 2, prices, tm.rates().to_vec())
}
