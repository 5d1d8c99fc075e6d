//! Verdicts and pricing on top of the generator set.
//!
//! With generators `p^1..p^k`, the martingale measures are the convex
//! combinations `Σ α_j p^j`, and such a combination is equivalent to the
//! physical measure exactly when every outcome `i` has some `j` with
//! `α_j > 0` and `p^j_i > 0`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactmath::{dot, sum, Rational, RationalMatrix, RationalVector};
use crate::geometry::{enumerate_generators, EnumerationOptions, GeneratorSet};
use crate::market::{augmented_matrix, build_system, OnePeriodMarket};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmmCharacterization {
    pub generators: GeneratorSet,
    /// For each outcome `i`, the generators `j` with `p^j_i > 0`.
    pub outcome_support: Vec<Vec<usize>>,
    pub emm_exists: bool,
}

impl EmmCharacterization {
    pub fn from_generators(generators: GeneratorSet, outcomes: usize) -> Self {
        let outcome_support: Vec<Vec<usize>> = (0..outcomes)
            .map(|i| {
                generators
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g[i].is_positive())
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let emm_exists = outcome_support.iter().all(|s| !s.is_empty());
        Self {
            generators,
            outcome_support,
            emm_exists,
        }
    }

    /// Outcomes no martingale measure can charge.
    pub fn uncovered_outcomes(&self) -> Vec<usize> {
        self.outcome_support
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks that `weights` are convex weights over the generators whose
    /// combination is an equivalent measure.
    pub fn check_weights(&self, weights: &[Rational]) -> Result<()> {
        if weights.len() != self.generators.len() {
            return Err(Error::InvalidWeights(format!(
                "expected {} weights, got {}",
                self.generators.len(),
                weights.len()
            )));
        }
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::InvalidWeights("weights must be nonnegative".into()));
        }
        if !sum(weights).is_one() {
            return Err(Error::InvalidWeights("weights must sum to 1".into()));
        }
        for (i, support) in self.outcome_support.iter().enumerate() {
            if !support.iter().any(|&j| weights[j].is_positive()) {
                return Err(Error::InvalidWeights(format!(
                    "outcome {} gets zero probability: {}",
                    i + 1,
                    self.describe_condition(i)
                )));
            }
        }
        Ok(())
    }

    pub fn is_equivalent_weights(&self, weights: &[Rational]) -> bool {
        self.check_weights(weights).is_ok()
    }

    /// Human-readable positivity condition for outcome `i`, e.g.
    /// `α1 > 0 or α3 > 0` (1-based labels).
    pub fn describe_condition(&self, outcome: usize) -> String {
        let support = &self.outcome_support[outcome];
        if support.is_empty() {
            return "unsatisfiable".into();
        }
        support
            .iter()
            .map(|j| format!("α{} > 0", j + 1))
            .collect::<Vec<_>>()
            .join(" or ")
    }
}

pub fn characterize(mkt: &OnePeriodMarket) -> Result<EmmCharacterization> {
    characterize_with(mkt, &EnumerationOptions::default())
}

pub fn characterize_with(
    mkt: &OnePeriodMarket,
    opts: &EnumerationOptions,
) -> Result<EmmCharacterization> {
    let generators = enumerate_generators(&build_system(mkt), opts)?;
    Ok(EmmCharacterization::from_generators(
        generators,
        mkt.outcomes(),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Viability {
    pub arbitrage_free: bool,
    /// Uniform average of the generators. It is an equivalent martingale
    /// measure exactly when the market is arbitrage-free.
    pub witness: Option<RationalVector>,
}

pub fn is_arbitrage_free(mkt: &OnePeriodMarket) -> Result<Viability> {
    is_arbitrage_free_with(mkt, &EnumerationOptions::default())
}

pub fn is_arbitrage_free_with(
    mkt: &OnePeriodMarket,
    opts: &EnumerationOptions,
) -> Result<Viability> {
    Ok(viability_of(&characterize_with(mkt, opts)?))
}

pub fn viability_of(emm: &EmmCharacterization) -> Viability {
    Viability {
        arbitrage_free: emm.emm_exists,
        witness: emm.generators.barycenter(),
    }
}

/// Rank of the payoff matrix with the ones row on top.
pub fn augmented_rank(mkt: &OnePeriodMarket) -> usize {
    augmented_matrix(&build_system(mkt)).rank()
}

pub fn is_complete(mkt: &OnePeriodMarket) -> Result<bool> {
    is_complete_with(mkt, &EnumerationOptions::default())
}

pub fn is_complete_with(mkt: &OnePeriodMarket, opts: &EnumerationOptions) -> Result<bool> {
    Ok(completeness_of(mkt, &characterize_with(mkt, opts)?))
}

pub fn completeness_of(mkt: &OnePeriodMarket, emm: &EmmCharacterization) -> bool {
    emm.emm_exists && augmented_rank(mkt) == mkt.outcomes()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureCheck {
    pub is_martingale: bool,
    pub is_equivalent: bool,
}

pub fn verify_measure(mkt: &OnePeriodMarket, q: &[Rational]) -> Result<MeasureCheck> {
    if q.len() != mkt.outcomes() {
        return Err(Error::DimensionMismatch {
            context: "measure length",
            expected: mkt.outcomes(),
            found: q.len(),
        });
    }
    let is_martingale = build_system(mkt).is_solution(q);
    Ok(MeasureCheck {
        is_martingale,
        is_equivalent: is_martingale && q.iter().all(Signed::is_positive),
    })
}

/// Range of arbitrage-free prices for a payoff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceBounds {
    pub low: Rational,
    pub high: Rational,
    pub low_attained_by_emm: bool,
    pub high_attained_by_emm: bool,
}

impl PriceBounds {
    /// `low == high`: the payoff has a single arbitrage-free price.
    pub fn is_unique(&self) -> bool {
        self.low == self.high
    }

    /// Whether `price` can be quoted without creating arbitrage.
    pub fn admits(&self, price: &Rational) -> bool {
        let above = price > &self.low || (price == &self.low && self.low_attained_by_emm);
        let below = price < &self.high || (price == &self.high && self.high_attained_by_emm);
        above && below
    }
}

/// Discounted price `⟨payoff, p^j⟩ / (1 + r)` under each generator.
pub fn generator_prices(
    mkt: &OnePeriodMarket,
    generators: &GeneratorSet,
    payoff: &[Rational],
) -> Result<RationalVector> {
    if payoff.len() != mkt.outcomes() {
        return Err(Error::DimensionMismatch {
            context: "payoff length",
            expected: mkt.outcomes(),
            found: payoff.len(),
        });
    }
    let growth = mkt.growth();
    Ok(generators
        .iter()
        .map(|g| dot(payoff, g) / &growth)
        .collect())
}

pub fn price_bounds(mkt: &OnePeriodMarket, payoff: &[Rational]) -> Result<PriceBounds> {
    price_bounds_with(mkt, payoff, &EnumerationOptions::default())
}

pub fn price_bounds_with(
    mkt: &OnePeriodMarket,
    payoff: &[Rational],
    opts: &EnumerationOptions,
) -> Result<PriceBounds> {
    let emm = characterize_with(mkt, opts)?;
    price_bounds_from(mkt, &emm, payoff)
}

pub fn price_bounds_from(
    mkt: &OnePeriodMarket,
    emm: &EmmCharacterization,
    payoff: &[Rational],
) -> Result<PriceBounds> {
    if !emm.emm_exists {
        return Err(Error::NotViable);
    }
    let prices = generator_prices(mkt, &emm.generators, payoff)?;
    let low = prices
        .iter()
        .min()
        .expect("viable markets have generators")
        .clone();
    let high = prices
        .iter()
        .max()
        .expect("viable markets have generators")
        .clone();

    // An endpoint is reached by an equivalent measure iff the generators
    // attaining it jointly charge every outcome.
    let covers_all = |target: &Rational| {
        let mut covered = vec![false; mkt.outcomes()];
        for (g, support) in emm.generators.supports().iter().enumerate() {
            if &prices[g] == target {
                for &i in support.indices() {
                    covered[i] = true;
                }
            }
        }
        covered.into_iter().all(|c| c)
    };

    Ok(PriceBounds {
        low_attained_by_emm: covers_all(&low),
        high_attained_by_emm: covers_all(&high),
        low,
        high,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionPlan {
    /// New payoff rows, one per added asset.
    pub added_payoffs: RationalMatrix,
    /// Row `a`, column `j`: discounted price of added asset `a` under generator `j`.
    pub price_map: RationalMatrix,
    /// Weight conditions: outcome `i` needs some `α_j > 0` with `j` in entry `i`.
    pub alpha_constraints: Vec<Vec<usize>>,
    /// Spot prices of the added assets for the weights the plan was built with.
    pub prices: Option<RationalVector>,
    pub weights: Option<RationalVector>,
}

impl CompletionPlan {
    pub fn is_empty(&self) -> bool {
        self.added_payoffs.rows() == 0
    }

    /// Spot prices `price_map · α` of the added assets.
    pub fn prices_for(&self, weights: &[Rational]) -> Result<RationalVector> {
        self.price_map.mul_vector(weights)
    }

    /// The market extended with the added assets. Uses `weights` if given,
    /// then the plan's own weights, then uniform weights.
    pub fn extend(
        &self,
        mkt: &OnePeriodMarket,
        weights: Option<&[Rational]>,
    ) -> Result<OnePeriodMarket> {
        let k = self.price_map.cols();
        let uniform;
        let weights = match (weights, &self.weights) {
            (Some(w), _) => w,
            (None, Some(w)) => w.as_slice(),
            (None, None) => {
                uniform = uniform_weights(k);
                uniform.as_slice()
            }
        };
        let prices = self.prices_for(weights)?;
        let mut out = mkt.clone();
        for (row, price) in self.added_payoffs.row_iter().zip(prices) {
            out = out.with_asset(row, price)?;
        }
        Ok(out)
    }
}

pub fn uniform_weights(k: usize) -> RationalVector {
    if k == 0 {
        return Vec::new();
    }
    let w = Rational::new(1.into(), (k as i64).into());
    vec![w; k]
}

/// Completes a viable market with unit payoffs `e_i`, smallest index first,
/// until the augmented matrix has rank `b`.
pub fn complete_market(
    mkt: &OnePeriodMarket,
    weights: Option<&[Rational]>,
) -> Result<CompletionPlan> {
    complete_market_with(mkt, weights, None, &EnumerationOptions::default())
}

/// As [`complete_market`], but `candidate_rows` (when given) are tried in
/// order before the unit payoffs; rows that do not raise the rank are skipped.
pub fn complete_market_with(
    mkt: &OnePeriodMarket,
    weights: Option<&[Rational]>,
    candidate_rows: Option<&RationalMatrix>,
    opts: &EnumerationOptions,
) -> Result<CompletionPlan> {
    let emm = characterize_with(mkt, opts)?;
    plan_completion(mkt, &emm, weights, candidate_rows)
}

pub fn plan_completion(
    mkt: &OnePeriodMarket,
    emm: &EmmCharacterization,
    weights: Option<&[Rational]>,
    candidate_rows: Option<&RationalMatrix>,
) -> Result<CompletionPlan> {
    if !emm.emm_exists {
        return Err(Error::NotViable);
    }
    if let Some(w) = weights {
        emm.check_weights(w)?;
    }
    let b = mkt.outcomes();
    if let Some(rows) = candidate_rows {
        if rows.cols() != b {
            return Err(Error::DimensionMismatch {
                context: "completion row length",
                expected: b,
                found: rows.cols(),
            });
        }
    }

    let unit = |i: usize| -> RationalVector {
        let mut e = vec![Rational::zero(); b];
        e[i] = Rational::one();
        e
    };
    let candidates = candidate_rows
        .map(RationalMatrix::to_rows)
        .unwrap_or_default()
        .into_iter()
        .chain((0..b).map(unit));

    let mut span = augmented_matrix(&build_system(mkt));
    let mut rank = span.rank();
    let mut added = RationalMatrix::zeros(0, b);
    for row in candidates {
        if rank == b {
            break;
        }
        let grown = span.with_row(&row)?;
        let grown_rank = grown.rank();
        if grown_rank > rank {
            span = grown;
            rank = grown_rank;
            added = added.with_row(&row)?;
        }
    }

    let k = emm.generators.len();
    let price_rows = added
        .row_iter()
        .map(|row| generator_prices(mkt, &emm.generators, row))
        .collect::<Result<Vec<_>>>()?;
    let price_map = RationalMatrix::from_rows(k, price_rows)?;
    let prices = weights.map(|w| price_map.mul_vector(w)).transpose()?;

    Ok(CompletionPlan {
        added_payoffs: added,
        price_map,
        alpha_constraints: emm.outcome_support.clone(),
        prices,
        weights: weights.map(<[Rational]>::to_vec),
    })
}
