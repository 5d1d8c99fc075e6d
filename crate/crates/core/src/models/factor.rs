use num_traits::{One, Signed, Zero};

use crate::analysis::PriceBounds;
use crate::error::{Error, Result};
use crate::exactmath::{Rational, RationalMatrix, RationalVector};
use crate::market::OnePeriodMarket;

/// Single asset whose price is multiplied by one of `0 < f_1 < … < f_b`
/// over one period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorModel {
    factors: RationalVector,
    rate: Rational,
    spot: Rational,
}

impl FactorModel {
    pub fn new(factors: RationalVector, rate: Rational, spot: Rational) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidParams(
                "at least one factor is required".into(),
            ));
        };
        if !first.is_positive() {
            return Err(Error::InvalidParams("factors must be positive".into()));
        }
        if factors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "factors must be strictly increasing".into(),
            ));
        }
        if spot.is_zero() {
            return Err(Error::InvalidParams("spot price must be nonzero".into()));
        }
        if (Rational::one() + &rate).is_zero() {
            return Err(Error::InvalidParams("1 + r must be nonzero".into()));
        }
        Ok(Self {
            factors,
            rate,
            spot,
        })
    }

    pub fn factors(&self) -> &[Rational] {
        &self.factors
    }

    pub fn rate(&self) -> &Rational {
        &self.rate
    }

    pub fn spot(&self) -> &Rational {
        &self.spot
    }

    pub fn outcomes(&self) -> usize {
        self.factors.len()
    }

    pub fn growth(&self) -> Rational {
        Rational::one() + &self.rate
    }

    /// The equivalent one-period market with payoffs `f_h · S`.
    pub fn to_market(&self) -> OnePeriodMarket {
        let row = self.factors.iter().map(|f| f * &self.spot).collect();
        OnePeriodMarket::new(
            self.rate.clone(),
            vec![self.spot.clone()],
            RationalMatrix::from_rows(self.outcomes(), vec![row]).expect("one row of width b"),
            None,
        )
        .expect("validated factor model")
    }
}

/// `1 + r` lies in the open convex hull of the factors: `f_1 < 1 + r < f_b`,
/// or `1 + r = f_1` when there is a single factor.
pub fn factor_viability(fm: &FactorModel) -> bool {
    let growth = fm.growth();
    let first = &fm.factors[0];
    let last = &fm.factors[fm.outcomes() - 1];
    if fm.outcomes() == 1 {
        return &growth == first;
    }
    first < &growth && &growth < last
}

/// Only one- and two-factor models can be complete.
pub fn factor_completeness(fm: &FactorModel) -> bool {
    factor_viability(fm) && fm.outcomes() <= 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrinomialCase {
    /// `f_2 = 1 + r`
    F2Equal,
    /// `f_2 < 1 + r`
    F2Below,
    /// `f_2 > 1 + r`
    F2Above,
}

/// Martingale measures of a viable three-factor model: the segment between
/// two generators, parametrised by `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrinomialEmmFamily {
    pub case: TrinomialCase,
    /// The generator on the edge `{1, 3}`, then the case-dependent one.
    pub endpoints: [RationalVector; 2],
}

impl TrinomialEmmFamily {
    /// `p · endpoints[0] + (1 − p) · endpoints[1]`; equivalent for `0 < p < 1`.
    pub fn measure(&self, p: &Rational) -> Result<RationalVector> {
        if !p.is_positive() || p >= &Rational::one() {
            return Err(Error::InvalidParams(format!(
                "mixing parameter {p} must lie in (0, 1)"
            )));
        }
        let q = Rational::one() - p;
        Ok(self.endpoints[0]
            .iter()
            .zip(&self.endpoints[1])
            .map(|(a, b)| p * a + &q * b)
            .collect())
    }
}

fn three(fm: &FactorModel) -> Result<[&Rational; 3]> {
    match fm.factors() {
        [a, b, c] => Ok([a, b, c]),
        other => Err(Error::DimensionMismatch {
            context: "trinomial factors",
            expected: 3,
            found: other.len(),
        }),
    }
}

/// Closed-form generators for factors `f_1 < f_2 < f_3` and gross rate
/// `growth = 1 + r`. Does not require `f_1 > 0`, so lattice nodes whose down
/// move reaches zero can use it.
pub(crate) fn trinomial_family(f: [&Rational; 3], growth: &Rational) -> Result<TrinomialEmmFamily> {
    let [f1, f2, f3] = f;
    if !(f1 < growth && growth < f3) {
        return Err(Error::NotViable);
    }
    let outer = vec![
        (f3 - growth) / (f3 - f1),
        Rational::zero(),
        (growth - f1) / (f3 - f1),
    ];
    let (case, inner) = match f2.cmp(growth) {
        std::cmp::Ordering::Equal => (
            TrinomialCase::F2Equal,
            vec![Rational::zero(), Rational::one(), Rational::zero()],
        ),
        std::cmp::Ordering::Less => (
            TrinomialCase::F2Below,
            vec![
                Rational::zero(),
                (f3 - growth) / (f3 - f2),
                (growth - f2) / (f3 - f2),
            ],
        ),
        std::cmp::Ordering::Greater => (
            TrinomialCase::F2Above,
            vec![
                (f2 - growth) / (f2 - f1),
                (growth - f1) / (f2 - f1),
                Rational::zero(),
            ],
        ),
    };
    Ok(TrinomialEmmFamily {
        case,
        endpoints: [outer, inner],
    })
}

pub fn trinomial_emms(fm: &FactorModel) -> Result<TrinomialEmmFamily> {
    trinomial_family(three(fm)?, &fm.growth())
}

/// Whether adding a derivative with payoff `c` makes the three-factor
/// market complete: `c_1(f_3−f_2) + c_2(f_1−f_3) + c_3(f_2−f_1) ≠ 0`.
pub fn trinomial_completion_condition(c: &[Rational], fm: &FactorModel) -> Result<bool> {
    let [f1, f2, f3] = three(fm)?;
    let [c1, c2, c3] = c else {
        return Err(Error::DimensionMismatch {
            context: "derivative payoff",
            expected: 3,
            found: c.len(),
        });
    };
    let det = c1 * (f3 - f2) + c2 * (f1 - f3) + c3 * (f2 - f1);
    Ok(!det.is_zero())
}

/// Arbitrage-free price range of a derivative paying `c` in a viable
/// three-factor model, from the closed-form endpoint prices.
pub fn trinomial_price_interval(c: &[Rational], fm: &FactorModel) -> Result<PriceBounds> {
    let [f1, f2, f3] = three(fm)?;
    let [c1, c2, c3] = c else {
        return Err(Error::DimensionMismatch {
            context: "derivative payoff",
            expected: 3,
            found: c.len(),
        });
    };
    let growth = fm.growth();
    let family = trinomial_family([f1, f2, f3], &growth)?;

    let outer = (c1 * (f3 - &growth) + c3 * (&growth - f1)) / ((f3 - f1) * &growth);
    let inner = match family.case {
        TrinomialCase::F2Equal => c2 / &growth,
        TrinomialCase::F2Below => {
            (c2 * (f3 - &growth) + c3 * (&growth - f2)) / ((f3 - f2) * &growth)
        }
        TrinomialCase::F2Above => {
            (c1 * (f2 - &growth) + c2 * (&growth - f1)) / ((f2 - f1) * &growth)
        }
    };

    // Each endpoint generator leaves one outcome uncharged, so the interval is
    // open unless it collapses to a point.
    let degenerate = outer == inner;
    let (low, high) = if outer <= inner {
        (outer, inner)
    } else {
        (inner, outer)
    };
    Ok(PriceBounds {
        low,
        high,
        low_attained_by_emm: degenerate,
        high_attained_by_emm: degenerate,
    })
}
