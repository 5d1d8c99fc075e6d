//! One-period multinomial markets and their martingale linear systems.
//!
//! A market has a risk-free asset with simple rate `r`, `n` risky assets with
//! spot prices `S_i(0)`, and `b` outcomes with payoffs `S_i(ω, 1)`. A
//! probability vector `q` is a martingale measure when
//! `Σ_ω S_i(ω, 1) q_ω = (1 + r) S_i(0)` for every asset.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{
    format_rational, format_vector, parse_rational, parse_vector, sum, Rational, RationalMatrix,
    RationalVector,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnePeriodMarket {
    rate: Rational,
    spot: RationalVector,
    payoffs: RationalMatrix,
    probabilities: Option<RationalVector>,
}

impl OnePeriodMarket {
    /// Validates and builds a market. `payoffs` is `n × b` with one row per
    /// risky asset; `probabilities`, when given, must be strictly positive and
    /// sum to one.
    pub fn new(
        rate: Rational,
        spot: RationalVector,
        payoffs: RationalMatrix,
        probabilities: Option<RationalVector>,
    ) -> Result<Self> {
        if payoffs.cols() == 0 {
            return Err(Error::InvalidMarket(
                "at least one outcome is required".into(),
            ));
        }
        if payoffs.rows() != spot.len() {
            return Err(Error::DimensionMismatch {
                context: "spot prices vs payoff rows",
                expected: payoffs.rows(),
                found: spot.len(),
            });
        }
        if (Rational::one() + &rate).is_zero() {
            return Err(Error::InvalidMarket("1 + r must be nonzero".into()));
        }
        if let Some(p) = &probabilities {
            if p.len() != payoffs.cols() {
                return Err(Error::DimensionMismatch {
                    context: "physical probabilities",
                    expected: payoffs.cols(),
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_positive()) {
                return Err(Error::InvalidMarket(
                    "physical probabilities must be strictly positive".into(),
                ));
            }
            if !sum(p).is_one() {
                return Err(Error::InvalidMarket(
                    "physical probabilities must sum to 1".into(),
                ));
            }
        }
        Ok(Self {
            rate,
            spot,
            payoffs,
            probabilities,
        })
    }

    /// Market whose martingale system is exactly `matrix · q = rhs`
    /// (zero rate, spot prices equal to `rhs`).
    pub fn from_system(matrix: RationalMatrix, rhs: RationalVector) -> Result<Self> {
        Self::new(Rational::zero(), rhs, matrix, None)
    }

    /// Market with no risky assets over `outcomes` states.
    pub fn bond_only(rate: Rational, outcomes: usize) -> Result<Self> {
        Self::new(rate, Vec::new(), RationalMatrix::zeros(0, outcomes), None)
    }

    pub fn rate(&self) -> &Rational {
        &self.rate
    }

    /// `1 + r`.
    pub fn growth(&self) -> Rational {
        Rational::one() + &self.rate
    }

    pub fn spot(&self) -> &[Rational] {
        &self.spot
    }

    pub fn payoffs(&self) -> &RationalMatrix {
        &self.payoffs
    }

    pub fn probabilities(&self) -> Option<&[Rational]> {
        self.probabilities.as_deref()
    }

    /// Number of outcomes `b`.
    pub fn outcomes(&self) -> usize {
        self.payoffs.cols()
    }

    /// Number of risky assets `n`.
    pub fn assets(&self) -> usize {
        self.payoffs.rows()
    }

    /// Copy of this market with one more risky asset.
    pub fn with_asset(&self, payoff: &[Rational], spot: Rational) -> Result<Self> {
        let payoffs = self.payoffs.with_row(payoff)?;
        let mut spots = self.spot.clone();
        spots.push(spot);
        Self::new(
            self.rate.clone(),
            spots,
            payoffs,
            self.probabilities.clone(),
        )
    }

    /// Copy with asset `index` multiplied by `factor` (spot and payoff row).
    pub fn scale_asset(&self, index: usize, factor: &Rational) -> Self {
        let mut rows = self.payoffs.to_rows();
        for v in &mut rows[index] {
            *v = &*v * factor;
        }
        let mut spot = self.spot.clone();
        spot[index] = &spot[index] * factor;
        Self {
            rate: self.rate.clone(),
            spot,
            payoffs: RationalMatrix::from_rows(self.outcomes(), rows).expect("same shape"),
            probabilities: self.probabilities.clone(),
        }
    }

    pub fn martingale_system(&self) -> MartingaleSystem {
        build_system(self)
    }

    pub fn to_document(&self) -> MarketDocument {
        MarketDocument {
            rate: format_rational(&self.rate),
            spot: format_vector(&self.spot),
            payoffs: self.payoffs.row_iter().map(format_vector).collect(),
            probabilities: self.probabilities.as_deref().map(format_vector),
            outcomes: if self.assets() == 0 && self.probabilities.is_none() {
                Some(self.outcomes())
            } else {
                None
            },
        }
    }

    pub fn from_document(doc: &MarketDocument) -> Result<Self> {
        let rate = parse_rational(&doc.rate)?;
        let spot = parse_vector(&doc.spot)?;
        let rows = doc
            .payoffs
            .iter()
            .map(|r| parse_vector(r))
            .collect::<Result<Vec<_>>>()?;
        let probabilities = doc.probabilities.as_deref().map(parse_vector).transpose()?;

        let outcomes = rows
            .first()
            .map(Vec::len)
            .or(probabilities.as_ref().map(Vec::len))
            .or(doc.outcomes)
            .ok_or_else(|| {
                Error::InvalidMarket(
                    "cannot infer the number of outcomes: give payoffs, probabilities or outcomes"
                        .into(),
                )
            })?;
        if let Some(declared) = doc.outcomes {
            if declared != outcomes {
                return Err(Error::DimensionMismatch {
                    context: "declared outcome count",
                    expected: outcomes,
                    found: declared,
                });
            }
        }
        let payoffs = RationalMatrix::from_rows(outcomes, rows)?;
        Self::new(rate, spot, payoffs, probabilities)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MarketDocument = serde_json::from_str(text)
            .map_err(|e| Error::InvalidMarket(format!("malformed market JSON: {e}")))?;
        Self::from_document(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("market document serializes")
    }
}

/// Serialized market: every number is a rational string such as `"1/2"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketDocument {
    pub rate: String,
    pub spot: Vec<String>,
    pub payoffs: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<String>>,
    /// Outcome count; only needed when there are no assets and no probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
}

/// The linear part of the martingale conditions: `matrix · q = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MartingaleSystem {
    pub matrix: RationalMatrix,
    pub rhs: RationalVector,
}

impl MartingaleSystem {
    pub fn new(matrix: RationalMatrix, rhs: RationalVector) -> Result<Self> {
        if matrix.rows() != rhs.len() {
            return Err(Error::DimensionMismatch {
                context: "system right-hand side",
                expected: matrix.rows(),
                found: rhs.len(),
            });
        }
        Ok(Self { matrix, rhs })
    }

    pub fn outcomes(&self) -> usize {
        self.matrix.cols()
    }

    /// Whether `q` is a probability vector satisfying the system.
    pub fn is_solution(&self, q: &[Rational]) -> bool {
        q.len() == self.outcomes()
            && q.iter().all(|x| !x.is_negative())
            && sum(q).is_one()
            && self
                .matrix
                .mul_vector(q)
                .map(|v| v == self.rhs)
                .unwrap_or(false)
    }

    /// `(1, rhs)`: right-hand side matching [`augmented_matrix`].
    pub fn augmented_rhs(&self) -> RationalVector {
        std::iter::once(Rational::one())
            .chain(self.rhs.iter().cloned())
            .collect()
    }
}

pub fn build_system(mkt: &OnePeriodMarket) -> MartingaleSystem {
    let growth = mkt.growth();
    MartingaleSystem {
        matrix: mkt.payoffs.clone(),
        rhs: mkt.spot.iter().map(|s| s * &growth).collect(),
    }
}

/// The system matrix with a leading row of ones (the bond / normalisation row).
pub fn augmented_matrix(sys: &MartingaleSystem) -> RationalMatrix {
    let ones =
        RationalMatrix::from_rows(sys.outcomes(), vec![vec![Rational::one(); sys.outcomes()]])
            .expect("ones row has matrix width");
    ones.vstack(&sys.matrix).expect("same width")
}
