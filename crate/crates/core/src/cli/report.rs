//! Serializable command reports. Every number is a rational string, so a
//! report parsed back yields exactly the values that were computed.

use std::fmt::{self, Display, Formatter};

use serde::{Deserialize, Serialize};

use crate::analysis::{CompletionPlan, EmmCharacterization, PriceBounds};
use crate::exactmath::{format_rational, format_vector, Rational, RationalMatrix};
use crate::geometry::GeneratorSet;
use crate::multiperiod::{ComponentPlan, TreeReport};

fn matrix_strings(m: &RationalMatrix) -> Vec<Vec<String>> {
    m.row_iter().map(format_vector).collect()
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

fn join(items: &[String]) -> String {
    format!("({})", items.join(", "))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub measure: Vec<String>,
    /// 1-based outcomes charged by this generator.
    pub support: Vec<usize>,
}

fn generator_entries(set: &GeneratorSet) -> Vec<GeneratorEntry> {
    set.iter()
        .zip(set.supports())
        .map(|(g, s)| GeneratorEntry {
            measure: format_vector(g),
            support: one_based(s.indices()),
        })
        .collect()
}

fn write_generators(f: &mut Formatter<'_>, generators: &[GeneratorEntry]) -> fmt::Result {
    writeln!(f, "generators: {}", generators.len())?;
    for (j, g) in generators.iter().enumerate() {
        writeln!(f, "  p{} = {}", j + 1, join(&g.measure))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorsReport {
    pub outcomes: usize,
    pub generators: Vec<GeneratorEntry>,
}

impl GeneratorsReport {
    pub fn new(set: &GeneratorSet, outcomes: usize) -> Self {
        Self {
            outcomes,
            generators: generator_entries(set),
        }
    }
}

impl Display for GeneratorsReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_generators(f, &self.generators)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub outcomes: usize,
    pub assets: usize,
    pub viable: bool,
    pub complete: bool,
    pub augmented_rank: usize,
    pub generators: Vec<GeneratorEntry>,
    /// Per outcome: which generator weights must be positive for it to be charged.
    pub emm_conditions: Vec<String>,
    pub uncovered_outcomes: Vec<usize>,
    pub witness: Option<Vec<String>>,
    pub warnings: Vec<String>,
}

impl AnalyzeReport {
    pub fn new(
        emm: &EmmCharacterization,
        assets: usize,
        complete: bool,
        augmented_rank: usize,
    ) -> Self {
        let outcomes = emm.outcome_support.len();
        let uncovered = emm.uncovered_outcomes();
        let mut warnings = Vec::new();
        if emm.generators.is_empty() {
            warnings.push("no martingale measure exists".to_string());
        } else if !uncovered.is_empty() {
            warnings.push(format!(
                "martingale measures exist but none charges outcomes {:?}",
                one_based(&uncovered)
            ));
        }
        Self {
            outcomes,
            assets,
            viable: emm.emm_exists,
            complete,
            augmented_rank,
            generators: generator_entries(&emm.generators),
            emm_conditions: (0..outcomes).map(|i| emm.describe_condition(i)).collect(),
            uncovered_outcomes: one_based(&uncovered),
            witness: emm
                .emm_exists
                .then(|| emm.generators.barycenter().map(|w| format_vector(&w)))
                .flatten(),
            warnings,
        }
    }
}

impl Display for AnalyzeReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "outcomes: {}  assets: {}", self.outcomes, self.assets)?;
        writeln!(f, "viable: {}", self.viable)?;
        writeln!(f, "complete: {}", self.complete)?;
        writeln!(f, "augmented rank: {}", self.augmented_rank)?;
        write_generators(f, &self.generators)?;
        writeln!(f, "equivalent measure conditions:")?;
        for (i, c) in self.emm_conditions.iter().enumerate() {
            writeln!(f, "  outcome {}: {c}", i + 1)?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "witness: {}", join(w))?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub payoff: Vec<String>,
    pub low: String,
    pub high: String,
    pub low_attained: bool,
    pub high_attained: bool,
    pub unique: bool,
    pub generator_prices: Vec<String>,
}

impl BoundsReport {
    pub fn new(payoff: &[Rational], bounds: &PriceBounds, generator_prices: &[Rational]) -> Self {
        Self {
            payoff: format_vector(payoff),
            low: format_rational(&bounds.low),
            high: format_rational(&bounds.high),
            low_attained: bounds.low_attained_by_emm,
            high_attained: bounds.high_attained_by_emm,
            unique: bounds.is_unique(),
            generator_prices: format_vector(generator_prices),
        }
    }
}

impl Display for BoundsReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let open = if self.low_attained { "[" } else { "(" };
        let close = if self.high_attained { "]" } else { ")" };
        if self.unique {
            writeln!(f, "price: {} (unique)", self.low)?;
        } else {
            writeln!(
                f,
                "price interval: {open}{}, {}{close}",
                self.low, self.high
            )?;
        }
        writeln!(
            f,
            "low attained by an equivalent measure: {}",
            self.low_attained
        )?;
        writeln!(
            f,
            "high attained by an equivalent measure: {}",
            self.high_attained
        )?;
        writeln!(f, "generator prices: {}", join(&self.generator_prices))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub added_payoffs: Vec<Vec<String>>,
    pub price_map: Vec<Vec<String>>,
    /// Per outcome: 1-based generators of which at least one needs positive weight.
    pub alpha_constraints: Vec<Vec<usize>>,
    pub weights: Option<Vec<String>>,
    pub prices: Option<Vec<String>>,
}

impl PlanReport {
    pub fn new(plan: &CompletionPlan) -> Self {
        Self {
            added_payoffs: matrix_strings(&plan.added_payoffs),
            price_map: matrix_strings(&plan.price_map),
            alpha_constraints: plan
                .alpha_constraints
                .iter()
                .map(|c| one_based(c))
                .collect(),
            weights: plan.weights.as_deref().map(format_vector),
            prices: plan.prices.as_deref().map(format_vector),
        }
    }
}

impl Display for PlanReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.added_payoffs.is_empty() {
            return writeln!(f, "already complete: no assets added");
        }
        for (a, row) in self.added_payoffs.iter().enumerate() {
            write!(f, "add payoff {}", join(row))?;
            if let Some(p) = &self.prices {
                write!(f, " at price {}", p[a])?;
            }
            writeln!(f, "  [price map {}]", join(&self.price_map[a]))?;
        }
        if let Some(w) = &self.weights {
            writeln!(f, "weights: {}", join(w))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteReport {
    pub plan: PlanReport,
    pub extended_generators: Vec<GeneratorEntry>,
    pub extended_complete: bool,
    pub written: Option<String>,
}

impl Display for CompleteReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.plan.fmt(f)?;
        writeln!(f, "extended market complete: {}", self.extended_complete)?;
        write_generators(f, &self.extended_generators)?;
        if let Some(path) = &self.written {
            writeln!(f, "wrote {path}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub time: usize,
    pub node: String,
    pub outcomes: usize,
    pub viable: bool,
    pub complete: bool,
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeAnalyzeReport {
    pub viable: bool,
    pub complete: bool,
    pub components: Vec<ComponentEntry>,
}

impl TreeAnalyzeReport {
    pub fn new(report: &TreeReport) -> Self {
        Self {
            viable: report.viable,
            complete: report.complete,
            components: report
                .components
                .iter()
                .map(|c| ComponentEntry {
                    time: c.time,
                    node: c.node.clone(),
                    outcomes: c.outcomes,
                    viable: c.arbitrage_free,
                    complete: c.complete,
                    generators: generator_entries(&c.generators),
                })
                .collect(),
        }
    }
}

impl Display for TreeAnalyzeReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "viable: {}", self.viable)?;
        writeln!(f, "complete: {}", self.complete)?;
        for c in &self.components {
            writeln!(
                f,
                "  t={} node={} outcomes={} viable={} complete={} generators={}",
                c.time,
                c.node,
                c.outcomes,
                c.viable,
                c.complete,
                c.generators.len()
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPlanEntry {
    pub time: usize,
    pub node: String,
    pub measure: Vec<String>,
    pub plan: PlanReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCompleteReport {
    pub complete: bool,
    pub plans: Vec<ComponentPlanEntry>,
    pub written: Option<String>,
}

impl TreeCompleteReport {
    pub fn new(complete: bool, plans: &[ComponentPlan], written: Option<String>) -> Self {
        Self {
            complete,
            plans: plans
                .iter()
                .map(|p| ComponentPlanEntry {
                    time: p.time,
                    node: p.node.clone(),
                    measure: format_vector(&p.measure),
                    plan: PlanReport::new(&p.plan),
                })
                .collect(),
            written,
        }
    }
}

impl Display for TreeCompleteReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "complete: {}", self.complete)?;
        writeln!(f, "component plans: {}", self.plans.len())?;
        for p in &self.plans {
            writeln!(
                f,
                "t={} node={} measure {}",
                p.time,
                p.node,
                join(&p.measure)
            )?;
            for (a, row) in p.plan.added_payoffs.iter().enumerate() {
                let price = p.plan.prices.as_ref().map(|v| v[a].as_str()).unwrap_or("?");
                writeln!(f, "  add payoff {} at price {price}", join(row))?;
            }
        }
        if let Some(path) = &self.written {
            writeln!(f, "wrote {path}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub epsilon: String,
    pub seed: u64,
    pub attempts: usize,
    pub max_deviation: String,
    pub price: String,
    pub terminal: Vec<(u64, String)>,
    pub violations: Vec<(usize, u64)>,
    pub written: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KklReport {
    pub s0: u64,
    pub steps: usize,
    pub dt: String,
    pub viable: bool,
    pub nodes: usize,
    pub emm_p: String,
    /// Value of the put at the initial node.
    pub put_price: Option<String>,
    /// Nodes `(t, k)` where the put does not complete the market.
    pub violations: Vec<(usize, u64)>,
    pub perturbation: Option<PerturbationReport>,
    pub written: Option<String>,
    pub warnings: Vec<String>,
}

impl Display for KklReport {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "s0={} steps={} dt={} nodes={}",
            self.s0, self.steps, self.dt, self.nodes
        )?;
        writeln!(f, "viable: {}", self.viable)?;
        if let Some(p) = &self.put_price {
            writeln!(
                f,
                "put price F(0,{}) = {p} (emm p = {})",
                self.s0, self.emm_p
            )?;
            writeln!(f, "completion check violations: {}", self.violations.len())?;
            for (t, k) in self.violations.iter().take(10) {
                writeln!(f, "  (t={t}, k={k})")?;
            }
            if self.violations.len() > 10 {
                writeln!(f, "  ...")?;
            }
        }
        if let Some(p) = &self.perturbation {
            writeln!(
                f,
                "perturbed put: price {} after {} attempt(s), max deviation {} < {}, violations {}",
                p.price,
                p.attempts,
                p.max_deviation,
                p.epsilon,
                p.violations.len()
            )?;
            if let Some(path) = &p.written {
                writeln!(f, "wrote {path}")?;
            }
        }
        if let Some(path) = &self.written {
            writeln!(f, "wrote {path}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
