//! Multi-period markets on finite event trees.
//!
//! Each internal node `A` at time `t` induces a one-period market, the
//! `(t, A)` component, whose outcomes are the children of `A`. The whole
//! market is arbitrage-free (complete) iff every component is.
//!
//! Nodes may share children, which lets recombining lattices be analysed
//! without expanding them into a full information tree; completion can only
//! be applied to genuine trees.

use std::collections::{HashMap, VecDeque};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    completeness_of, plan_completion, uniform_weights, CompletionPlan, EmmCharacterization,
};
use crate::error::{Error, Result};
use crate::exactmath::{
    format_rational, format_vector, parse_rational, parse_vector, Rational, RationalMatrix,
    RationalVector,
};
use crate::geometry::{enumerate_generators, EnumerationOptions, GeneratorSet};
use crate::market::{build_system, OnePeriodMarket};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: String,
    pub time: usize,
    pub children: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    id: String,
    time: usize,
    children: Vec<usize>,
    parents: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventTree {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    root: usize,
    horizon: usize,
    bfs: Vec<usize>,
}

impl EventTree {
    pub fn new(specs: Vec<NodeSpec>) -> Result<Self> {
        let invalid = |msg: String| Error::InvalidTree(msg);
        if specs.is_empty() {
            return Err(invalid("no nodes".into()));
        }

        let mut index = HashMap::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            if index.insert(spec.id.clone(), i).is_some() {
                return Err(invalid(format!("duplicate node id {:?}", spec.id)));
            }
        }

        let roots: Vec<usize> = specs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.time == 0)
            .map(|(i, _)| i)
            .collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(invalid("no root node at time 0".into())),
            _ => return Err(invalid("more than one node at time 0".into())),
        };

        let mut nodes: Vec<Node> = specs
            .iter()
            .map(|s| Node {
                id: s.id.clone(),
                time: s.time,
                children: Vec::with_capacity(s.children.len()),
                parents: Vec::new(),
            })
            .collect();

        for (i, spec) in specs.iter().enumerate() {
            for child_id in &spec.children {
                let &c = index.get(child_id).ok_or_else(|| {
                    invalid(format!("node {:?} has unknown child {child_id:?}", spec.id))
                })?;
                if specs[c].time != spec.time + 1 {
                    return Err(invalid(format!(
                        "child {child_id:?} of {:?} is at time {}, expected {}",
                        spec.id,
                        specs[c].time,
                        spec.time + 1
                    )));
                }
                if nodes[i].children.contains(&c) {
                    return Err(invalid(format!(
                        "node {:?} lists child {child_id:?} twice",
                        spec.id
                    )));
                }
                nodes[i].children.push(c);
                nodes[c].parents.push(i);
            }
        }

        let mut bfs = Vec::with_capacity(nodes.len());
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(i) = queue.pop_front() {
            bfs.push(i);
            for &c in &nodes[i].children {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(invalid(format!(
                "node {:?} is not reachable from the root",
                nodes[orphan].id
            )));
        }

        let horizon = nodes.iter().map(|n| n.time).max().unwrap_or(0);
        if let Some(leaf) = nodes
            .iter()
            .find(|n| n.children.is_empty() && n.time != horizon)
        {
            return Err(invalid(format!(
                "leaf {:?} is at time {}, but the horizon is {horizon}",
                leaf.id, leaf.time
            )));
        }

        Ok(Self {
            nodes,
            index,
            root,
            horizon,
            bfs,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Terminal time `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn root_id(&self) -> &str {
        &self.nodes[self.root].id
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.nodes[node].id
    }

    pub fn time(&self, node: usize) -> usize {
        self.nodes[node].time
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.nodes[node].children
    }

    /// Node positions in breadth-first order from the root.
    pub fn breadth_first(&self) -> &[usize] {
        &self.bfs
    }

    /// Whether some node has more than one parent.
    pub fn is_recombining(&self) -> bool {
        self.nodes.iter().any(|n| n.parents.len() > 1)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeMarket {
    tree: EventTree,
    assets: usize,
    /// Indexed by node position.
    prices: Vec<RationalVector>,
    /// `rates[t]` applies from `t` to `t + 1`.
    rates: RationalVector,
}

impl TreeMarket {
    /// `prices` is indexed like the node list the tree was built from.
    pub fn new(
        tree: EventTree,
        assets: usize,
        prices: Vec<RationalVector>,
        rates: RationalVector,
    ) -> Result<Self> {
        if prices.len() != tree.len() {
            return Err(Error::DimensionMismatch {
                context: "price vectors per node",
                expected: tree.len(),
                found: prices.len(),
            });
        }
        if let Some((i, p)) = prices.iter().enumerate().find(|(_, p)| p.len() != assets) {
            return Err(Error::InvalidTree(format!(
                "node {:?} has {} prices, expected {assets}",
                tree.id(i),
                p.len()
            )));
        }
        if rates.len() != tree.horizon() {
            return Err(Error::DimensionMismatch {
                context: "per-step rates",
                expected: tree.horizon(),
                found: rates.len(),
            });
        }
        if let Some(t) = rates.iter().position(|r| (Rational::one() + r).is_zero()) {
            return Err(Error::InvalidTree(format!(
                "1 + r must be nonzero at step {t}"
            )));
        }
        Ok(Self {
            tree,
            assets,
            prices,
            rates,
        })
    }

    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn rates(&self) -> &[Rational] {
        &self.rates
    }

    pub fn prices_at(&self, node: usize) -> &[Rational] {
        &self.prices[node]
    }

    pub fn prices_of(&self, id: &str) -> Option<&[Rational]> {
        self.tree.position(id).map(|i| self.prices_at(i))
    }

    /// One-period market of the component rooted at `node`.
    pub fn component_market(&self, node: usize) -> Result<OnePeriodMarket> {
        let children = self.tree.children(node);
        let payoff_rows: Vec<RationalVector> = (0..self.assets)
            .map(|a| {
                children
                    .iter()
                    .map(|&c| self.prices[c][a].clone())
                    .collect()
            })
            .collect();
        OnePeriodMarket::new(
            self.rates[self.tree.time(node)].clone(),
            self.prices[node].clone(),
            RationalMatrix::from_rows(children.len(), payoff_rows)?,
            None,
        )
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let specs = doc
            .nodes
            .iter()
            .map(|n| NodeSpec {
                id: n.id.clone(),
                time: n.time,
                children: n.children.clone(),
            })
            .collect();
        let tree = EventTree::new(specs)?;
        let prices = doc
            .nodes
            .iter()
            .map(|n| parse_vector(&n.prices))
            .collect::<Result<Vec<_>>>()?;
        let rates = doc
            .rates
            .iter()
            .map(|r| parse_rational(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tree, doc.assets, prices, rates)
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            assets: self.assets,
            rates: self.rates.iter().map(format_rational).collect(),
            nodes: self
                .tree
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| NodeDocument {
                    id: n.id.clone(),
                    time: n.time,
                    children: n
                        .children
                        .iter()
                        .map(|&c| self.tree.id(c).to_string())
                        .collect(),
                    prices: format_vector(&self.prices[i]),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)
            .map_err(|e| Error::InvalidTree(format!("malformed tree JSON: {e}")))?;
        Self::from_document(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("tree document serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub assets: usize,
    pub rates: Vec<String>,
    pub nodes: Vec<NodeDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub time: usize,
    #[serde(default)]
    pub children: Vec<String>,
    pub prices: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub time: usize,
    pub node: String,
    pub market: OnePeriodMarket,
}

/// One component per internal node, breadth-first.
pub fn components(tm: &TreeMarket) -> Result<Vec<Component>> {
    tm.tree
        .breadth_first()
        .iter()
        .filter(|&&i| !tm.tree.children(i).is_empty())
        .map(|&i| {
            Ok(Component {
                time: tm.tree.time(i),
                node: tm.tree.id(i).to_string(),
                market: tm.component_market(i)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentReport {
    pub time: usize,
    pub node: String,
    pub outcomes: usize,
    pub arbitrage_free: bool,
    pub complete: bool,
    pub generators: GeneratorSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeReport {
    pub viable: bool,
    pub complete: bool,
    pub components: Vec<ComponentReport>,
}

impl TreeReport {
    pub fn failing_components(&self) -> impl Iterator<Item = &ComponentReport> + '_ {
        self.components.iter().filter(|c| !c.arbitrage_free)
    }
}

fn characterize_component(c: &Component, opts: &EnumerationOptions) -> Result<EmmCharacterization> {
    let generators = enumerate_generators(&build_system(&c.market), opts)?;
    Ok(EmmCharacterization::from_generators(
        generators,
        c.market.outcomes(),
    ))
}

pub fn analyze_tree(tm: &TreeMarket) -> Result<TreeReport> {
    analyze_tree_with(tm, &EnumerationOptions::default())
}

pub fn analyze_tree_with(tm: &TreeMarket, opts: &EnumerationOptions) -> Result<TreeReport> {
    let mut reports = Vec::new();
    for c in components(tm)? {
        let emm = characterize_component(&c, opts)?;
        reports.push(ComponentReport {
            complete: completeness_of(&c.market, &emm),
            arbitrage_free: emm.emm_exists,
            outcomes: c.market.outcomes(),
            generators: emm.generators,
            time: c.time,
            node: c.node,
        });
    }
    Ok(TreeReport {
        viable: reports.iter().all(|r| r.arbitrage_free),
        complete: reports.iter().all(|r| r.complete),
        components: reports,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPlan {
    pub time: usize,
    pub node: String,
    pub plan: CompletionPlan,
    /// Equivalent martingale measure the added assets are priced with.
    pub measure: RationalVector,
}

/// Completion plans, with uniform generator weights, for every incomplete
/// component of a viable tree market.
pub fn complete_tree(tm: &TreeMarket) -> Result<Vec<ComponentPlan>> {
    complete_tree_with(tm, &EnumerationOptions::default())
}

pub fn complete_tree_with(
    tm: &TreeMarket,
    opts: &EnumerationOptions,
) -> Result<Vec<ComponentPlan>> {
    let mut characterized = Vec::new();
    for c in components(tm)? {
        let emm = characterize_component(&c, opts)?;
        if !emm.emm_exists {
            return Err(Error::NotViable);
        }
        characterized.push((c, emm));
    }

    let mut plans = Vec::new();
    for (c, emm) in characterized {
        if completeness_of(&c.market, &emm) {
            continue;
        }
        let weights = uniform_weights(emm.generators.len());
        let plan = plan_completion(&c.market, &emm, Some(&weights), None)?;
        let measure = emm.generators.combine(&weights)?;
        plans.push(ComponentPlan {
            time: c.time,
            node: c.node,
            plan,
            measure,
        });
    }
    Ok(plans)
}

/// Adds the assets of `plans` to the tree market.
///
/// An asset added at component `(t, A)` pays its planned payoff at the
/// children of `A`, is held in the bond afterwards, is worth nothing off the
/// paths through `A`, and is valued at the ancestors of `A` by discounting
/// under each ancestor's pricing measure (the plan measure where there is a
/// plan, otherwise the component's unique martingale measure). Every
/// component stays viable and no rank decreases, so applying the output of
/// [`complete_tree`] yields a complete market.
pub fn apply_completion(tm: &TreeMarket, plans: &[ComponentPlan]) -> Result<TreeMarket> {
    let tree = &tm.tree;
    if tree.is_recombining() {
        return Err(Error::InvalidTree(
            "completion assets can only be attached to a non-recombining tree".into(),
        ));
    }

    let mut measures: HashMap<usize, RationalVector> = HashMap::new();
    for p in plans {
        let node = tree.position(&p.node).ok_or_else(|| {
            Error::InvalidTree(format!("plan refers to unknown node {:?}", p.node))
        })?;
        measures.insert(node, p.measure.clone());
    }
    let mut measure_at = |node: usize| -> Result<RationalVector> {
        if let Some(m) = measures.get(&node) {
            return Ok(m.clone());
        }
        let market = tm.component_market(node)?;
        let generators =
            enumerate_generators(&build_system(&market), &EnumerationOptions::default())?;
        let emm = EmmCharacterization::from_generators(generators, market.outcomes());
        if !emm.emm_exists {
            return Err(Error::NotViable);
        }
        let m = emm
            .generators
            .barycenter()
            .expect("viable components have generators");
        measures.insert(node, m.clone());
        Ok(m)
    };

    let mut prices = tm.prices.clone();
    let mut added = 0;
    for p in plans {
        let node = tree.position(&p.node).expect("checked above");
        let growth_from = |t: usize| Rational::one() + &tm.rates[t];
        let spots = match &p.plan.prices {
            Some(s) => s.clone(),
            None => p
                .plan
                .prices_for(&uniform_weights(p.plan.price_map.cols()))?,
        };
        for (row, spot) in p.plan.added_payoffs.row_iter().zip(spots) {
            let mut values = vec![Rational::zero(); tree.len()];
            values[node] = spot;

            // payoff at the children, then rolled over in the bond
            let mut stack: Vec<(usize, Rational)> = tree
                .children(node)
                .iter()
                .zip(row)
                .map(|(&c, v)| (c, v.clone()))
                .collect();
            while let Some((n, v)) = stack.pop() {
                if !tree.children(n).is_empty() {
                    let grown = &v * growth_from(tree.time(n));
                    for &c in tree.children(n) {
                        stack.push((c, grown.clone()));
                    }
                }
                values[n] = v;
            }

            // discount back to the root along the unique ancestor path
            let mut child = node;
            while let Some(&parent) = tree.nodes[child].parents.first() {
                let q = measure_at(parent)?;
                let slot = tree
                    .children(parent)
                    .iter()
                    .position(|&c| c == child)
                    .expect("parent lists child");
                values[parent] = &q[slot] * &values[child] / growth_from(tree.time(parent));
                child = parent;
            }

            for (price, v) in prices.iter_mut().zip(values) {
                price.push(v);
            }
            added += 1;
        }
    }

    TreeMarket::new(tree.clone(), tm.assets + added, prices, tm.rates.clone())
}
