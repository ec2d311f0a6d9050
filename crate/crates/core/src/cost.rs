// Copyright 2026 The reoptdb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Cost model and dynamic-programming join enumeration.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::plan::{JoinOp, PhysicalPlan, PlanNode, RelSet};
use crate::query::QueryGraph;
use crate::{Error, Result};

/// Supplies cardinalities to the cost model.
///
/// `base_rows` is the unfiltered size of a relation (what a scan reads);
/// `cardinality` is the output size of the join (or filtered scan) over a
/// set of relations.
pub trait CardSource {
    fn base_rows(&self, rel: usize) -> Option<f64>;
    fn cardinality(&self, set: RelSet) -> Option<f64>;
}

impl<T: CardSource + ?Sized> CardSource for &T {
    fn base_rows(&self, rel: usize) -> Option<f64> {
        (**self).base_rows(rel)
    }

    fn cardinality(&self, set: RelSet) -> Option<f64> {
        (**self).cardinality(set)
    }
}

/// Explicit cardinalities, for tests and injected-oracle runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixedCards {
    pub base: Vec<f64>,
    pub cards: BTreeMap<RelSet, f64>,
}

impl CardSource for FixedCards {
    fn base_rows(&self, rel: usize) -> Option<f64> {
        self.base.get(rel).copied()
    }

    fn cardinality(&self, set: RelSet) -> Option<f64> {
        self.cards.get(&set).copied()
    }
}

/// Validated cardinalities layered over a base source: a set present in
/// `validated` takes that value, everything else falls through.
#[derive(Debug, Clone, Copy)]
pub struct Overlay<'a, C: ?Sized> {
    pub base: &'a C,
    pub validated: &'a BTreeMap<RelSet, f64>,
}

impl<'a, C: CardSource + ?Sized> Overlay<'a, C> {
    pub fn new(base: &'a C, validated: &'a BTreeMap<RelSet, f64>) -> Self {
        Overlay { base, validated }
    }

    pub fn is_validated(&self, set: RelSet) -> bool {
        self.validated.contains_key(&set)
    }
}

impl<C: CardSource + ?Sized> CardSource for Overlay<'_, C> {
    fn base_rows(&self, rel: usize) -> Option<f64> {
        self.base.base_rows(rel)
    }

    fn cardinality(&self, set: RelSet) -> Option<f64> {
        match self.validated.get(&set) {
            Some(v) => Some(*v),
            None => self.base.cardinality(set),
        }
    }
}

/// Per-row cost constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub scan_row: f64,
    pub hash_build_row: f64,
    pub hash_probe_row: f64,
    pub nl_inner_row: f64,
    pub output_row: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            scan_row: 1.0,
            hash_build_row: 1.5,
            hash_probe_row: 1.0,
            nl_inner_row: 0.5,
            output_row: 0.1,
        }
    }
}

impl CostModel {
    pub fn unit() -> Self {
        CostModel {
            scan_row: 1.0,
            hash_build_row: 1.0,
            hash_probe_row: 1.0,
            nl_inner_row: 1.0,
            output_row: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.scan_row,
            self.hash_build_row,
            self.hash_probe_row,
            self.nl_inner_row,
            self.output_row,
        ];
        if all.iter().all(|c| c.is_finite() && *c > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("cost constants must be positive and finite".to_string()))
        }
    }

    pub fn scan(&self, base_rows: f64) -> f64 {
        self.scan_row * base_rows
    }

    /// Cost of one join node, excluding its inputs. `left` is the outer
    /// (probe) side, `right` the inner (build) side.
    pub fn join(&self, op: JoinOp, left: f64, right: f64, out: f64) -> f64 {
        match op {
            JoinOp::Hash => {
                self.hash_build_row * right + self.hash_probe_row * left + self.output_row * out
            }
            JoinOp::NestedLoop => {
                self.scan_row * left + self.nl_inner_row * left * right + self.output_row * out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeShape {
    /// Every join has at least one base-relation input, on either side.
    LeftDeep,
    #[default]
    Bushy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub shape: TreeShape,
    pub allow_cross_products: bool,
    pub cost: CostModel,
    pub operators: Vec<JoinOp>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            shape: TreeShape::Bushy,
            allow_cross_products: false,
            cost: CostModel::default(),
            operators: JoinOp::ALL.to_vec(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        if self.operators.is_empty() {
            return Err(Error::InvalidParameter("no join operators enabled".to_string()));
        }
        Ok(())
    }

    /// Whether a join of `left` and `right` is in the search space.
    pub fn admits(&self, graph: &QueryGraph, left: RelSet, right: RelSet) -> bool {
        if self.shape == TreeShape::LeftDeep && left.len() > 1 && right.len() > 1 {
            return false;
        }
        self.allow_cross_products || graph.connects(left, right)
    }
}

fn card(cards: &impl CardSource, graph: &QueryGraph, set: RelSet) -> Result<f64> {
    cards
        .cardinality(set)
        .ok_or_else(|| Error::MissingCardinality(graph.set_label(set.iter())))
}

fn base(cards: &impl CardSource, graph: &QueryGraph, rel: usize) -> Result<f64> {
    cards
        .base_rows(rel)
        .ok_or_else(|| Error::MissingCardinality(graph.alias(rel).to_string()))
}

fn node_cost(
    node: &PlanNode,
    graph: &QueryGraph,
    cards: &impl CardSource,
    model: &CostModel,
) -> Result<(f64, f64)> {
    match node {
        PlanNode::Scan { rel } => Ok((
            model.scan(base(cards, graph, *rel)?),
            card(cards, graph, RelSet::single(*rel))?,
        )),
        PlanNode::Join { op, left, right } => {
            let (lc, lrows) = node_cost(left, graph, cards, model)?;
            let (rc, rrows) = node_cost(right, graph, cards, model)?;
            let out = card(cards, graph, node.rels())?;
            Ok((lc + rc + model.join(*op, lrows, rrows, out), out))
        }
    }
}

/// Total cost of `plan`: the sum of every node's own cost.
pub fn plan_cost(
    plan: &PhysicalPlan,
    graph: &QueryGraph,
    cards: &impl CardSource,
    model: &CostModel,
) -> Result<f64> {
    node_cost(&plan.root, graph, cards, model).map(|(c, _)| c)
}

#[derive(Debug, Clone)]
struct Entry {
    cost: f64,
    rows: f64,
    node: PlanNode,
}

fn tie_key(node: &PlanNode) -> (Vec<Vec<usize>>, Vec<JoinOp>) {
    let p = PhysicalPlan::new(node.clone());
    (p.encoding(), p.ops())
}

/// Ordering used to pick between candidates: cost first, and within a
/// relative epsilon the lexicographically smaller encoding, then operators.
fn better(cost: f64, node: &PlanNode, incumbent: &Entry) -> bool {
    let scale = cost.abs().max(incumbent.cost.abs()).max(1.0);
    if (cost - incumbent.cost).abs() > 1e-12 * scale {
        return cost < incumbent.cost;
    }
    tie_key(node).cmp(&tie_key(&incumbent.node)) == Ordering::Less
}

/// The cheapest plan for `graph` in the configured search space.
pub fn optimize(
    graph: &QueryGraph,
    cards: &impl CardSource,
    config: &OptimizerConfig,
) -> Result<PhysicalPlan> {
    optimize_costed(graph, cards, config).map(|(p, _)| p)
}

/// Like [`optimize`], also returning the plan's cost.
pub fn optimize_costed(
    graph: &QueryGraph,
    cards: &impl CardSource,
    config: &OptimizerConfig,
) -> Result<(PhysicalPlan, f64)> {
    config.validate()?;
    let n = graph.len();
    if n == 0 {
        return Err(Error::InvalidQuery("query has no relations".to_string()));
    }
    if n > 20 {
        return Err(Error::TooManyRelations(n));
    }
    let model = &config.cost;
    let mut table: Vec<Option<Entry>> = vec![None; 1usize << n];
    for r in 0..n {
        let set = RelSet::single(r);
        table[set.bits() as usize] = Some(Entry {
            cost: model.scan(base(cards, graph, r)?),
            rows: card(cards, graph, set)?,
            node: PlanNode::scan(r),
        });
    }
    // Every proper subset of a set has a smaller bit pattern.
    for bits in 1u32..(1u32 << n) {
        let set = RelSet::from_bits(bits);
        if set.len() < 2 {
            continue;
        }
        let mut best: Option<Entry> = None;
        let mut rows = None;
        for left in set.proper_subsets() {
            let right = set.minus(left);
            if !config.admits(graph, left, right) {
                continue;
            }
            let (Some(l), Some(r)) = (&table[left.bits() as usize], &table[right.bits() as usize])
            else {
                continue;
            };
            let out = match rows {
                Some(v) => v,
                None => {
                    let v = card(cards, graph, set)?;
                    rows = Some(v);
                    v
                }
            };
            for &op in &config.operators {
                let cost = l.cost + r.cost + model.join(op, l.rows, r.rows, out);
                let node = PlanNode::join(op, l.node.clone(), r.node.clone());
                if best.as_ref().map_or(true, |b| better(cost, &node, b)) {
                    best = Some(Entry { cost, rows: out, node });
                }
            }
        }
        table[bits as usize] = best;
    }
    match table[graph.all().bits() as usize].take() {
        Some(e) => Ok((PhysicalPlan::new(e.node), e.cost)),
        None => Err(Error::Disconnected),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{ColumnRef, JoinPredicate, QuerySpec, RelationRef};
    use alloc::string::String;

    fn schema(name: &str) -> Option<Vec<String>> {
        let k = name.strip_prefix('R')?;
        Some(vec![alloc::format!("A{k}"), alloc::format!("B{k}")])
    }

    fn chain(n: usize) -> QueryGraph {
        let rels = (1..=n).map(|k| RelationRef::new(alloc::format!("R{k}"))).collect();
        let joins = (1..n)
            .map(|k| JoinPredicate {
                left: ColumnRef::new(alloc::format!("R{k}"), alloc::format!("B{k}")),
                right: ColumnRef::new(alloc::format!("R{}", k + 1), alloc::format!("B{}", k + 1)),
            })
            .collect();
        QueryGraph::bind_with(&QuerySpec::new(rels, vec![], joins).unwrap(), schema).unwrap()
    }

    fn cards(base: &[f64], pairs: &[(u32, f64)]) -> FixedCards {
        let mut cards: BTreeMap<RelSet, f64> = BTreeMap::new();
        for (i, &b) in base.iter().enumerate() {
            cards.insert(RelSet::single(i), b);
        }
        for &(bits, c) in pairs {
            cards.insert(RelSet::from_bits(bits), c);
        }
        FixedCards { base: base.to_vec(), cards }
    }

    #[test]
    fn hash_join_formula() {
        let g = chain(2);
        let c = cards(&[1000.0, 100.0], &[(0b11, 500.0)]);
        let plan = PhysicalPlan::new(PlanNode::join(JoinOp::Hash, PlanNode::scan(0), PlanNode::scan(1)));
        let cost = plan_cost(&plan, &g, &c, &CostModel::unit()).unwrap();
        assert_eq!(cost, 100.0 + 1000.0 + 500.0 + 1000.0 + 100.0);
    }

    #[test]
    fn zero_cardinalities_leave_scan_costs() {
        let g = chain(2);
        let mut c = cards(&[10.0, 20.0], &[(0b11, 0.0)]);
        c.cards.insert(RelSet::single(0), 0.0);
        c.cards.insert(RelSet::single(1), 0.0);
        for op in JoinOp::ALL {
            let plan = PhysicalPlan::new(PlanNode::join(op, PlanNode::scan(0), PlanNode::scan(1)));
            assert_eq!(plan_cost(&plan, &g, &c, &CostModel::unit()).unwrap(), 30.0);
        }
    }

    #[test]
    fn single_relation_is_a_scan() {
        let g = chain(1);
        let p = optimize(&g, &cards(&[5.0], &[]), &OptimizerConfig::default()).unwrap();
        assert_eq!(p.root, PlanNode::scan(0));
    }

    #[test]
    fn smaller_input_builds() {
        let g = chain(2);
        let c = cards(&[1000.0, 100.0], &[(0b11, 500.0)]);
        let cfg = OptimizerConfig {
            operators: vec![JoinOp::Hash],
            ..OptimizerConfig::default()
        };
        let p = optimize(&g, &c, &cfg).unwrap();
        assert_eq!(p.root, PlanNode::join(JoinOp::Hash, PlanNode::scan(0), PlanNode::scan(1)));
    }

    #[test]
    fn missing_cardinality_is_reported() {
        let g = chain(2);
        let c = cards(&[1.0, 1.0], &[]);
        assert!(matches!(
            optimize(&g, &c, &OptimizerConfig::default()),
            Err(Error::MissingCardinality(_))
        ));
    }

    #[test]
    fn disconnected_without_cross_products() {
        let spec = QuerySpec::new(vec![RelationRef::new("R1"), RelationRef::new("R2")], vec![], vec![]).unwrap();
        let g = QueryGraph::bind_with(&spec, schema).unwrap();
        let c = cards(&[1.0, 1.0], &[(0b11, 1.0)]);
        assert!(matches!(
            optimize(&g, &c, &OptimizerConfig::default()),
            Err(Error::Disconnected)
        ));
        let cfg = OptimizerConfig {
            allow_cross_products: true,
            ..OptimizerConfig::default()
        };
        assert!(optimize(&g, &c, &cfg).is_ok());
    }

    #[test]
    fn left_deep_keeps_a_base_input() {
        let g = chain(4);
        let mut c = cards(&[10.0, 10.0, 10.0, 10.0], &[(0b0011, 1.0), (0b1100, 1.0), (0b1111, 1.0)]);
        for bits in 1u32..16 {
            c.cards.entry(RelSet::from_bits(bits)).or_insert(1e6);
        }
        let cfg = OptimizerConfig {
            shape: TreeShape::LeftDeep,
            ..OptimizerConfig::default()
        };
        let p = optimize(&g, &c, &cfg).unwrap();
        fn linear(n: &PlanNode) -> bool {
            match n {
                PlanNode::Scan { .. } => true,
                PlanNode::Join { left, right, .. } => {
                    (matches!(**left, PlanNode::Scan { .. }) || matches!(**right, PlanNode::Scan { .. }))
                        && linear(left)
                        && linear(right)
                }
            }
        }
        assert!(linear(&p.root));
        let bushy = optimize(&g, &c, &OptimizerConfig::default()).unwrap();
        assert!(!linear(&bushy.root));
    }
}
