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

//! Join trees, physical plans, canonical join keys and the Γ store.
//!
//! A join tree is encoded bottom-up, left-to-right: a post-order walk that
//! lists the leaf sequence of every join node. `((A ⋈ B) ⋈ C) ⋈ D` encodes as
//! `(AB, ABC, ABCD)` and `(A ⋈ B) ⋈ (C ⋈ D)` as `(AB, CD, ABCD)`.
//!
//! Two trees are *local* transformations of each other when they contain the
//! same unordered joins (the same multiset of join leaf-sets), and *global*
//! transformations otherwise.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::query::QueryGraph;
use crate::{Error, Result};

/// A set of query relations, by position in the bound query.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct RelSet(u32);

impl RelSet {
    pub const MAX_RELATIONS: usize = 32;
    pub const EMPTY: RelSet = RelSet(0);

    pub fn single(rel: usize) -> Self {
        RelSet(1 << rel)
    }

    /// `{0, .., n - 1}`.
    pub fn full(n: usize) -> Self {
        if n >= 32 {
            RelSet(u32::MAX)
        } else {
            RelSet((1u32 << n) - 1)
        }
    }

    pub fn from_bits(bits: u32) -> Self {
        RelSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn with(self, rel: usize) -> Self {
        RelSet(self.0 | (1 << rel))
    }

    pub fn union(self, other: RelSet) -> Self {
        RelSet(self.0 | other.0)
    }

    pub fn intersect(self, other: RelSet) -> Self {
        RelSet(self.0 & other.0)
    }

    pub fn minus(self, other: RelSet) -> Self {
        RelSet(self.0 & !other.0)
    }

    pub fn intersects(self, other: RelSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn contains(self, rel: usize) -> bool {
        self.0 & (1 << rel) != 0
    }

    pub fn is_subset_of(self, other: RelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        core::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let r = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(r)
            }
        })
    }

    /// Non-empty proper subsets, in increasing bit order.
    pub fn proper_subsets(self) -> impl Iterator<Item = RelSet> {
        let full = self.0;
        let mut sub = 0u32;
        core::iter::from_fn(move || {
            sub = sub.wrapping_sub(full) & full;
            if sub == 0 || sub == full {
                None
            } else {
                Some(RelSet(sub))
            }
        })
    }
}

impl fmt::Debug for RelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A base relation together with its (sorted) selection predicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LeafKey {
    pub relation: String,
    pub predicates: Vec<(String, i64)>,
}

impl LeafKey {
    pub fn new(relation: String, mut predicates: Vec<(String, i64)>) -> Self {
        predicates.sort();
        predicates.dedup();
        LeafKey {
            relation,
            predicates,
        }
    }
}

impl fmt::Display for LeafKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.relation)?;
        if !self.predicates.is_empty() {
            f.write_str("[")?;
            for (i, (c, v)) in self.predicates.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}={v}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

/// Canonical, order-free identity of a join: the sorted set of its
/// predicate-qualified leaves.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JoinKey(Vec<LeafKey>);

impl JoinKey {
    pub fn new(mut leaves: Vec<LeafKey>) -> Self {
        leaves.sort();
        leaves.dedup();
        JoinKey(leaves)
    }

    pub fn leaves(&self) -> &[LeafKey] {
        &self.0
    }
}

impl fmt::Display for JoinKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⋈ ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub key: JoinKey,
    pub cardinality: f64,
}

/// Validated join cardinalities, keyed canonically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<GammaEntry>", into = "Vec<GammaEntry>")]
pub struct Gamma {
    entries: BTreeMap<JoinKey, f64>,
}

impl Gamma {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &JoinKey) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn contains(&self, key: &JoinKey) -> bool {
        self.entries.contains_key(key)
    }

    /// Inserts or replaces. Negative and NaN values are clamped to 0.
    pub fn insert(&mut self, key: JoinKey, cardinality: f64) -> Option<f64> {
        let c = if cardinality > 0.0 { cardinality } else { 0.0 };
        self.entries.insert(key, c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JoinKey, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    /// Entries that belong to `graph`, re-keyed by relation set.
    pub fn resolve(&self, graph: &QueryGraph) -> BTreeMap<RelSet, f64> {
        self.entries
            .iter()
            .filter_map(|(k, v)| graph.set_of(k).map(|s| (s, *v)))
            .collect()
    }
}

impl From<Vec<GammaEntry>> for Gamma {
    fn from(v: Vec<GammaEntry>) -> Self {
        let mut g = Gamma::new();
        for e in v {
            g.insert(e.key, e.cardinality);
        }
        g
    }
}

impl From<Gamma> for Vec<GammaEntry> {
    fn from(g: Gamma) -> Self {
        g.entries
            .into_iter()
            .map(|(key, cardinality)| GammaEntry { key, cardinality })
            .collect()
    }
}

impl FromIterator<(JoinKey, f64)> for Gamma {
    fn from_iter<I: IntoIterator<Item = (JoinKey, f64)>>(iter: I) -> Self {
        let mut g = Gamma::new();
        for (k, v) in iter {
            g.insert(k, v);
        }
        g
    }
}

/// Physical join operators. The declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinOp {
    /// Builds on the right (inner) input, probes with the left (outer).
    Hash,
    /// Left input is the outer loop.
    NestedLoop,
}

impl JoinOp {
    pub const ALL: [JoinOp; 2] = [JoinOp::Hash, JoinOp::NestedLoop];

    pub fn short_name(self) -> &'static str {
        match self {
            JoinOp::Hash => "HJ",
            JoinOp::NestedLoop => "NL",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JoinOp::Hash => "HashJoin",
            JoinOp::NestedLoop => "NestedLoop",
        }
    }
}

/// Logical join tree: leaves are query relations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum JoinTree {
    Leaf(usize),
    Join(Box<JoinTree>, Box<JoinTree>),
}

impl JoinTree {
    pub fn join(left: JoinTree, right: JoinTree) -> Self {
        JoinTree::Join(Box::new(left), Box::new(right))
    }

    pub fn rels(&self) -> RelSet {
        match self {
            JoinTree::Leaf(r) => RelSet::single(*r),
            JoinTree::Join(l, r) => l.rels().union(r.rels()),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            JoinTree::Leaf(r) => out.push(*r),
            JoinTree::Join(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// Bottom-up, left-to-right encoding: the ordered leaf sequence of every
    /// join node in post-order.
    pub fn encoding(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.encode(&mut out);
        out
    }

    fn encode(&self, out: &mut Vec<Vec<usize>>) -> Vec<usize> {
        match self {
            JoinTree::Leaf(r) => vec![*r],
            JoinTree::Join(l, r) => {
                let mut seq = l.encode(out);
                seq.extend(r.encode(out));
                out.push(seq.clone());
                seq
            }
        }
    }

    /// The unordered joins as a sorted multiset of leaf-sets.
    pub fn unordered_joins(&self) -> Vec<RelSet> {
        let mut v: Vec<RelSet> = self
            .encoding()
            .iter()
            .map(|seq| seq.iter().fold(RelSet::EMPTY, |s, &r| s.with(r)))
            .collect();
        v.sort();
        v
    }

    pub fn join_count(&self) -> usize {
        match self {
            JoinTree::Leaf(_) => 0,
            JoinTree::Join(l, r) => 1 + l.join_count() + r.join_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanNode {
    Scan {
        rel: usize,
    },
    Join {
        op: JoinOp,
        left: Box<PlanNode>,
        right: Box<PlanNode>,
    },
}

impl PlanNode {
    pub fn scan(rel: usize) -> Self {
        PlanNode::Scan { rel }
    }

    pub fn join(op: JoinOp, left: PlanNode, right: PlanNode) -> Self {
        PlanNode::Join {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn rels(&self) -> RelSet {
        match self {
            PlanNode::Scan { rel } => RelSet::single(*rel),
            PlanNode::Join { left, right, .. } => left.rels().union(right.rels()),
        }
    }

    pub fn tree(&self) -> JoinTree {
        match self {
            PlanNode::Scan { rel } => JoinTree::Leaf(*rel),
            PlanNode::Join { left, right, .. } => JoinTree::join(left.tree(), right.tree()),
        }
    }

    fn collect_ops(&self, out: &mut Vec<JoinOp>) {
        if let PlanNode::Join { op, left, right } = self {
            left.collect_ops(out);
            right.collect_ops(out);
            out.push(*op);
        }
    }

    fn collect_joins(&self, out: &mut Vec<RelSet>) {
        if let PlanNode::Join { left, right, .. } = self {
            left.collect_joins(out);
            right.collect_joins(out);
            out.push(self.rels());
        }
    }

    fn render(&self, graph: &QueryGraph, out: &mut String) {
        match self {
            PlanNode::Scan { rel } => out.push_str(graph.alias(*rel)),
            PlanNode::Join { op, left, right } => {
                out.push_str(op.short_name());
                out.push('(');
                left.render(graph, out);
                out.push_str(", ");
                right.render(graph, out);
                out.push(')');
            }
        }
    }
}

/// A join tree annotated with operators. Build/probe sides follow child
/// order: the left child is the outer (probe) input and the right child the
/// inner (build) input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhysicalPlan {
    pub root: PlanNode,
}

impl PhysicalPlan {
    pub fn new(root: PlanNode) -> Self {
        PhysicalPlan { root }
    }

    /// `((r0 ⋈ r1) ⋈ r2) ⋈ ...` with one operator everywhere.
    pub fn left_deep(order: &[usize], op: JoinOp) -> Self {
        let mut it = order.iter();
        let first = PlanNode::scan(*it.next().expect("at least one relation"));
        PhysicalPlan::new(it.fold(first, |acc, &r| PlanNode::join(op, acc, PlanNode::scan(r))))
    }

    pub fn rels(&self) -> RelSet {
        self.root.rels()
    }

    pub fn tree(&self) -> JoinTree {
        self.root.tree()
    }

    pub fn encoding(&self) -> Vec<Vec<usize>> {
        self.tree().encoding()
    }

    /// Operators in post-order (the order of [`PhysicalPlan::encoding`]).
    pub fn ops(&self) -> Vec<JoinOp> {
        let mut v = Vec::new();
        self.root.collect_ops(&mut v);
        v
    }

    /// Leaf-sets of the join nodes in post-order.
    pub fn join_sets(&self) -> Vec<RelSet> {
        let mut v = Vec::new();
        self.root.collect_joins(&mut v);
        v
    }

    /// Compact one-line form such as `HJ(NL(R1, R2), R3)`.
    pub fn render(&self, graph: &QueryGraph) -> String {
        let mut s = String::new();
        self.root.render(graph, &mut s);
        s
    }

    /// Encoding with relation aliases, e.g. `["R1R2", "R1R2R3"]`.
    pub fn encoding_labels(&self, graph: &QueryGraph) -> Vec<String> {
        self.encoding()
            .into_iter()
            .map(|seq| graph.set_label(seq))
            .collect()
    }

    /// Checks that leaves are distinct and exactly cover `expected`.
    pub fn check_covers(&self, expected: RelSet) -> Result<()> {
        let leaves = self.tree().leaves();
        let set = leaves.iter().fold(RelSet::EMPTY, |s, &r| s.with(r));
        if set.len() != leaves.len() || set != expected {
            return Err(Error::InvalidQuery(
                "plan leaves do not match the query relations".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transformation {
    Local,
    Global,
}

/// Local iff both trees contain the same unordered joins.
pub fn classify_transformation(a: &JoinTree, b: &JoinTree) -> Result<Transformation> {
    if a.rels() != b.rels() {
        return Err(Error::InvalidParameter(
            "join trees range over different relations".into(),
        ));
    }
    Ok(if a.unordered_joins() == b.unordered_joins() {
        Transformation::Local
    } else {
        Transformation::Global
    })
}

/// Whether every join of `plan` appears in some tree of `plans`.
pub fn covered(plan: &JoinTree, plans: &[JoinTree]) -> bool {
    let seen: Vec<RelSet> = plans.iter().flat_map(|p| p.unordered_joins()).collect();
    plan.unordered_joins().iter().all(|j| seen.contains(j))
}

/// Every plan with the same unordered joins as `plan`: all combinations of
/// child swaps and operator choices from `ops`. Includes `plan` itself when
/// its operators are drawn from `ops`.
pub fn local_transformations(plan: &PhysicalPlan, ops: &[JoinOp]) -> Vec<PhysicalPlan> {
    fn variants(node: &PlanNode, ops: &[JoinOp]) -> Vec<PlanNode> {
        match node {
            PlanNode::Scan { .. } => vec![node.clone()],
            PlanNode::Join { left, right, .. } => {
                let ls = variants(left, ops);
                let rs = variants(right, ops);
                let mut out = Vec::with_capacity(ls.len() * rs.len() * 2 * ops.len());
                for l in &ls {
                    for r in &rs {
                        for &op in ops {
                            out.push(PlanNode::join(op, l.clone(), r.clone()));
                            out.push(PlanNode::join(op, r.clone(), l.clone()));
                        }
                    }
                }
                out
            }
        }
    }
    variants(&plan.root, ops)
        .into_iter()
        .map(PhysicalPlan::new)
        .collect()
}
