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

//! Materializing plan executor.
//!
//! Intermediate results are column-wise vectors of row ids, one vector per
//! base relation below the operator. Every operator materializes its output
//! before its parent runs, so each join node's row count is observed exactly.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use crate::catalog::Relation;
use crate::plan::{JoinKey, JoinOp, PhysicalPlan, PlanNode, RelSet};
use crate::query::{Member, QueryGraph};
use crate::{Error, Result};

/// Largest filtered cross product [`nested_loop_reference`] will enumerate.
pub const REFERENCE_GUARD: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExecOptions {
    /// Skip a join's inner subtree when its outer input is empty.
    pub short_circuit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecReport {
    pub result_rows: u64,
    /// Rows emitted by each join node. Nodes skipped by short-circuiting
    /// emitted nothing and are recorded as 0.
    #[serde(with = "keyed_rows")]
    pub node_rows: BTreeMap<JoinKey, u64>,
    /// Join nodes that were never run because of short-circuiting.
    pub skipped: Vec<JoinKey>,
    /// Rows emitted by scans after their filters.
    pub leaf_rows: u64,
    /// `leaf_rows` plus the rows emitted by every join.
    pub rows_processed: u64,
    pub wall_time: Duration,
}

impl ExecReport {
    /// Rows emitted by join operators.
    pub fn join_rows(&self) -> u64 {
        self.rows_processed - self.leaf_rows
    }
}

mod keyed_rows {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        key: JoinKey,
        rows: u64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<JoinKey, u64>, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(k, v)| Row { key: k.clone(), rows: *v }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<BTreeMap<JoinKey, u64>, D::Error> {
        let rows: Vec<Row> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(|r| (r.key, r.rows)).collect())
    }
}

#[derive(Debug, Clone, Default)]
struct Batch {
    rels: Vec<usize>,
    ids: Vec<Vec<u32>>,
}

impl Batch {
    fn len(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }

    fn slot(&self, rel: usize) -> usize {
        self.rels.iter().position(|&r| r == rel).expect("relation in batch")
    }
}

/// Column lookup from query columns to bound tables.
struct Bound<'a> {
    tables: &'a [&'a Relation],
    cols: Vec<Vec<usize>>,
}

impl<'a> Bound<'a> {
    fn new(graph: &QueryGraph, tables: &'a [&'a Relation]) -> Result<Self> {
        if tables.len() != graph.len() {
            let missing = graph.len().min(tables.len());
            return Err(Error::MissingBinding(
                graph.relations().get(missing).map_or_else(|| "?".to_string(), |r| r.alias.clone()),
            ));
        }
        let mut cols = Vec::with_capacity(graph.len());
        for (rel, table) in graph.relations().iter().zip(tables) {
            let idx = rel
                .columns
                .iter()
                .map(|c| {
                    table.column_index(c).ok_or_else(|| Error::UnknownColumn {
                        relation: rel.alias.clone(),
                        column: c.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            cols.push(idx);
        }
        Ok(Bound { tables, cols })
    }

    fn value(&self, m: Member, row: u32) -> i64 {
        self.tables[m.rel].values(self.cols[m.rel][m.col])[row as usize]
    }

    /// Rows of `rel` passing its selections and the equalities a join
    /// class implies between its own columns.
    fn filter(&self, graph: &QueryGraph, rel: usize) -> Vec<u32> {
        let b = graph.relation(rel);
        let mut local: Vec<(Member, Member)> = Vec::new();
        for class in graph.classes() {
            let mut own = class.members.iter().filter(|m| m.rel == rel);
            if let Some(&first) = own.next() {
                local.extend(own.map(|&m| (first, m)));
            }
        }
        (0..self.tables[rel].row_count() as u32)
            .filter(|&row| {
                b.selections
                    .iter()
                    .all(|s| self.value(Member { rel, col: s.col }, row) == s.value)
                    && local.iter().all(|&(x, y)| self.value(x, row) == self.value(y, row))
            })
            .collect()
    }
}

struct Run<'g, 'a> {
    graph: &'g QueryGraph,
    bound: Bound<'a>,
    opts: ExecOptions,
    node_rows: BTreeMap<JoinKey, u64>,
    skipped: Vec<JoinKey>,
    leaf_rows: u64,
    join_rows: u64,
}

impl Run<'_, '_> {
    fn skip(&mut self, node: &PlanNode) {
        if let PlanNode::Join { left, right, .. } = node {
            self.skip(left);
            self.skip(right);
            let key = self.graph.key(node.rels());
            self.node_rows.insert(key.clone(), 0);
            self.skipped.push(key);
        }
    }

    fn eval(&mut self, node: &PlanNode) -> Batch {
        match node {
            PlanNode::Scan { rel } => {
                let ids = self.bound.filter(self.graph, *rel);
                self.leaf_rows += ids.len() as u64;
                Batch {
                    rels: vec![*rel],
                    ids: vec![ids],
                }
            }
            PlanNode::Join { op, left, right } => {
                let outer = self.eval(left);
                let out = if self.opts.short_circuit && outer.len() == 0 {
                    self.skip(right);
                    let mut rels = outer.rels.clone();
                    rels.extend(right.rels().iter());
                    Batch {
                        ids: vec![Vec::new(); rels.len()],
                        rels,
                    }
                } else {
                    let inner = self.eval(right);
                    self.join(*op, &outer, &inner, left.rels(), right.rels())
                };
                self.join_rows += out.len() as u64;
                self.node_rows.insert(self.graph.key(node.rels()), out.len() as u64);
                out
            }
        }
    }

    /// One representative column per side for every class spanning both.
    fn keys(&self, l: RelSet, r: RelSet) -> Vec<(Member, Member)> {
        self.graph
            .classes()
            .iter()
            .filter_map(|c| {
                let a = c.members.iter().find(|m| l.contains(m.rel))?;
                let b = c.members.iter().find(|m| r.contains(m.rel))?;
                Some((*a, *b))
            })
            .collect()
    }

    fn join(&self, op: JoinOp, outer: &Batch, inner: &Batch, l: RelSet, r: RelSet) -> Batch {
        let keys = self.keys(l, r);
        let okey = |i: usize| -> Vec<i64> {
            keys.iter()
                .map(|(m, _)| self.bound.value(*m, outer.ids[outer.slot(m.rel)][i]))
                .collect()
        };
        let ikey = |j: usize| -> Vec<i64> {
            keys.iter()
                .map(|(_, m)| self.bound.value(*m, inner.ids[inner.slot(m.rel)][j]))
                .collect()
        };
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        match op {
            JoinOp::Hash => {
                let mut table: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
                for j in 0..inner.len() {
                    table.entry(ikey(j)).or_default().push(j as u32);
                }
                if !table.is_empty() {
                    for i in 0..outer.len() {
                        if let Some(js) = table.get(&okey(i)) {
                            pairs.extend(js.iter().map(|&j| (i as u32, j)));
                        }
                    }
                }
            }
            JoinOp::NestedLoop => {
                let inner_keys: Vec<Vec<i64>> = (0..inner.len()).map(ikey).collect();
                for i in 0..outer.len() {
                    let k = okey(i);
                    for (j, ik) in inner_keys.iter().enumerate() {
                        if *ik == k {
                            pairs.push((i as u32, j as u32));
                        }
                    }
                }
            }
        }
        let mut rels = outer.rels.clone();
        rels.extend_from_slice(&inner.rels);
        let mut ids: Vec<Vec<u32>> = Vec::with_capacity(rels.len());
        for col in &outer.ids {
            ids.push(pairs.iter().map(|&(i, _)| col[i as usize]).collect());
        }
        for col in &inner.ids {
            ids.push(pairs.iter().map(|&(_, j)| col[j as usize]).collect());
        }
        Batch { rels, ids }
    }
}

/// Runs `plan` with `tables[i]` bound to the query's `i`-th relation.
pub fn execute(
    plan: &PhysicalPlan,
    graph: &QueryGraph,
    tables: &[&Relation],
    opts: ExecOptions,
) -> Result<ExecReport> {
    plan.check_covers(graph.all())?;
    #[cfg(feature = "std")]
    let start = std::time::Instant::now();
    let mut run = Run {
        graph,
        bound: Bound::new(graph, tables)?,
        opts,
        node_rows: BTreeMap::new(),
        skipped: Vec::new(),
        leaf_rows: 0,
        join_rows: 0,
    };
    let out = run.eval(&plan.root);
    #[cfg(feature = "std")]
    let wall_time = start.elapsed();
    #[cfg(not(feature = "std"))]
    let wall_time = Duration::ZERO;
    Ok(ExecReport {
        result_rows: out.len() as u64,
        node_rows: run.node_rows,
        skipped: run.skipped,
        leaf_rows: run.leaf_rows,
        rows_processed: run.leaf_rows + run.join_rows,
        wall_time,
    })
}

/// Exact result size by direct evaluation of the query's predicates over
/// the cross product of the filtered relations.
pub fn nested_loop_reference(graph: &QueryGraph, tables: &[&Relation]) -> Result<u64> {
    let bound = Bound::new(graph, tables)?;
    let rows: Vec<Vec<u32>> = (0..graph.len()).map(|r| bound.filter(graph, r)).collect();
    let product = rows
        .iter()
        .try_fold(1u128, |acc, r| acc.checked_mul(r.len() as u128))
        .unwrap_or(u128::MAX);
    if product > REFERENCE_GUARD {
        return Err(Error::GuardExceeded(product));
    }
    // Predicates checked at the depth where their later relation is bound.
    let mut checks: Vec<Vec<(Member, Member)>> = vec![Vec::new(); graph.len()];
    for &(a, b) in graph.join_predicates() {
        if a.rel != b.rel {
            checks[a.rel.max(b.rel)].push((a, b));
        }
    }
    fn walk(
        depth: usize,
        current: &mut Vec<u32>,
        rows: &[Vec<u32>],
        checks: &[Vec<(Member, Member)>],
        bound: &Bound<'_>,
    ) -> u64 {
        if depth == rows.len() {
            return 1;
        }
        let mut count = 0;
        for &row in &rows[depth] {
            current.push(row);
            let ok = checks[depth]
                .iter()
                .all(|&(a, b)| bound.value(a, current[a.rel]) == bound.value(b, current[b.rel]));
            if ok {
                count += walk(depth + 1, current, rows, checks, bound);
            }
            current.pop();
        }
        count
    }
    Ok(walk(0, &mut Vec::with_capacity(graph.len()), &rows, &checks, &bound))
}
