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

//! Histogram-based selectivity and cardinality estimation.
//!
//! Equality selections use the recorded MCV frequency when the constant is
//! an MCV and a uniform spread over the remaining distinct values otherwise.
//! Equi-joins use `1 / max(n(B1), n(B2))` unless both sides have MCV lists,
//! in which case the MCV lists are joined exactly and the leftover mass is
//! charged the same System-R factor over the non-MCV distinct values.
//! Predicates combine under attribute-value independence.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::cost::CardSource;
use crate::plan::{Gamma, RelSet};
use crate::query::QueryGraph;
use crate::stats::AttributeStats;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selectivity(f64);

impl Selectivity {
    pub const ONE: Selectivity = Selectivity(1.0);
    pub const ZERO: Selectivity = Selectivity(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Selectivity(value))
        } else {
            Err(Error::InvalidParameter("selectivity must lie in [0, 1]".to_string()))
        }
    }

    /// Clamps rounding residue into `[0, 1]`.
    pub fn clamped(value: f64) -> Self {
        Selectivity(if value > 1.0 {
            1.0
        } else if value > 0.0 {
            value
        } else {
            0.0
        })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Selectivity of `A = c`.
pub fn eq_selectivity(stats: &AttributeStats, c: i64) -> Selectivity {
    if let Some(f) = stats.mcv_frequency(c) {
        return Selectivity::clamped(f);
    }
    let rest = stats.n_distinct.saturating_sub(stats.mcvs.len() as u64);
    if rest == 0 {
        return Selectivity::ZERO;
    }
    Selectivity::clamped((1.0 - stats.mcv_mass()) / rest as f64)
}

/// Selectivity of the equi-join `B1 = B2`.
pub fn join_selectivity(left: &AttributeStats, right: &AttributeStats) -> Selectivity {
    let max_distinct = left.n_distinct.max(right.n_distinct).max(1);
    if left.mcvs.is_empty() || right.mcvs.is_empty() {
        return Selectivity::clamped(1.0 / max_distinct as f64);
    }
    let right_freq: BTreeMap<i64, f64> = right.mcvs.iter().map(|m| (m.value, m.frequency)).collect();
    let matched: f64 = left
        .mcvs
        .iter()
        .filter_map(|m| right_freq.get(&m.value).map(|fr| m.frequency * fr))
        .sum();
    let rest_left = left.n_distinct.saturating_sub(left.mcvs.len() as u64);
    let rest_right = right.n_distinct.saturating_sub(right.mcvs.len() as u64);
    let residual = (1.0 - left.mcv_mass()).max(0.0) * (1.0 - right.mcv_mass()).max(0.0)
        / rest_left.max(rest_right).max(1) as f64;
    Selectivity::clamped(matched + residual)
}

/// Product of independent selectivities.
pub fn combine_avi(sels: &[Selectivity]) -> Selectivity {
    Selectivity::clamped(sels.iter().map(|s| s.0).product())
}

/// Histogram estimates for every subset of a bound query's relations.
#[derive(Debug, Clone)]
pub struct HistogramEstimator {
    base_rows: Vec<f64>,
    leaf_sels: Vec<Vec<Selectivity>>,
    /// Per class: member relations and the pairwise join selectivity matrix.
    classes: Vec<(Vec<usize>, Vec<Vec<Selectivity>>)>,
}

impl HistogramEstimator {
    pub fn new(graph: &QueryGraph, catalog: &Catalog) -> Result<Self> {
        let mut base_rows = Vec::with_capacity(graph.len());
        let mut col_stats: Vec<Option<&crate::stats::TableStats>> = Vec::with_capacity(graph.len());
        for rel in graph.relations() {
            let table = catalog
                .relation(&rel.table)
                .ok_or_else(|| Error::UnknownRelation(rel.table.clone()))?;
            base_rows.push(table.row_count() as f64);
            let stats = catalog.stats(&rel.table);
            if stats.is_none() && table.row_count() > 0 {
                return Err(Error::MissingStats(rel.table.clone()));
            }
            col_stats.push(stats);
        }
        let attr = |rel: usize, col: usize| -> Option<&AttributeStats> {
            let name = &graph.relation(rel).columns[col];
            col_stats[rel].and_then(|s| s.get(name))
        };

        let leaf_sels = graph
            .relations()
            .iter()
            .enumerate()
            .map(|(r, rel)| {
                rel.selections
                    .iter()
                    .map(|s| attr(r, s.col).map_or(Selectivity::ZERO, |st| eq_selectivity(st, s.value)))
                    .collect()
            })
            .collect();

        let classes = graph
            .classes()
            .iter()
            .map(|class| {
                let rels = class.members.iter().map(|m| m.rel).collect();
                let matrix = class
                    .members
                    .iter()
                    .map(|a| {
                        class
                            .members
                            .iter()
                            .map(|b| match (attr(a.rel, a.col), attr(b.rel, b.col)) {
                                (Some(x), Some(y)) => join_selectivity(x, y),
                                _ => Selectivity::ZERO,
                            })
                            .collect()
                    })
                    .collect();
                (rels, matrix)
            })
            .collect();

        Ok(HistogramEstimator {
            base_rows,
            leaf_sels,
            classes,
        })
    }

    pub fn base_rows(&self, rel: usize) -> f64 {
        self.base_rows[rel]
    }

    /// `∏ |R| × combine_avi(selections, one join factor per class merge)`.
    ///
    /// Within a class the members present in `set` are chained in canonical
    /// order, so a class with `t` members in `set` contributes `t - 1` factors.
    pub fn estimate(&self, set: RelSet) -> f64 {
        let mut sels: Vec<Selectivity> = Vec::new();
        let mut rows = 1.0;
        for r in set.iter() {
            rows *= self.base_rows[r];
            sels.extend_from_slice(&self.leaf_sels[r]);
        }
        for (members, matrix) in &self.classes {
            let mut prev: Option<usize> = None;
            for (i, &rel) in members.iter().enumerate() {
                if !set.contains(rel) {
                    continue;
                }
                if let Some(p) = prev {
                    sels.push(matrix[p][i]);
                }
                prev = Some(i);
            }
        }
        rows * combine_avi(&sels).value()
    }
}

impl CardSource for HistogramEstimator {
    fn base_rows(&self, rel: usize) -> Option<f64> {
        Some(self.base_rows[rel])
    }

    fn cardinality(&self, set: RelSet) -> Option<f64> {
        Some(self.estimate(set))
    }
}

/// One-shot Γ-first estimate for `set`.
pub fn estimate_cardinality(
    graph: &QueryGraph,
    catalog: &Catalog,
    gamma: &Gamma,
    set: RelSet,
) -> Result<f64> {
    if !set.is_subset_of(graph.all()) {
        return Err(Error::InvalidParameter("join set is not part of the query".to_string()));
    }
    if let Some(v) = gamma.get(&graph.key(set)) {
        return Ok(v);
    }
    Ok(HistogramEstimator::new(graph, catalog)?.estimate(set))
}
