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

//! Sampling-based selectivity estimation and plan validation.
//!
//! For relations `R_1..R_K` with samples `R_k^s`, the selectivity of a
//! select-join query `q` is estimated as
//!
//! ```text
//! ρ̂_q = |q(R_1^s, ..., R_K^s)| / (|R_1^s| · ... · |R_K^s|)
//! ```
//!
//! Selections are applied to the samples before joining; the denominator
//! uses the unfiltered sample sizes. Plan validation applies the same
//! estimator to every join node, scaled to full-data cardinalities by
//! dividing the observed count by the product of the sampling fractions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::card_est::Selectivity;
use crate::catalog::{Catalog, Relation, SampleTable};
use crate::exec::{execute, ExecOptions};
use crate::plan::{Gamma, JoinOp, PhysicalPlan, RelSet};
use crate::query::QueryGraph;
use crate::{Error, Result};

/// Validated cardinalities from one plan, keyed like [`Gamma`].
pub type Delta = Gamma;

/// The samples of each relation of `graph`, in query order.
pub fn samples_for<'c>(graph: &QueryGraph, catalog: &'c Catalog) -> Result<Vec<&'c SampleTable>> {
    graph
        .relations()
        .iter()
        .map(|r| {
            catalog
                .sample(&r.table)
                .ok_or_else(|| Error::MissingSample(r.table.clone()))
        })
        .collect()
}

fn check_samples(graph: &QueryGraph, samples: &[&SampleTable]) -> Result<()> {
    if samples.len() != graph.len() {
        return Err(Error::MissingSample(
            graph
                .relations()
                .get(samples.len())
                .map_or_else(String::new, |r| r.table.clone()),
        ));
    }
    Ok(())
}

/// `ρ̂` for the whole query.
pub fn sample_selectivity(graph: &QueryGraph, samples: &[&SampleTable]) -> Result<Selectivity> {
    check_samples(graph, samples)?;
    if let Some(s) = samples.iter().find(|s| s.is_empty()) {
        return Err(Error::EmptySample(s.source.clone()));
    }
    let tables: Vec<&Relation> = samples.iter().map(|s| &s.rows).collect();
    let order: Vec<usize> = (0..graph.len()).collect();
    let plan = PhysicalPlan::left_deep(&order, JoinOp::Hash);
    let rows = execute(&plan, graph, &tables, ExecOptions::default())?.result_rows;
    let denom: f64 = samples.iter().map(|s| s.len() as f64).product();
    Ok(Selectivity::clamped(rows as f64 / denom))
}

/// Outcome of validating one plan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub delta: Delta,
    /// Join nodes left unvalidated because a sample beneath them is empty.
    pub unvalidated: Vec<RelSet>,
}

/// Runs `plan` over the samples and estimates every join node's
/// cardinality. With `zero_floor`, an empty observation counts as one row.
pub fn validate_plan(
    plan: &PhysicalPlan,
    graph: &QueryGraph,
    samples: &[&SampleTable],
    zero_floor: bool,
) -> Result<Validation> {
    check_samples(graph, samples)?;
    plan.check_covers(graph.all())?;
    let tables: Vec<&Relation> = samples.iter().map(|s| &s.rows).collect();
    let report = execute(plan, graph, &tables, ExecOptions::default())?;
    let mut out = Validation::default();
    for set in plan.join_sets() {
        if set.iter().any(|r| samples[r].is_empty()) {
            out.unvalidated.push(set);
            continue;
        }
        let key = graph.key(set);
        let observed = report
            .node_rows
            .get(&key)
            .copied()
            .ok_or_else(|| Error::MissingCardinality(key.to_string()))?;
        let observed = if zero_floor && observed == 0 { 1.0 } else { observed as f64 };
        let scale: f64 = set.iter().map(|r| samples[r].fraction.min(1.0)).product();
        out.delta.insert(key, observed / scale);
    }
    Ok(out)
}

/// `Γ ∪ Δ`; on a shared key the value from `delta` wins.
pub fn merge_gamma(gamma: &Gamma, delta: &Delta) -> Gamma {
    let mut out = gamma.clone();
    for (k, v) in delta.iter() {
        out.insert(k.clone(), v);
    }
    out
}
