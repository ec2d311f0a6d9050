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

//! EXPLAIN rendering.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use crate::cost::{CardSource, CostModel, Overlay};
use crate::plan::{PhysicalPlan, PlanNode, RelSet};
use crate::query::QueryGraph;
use crate::{Error, Result};

/// Indented plan tree, one line per node, with each node's estimated rows
/// and cumulative cost.
/// Joins whose cardinality comes from `validated` are marked `[Γ]`.
pub fn explain<E: CardSource + ?Sized>(
    plan: &PhysicalPlan,
    graph: &QueryGraph,
    estimates: &E,
    validated: &BTreeMap<RelSet, f64>,
    model: &CostModel,
) -> Result<String> {
    let cards = Overlay::new(estimates, validated);
    let mut out = String::new();
    render(&plan.root, graph, &cards, model, 0, &mut out)?;
    Ok(out)
}

fn render<E: CardSource + ?Sized>(
    node: &PlanNode,
    graph: &QueryGraph,
    cards: &Overlay<'_, E>,
    model: &CostModel,
    depth: usize,
    out: &mut String,
) -> Result<(f64, f64)> {
    let set = node.rels();
    let rows = cards
        .cardinality(set)
        .ok_or_else(|| Error::MissingCardinality(graph.set_label(set.iter())))?;
    let line_at = out.len();
    let (label, cost) = match node {
        PlanNode::Scan { rel } => {
            let base = cards
                .base_rows(*rel)
                .ok_or_else(|| Error::MissingCardinality(graph.alias(*rel).into()))?;
            let b = graph.relation(*rel);
            let mut label = format!("Scan {}", b.alias);
            if b.alias != b.table {
                label = format!("{label} ({})", b.table);
            }
            for (i, s) in b.selections.iter().enumerate() {
                label.push_str(if i == 0 { " where " } else { " and " });
                label.push_str(&format!("{} = {}", s.column, s.value));
            }
            out.push('\n');
            (label, model.scan(base))
        }
        PlanNode::Join { op, left, right } => {
            out.push('\n');
            let (lc, lrows) = render(left, graph, cards, model, depth + 1, out)?;
            let (rc, rrows) = render(right, graph, cards, model, depth + 1, out)?;
            let mut label = String::from(op.name());
            if cards.is_validated(set) {
                label.push_str(" [Γ]");
            }
            (label, lc + rc + model.join(*op, lrows, rrows, rows))
        }
    };
    let line = format!(
        "{:indent$}{label}  rows={} cost={:.2}",
        "",
        libm::round(rows),
        cost,
        indent = depth * 2
    );
    out.insert_str(line_at, &line);
    Ok((cost, rows))
}
