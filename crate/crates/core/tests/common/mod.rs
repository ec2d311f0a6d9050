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

//! Random catalogs, queries and a brute-force plan enumerator shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use reoptdb_core::cost::TreeShape;
use reoptdb_core::stats::DEFAULT_BUCKET_COUNT;
use reoptdb_core::{
    plan_cost, CardSource, Catalog, ColumnRef, CostModel, JoinOp, JoinPredicate, PhysicalPlan,
    PlanNode, QueryGraph, QuerySpec, RelSet, Relation, RelationRef, Selection,
};

pub const COLUMNS: [&str; 3] = ["c0", "c1", "c2"];

/// A catalog of 3 to 6 tables with small domains. `c1` is derived from
/// `c0` (equal, or shifted on a fraction of rows); `c2` is skewed and
/// independent.
pub fn random_catalog(rng: &mut impl Rng, fraction: f64, mcv_limit: usize) -> Catalog {
    let mut cat = Catalog::new();
    let tables = rng.gen_range(3..=6);
    for t in 0..tables {
        let rows = rng.gen_range(30..=200);
        let domain: i64 = rng.gen_range(3..=20);
        let noise = rng.gen_range(0.0..0.5);
        let mut c0 = Vec::with_capacity(rows);
        let mut c1 = Vec::with_capacity(rows);
        let mut c2 = Vec::with_capacity(rows);
        for _ in 0..rows {
            let a = rng.gen_range(0..domain);
            c0.push(a);
            c1.push(if rng.gen_bool(noise) { (a + 1) % domain } else { a });
            c2.push(rng.gen_range(0..domain).min(rng.gen_range(0..domain)));
        }
        cat.add_relation(
            Relation::from_columns(format!("T{t}"), [("c0", c0), ("c1", c1), ("c2", c2)]).unwrap(),
        );
    }
    cat.analyze_all(mcv_limit, DEFAULT_BUCKET_COUNT).unwrap();
    cat.sample_all(fraction, rng.gen()).unwrap();
    cat
}

/// A connected select-join query over 2 to `max_rels` distinct tables.
pub fn random_query(rng: &mut impl Rng, cat: &Catalog, max_rels: usize) -> QuerySpec {
    let names: Vec<String> = cat.relations().map(|r| r.name().to_string()).collect();
    let k = rng.gen_range(2..=max_rels.min(names.len()));
    let mut pool = names.clone();
    let mut chosen = Vec::new();
    for _ in 0..k {
        chosen.push(pool.remove(rng.gen_range(0..pool.len())));
    }
    let col = |rng: &mut dyn rand::RngCore| COLUMNS[(rng.next_u32() % 3) as usize];
    let mut joins = Vec::new();
    for i in 1..k {
        let j = rng.gen_range(0..i);
        joins.push(JoinPredicate {
            left: ColumnRef::new(chosen[i].clone(), col(rng)),
            right: ColumnRef::new(chosen[j].clone(), col(rng)),
        });
    }
    if k > 2 && rng.gen_bool(0.3) {
        let a = rng.gen_range(0..k);
        let b = (a + rng.gen_range(1..k)) % k;
        joins.push(JoinPredicate {
            left: ColumnRef::new(chosen[a].clone(), col(rng)),
            right: ColumnRef::new(chosen[b].clone(), col(rng)),
        });
    }
    let mut selections = Vec::new();
    for name in &chosen {
        if rng.gen_bool(0.5) {
            let rel = cat.relation(name).unwrap();
            let c = col(rng);
            let values = rel.column(c).unwrap();
            let value = values[rng.gen_range(0..values.len())];
            selections.push(Selection {
                column: ColumnRef::new(name.clone(), c),
                value,
            });
        }
    }
    QuerySpec::new(chosen.into_iter().map(RelationRef::new).collect(), selections, joins).unwrap()
}

pub fn random_cost_model(rng: &mut impl Rng) -> CostModel {
    CostModel {
        scan_row: rng.gen_range(0.1..2.0),
        hash_build_row: rng.gen_range(0.1..2.0),
        hash_probe_row: rng.gen_range(0.1..2.0),
        nl_inner_row: rng.gen_range(0.01..1.0),
        output_row: rng.gen_range(0.01..1.0),
    }
}

pub fn bindings<'c>(graph: &QueryGraph, cat: &'c Catalog) -> Vec<&'c Relation> {
    graph
        .relations()
        .iter()
        .map(|r| cat.relation(&r.table).unwrap())
        .collect()
}

/// Join-connectivity computed from the query text alone: two relation sets
/// connect when a chain of equality predicates links a column of one to a
/// column of the other.
pub struct Connectivity {
    classes: Vec<RelSet>,
}

impl Connectivity {
    pub fn new(graph: &QueryGraph) -> Self {
        let alias = graph.alias_index();
        let spec = graph.spec();
        let mut cols: Vec<(usize, String)> = Vec::new();
        let id = |c: &ColumnRef, cols: &mut Vec<(usize, String)>| {
            let key = (alias[&c.relation], c.column.clone());
            match cols.iter().position(|x| *x == key) {
                Some(i) => i,
                None => {
                    cols.push(key);
                    cols.len() - 1
                }
            }
        };
        let mut edges = Vec::new();
        for j in spec.joins() {
            let a = id(&j.left, &mut cols);
            let b = id(&j.right, &mut cols);
            edges.push((a, b));
        }
        let mut label: Vec<usize> = (0..cols.len()).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for &(a, b) in &edges {
                let m = label[a].min(label[b]);
                if label[a] != m || label[b] != m {
                    label[a] = m;
                    label[b] = m;
                    changed = true;
                }
            }
        }
        let mut classes: BTreeMap<usize, RelSet> = BTreeMap::new();
        for (i, (rel, _)) in cols.iter().enumerate() {
            let e = classes.entry(label[i]).or_insert(RelSet::EMPTY);
            *e = e.with(*rel);
        }
        Connectivity {
            classes: classes.into_values().collect(),
        }
    }

    pub fn links(&self, a: RelSet, b: RelSet) -> bool {
        self.classes.iter().any(|c| c.intersects(a) && c.intersects(b))
    }
}

/// Every plan over `set` in the given shape, without cross products.
pub fn all_plans(
    conn: &Connectivity,
    set: RelSet,
    shape: TreeShape,
    ops: &[JoinOp],
    memo: &mut BTreeMap<RelSet, Vec<PlanNode>>,
) -> Vec<PlanNode> {
    if let Some(v) = memo.get(&set) {
        return v.clone();
    }
    let out = if set.len() == 1 {
        vec![PlanNode::scan(set.iter().next().unwrap())]
    } else {
        let mut out = Vec::new();
        let bits = set.bits();
        let mut sub = (bits - 1) & bits;
        while sub != 0 {
            let left = RelSet::from_bits(sub);
            let right = set.minus(left);
            let shape_ok = shape == TreeShape::Bushy || left.len() == 1 || right.len() == 1;
            if shape_ok && conn.links(left, right) {
                let ls = all_plans(conn, left, shape, ops, memo);
                let rs = all_plans(conn, right, shape, ops, memo);
                for l in &ls {
                    for r in &rs {
                        for &op in ops {
                            out.push(PlanNode::join(op, l.clone(), r.clone()));
                        }
                    }
                }
            }
            sub = (sub - 1) & bits;
        }
        out
    };
    memo.insert(set, out.clone());
    out
}

/// Minimum cost over exhaustive enumeration.
pub fn brute_force_min(
    graph: &QueryGraph,
    cards: &impl CardSource,
    shape: TreeShape,
    ops: &[JoinOp],
    model: &CostModel,
) -> Option<f64> {
    let conn = Connectivity::new(graph);
    let mut memo = BTreeMap::new();
    all_plans(&conn, graph.all(), shape, ops, &mut memo)
        .into_iter()
        .map(|n| plan_cost(&PhysicalPlan::new(n), graph, cards, model).unwrap())
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
