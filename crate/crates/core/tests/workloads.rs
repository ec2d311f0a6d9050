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


use proptest::prelude::*;

use reoptdb_core::ball::{sn_closed_form, sn_monte_carlo};
use reoptdb_core::ott::{
    avi_estimated_cardinality, chi_squared, correlation, generate_ott, ott_queries, true_cardinality, OttConfig,
};
use reoptdb_core::{nested_loop_reference, parse, Catalog, ColumnRef, JoinPredicate, QueryGraph, QuerySpec, RelationRef, Selection};

#[test]
fn reference_executor_matches_ott_ground_truth() {
    let cfg = OttConfig { tables: 4, rows_per_table: 100, rows_per_value: 10, seed: 1 };
    let mut cat = Catalog::new();
    let tables = generate_ott(&cfg).unwrap();
    for r in &tables {
        cat.add_relation(r.clone());
    }
    let refs: Vec<_> = tables.iter().collect();
    let mut checked = 0;
    for m in 0..=3 {
        for q in ott_queries(&cfg, 3, m).unwrap() {
            let g = QueryGraph::bind(&q.spec(), &cat).unwrap();
            assert_eq!(nested_loop_reference(&g, &refs).unwrap() as u128, true_cardinality(&cfg, &q), "{:?}", q.constants);
            checked += 1;
        }
    }
    assert!(checked >= 8);
}

#[test]
fn equal_constants_are_underestimated() {
    let cfg = OttConfig::default();
    for q in ott_queries(&cfg, 4, 5).unwrap() {
        assert!(!q.is_empty_query());
        assert!(true_cardinality(&cfg, &q) as f64 > avi_estimated_cardinality(&cfg, &q));
    }
}

#[test]
fn generated_tables_are_independent() {
    let cfg = OttConfig { tables: 4, rows_per_table: 10_000, rows_per_value: 1000, seed: 17 };
    let tables = generate_ott(&cfg).unwrap();
    let l = cfg.domain();
    for j in 0..tables.len() {
        for k in j + 1..tables.len() {
            let x = tables[j].column(&format!("A{}", j + 1)).unwrap();
            let y = tables[k].column(&format!("A{}", k + 1)).unwrap();
            let (stat, dof) = chi_squared(x, y, l);
            let sigma = (2.0 * dof as f64).sqrt();
            assert!((stat - dof as f64).abs() <= 3.0 * sigma, "R{} vs R{}: {stat} on {dof}", j + 1, k + 1);
            let r = correlation(x, y);
            assert!(r.abs() <= 3.0 / (x.len() as f64).sqrt(), "{r}");
        }
    }
}

#[test]
fn sn_is_strictly_increasing_and_bounded() {
    let mut prev = 0.0;
    for n in 1..=1000 {
        let s = sn_closed_form(n).unwrap();
        assert!(s > prev, "S_{n} = {s}");
        assert!((1.0..=n as f64).contains(&s), "S_{n} = {s}");
        prev = s;
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    assert_eq!(sn_monte_carlo(50, 2000, 9).unwrap(), sn_monte_carlo(50, 2000, 9).unwrap());
}

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,6}".prop_filter("keywords are reserved", |s| {
        !["SELECT", "COUNT", "FROM", "WHERE", "AND", "AS", "OR"].contains(&s.to_ascii_uppercase().as_str())
    })
}

fn spec() -> impl Strategy<Value = QuerySpec> {
    (
        proptest::collection::btree_set(ident(), 1..5),
        proptest::collection::vec((any::<prop::sample::Index>(), ident(), any::<i64>()), 0..4),
        proptest::collection::vec(
            (any::<prop::sample::Index>(), ident(), any::<prop::sample::Index>(), ident()),
            0..4,
        ),
        any::<bool>(),
    )
        .prop_map(|(aliases, sels, joins, renamed)| {
            let aliases: Vec<String> = aliases.into_iter().collect();
            let relations = aliases
                .iter()
                .enumerate()
                .map(|(i, a)| if renamed && i % 2 == 0 { RelationRef::aliased(format!("t_{a}"), a.clone()) } else { RelationRef::new(a.clone()) })
                .collect();
            let selections = sels
                .into_iter()
                .map(|(i, c, v)| Selection { column: ColumnRef::new(i.get(&aliases).clone(), c), value: v })
                .collect();
            let joins = joins
                .into_iter()
                .map(|(i, a, j, b)| JoinPredicate {
                    left: ColumnRef::new(i.get(&aliases).clone(), a),
                    right: ColumnRef::new(j.get(&aliases).clone(), b),
                })
                .collect();
            QuerySpec::new(relations, selections, joins)
        })
        .prop_filter_map("invalid spec", |s| s.ok())
}

proptest! {
    #[test]
    fn printing_then_parsing_is_identity(q in spec()) {
        let text = q.to_string();
        prop_assert_eq!(parse(&text).unwrap(), q, "{}", text);
    }
}

#[test]
fn ott_queries_round_trip_through_text() {
    let cfg = OttConfig::default();
    for q in ott_queries(&cfg, 4, 4).unwrap() {
        let spec = q.spec();
        assert_eq!(parse(&spec.to_string()).unwrap(), spec);
        assert_eq!(parse(&q.sql()).unwrap(), spec);
    }
}
