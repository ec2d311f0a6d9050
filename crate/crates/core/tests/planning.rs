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


mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_plans, bindings, brute_force_min, random_catalog, random_cost_model, random_query, rel_close, Connectivity};
use reoptdb_core::cost::{FixedCards, Overlay, TreeShape};
use reoptdb_core::{
    classify_transformation, covered, execute, local_transformations, nested_loop_reference, optimize, plan_cost,
    ExecOptions, Gamma, HistogramEstimator, JoinOp, JoinTree, OptimizerConfig, PhysicalPlan, PlanNode, QueryGraph,
    RelSet, Transformation,
};

fn random_node(rng: &mut ChaCha8Rng, leaves: &[usize]) -> PlanNode {
    if leaves.len() == 1 {
        return PlanNode::scan(leaves[0]);
    }
    let cut = rng.gen_range(1..leaves.len());
    let op = *JoinOp::ALL.choose(rng).unwrap();
    PlanNode::join(op, random_node(rng, &leaves[..cut]), random_node(rng, &leaves[cut..]))
}

fn random_plan(rng: &mut ChaCha8Rng, n: usize) -> PhysicalPlan {
    let mut leaves: Vec<usize> = (0..n).collect();
    leaves.shuffle(rng);
    PhysicalPlan::new(random_node(rng, &leaves))
}

/// Unordered joins computed directly from the node structure.
fn join_sets(node: &PlanNode, out: &mut Vec<u32>) -> u32 {
    match node {
        PlanNode::Scan { rel, .. } => 1 << rel,
        PlanNode::Join { left, right, .. } => {
            let s = join_sets(left, out) | join_sets(right, out);
            out.push(s);
            s
        }
    }
}

fn sorted_joins(plan: &PhysicalPlan) -> Vec<u32> {
    let mut v = Vec::new();
    join_sets(&plan.root, &mut v);
    v.sort_unstable();
    v
}

fn graph_and_catalog(seed: u64, max_rels: usize) -> (reoptdb_core::Catalog, QueryGraph, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fraction = rng.gen_range(0.05..0.5);
    let cat = random_catalog(&mut rng, fraction, 3);
    let spec = random_query(&mut rng, &cat, max_rels);
    let g = QueryGraph::bind(&spec, &cat).unwrap();
    (cat, g, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_is_symmetric_and_reflexive(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_plan(&mut rng, n).tree();
        let b = random_plan(&mut rng, n).tree();
        prop_assert_eq!(classify_transformation(&a, &a).unwrap(), Transformation::Local);
        prop_assert_eq!(classify_transformation(&a, &a.clone()).unwrap(), Transformation::Local);
        prop_assert_eq!(classify_transformation(&a, &b).unwrap(), classify_transformation(&b, &a).unwrap());
    }

    #[test]
    fn coverage_is_monotone(seed in any::<u64>(), n in 2usize..7, k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_plan(&mut rng, n).tree();
        let mut pool: Vec<JoinTree> = (0..k).map(|_| random_plan(&mut rng, n).tree()).collect();
        let before = covered(&p, &pool);
        pool.push(random_plan(&mut rng, n).tree());
        prop_assert!(!before || covered(&p, &pool));
        pool.push(p.clone());
        prop_assert!(covered(&p, &pool));
    }

    #[test]
    fn local_transformations_are_local_and_distinct(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_plan(&mut rng, n);
        let alts = local_transformations(&p, &JoinOp::ALL);
        prop_assert_eq!(alts.len(), 4usize.pow(n as u32 - 1));
        let mut seen = BTreeSet::new();
        for a in &alts {
            prop_assert_eq!(classify_transformation(&p.tree(), &a.tree()).unwrap(), Transformation::Local);
            prop_assert!(seen.insert((a.encoding(), a.ops())));
        }
        prop_assert!(alts.contains(&p));
    }

    #[test]
    fn plan_cost_is_monotone(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = random_plan(&mut rng, n);
        let base: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..1e4)).collect();
        let mut cards: BTreeMap<RelSet, f64> = (1u32..(1 << n))
            .map(|b| (RelSet::from_bits(b), rng.gen_range(0.0..1e5)))
            .collect();
        let model = random_cost_model(&mut rng);
        let before = plan_cost(&plan, &g_free(n), &FixedCards { base: base.clone(), cards: cards.clone() }, &model).unwrap();
        let bump = RelSet::from_bits(rng.gen_range(1u32..(1 << n)));
        *cards.get_mut(&bump).unwrap() += rng.gen_range(0.0..1e3);
        let after = plan_cost(&plan, &g_free(n), &FixedCards { base, cards }, &model).unwrap();
        prop_assert!(after >= before, "{after} < {before}");
    }

    #[test]
    fn optimizer_matches_exhaustive_search(seed in any::<u64>()) {
        let (cat, g, mut rng) = graph_and_catalog(seed, 5);
        let est = HistogramEstimator::new(&g, &cat).unwrap();
        let shape = if rng.gen_bool(0.5) { TreeShape::Bushy } else { TreeShape::LeftDeep };
        let config = OptimizerConfig { shape, cost: random_cost_model(&mut rng), ..OptimizerConfig::default() };
        let plan = optimize(&g, &est, &config).unwrap();
        let got = plan_cost(&plan, &g, &est, &config.cost).unwrap();
        let best = brute_force_min(&g, &est, shape, &config.operators, &config.cost).unwrap();
        prop_assert!(rel_close(got, best, 1e-9), "{got} vs {best}");
        // Same inputs, same plan.
        prop_assert_eq!(optimize(&g, &est, &config).unwrap(), plan);
    }

    #[test]
    fn optimizer_follows_its_cardinality_source(seed in any::<u64>()) {
        let (cat, g, _) = graph_and_catalog(seed, 5);
        let est = HistogramEstimator::new(&g, &cat).unwrap();
        let tables = bindings(&g, &cat);
        // Exact cardinalities of every connected subset.
        let mut exact = Gamma::new();
        for bits in 1u32..(1 << g.len()) {
            let s = RelSet::from_bits(bits);
            if s.len() >= 2 && g.is_connected(s) {
                let sub = reoptdb_core::optimize(&g, &est, &OptimizerConfig::default()).unwrap();
                let report = execute(&sub, &g, &tables, ExecOptions { short_circuit: false }).unwrap();
                if let Some(&rows) = report.node_rows.get(&g.key(s)) {
                    exact.insert(g.key(s), rows as f64);
                }
            }
        }
        let config = OptimizerConfig::default();
        for gamma in [Gamma::new(), exact] {
            let validated = gamma.resolve(&g);
            let cards = Overlay::new(&est, &validated);
            let plan = optimize(&g, &cards, &config).unwrap();
            let got = plan_cost(&plan, &g, &cards, &config.cost).unwrap();
            let best = brute_force_min(&g, &cards, config.shape, &config.operators, &config.cost).unwrap();
            prop_assert!(rel_close(got, best, 1e-9));
        }
    }

    #[test]
    fn every_plan_returns_the_same_rows(seed in any::<u64>()) {
        let (cat, g, mut rng) = graph_and_catalog(seed, 5);
        let tables = bindings(&g, &cat);
        let truth = match nested_loop_reference(&g, &tables) {
            Ok(t) => t,
            Err(reoptdb_core::Error::GuardExceeded(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let conn = Connectivity::new(&g);
        let mut memo = BTreeMap::new();
        let plans = all_plans(&conn, g.all(), TreeShape::Bushy, &JoinOp::ALL, &mut memo);
        for _ in 0..6 {
            let plan = PhysicalPlan::new(plans.choose(&mut rng).unwrap().clone());
            for short_circuit in [false, true] {
                let r = execute(&plan, &g, &tables, ExecOptions { short_circuit }).unwrap();
                prop_assert_eq!(r.result_rows, truth);
            }
        }
    }

    #[test]
    fn join_operators_agree(seed in any::<u64>()) {
        let (cat, g, _) = graph_and_catalog(seed, 5);
        let tables = bindings(&g, &cat);
        let est = HistogramEstimator::new(&g, &cat).unwrap();
        let plan = optimize(&g, &est, &OptimizerConfig::default()).unwrap();
        let opts = ExecOptions { short_circuit: false };
        let hash = local_transformations(&plan, &[JoinOp::Hash]);
        let nl = local_transformations(&plan, &[JoinOp::NestedLoop]);
        for (h, n) in hash.iter().zip(&nl) {
            let a = execute(h, &g, &tables, opts).unwrap();
            let b = execute(n, &g, &tables, opts).unwrap();
            prop_assert_eq!(a.node_rows, b.node_rows);
        }
    }
}

/// A chain graph over `n` relations, used only to name plan nodes.
fn g_free(n: usize) -> QueryGraph {
    let rels = (0..n).map(|k| reoptdb_core::RelationRef::new(format!("R{k}"))).collect();
    let joins = (1..n)
        .map(|k| reoptdb_core::JoinPredicate {
            left: reoptdb_core::ColumnRef::new(format!("R{}", k - 1), "a"),
            right: reoptdb_core::ColumnRef::new(format!("R{k}"), "a"),
        })
        .collect();
    let spec = reoptdb_core::QuerySpec::new(rels, vec![], joins).unwrap();
    QueryGraph::bind_with(&spec, |_| Some(vec!["a".to_string()])).unwrap()
}

#[test]
fn four_way_left_deep_plan_has_64_local_variants() {
    let plan = PhysicalPlan::left_deep(&[0, 1, 2, 3], JoinOp::Hash);
    let g = g_free(4);
    let conn = Connectivity::new(&g);
    let mut memo = BTreeMap::new();
    // Every bushy tree with either operator, cross products allowed by the chain being a clique class.
    let everything = all_plans(&conn, g.all(), TreeShape::Bushy, &JoinOp::ALL, &mut memo);
    let want = sorted_joins(&plan);
    let independent: BTreeSet<_> = everything
        .into_iter()
        .map(PhysicalPlan::new)
        .filter(|p| sorted_joins(p) == want)
        .map(|p| (p.encoding(), p.ops()))
        .collect();
    assert_eq!(independent.len(), 64);
    let generated: BTreeSet<_> = local_transformations(&plan, &JoinOp::ALL)
        .into_iter()
        .map(|p| (p.encoding(), p.ops()))
        .collect();
    assert_eq!(generated, independent);
}
