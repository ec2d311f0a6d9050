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

//! The optimize-then-validate loop.
//!
//! ```text
//! Γ ← ∅
//! loop
//!     P_i ← optimize(Γ)
//!     if P_i = P_{i-1}: return P_i
//!     Δ_i ← validate(P_i)
//!     Γ ← Γ ∪ Δ_i
//! ```
//!
//! Every run is checked against the convergence theory: the transformation
//! sequence shape, coverage-driven termination, growth of Γ and the
//! optimality of the final plan among the plans seen. Failed checks are
//! recorded in [`ReoptReport::violations`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::card_est::HistogramEstimator;
use crate::catalog::Catalog;
use crate::cost::{optimize, plan_cost, CardSource, OptimizerConfig, Overlay};
use crate::plan::{
    classify_transformation, covered, Gamma, JoinTree, PhysicalPlan, RelSet, Transformation,
};
use crate::query::QueryGraph;
use crate::sample_est::{merge_gamma, samples_for, validate_plan, Delta};
use crate::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 64;

/// Relative slack for cost comparisons.
pub const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReoptConfig {
    pub optimizer: OptimizerConfig,
    pub max_iters: usize,
    /// Count an empty sample join as one row instead of zero.
    pub zero_floor: bool,
}

impl Default for ReoptConfig {
    fn default() -> Self {
        ReoptConfig {
            optimizer: OptimizerConfig::default(),
            max_iters: DEFAULT_MAX_ITERS,
            zero_floor: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorProfile {
    /// Every initial estimate is at least the oracle value.
    OverestimateOnly,
    /// Every initial estimate is at most the oracle value.
    UnderestimateOnly,
    Mixed,
}

impl ErrorProfile {
    pub fn name(self) -> &'static str {
        match self {
            ErrorProfile::OverestimateOnly => "overestimate-only",
            ErrorProfile::UnderestimateOnly => "underestimate-only",
            ErrorProfile::Mixed => "mixed",
        }
    }
}

/// Shape of a terminated run's transformation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceCase {
    /// Two rounds, the second plan equal to the first.
    Trivial,
    /// Every new plan is a global transformation of all earlier ones.
    AllGlobal,
    /// Global transformations followed by exactly one local one.
    GlobalThenLocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReoptReport {
    /// Plans in round order; the last equals the one before it.
    pub plans: Vec<PhysicalPlan>,
    /// Validated cardinalities of each plan except the confirming one.
    pub deltas: Vec<Delta>,
    pub gamma_final: Gamma,
    /// Size of Γ seen by each round's optimizer call.
    pub gamma_sizes: Vec<usize>,
    /// For `P_2..P_n` (the confirming plan excluded): whether the plan is a
    /// local transformation of some earlier plan.
    pub transformation_sequence: Vec<Transformation>,
    pub iterations: usize,
    /// Cost of each plan under `gamma_final` layered over the initial estimates.
    pub costs_s: Vec<f64>,
    pub sequence_case: Option<SequenceCase>,
    pub notices: Vec<String>,
    pub violations: Vec<String>,
}

impl ReoptReport {
    pub fn final_plan(&self) -> &PhysicalPlan {
        self.plans.last().expect("at least one plan")
    }

    /// Γ as seen by the optimizer in round `i` (0-based).
    pub fn gamma_at(&self, round: usize) -> Gamma {
        self.deltas
            .iter()
            .take(round)
            .fold(Gamma::new(), |g, d| merge_gamma(&g, d))
    }
}

/// Classifies `seq` (one entry per plan `P_2..P_n`) for a run with
/// `iterations` optimizer rounds.
pub fn sequence_case(iterations: usize, seq: &[Transformation]) -> Option<SequenceCase> {
    if iterations < 2 || seq.len() + 2 != iterations {
        return None;
    }
    if seq.is_empty() {
        return Some(SequenceCase::Trivial);
    }
    let (last, head) = seq.split_last()?;
    if head.iter().any(|t| *t != Transformation::Global) {
        return None;
    }
    Some(match last {
        Transformation::Global => SequenceCase::AllGlobal,
        Transformation::Local => SequenceCase::GlobalThenLocal,
    })
}

/// Whether `a` exceeds `b` by more than the relative slack.
pub fn cost_exceeds(a: f64, b: f64) -> bool {
    a > b + COST_EPS * a.abs().max(b.abs()).max(1.0)
}

struct Round {
    delta: Delta,
    notices: Vec<String>,
}

fn run_loop<E: CardSource + ?Sized>(
    graph: &QueryGraph,
    estimates: &E,
    config: &ReoptConfig,
    injected: bool,
    mut validate: impl FnMut(&PhysicalPlan) -> Result<Round>,
) -> Result<ReoptReport> {
    let mut report = ReoptReport {
        plans: Vec::new(),
        deltas: Vec::new(),
        gamma_final: Gamma::new(),
        gamma_sizes: Vec::new(),
        transformation_sequence: Vec::new(),
        iterations: 0,
        costs_s: Vec::new(),
        sequence_case: None,
        notices: Vec::new(),
        violations: Vec::new(),
    };
    let mut gamma = Gamma::new();
    loop {
        if report.iterations >= config.max_iters {
            report.gamma_final = gamma;
            return Err(Error::MaxIterations(alloc::boxed::Box::new(report)));
        }
        let validated = gamma.resolve(graph);
        let plan = optimize(graph, &Overlay::new(estimates, &validated), &config.optimizer)?;
        report.iterations += 1;
        report.gamma_sizes.push(gamma.len());
        let same = report.plans.last() == Some(&plan);
        report.plans.push(plan);
        if same {
            break;
        }
        let round = validate(report.plans.last().expect("just pushed"))?;
        report.notices.extend(round.notices);
        gamma = merge_gamma(&gamma, &round.delta);
        report.deltas.push(round.delta);
    }
    report.gamma_final = gamma;
    diagnose(graph, estimates, config, injected, &mut report)?;
    Ok(report)
}

fn diagnose<E: CardSource + ?Sized>(
    graph: &QueryGraph,
    estimates: &E,
    config: &ReoptConfig,
    injected: bool,
    report: &mut ReoptReport,
) -> Result<()> {
    let n = report.iterations - 1;
    let trees: Vec<JoinTree> = report.plans.iter().map(PhysicalPlan::tree).collect();

    for i in 1..n {
        let local = trees[..i]
            .iter()
            .map(|t| classify_transformation(&trees[i], t))
            .collect::<Result<Vec<_>>>()?
            .contains(&Transformation::Local);
        report.transformation_sequence.push(if local {
            Transformation::Local
        } else {
            Transformation::Global
        });
    }
    report.sequence_case = sequence_case(report.iterations, &report.transformation_sequence);
    if report.sequence_case.is_none() {
        report.violations.push(format!(
            "transformation sequence {:?} over {} rounds matches no termination case",
            report.transformation_sequence, report.iterations
        ));
    }

    // A plan covered by its predecessors adds nothing to Γ, so the next
    // round must repeat it.
    for i in 1..n {
        if covered(&trees[i], &trees[..i]) && i + 2 != report.iterations {
            report.violations.push(format!(
                "plan {} is covered by earlier plans but the loop ran {} rounds",
                i + 1,
                report.iterations
            ));
        }
    }
    // An unchanged Γ yields an unchanged plan, so only the last round may
    // see the same Γ as its predecessor.
    for r in 1..report.gamma_sizes.len() {
        if report.gamma_sizes[r] == report.gamma_sizes[r - 1] && r + 1 != report.iterations {
            report.violations.push(format!("Γ did not grow before round {}", r + 1));
        }
    }

    let validated = report.gamma_final.resolve(graph);
    let source = Overlay::new(estimates, &validated);
    report.costs_s = report
        .plans
        .iter()
        .map(|p| plan_cost(p, graph, &source, &config.optimizer.cost))
        .collect::<Result<_>>()?;
    // The final plan should be the cheapest seen. That rests on validated
    // sizes being exact, so real samples only log a failure.
    let last = *report.costs_s.last().expect("at least one plan");
    for (i, c) in report.costs_s.iter().enumerate() {
        if cost_exceeds(last, *c) {
            let msg = format!("final plan costs {last} but plan {} costs {c}", i + 1);
            if injected {
                report.violations.push(msg);
            } else {
                report.notices.push(msg);
            }
        }
    }
    Ok(())
}

/// Re-optimizes with cardinalities validated on the catalog's samples.
pub fn reoptimize(graph: &QueryGraph, catalog: &Catalog, config: &ReoptConfig) -> Result<ReoptReport> {
    let estimates = HistogramEstimator::new(graph, catalog)?;
    reoptimize_with(graph, &estimates, catalog, config)
}

/// Like [`reoptimize`] with caller-supplied initial estimates.
pub fn reoptimize_with<E: CardSource + ?Sized>(
    graph: &QueryGraph,
    estimates: &E,
    catalog: &Catalog,
    config: &ReoptConfig,
) -> Result<ReoptReport> {
    let samples = samples_for(graph, catalog)?;
    run_loop(graph, estimates, config, false, |plan| {
        let v = validate_plan(plan, graph, &samples, config.zero_floor)?;
        let notices = v
            .unvalidated
            .iter()
            .map(|s| {
                format!(
                    "{} kept its histogram estimate: a sample beneath it is empty",
                    graph.set_label(s.iter())
                )
            })
            .collect();
        Ok(Round {
            delta: v.delta,
            notices,
        })
    })
}

/// Re-optimizes with "validation" answered from `oracle` instead of samples.
///
/// `oracle` must hold every join a plan can contain. The declared `profile`
/// is checked against `estimates` for every oracle entry before the loop
/// starts.
pub fn reoptimize_injected<E: CardSource + ?Sized>(
    graph: &QueryGraph,
    estimates: &E,
    oracle: &Gamma,
    profile: ErrorProfile,
    config: &ReoptConfig,
) -> Result<ReoptReport> {
    let oracle_sets = oracle.resolve(graph);
    for (set, &truth) in &oracle_sets {
        let estimate = estimates
            .cardinality(*set)
            .ok_or_else(|| Error::MissingCardinality(graph.set_label(set.iter())))?;
        let bad = match profile {
            ErrorProfile::OverestimateOnly => estimate < truth,
            ErrorProfile::UnderestimateOnly => estimate > truth,
            ErrorProfile::Mixed => false,
        };
        if bad {
            return Err(Error::InconsistentProfile {
                profile: profile.name(),
                key: graph.key(*set).to_string(),
                estimate,
                oracle: truth,
            });
        }
    }
    let mut report = run_loop(graph, estimates, config, true, |plan| {
        let mut delta = Delta::new();
        for set in plan.join_sets() {
            let v = oracle_sets
                .get(&set)
                .ok_or_else(|| Error::MissingCardinality(graph.set_label(set.iter())))?;
            delta.insert(graph.key(set), *v);
        }
        Ok(Round {
            delta,
            notices: Vec::new(),
        })
    })?;
    if profile == ErrorProfile::OverestimateOnly {
        // Costs here are over the plans P_1..P_n; the confirming repeat is equal.
        for (i, w) in report.costs_s.windows(2).enumerate() {
            if cost_exceeds(w[1], w[0]) {
                report.violations.push(format!(
                    "cost rose from {} (plan {}) to {} (plan {}) under overestimates",
                    w[0],
                    i + 1,
                    w[1],
                    i + 2
                ));
            }
        }
    }
    Ok(report)
}

/// Every connected subset of at least two relations.
pub fn joinable_sets(graph: &QueryGraph) -> Vec<RelSet> {
    (1u32..(1u32 << graph.len()))
        .map(RelSet::from_bits)
        .filter(|s| s.len() >= 2 && graph.is_connected(*s))
        .collect()
}

/// Oracle cardinalities as a Γ over [`joinable_sets`].
pub fn oracle_gamma(graph: &QueryGraph, card: impl Fn(RelSet) -> f64) -> Gamma {
    joinable_sets(graph)
        .into_iter()
        .map(|s| (graph.key(s), card(s)))
        .collect()
}

/// A short human-readable summary of a run.
pub fn summary(report: &ReoptReport, graph: &QueryGraph) -> String {
    let mut s = String::new();
    for (i, p) in report.plans.iter().enumerate() {
        s.push_str(&format!("round {}: {}\n", i + 1, p.render(graph)));
    }
    s.push_str(&format!(
        "iterations: {}, case: {:?}\n",
        report.iterations, report.sequence_case
    ));
    s
}
