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

//! In-memory relational engine for sampling-validated query re-optimization.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: catalogs and samples are built in memory,
//! statistics and estimates are computed from them, and the re-optimization
//! loop alternates between the cost-based optimizer and validation of the
//! chosen plan over Bernoulli samples. File formats, timing-heavy benchmarks
//! and the command line live in the `reoptdb` crate.
//!
//! Enable the `std` feature to record wall-clock time in execution reports.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod ball;
pub mod card_est;
pub mod catalog;
pub mod cost;
mod error;
pub mod exec;
pub mod explain;
pub mod ott;
pub mod parser;
pub mod plan;
pub mod query;
pub mod reopt;
mod rng;
pub mod sample_est;
pub mod stats;

pub use card_est::{HistogramEstimator, Selectivity};
pub use catalog::{Catalog, Column, Relation, SampleTable, DEFAULT_SAMPLE_FRACTION};
pub use cost::{optimize, plan_cost, CardSource, CostModel, OptimizerConfig, TreeShape};
pub use error::{Error, Result};
pub use exec::{execute, nested_loop_reference, ExecOptions, ExecReport};
pub use parser::{parse, ParseError};
pub use plan::{
    classify_transformation, covered, local_transformations, Gamma, JoinKey, JoinOp, JoinTree,
    LeafKey, PhysicalPlan, PlanNode, RelSet, Transformation,
};
pub use query::{ColumnRef, JoinPredicate, QueryGraph, QuerySpec, RelationRef, Selection};
pub use reopt::{reoptimize, reoptimize_injected, ErrorProfile, ReoptConfig, ReoptReport};
pub use sample_est::{merge_gamma, sample_selectivity, validate_plan, Delta};
pub use stats::{analyze, AttributeStats, TableStats};
