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


//! The OTT benchmark: every query run with the histogram-only plan and with
//! the re-optimized plan.

use std::time::Instant;

use reoptdb_core::ott::{generate_ott, ott_queries, OttConfig};
use reoptdb_core::{execute, reoptimize, Catalog, ExecOptions, QueryGraph, ReoptConfig};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub ott: OttConfig,
    /// Joins per query; queries touch `joins + 1` tables.
    pub joins: usize,
    /// Selections with the first constant.
    pub m: usize,
    pub sample_fraction: f64,
    pub sample_seed: u64,
    pub mcv_limit: usize,
    pub bucket_count: usize,
    pub reopt: ReoptConfig,
    pub short_circuit: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ott: OttConfig::default(),
            joins: 4,
            m: 4,
            sample_fraction: reoptdb_core::DEFAULT_SAMPLE_FRACTION,
            sample_seed: 0,
            mcv_limit: reoptdb_core::stats::DEFAULT_MCV_LIMIT,
            bucket_count: reoptdb_core::stats::DEFAULT_BUCKET_COUNT,
            reopt: ReoptConfig::default(),
            short_circuit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub query: String,
    pub iterations: usize,
    pub plans: Vec<String>,
    pub costs: Vec<f64>,
    pub result_rows: u64,
    pub rows_processed_original: u64,
    pub rows_processed_reopt: u64,
    /// Executing the first plan.
    pub wall_ms_original: f64,
    /// Re-optimizing, then executing the final plan.
    pub wall_ms_reopt: f64,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub schema_version: u32,
    pub config: BenchConfig,
    pub queries: Vec<BenchRow>,
    pub rows_processed_original: u64,
    pub rows_processed_reopt: u64,
}

impl BenchResults {
    /// Aggregate rows_processed of histogram-only plans over re-optimized ones.
    pub fn ratio(&self) -> f64 {
        self.rows_processed_original as f64 / self.rows_processed_reopt.max(1) as f64
    }
}

/// Builds the OTT catalog described by `config`.
pub fn ott_catalog(config: &BenchConfig) -> Result<Catalog> {
    let mut cat = Catalog::new();
    for r in generate_ott(&config.ott)? {
        cat.add_relation(r);
    }
    cat.analyze_all(config.mcv_limit, config.bucket_count)?;
    cat.sample_all(config.sample_fraction, config.sample_seed)?;
    Ok(cat)
}

pub fn bench_ott(config: &BenchConfig) -> Result<BenchResults> {
    let cat = ott_catalog(config)?;
    let opts = ExecOptions {
        short_circuit: config.short_circuit,
    };
    let mut queries = Vec::new();
    for q in ott_queries(&config.ott, config.joins, config.m)? {
        let graph = QueryGraph::bind(&q.spec(), &cat)?;
        let tables: Vec<_> = graph
            .relations()
            .iter()
            .map(|r| cat.relation(&r.table).expect("bound relation"))
            .collect();
        let start = Instant::now();
        let report = reoptimize(&graph, &cat, &config.reopt)?;
        let optimize_time = start.elapsed();
        let original = execute(&report.plans[0], &graph, &tables, opts)?;
        let reopt = execute(report.final_plan(), &graph, &tables, opts)?;
        queries.push(BenchRow {
            query: q.sql(),
            iterations: report.iterations,
            plans: report.plans.iter().map(|p| p.render(&graph)).collect(),
            costs: report.costs_s.clone(),
            result_rows: reopt.result_rows,
            rows_processed_original: original.rows_processed,
            rows_processed_reopt: reopt.rows_processed,
            wall_ms_original: original.wall_time.as_secs_f64() * 1e3,
            wall_ms_reopt: (optimize_time + reopt.wall_time).as_secs_f64() * 1e3,
            violations: report.violations.clone(),
        });
    }
    Ok(BenchResults {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        rows_processed_original: queries.iter().map(|r| r.rows_processed_original).sum(),
        rows_processed_reopt: queries.iter().map(|r| r.rows_processed_reopt).sum(),
        queries,
    })
}
