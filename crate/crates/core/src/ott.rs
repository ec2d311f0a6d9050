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

//! The optimizer torture test (OTT).
//!
//! `K` tables `R_k(A_k, B_k)` are generated independently with `B_k = A_k`
//! and `A_k` uniform over `0..L`, each value appearing exactly `M` times.
//! Queries select `A_k = c_k` on every table and chain `B_k = B_{k+1}`.
//! Such a query is non-empty only when all constants agree, yet estimates
//! under attribute-value independence do not depend on the constants.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Relation;
use crate::query::{ColumnRef, JoinPredicate, QuerySpec, RelationRef, Selection};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OttConfig {
    /// Number of tables `K`.
    pub tables: usize,
    pub rows_per_table: usize,
    /// Occurrences of each value, `M`.
    pub rows_per_value: usize,
    pub seed: u64,
}

impl Default for OttConfig {
    /// The executed desk-scale database.
    fn default() -> Self {
        OttConfig {
            tables: 5,
            rows_per_table: 1000,
            rows_per_value: 10,
            seed: 0,
        }
    }
}

impl OttConfig {
    /// Domain size `L = rows_per_table / rows_per_value`.
    pub fn domain(&self) -> usize {
        self.rows_per_table / self.rows_per_value.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tables == 0 {
            return Err(Error::InvalidParameter("at least one table is required".to_string()));
        }
        if self.rows_per_value == 0 || self.rows_per_table % self.rows_per_value != 0 {
            return Err(Error::InvalidParameter(
                "rows_per_table must be a positive multiple of rows_per_value".to_string(),
            ));
        }
        if self.domain() < 2 {
            return Err(Error::InvalidParameter("domain size must be at least 2".to_string()));
        }
        Ok(())
    }
}

pub fn table_name(k: usize) -> alloc::string::String {
    format!("R{k}")
}

/// Generates `R1..RK`, each shuffled with its own derived seed.
pub fn generate_ott(config: &OttConfig) -> Result<Vec<Relation>> {
    config.validate()?;
    let l = config.domain() as i64;
    (1..=config.tables)
        .map(|k| {
            let mut values: Vec<i64> = (0..l)
                .flat_map(|v| core::iter::repeat(v).take(config.rows_per_value))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &table_name(k)));
            values.shuffle(&mut rng);
            Relation::from_columns(
                table_name(k),
                [(format!("A{k}"), values.clone()), (format!("B{k}"), values)],
            )
        })
        .collect()
}

/// One benchmark query over tables `R1..Rn`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OttQuery {
    /// `c_k` for `R_{k+1}`.
    pub constants: Vec<i64>,
    /// How many selections use the first constant.
    pub m: usize,
}

impl OttQuery {
    pub fn tables(&self) -> usize {
        self.constants.len()
    }

    pub fn is_empty_query(&self) -> bool {
        self.constants.windows(2).any(|w| w[0] != w[1])
    }

    pub fn spec(&self) -> QuerySpec {
        let n = self.constants.len();
        let relations = (1..=n).map(|k| RelationRef::new(table_name(k))).collect();
        let selections = self
            .constants
            .iter()
            .enumerate()
            .map(|(i, &c)| Selection {
                column: ColumnRef::new(table_name(i + 1), format!("A{}", i + 1)),
                value: c,
            })
            .collect();
        let joins = (1..n)
            .map(|k| JoinPredicate {
                left: ColumnRef::new(table_name(k), format!("B{k}")),
                right: ColumnRef::new(table_name(k + 1), format!("B{}", k + 1)),
            })
            .collect();
        QuerySpec::new(relations, selections, joins).expect("OTT queries are well formed")
    }

    /// SQL text of the query.
    pub fn sql(&self) -> alloc::string::String {
        self.spec().to_string()
    }
}

/// Queries over `n_join + 1` tables in which `m` selections use constant 0
/// and the rest constant 1, plus the flipped assignment. Position sets are
/// enumerated in lexicographic order; duplicates are dropped.
pub fn ott_queries(config: &OttConfig, n_join: usize, m: usize) -> Result<Vec<OttQuery>> {
    config.validate()?;
    let n = n_join + 1;
    if n > config.tables {
        return Err(Error::InvalidParameter(format!(
            "{n} tables requested but the database has {}",
            config.tables
        )));
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("m = {m} exceeds {n} tables")));
    }
    let mut out: Vec<OttQuery> = Vec::new();
    let mut push = |constants: Vec<i64>| {
        let q = OttQuery { constants, m };
        if !out.contains(&q) {
            out.push(q);
        }
    };
    for positions in combinations(n, m) {
        let mut c = alloc::vec![1i64; n];
        for p in positions {
            c[p] = 0;
        }
        let flipped = c.iter().map(|v| 1 - v).collect();
        push(c);
        push(flipped);
    }
    Ok(out)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// `M^K` when all constants agree and lie in the domain, else 0.
pub fn true_cardinality(config: &OttConfig, query: &OttQuery) -> u128 {
    let l = config.domain() as i64;
    if query.is_empty_query() || query.constants.iter().any(|&c| c < 0 || c >= l) {
        return 0;
    }
    (config.rows_per_value as u128).pow(query.tables() as u32)
}

/// `M^K / L^{K-1}`, whatever the constants.
pub fn avi_estimated_cardinality(config: &OttConfig, query: &OttQuery) -> f64 {
    let k = query.tables() as i32;
    libm::pow(config.rows_per_value as f64, k as f64) / libm::pow(config.domain() as f64, (k - 1) as f64)
}

/// Pearson correlation of two equally long columns.
pub fn correlation(x: &[i64], y: &[i64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let my = y.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a as f64 - mx, b as f64 - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / libm::sqrt(sxx * syy)
    }
}

/// Pearson's chi-squared statistic for independence of two columns over
/// the value domain `0..domain`, with its degrees of freedom.
pub fn chi_squared(x: &[i64], y: &[i64], domain: usize) -> (f64, usize) {
    let n = x.len().min(y.len());
    let mut table = alloc::vec![0u64; domain * domain];
    let mut rows = alloc::vec![0u64; domain];
    let mut cols = alloc::vec![0u64; domain];
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as usize, b as usize);
        table[a * domain + b] += 1;
        rows[a] += 1;
        cols[b] += 1;
    }
    let mut stat = 0.0;
    for a in 0..domain {
        for b in 0..domain {
            let expected = rows[a] as f64 * cols[b] as f64 / n as f64;
            if expected > 0.0 {
                let d = table[a * domain + b] as f64 - expected;
                stat += d * d / expected;
            }
        }
    }
    let r = rows.iter().filter(|&&c| c > 0).count();
    let c = cols.iter().filter(|&&c| c > 0).count();
    (stat, r.saturating_sub(1) * c.saturating_sub(1))
}
