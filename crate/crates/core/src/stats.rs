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

//! ANALYZE-style per-column statistics: distinct count, most common values
//! and an equi-depth histogram over the remaining values.
//!
//! Statistics are exact; they are computed from a full scan.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::Relation;
use crate::{Error, Result};

pub const DEFAULT_MCV_LIMIT: usize = 100;
pub const DEFAULT_BUCKET_COUNT: usize = 100;

/// Statistics per column name.
pub type TableStats = BTreeMap<String, AttributeStats>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mcv {
    pub value: i64,
    pub frequency: f64,
}

/// Equi-depth histogram. `bounds[i]..=bounds[i + 1]` delimits bucket `i`,
/// which holds `depths[i]` rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bounds: Vec<i64>,
    pub depths: Vec<u64>,
}

impl Histogram {
    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub n_distinct: u64,
    /// Sorted by descending frequency, ties by ascending value.
    pub mcvs: Vec<Mcv>,
    pub histogram: Histogram,
    pub row_count: u64,
}

impl AttributeStats {
    pub fn mcv_mass(&self) -> f64 {
        self.mcvs.iter().map(|m| m.frequency).sum()
    }

    pub fn mcv_frequency(&self, value: i64) -> Option<f64> {
        self.mcvs
            .iter()
            .find(|m| m.value == value)
            .map(|m| m.frequency)
    }

    /// Builds exact statistics for a single column.
    pub fn from_values(values: &[i64], mcv_limit: usize, bucket_count: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("cannot analyze an empty column".into()));
        }
        if bucket_count == 0 {
            return Err(Error::InvalidParameter("bucket_count must be at least 1".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();

        let mut runs: Vec<(i64, u64)> = Vec::new();
        for &v in &sorted {
            match runs.last_mut() {
                Some((last, n)) if *last == v => *n += 1,
                _ => runs.push((v, 1)),
            }
        }

        let rows = sorted.len() as u64;
        let mut by_count = runs.clone();
        // Stable on the ascending value order, so ties keep the smaller value first.
        by_count.sort_by_key(|r| core::cmp::Reverse(r.1));
        by_count.truncate(mcv_limit);
        let mcvs: Vec<Mcv> = by_count
            .iter()
            .map(|&(value, n)| Mcv {
                value,
                frequency: n as f64 / rows as f64,
            })
            .collect();

        let mut mcv_values: Vec<i64> = by_count.iter().map(|&(v, _)| v).collect();
        mcv_values.sort_unstable();
        let rest: Vec<i64> = sorted
            .iter()
            .copied()
            .filter(|v| mcv_values.binary_search(v).is_err())
            .collect();

        Ok(AttributeStats {
            n_distinct: runs.len() as u64,
            mcvs,
            histogram: equi_depth(&rest, bucket_count),
            row_count: rows,
        })
    }
}

fn equi_depth(sorted: &[i64], bucket_count: usize) -> Histogram {
    let r = sorted.len();
    let b = bucket_count.min(r);
    if b == 0 {
        return Histogram::default();
    }
    let mut bounds = Vec::with_capacity(b + 1);
    let mut depths = Vec::with_capacity(b);
    for i in 0..b {
        let lo = i * r / b;
        let hi = (i + 1) * r / b;
        bounds.push(sorted[lo]);
        depths.push((hi - lo) as u64);
    }
    bounds.push(sorted[r - 1]);
    Histogram { bounds, depths }
}

/// Computes statistics for every column of `rel`.
pub fn analyze(rel: &Relation, mcv_limit: usize, bucket_count: usize) -> Result<TableStats> {
    if rel.row_count() == 0 {
        return Err(Error::EmptyRelation(rel.name().to_string()));
    }
    rel.columns()
        .iter()
        .map(|c| {
            AttributeStats::from_values(&c.values, mcv_limit, bucket_count)
                .map(|s| (c.name.clone(), s))
        })
        .collect()
}
