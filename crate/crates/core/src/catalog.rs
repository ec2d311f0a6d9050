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

//! Base tables and their Bernoulli samples.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, unit_draw};
use crate::stats::{analyze, TableStats};
use crate::{Error, Result};

/// Sampling ratio used when none is given.
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<i64>,
}

/// A named table of integer columns, stored column-wise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl Relation {
    /// Builds a relation, checking that column names are unique and that all
    /// columns have the same length.
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        let name = name.into();
        let row_count = columns.first().map_or(0, |c| c.values.len());
        for (i, col) in columns.iter().enumerate() {
            if col.values.len() != row_count {
                return Err(Error::InvalidRelation {
                    relation: name,
                    reason: format!(
                        "column `{}` has {} values, expected {}",
                        col.name,
                        col.values.len(),
                        row_count
                    ),
                });
            }
            if columns[..i].iter().any(|c| c.name == col.name) {
                return Err(Error::InvalidRelation {
                    relation: name,
                    reason: format!("duplicate column `{}`", col.name),
                });
            }
        }
        Ok(Relation {
            name,
            columns,
            row_count,
        })
    }

    /// Convenience constructor from `(column name, values)` pairs.
    pub fn from_columns<S: Into<String>>(
        name: impl Into<String>,
        columns: impl IntoIterator<Item = (S, Vec<i64>)>,
    ) -> Result<Self> {
        let columns = columns
            .into_iter()
            .map(|(n, values)| Column {
                name: n.into(),
                values,
            })
            .collect();
        Relation::new(name, columns)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&[i64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn values(&self, col: usize) -> &[i64] {
        &self.columns[col].values
    }

    pub fn row(&self, i: usize) -> Vec<i64> {
        self.columns.iter().map(|c| c.values[i]).collect()
    }

    /// Projects the given row indices into a new relation with the same layout.
    pub fn take_rows(&self, name: impl Into<String>, rows: &[u32]) -> Relation {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: rows.iter().map(|&r| c.values[r as usize]).collect(),
            })
            .collect();
        Relation {
            name: name.into(),
            columns,
            row_count: rows.len(),
        }
    }
}

/// A Bernoulli sample of a base relation.
///
/// Membership is a pure function of `(seed, row index, fraction)`, so a
/// sample can be persisted as just its seed and fraction and redrawn later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    pub source: String,
    pub fraction: f64,
    pub seed: u64,
    /// Indices of the sampled rows in the source relation, ascending.
    pub source_rows: Vec<u32>,
    pub rows: Relation,
}

impl SampleTable {
    pub fn len(&self) -> usize {
        self.rows.row_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws a Bernoulli sample: row `i` is kept iff `u(seed, i) < fraction`.
pub fn draw_sample(rel: &Relation, fraction: f64, seed: u64) -> Result<SampleTable> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let source_rows: Vec<u32> = (0..rel.row_count() as u32)
        .filter(|&i| fraction >= 1.0 || unit_draw(seed, u64::from(i)) < fraction)
        .collect();
    Ok(SampleTable {
        source: rel.name().to_string(),
        fraction,
        seed,
        rows: rel.take_rows(rel.name(), &source_rows),
        source_rows,
    })
}

/// Base relations together with their samples and statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    relations: BTreeMap<String, Relation>,
    samples: BTreeMap<String, SampleTable>,
    stats: BTreeMap<String, TableStats>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_relation(&mut self, rel: Relation) {
        let name = rel.name().to_string();
        self.samples.remove(&name);
        self.stats.remove(&name);
        self.relations.insert(name, rel);
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn sample(&self, name: &str) -> Option<&SampleTable> {
        self.samples.get(name)
    }

    pub fn samples(&self) -> impl Iterator<Item = &SampleTable> {
        self.samples.values()
    }

    pub fn stats(&self, name: &str) -> Option<&TableStats> {
        self.stats.get(name)
    }

    pub fn all_stats(&self) -> &BTreeMap<String, TableStats> {
        &self.stats
    }

    pub fn set_stats(&mut self, name: &str, stats: TableStats) -> Result<()> {
        if !self.relations.contains_key(name) {
            return Err(Error::UnknownRelation(name.to_string()));
        }
        self.stats.insert(name.to_string(), stats);
        Ok(())
    }

    pub fn set_sample(&mut self, sample: SampleTable) -> Result<()> {
        if !self.relations.contains_key(&sample.source) {
            return Err(Error::UnknownRelation(sample.source.clone()));
        }
        self.samples.insert(sample.source.clone(), sample);
        Ok(())
    }

    /// Runs `analyze` over every relation. Empty relations get no statistics.
    pub fn analyze_all(&mut self, mcv_limit: usize, bucket_count: usize) -> Result<()> {
        for rel in self.relations.values() {
            if rel.row_count() == 0 {
                self.stats.remove(rel.name());
                continue;
            }
            let stats = analyze(rel, mcv_limit, bucket_count)?;
            self.stats.insert(rel.name().to_string(), stats);
        }
        Ok(())
    }

    /// Draws one sample per relation; each relation gets a seed derived from
    /// `seed` and its name.
    pub fn sample_all(&mut self, fraction: f64, seed: u64) -> Result<()> {
        for rel in self.relations.values() {
            let s = draw_sample(rel, fraction, derive_seed(seed, rel.name()))?;
            self.samples.insert(rel.name().to_string(), s);
        }
        Ok(())
    }
}
