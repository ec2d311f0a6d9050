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


//! On-disk catalogs: one CSV per relation plus `manifest.json`.
//!
//! Samples are stored as their seed and fraction and redrawn on open, which
//! reproduces them exactly. Statistics go to `stats.json`. Every data file
//! carries a SHA-256 checksum in the manifest.

use std::collections::BTreeMap;
use std::path::Path;

use reoptdb_core::catalog::draw_sample;
use reoptdb_core::{Catalog, TableStats};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csv_io::{load_csv_named, write_csv};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

pub const MANIFEST: &str = "manifest.json";
const STATS: &str = "stats.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub relations: Vec<RelationEntry>,
    pub samples: Vec<SampleEntry>,
    pub stats: Option<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEntry {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
    #[serde(flatten)]
    pub file: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub source: String,
    pub fraction: f64,
    pub seed: u64,
}

fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn write_checked(dir: &Path, file: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = dir.join(file);
    std::fs::write(&path, bytes).map_err(Error::io(&path))?;
    Ok(FileEntry {
        file: file.to_string(),
        sha256: digest(bytes),
    })
}

fn read_checked(dir: &Path, entry: &FileEntry) -> Result<Vec<u8>> {
    if entry.file.contains(['/', '\\']) || entry.file.starts_with('.') {
        return Err(Error::InvalidCatalog(format!("file name {:?} escapes the catalog", entry.file)));
    }
    let path = dir.join(&entry.file);
    let bytes = std::fs::read(&path).map_err(Error::io(&path))?;
    if digest(&bytes) != entry.sha256 {
        return Err(Error::Corrupt { path });
    }
    Ok(bytes)
}

/// Writes `catalog` into `dir`, creating it if needed.
pub fn save_catalog(catalog: &Catalog, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut relations = Vec::new();
    for rel in catalog.relations() {
        let file = format!("{}.csv", rel.name());
        let path = dir.join(&file);
        write_csv(rel, &path)?;
        let bytes = std::fs::read(&path).map_err(Error::io(&path))?;
        relations.push(RelationEntry {
            name: rel.name().to_string(),
            columns: rel.column_names().map(String::from).collect(),
            rows: rel.row_count(),
            file: FileEntry {
                file,
                sha256: digest(&bytes),
            },
        });
    }
    let samples = catalog
        .samples()
        .map(|s| SampleEntry {
            source: s.source.clone(),
            fraction: s.fraction,
            seed: s.seed,
        })
        .collect();
    let stats = if catalog.all_stats().is_empty() {
        None
    } else {
        let bytes = serde_json::to_vec_pretty(catalog.all_stats()).map_err(Error::json(dir.join(STATS)))?;
        Some(write_checked(dir, STATS, &bytes)?)
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        relations,
        samples,
        stats,
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(Error::json(&path))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(Error::io(&path))?;
    Ok(manifest)
}

/// Reads the manifest alone, checking its version.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::json(&path))?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::InvalidCatalog(format!("{} has no schema_version", path.display())))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::VersionMismatch {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(Error::json(&path))
}

/// Loads a catalog written by [`save_catalog`].
pub fn open_catalog(dir: &Path) -> Result<Catalog> {
    let manifest = read_manifest(dir)?;
    let mut catalog = Catalog::new();
    for entry in &manifest.relations {
        let bytes = read_checked(dir, &entry.file)?;
        let path = dir.join(&entry.file.file);
        let columns: Vec<&str> = entry.columns.iter().map(String::as_str).collect();
        let rel = load_csv_named(&path, &entry.name, &columns)?;
        // Guard against the file changing between the checksum and the parse.
        if digest(&std::fs::read(&path).map_err(Error::io(&path))?) != digest(&bytes) {
            return Err(Error::Corrupt { path });
        }
        if rel.row_count() != entry.rows {
            return Err(Error::InvalidCatalog(format!(
                "{} has {} rows, manifest says {}",
                entry.name,
                rel.row_count(),
                entry.rows
            )));
        }
        catalog.add_relation(rel);
    }
    for s in &manifest.samples {
        let rel = catalog
            .relation(&s.source)
            .ok_or_else(|| Error::InvalidCatalog(format!("sample of unknown relation {}", s.source)))?;
        let sample = draw_sample(rel, s.fraction, s.seed)?;
        catalog.set_sample(sample)?;
    }
    if let Some(entry) = &manifest.stats {
        let bytes = read_checked(dir, entry)?;
        let stats: BTreeMap<String, TableStats> =
            serde_json::from_slice(&bytes).map_err(Error::json(dir.join(&entry.file)))?;
        for (name, s) in stats {
            catalog.set_stats(&name, s)?;
        }
    }
    Ok(catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use reoptdb_core::Relation;

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.add_relation(Relation::from_columns("R1", [("a", vec![1, 2, 3, 3]), ("b", vec![0, 0, 1, 1])]).unwrap());
        c.add_relation(Relation::from_columns("R2", [("c", (0..50).collect::<Vec<i64>>())]).unwrap());
        c
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = catalog();
        c.analyze_all(10, 4).unwrap();
        c.sample_all(0.3, 7).unwrap();
        save_catalog(&c, dir.path()).unwrap();
        let back = open_catalog(dir.path()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn round_trip_without_stats_or_samples() {
        let dir = tempfile::tempdir().unwrap();
        let m = save_catalog(&catalog(), dir.path()).unwrap();
        assert!(m.stats.is_none() && m.samples.is_empty());
        assert_eq!(open_catalog(dir.path()).unwrap(), catalog());
    }

    #[test]
    fn missing_directory() {
        assert!(matches!(open_catalog(Path::new("/nonexistent/catalog")), Err(Error::Io { .. })));
    }

    #[test]
    fn edited_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_catalog(&catalog(), dir.path()).unwrap();
        let p = dir.path().join("R1.csv");
        let text = std::fs::read_to_string(&p).unwrap().replace("3,1", "4,1");
        std::fs::write(&p, text).unwrap();
        assert!(matches!(open_catalog(dir.path()), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn edited_checksum_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = save_catalog(&catalog(), dir.path()).unwrap();
        m.relations[0].file.sha256 = digest(b"something else");
        std::fs::write(dir.path().join(MANIFEST), serde_json::to_string(&m).unwrap()).unwrap();
        assert!(matches!(open_catalog(dir.path()), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn future_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = save_catalog(&catalog(), dir.path()).unwrap();
        m.schema_version = SCHEMA_VERSION + 1;
        std::fs::write(dir.path().join(MANIFEST), serde_json::to_string(&m).unwrap()).unwrap();
        assert!(matches!(open_catalog(dir.path()), Err(Error::VersionMismatch { .. })));
    }
}
