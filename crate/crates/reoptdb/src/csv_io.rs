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


//! CSV ingestion of integer tables.

use std::path::Path;

use reoptdb_core::Relation;

use crate::error::{Error, Result};

/// Reads an integer table whose header must equal `schema`. The relation is
/// named after the file stem.
pub fn load_csv(path: &Path, schema: &[&str]) -> Result<Relation> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidCatalog(format!("{} has no usable file name", path.display())))?;
    load_csv_named(path, name, schema)
}

/// [`load_csv`] with an explicit relation name.
pub fn load_csv_named(path: &Path, name: &str, schema: &[&str]) -> Result<Relation> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != schema {
        return Err(Error::HeaderMismatch {
            path: path.to_path_buf(),
            expected: schema.iter().map(|s| s.to_string()).collect(),
            found: header,
        });
    }
    let mut columns: Vec<Vec<i64>> = vec![Vec::new(); schema.len()];
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != schema.len() {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected: schema.len(),
                found: record.len(),
            });
        }
        for (i, cell) in record.iter().enumerate() {
            let v = cell.parse::<i64>().map_err(|_| Error::NonInteger {
                path: path.to_path_buf(),
                line,
                column: schema[i].to_string(),
                value: cell.to_string(),
            })?;
            columns[i].push(v);
        }
    }
    Ok(Relation::from_columns(name, schema.iter().copied().zip(columns))?)
}

/// Writes `rel` with a header row.
pub fn write_csv(rel: &Relation, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(rel.column_names()).map_err(csv_err)?;
    for i in 0..rel.row_count() {
        w.write_record(rel.row(i).iter().map(i64::to_string)).map_err(csv_err)?;
    }
    w.flush().map_err(Error::io(path))
}
