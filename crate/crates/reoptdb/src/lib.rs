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


//! File formats, catalog storage, the OTT benchmark harness and the
//! `reoptdb` command-line driver, on top of [`reoptdb_core`].

pub mod bench;
pub mod cli;
pub mod csv_io;
pub mod error;
pub mod store;

pub use bench::{bench_ott, BenchConfig, BenchResults, BenchRow};
pub use csv_io::{load_csv, write_csv};
pub use error::{Error, Result};
pub use store::{open_catalog, save_catalog, Manifest};

/// Version stamped into every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;
