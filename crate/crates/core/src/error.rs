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

use alloc::boxed::Box;
use alloc::string::String;

use crate::parser::ParseError;
use crate::reopt::ReoptReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid relation `{relation}`: {reason}")]
    InvalidRelation { relation: String, reason: String },

    #[error("sampling fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),

    #[error("relation `{0}` is empty")]
    EmptyRelation(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown column `{relation}.{column}`")]
    UnknownColumn { relation: String, column: String },

    #[error("no statistics for `{0}`")]
    MissingStats(String),

    #[error("no sample for `{0}`")]
    MissingSample(String),

    /// The base sample of a relation has no rows, so it cannot estimate
    /// anything. Callers fall back to histogram estimates.
    #[error("sample of `{0}` is empty")]
    EmptySample(String),

    #[error("no cardinality available for {0}")]
    MissingCardinality(String),

    #[error("join graph is disconnected and cross products are disabled")]
    Disconnected,

    #[error("no table bound for relation `{0}`")]
    MissingBinding(String),

    #[error("nested-loop guard exceeded: {0} candidate tuples")]
    GuardExceeded(u128),

    #[error("query references {0} relations; at most 32 are supported")]
    TooManyRelations(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// The loop hit its safety valve. This signals a broken invariant, not a
    /// user error; the partial report is attached for diagnosis.
    #[error("re-optimization did not reach a fixed point within {} iterations", .0.iterations)]
    MaxIterations(Box<ReoptReport>),

    #[error("error profile {profile} is violated at {key}: estimate {estimate}, oracle {oracle}")]
    InconsistentProfile {
        profile: &'static str,
        key: String,
        estimate: f64,
        oracle: f64,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),
}
