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

//! The ball-queue model of re-optimization convergence.
//!
//! `N` balls sit in a queue. Each step takes the head ball: if it is
//! marked the process stops, otherwise it is marked and reinserted at a
//! uniformly random position. The expected number of marking steps is
//!
//! ```text
//! S_N = Σ_{k=1}^{N} k · (1 - 1/N)(1 - 2/N)···(1 - (k-1)/N) · k/N
//! ```
//!
//! which grows like `√N`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnResult {
    pub n: u64,
    pub closed_form: f64,
    pub monte_carlo_mean: f64,
    pub monte_carlo_stderr: f64,
    pub trials: u64,
}

/// `S_n`, accumulating the product term by term.
pub fn sn_closed_form(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    let mut prod = 1.0;
    let mut sum = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        if k > 1 {
            prod *= 1.0 - (kf - 1.0) / nf;
        }
        if prod == 0.0 {
            break;
        }
        sum += kf * prod * kf / nf;
    }
    Ok(sum)
}

/// Runs the queue process once and returns the number of marking steps.
///
/// Only the positions (1-based) of marked balls are tracked.
fn simulate_once(n: u64, rng: &mut impl Rng, marked: &mut Vec<u64>) -> u64 {
    marked.clear();
    loop {
        if marked.contains(&1) {
            return marked.len() as u64;
        }
        for p in marked.iter_mut() {
            *p -= 1;
        }
        let pos = rng.gen_range(1..=n);
        for p in marked.iter_mut() {
            if *p >= pos {
                *p += 1;
            }
        }
        marked.push(pos);
    }
}

/// Mean and standard error of the step count over `trials` runs.
pub fn sn_monte_carlo(n: u64, trials: u64, seed: u64) -> Result<SnResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let closed_form = sn_closed_form(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut marked = Vec::new();
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let s = simulate_once(n, &mut rng, &mut marked) as f64;
        sum += s;
        sum_sq += s * s;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 {
        ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SnResult {
        n,
        closed_form,
        monte_carlo_mean: mean,
        monte_carlo_stderr: libm::sqrt(var / t),
        trials,
    })
}

/// `(n, S_n, S_n / √n)` for each `n`.
pub fn sn_sqrt_profile(ns: &[u64]) -> Result<Vec<(u64, f64, f64)>> {
    ns.iter()
        .map(|&n| {
            let s = sn_closed_form(n)?;
            Ok((n, s, s / libm::sqrt(n as f64)))
        })
        .collect()
}

/// `S_{N/M}`: the expected-steps bound when the search space splits into
/// `m_edges` partitions by first join.
pub fn sn_underestimate_bound(n: u64, m_edges: u64) -> Result<f64> {
    if m_edges == 0 || m_edges > n {
        return Err(Error::InvalidParameter("need n >= m_edges >= 1".into()));
    }
    sn_closed_form((n / m_edges).max(1))
}

/// Round half up to the nearest integer.
pub fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}
