//! The dominating Markov chain on `{1, ..., K*}`.
//!
//! From level `y` the chain moves to `max(y - 1, 1)` with probability `q`
//! and resets to `K*` otherwise. Its stationary distribution has the closed
//! form `mu(1) = q^{K*-1}`, `mu(i) = (1-q) q^{K*-i}` for middle levels, and
//! `mu(K*) = 1 - q`.

use nalgebra::{DMatrix, RowDVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominatingChain {
    pub q: f64,
    pub k_star: usize,
}

impl DominatingChain {
    pub fn new(q: f64, k_star: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) || !q.is_finite() {
            return Err(EvlError::InvalidInput("q must lie in [0, 1]".into()));
        }
        if k_star < 1 {
            return Err(EvlError::InvalidInput("k_star must be at least 1".into()));
        }
        Ok(DominatingChain { q, k_star })
    }

    /// One transition from level `y` (1-based).
    pub fn step(&self, y: usize, rng: &mut Rng) -> usize {
        debug_assert!((1..=self.k_star).contains(&y));
        if rng.gen_bool(self.q) {
            y.saturating_sub(1).max(1)
        } else {
            self.k_star
        }
    }
}

/// Row-stochastic transition matrix, levels 1..K* mapped to indices 0..K*-1.
pub fn chain_transition_matrix(chain: &DominatingChain) -> DMatrix<f64> {
    let n = chain.k_star;
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let down = i.saturating_sub(1);
        p[(i, down)] += chain.q;
        p[(i, n - 1)] += 1.0 - chain.q;
    }
    p
}

/// Closed-form stationary distribution over levels 1..K*.
pub fn chain_steady_state(chain: &DominatingChain) -> Vec<f64> {
    let k = chain.k_star;
    if k == 1 {
        return vec![1.0];
    }
    let q = chain.q;
    let mut mu = vec![0.0; k];
    mu[0] = q.powi(k as i32 - 1);
    for i in 2..k {
        mu[i - 1] = (1.0 - q) * q.powi((k - i) as i32);
    }
    mu[k - 1] = 1.0 - q;
    mu
}

/// Exact marginal distribution of `Y_k` started from `Y_0 = K*`.
pub fn chain_marginal(chain: &DominatingChain, k: usize) -> Vec<f64> {
    let n = chain.k_star;
    let p = chain_transition_matrix(chain);
    let mut d = RowDVector::zeros(n);
    d[n - 1] = 1.0;
    for _ in 0..k {
        d = &d * &p;
    }
    d.iter().copied().collect()
}

/// Occupancy summary of one simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOccupancy {
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub final_state: usize,
}

/// Simulate `steps` transitions from `Y_0 = K*` and report level occupancy.
pub fn chain_simulate(chain: &DominatingChain, steps: usize, rng: &mut Rng) -> ChainOccupancy {
    let mut counts = vec![0u64; chain.k_star];
    let mut y = chain.k_star;
    for _ in 0..steps {
        y = chain.step(y, rng);
        counts[y - 1] += 1;
    }
    let frequencies = counts
        .iter()
        .map(|&c| c as f64 / steps.max(1) as f64)
        .collect();
    ChainOccupancy { counts, frequencies, final_state: y }
}

/// Mixing-time bound `ceil(ln(1/(delta' (1-q) q^{K*-1})))`, natural log.
pub fn chain_mixing_bound(chain: &DominatingChain, delta_prime: f64) -> Result<u64> {
    if !(0.0 < chain.q && chain.q < 1.0) {
        return Err(EvlError::InvalidInput(
            "mixing bound requires q strictly inside (0, 1)".into(),
        ));
    }
    if !(0.0 < delta_prime && delta_prime < 1.0) {
        return Err(EvlError::InvalidInput("delta' must be in (0, 1)".into()));
    }
    let arg = delta_prime * (1.0 - chain.q) * chain.q.powi(chain.k_star as i32 - 1);
    Ok((1.0 / arg).ln().ceil() as u64)
}
