//! Empirical stochastic-dominance check of the EVL error-level process
//! against the dominating chain.
//!
//! Each run's per-iteration residuals are thresholded at epsilon into
//! good/bad flags; the error level X then walks down one level on a good
//! iteration and resets to K* on a bad one, starting from X_0 = K*. The
//! check compares empirical tail probabilities of X against the exact
//! marginals of Y at every (k, theta).

use serde::{Deserialize, Serialize};

use super::chain::{chain_marginal, DominatingChain};
use crate::error::{EvlError, Result};

const MIN_RUNS: usize = 30;

/// Convert per-run residual sequences into error-level trajectories,
/// including the initial level `X_0 = K*`.
pub fn build_error_levels(
    residuals_per_run: &[Vec<f64>],
    epsilon: f64,
    k_star: usize,
) -> Vec<Vec<usize>> {
    residuals_per_run
        .iter()
        .map(|rs| {
            let mut x = k_star;
            let mut traj = vec![x];
            for r in rs {
                x = if *r <= epsilon {
                    x.saturating_sub(1).max(1)
                } else {
                    k_star
                };
                traj.push(x);
            }
            traj
        })
        .collect()
}

/// Conservative per-step good probability: the minimum across iteration
/// indices of the cross-run fraction of good iterations. The dominating
/// chain's decrement probability must lower-bound the good probability at
/// every step, and pooling across steps would bias the estimate upward
/// whenever early iterations are systematically easier than later ones.
pub fn estimate_q(residuals_per_run: &[Vec<f64>], epsilon: f64) -> f64 {
    let horizon = residuals_per_run.iter().map(|r| r.len()).min().unwrap_or(0);
    if horizon == 0 {
        return 0.0;
    }
    (0..horizon)
        .map(|k| {
            let good = residuals_per_run.iter().filter(|r| r[k] <= epsilon).count();
            good as f64 / residuals_per_run.len() as f64
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub k: usize,
    pub theta: usize,
    /// Empirical `Pr{X_k >= theta}`.
    pub p_x: f64,
    /// Exact `Pr{Y_k >= theta}`.
    pub p_y: f64,
    /// Binomial standard error of `p_x`.
    pub stderr: f64,
    /// True when `p_x` exceeds `p_y` by more than two standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub n_runs: usize,
    pub horizon: usize,
    pub rows: Vec<DominanceRow>,
    pub violations: usize,
}

/// Compare the empirical tails of the error-level trajectories against the
/// dominating chain's exact marginals. Refuses fewer than 30 runs.
pub fn dominance_check(
    x_traj: &[Vec<usize>],
    chain: &DominatingChain,
) -> Result<DominanceReport> {
    let n = x_traj.len();
    if n < MIN_RUNS {
        return Err(EvlError::InvalidInput(format!(
            "dominance check needs at least {MIN_RUNS} runs, got {n}"
        )));
    }
    let horizon = x_traj.iter().map(|t| t.len()).min().unwrap_or(0);
    if horizon == 0 {
        return Err(EvlError::InvalidInput("empty trajectories".into()));
    }
    for t in x_traj {
        if t.iter().any(|&x| x < 1 || x > chain.k_star) {
            return Err(EvlError::InvalidInput(
                "trajectory level outside {1..K*}".into(),
            ));
        }
    }

    let mut rows = Vec::new();
    let mut violations = 0;
    for k in 0..horizon {
        let y_marginal = chain_marginal(chain, k);
        for theta in 1..=chain.k_star {
            let hits = x_traj.iter().filter(|t| t[k] >= theta).count();
            let p_x = hits as f64 / n as f64;
            let p_y: f64 = y_marginal[theta - 1..].iter().sum();
            let stderr = (p_x * (1.0 - p_x) / n as f64).sqrt();
            let flagged = p_x > p_y + 2.0 * stderr;
            if flagged {
                violations += 1;
            }
            rows.push(DominanceRow { k, theta, p_x, p_y, stderr, flagged });
        }
    }
    Ok(DominanceReport { n_runs: n, horizon, rows, violations })
}
