//! The MDP abstraction and Bellman backups.
//!
//! A model is the 5-tuple (state space, actions, transition sampler, cost,
//! discount) plus the cost bound `c_max` and derived `v_max = c_max/(1-gamma)`.
//! The empirical Bellman backup replaces the next-state expectation with an
//! M-sample average, drawing fresh samples per action.

use rayon::prelude::*;

use crate::error::{EvlError, Result};
use crate::rng::{substream, Rng};
use crate::value::ValueFn;

pub type State = Vec<f64>;

pub type DynCost = Box<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;
pub type DynSampler = Box<dyn Fn(&[f64], usize, &mut Rng) -> State + Send + Sync>;
/// Deterministic quadrature of `E[v(X) | s, a]` for models exposing a
/// transition density.
pub type DynExpectation = Box<dyn Fn(&[f64], usize, &dyn Fn(&[f64]) -> f64) -> f64 + Send + Sync>;

pub struct MdpModel {
    pub state_dim: usize,
    pub state_bounds: Vec<(f64, f64)>,
    pub n_actions: usize,
    pub gamma: f64,
    pub c_max: f64,
    cost: DynCost,
    sampler: DynSampler,
    expectation: Option<DynExpectation>,
}

impl MdpModel {
    pub fn new(
        state_dim: usize,
        state_bounds: Vec<(f64, f64)>,
        n_actions: usize,
        gamma: f64,
        c_max: f64,
        cost: DynCost,
        sampler: DynSampler,
        expectation: Option<DynExpectation>,
    ) -> Self {
        // gamma = 0 is allowed for degenerate test models; gamma = 1 is not
        assert!((0.0..1.0).contains(&gamma), "gamma must be in [0, 1)");
        assert!(c_max > 0.0, "c_max must be positive");
        assert_eq!(state_bounds.len(), state_dim);
        assert!(n_actions >= 1);
        MdpModel {
            state_dim,
            state_bounds,
            n_actions,
            gamma,
            c_max,
            cost,
            sampler,
            expectation,
        }
    }

    pub fn v_max(&self) -> f64 {
        self.c_max / (1.0 - self.gamma)
    }

    pub fn cost(&self, s: &[f64], a: usize) -> f64 {
        (self.cost)(s, a)
    }

    pub fn next_state(&self, s: &[f64], a: usize, rng: &mut Rng) -> State {
        (self.sampler)(s, a, rng)
    }

    pub fn has_expectation(&self) -> bool {
        self.expectation.is_some()
    }

    /// `E[v(X) | s, a]` by the model's quadrature rule, when available.
    pub fn expected_value(&self, s: &[f64], a: usize, v: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        match &self.expectation {
            Some(q) => Ok(q(s, a, v)),
            None => Err(EvlError::Unsupported(
                "model exposes no transition density for quadrature".into(),
            )),
        }
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        s.len() == self.state_dim
            && s.iter()
                .zip(&self.state_bounds)
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }
}

/// A batch of sampled Bellman-backup targets: `N` states with one target
/// value each, computed with `M` next-state draws per action.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBackup {
    pub states: Vec<State>,
    pub targets: Vec<f64>,
    pub m_per_backup: usize,
}

impl SampledBackup {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// One empirical Bellman backup: `min_a { c(s,a) + gamma/m * sum_i v(X_i) }`
/// with `m` fresh next-state draws per action.
pub fn empirical_bellman_backup(
    model: &MdpModel,
    v: &ValueFn,
    s: &[f64],
    m: usize,
    rng: &mut Rng,
) -> Result<f64> {
    assert!(m >= 1);
    let mut best = f64::INFINITY;
    for a in 0..model.n_actions {
        let mut acc = 0.0;
        for _ in 0..m {
            let x = model.next_state(s, a, rng);
            acc += v.try_evaluate(&x)?;
        }
        let q = model.cost(s, a) + model.gamma * acc / m as f64;
        if q < best {
            best = q;
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(EvlError::NonFinite {
            state: s.to_vec(),
            context: "empirical Bellman backup".into(),
        })
    }
}

/// Exact Bellman backup `[T v](s)` on a grid of states, using the model's
/// transition quadrature or, failing that, a declared high-sample fallback.
pub fn exact_bellman_grid(
    model: &MdpModel,
    v: &ValueFn,
    grid: &[State],
    fallback_m: Option<usize>,
) -> Result<Vec<f64>> {
    if model.has_expectation() {
        grid.iter()
            .map(|s| {
                let mut best = f64::INFINITY;
                for a in 0..model.n_actions {
                    let ev = model.expected_value(s, a, &|x| v.evaluate(x))?;
                    if !ev.is_finite() {
                        return Err(EvlError::NonFinite {
                            state: s.clone(),
                            context: "quadrature expectation".into(),
                        });
                    }
                    best = best.min(model.cost(s, a) + model.gamma * ev);
                }
                Ok(best)
            })
            .collect()
    } else {
        let m = fallback_m.ok_or_else(|| {
            EvlError::Unsupported(
                "model has no transition density and no sampling fallback was declared".into(),
            )
        })?;
        if m < 100_000 {
            return Err(EvlError::InvalidInput(format!(
                "fallback sample size {m} is below the declared minimum of 1e5"
            )));
        }
        grid.iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng = substream(0x9bc4_10ff, &[i as u64]);
                empirical_bellman_backup(model, v, s, m, &mut rng)
            })
            .collect()
    }
}

/// Sample `n` states from `mu` and compute their empirical backup targets.
///
/// Each state gets its own pre-split rng substream, so the result is
/// identical whether the backups run serially or in parallel.
pub fn sample_backups(
    model: &MdpModel,
    v: &ValueFn,
    mu_sampler: &(dyn Fn(&mut Rng) -> State + Sync),
    n: usize,
    m: usize,
    seed: u64,
    tag: u64,
) -> Result<SampledBackup> {
    assert!(n >= 1 && m >= 1);
    let mut state_rng = substream(seed, &[tag, 0]);
    let states: Vec<State> = (0..n).map(|_| mu_sampler(&mut state_rng)).collect();
    let targets: Vec<Result<f64>> = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = substream(seed, &[tag, 1, i as u64]);
            empirical_bellman_backup(model, v, s, m, &mut rng)
        })
        .collect();
    let targets = targets.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(SampledBackup { states, targets, m_per_backup: m })
}

/// Greedy action under `v` by empirical backup values; ties broken by the
/// lowest action index.
pub fn greedy_policy_action(
    model: &MdpModel,
    v: &ValueFn,
    s: &[f64],
    m_eval: usize,
    rng: &mut Rng,
) -> Result<usize> {
    assert!(m_eval >= 1);
    let mut best = f64::INFINITY;
    let mut best_a = 0;
    for a in 0..model.n_actions {
        let mut acc = 0.0;
        for _ in 0..m_eval {
            let x = model.next_state(s, a, rng);
            acc += v.try_evaluate(&x)?;
        }
        let q = model.cost(s, a) + model.gamma * acc / m_eval as f64;
        if q < best {
            best = q;
            best_a = a;
        }
    }
    Ok(best_a)
}

/// Greedy action using the model's quadrature expectation when it has one,
/// falling back to the empirical backup otherwise.
pub fn greedy_action_exact_or_empirical(
    model: &MdpModel,
    v: &ValueFn,
    s: &[f64],
    m_eval: usize,
    rng: &mut Rng,
) -> Result<usize> {
    if !model.has_expectation() {
        return greedy_policy_action(model, v, s, m_eval, rng);
    }
    let mut best = f64::INFINITY;
    let mut best_a = 0;
    for a in 0..model.n_actions {
        let ev = model.expected_value(s, a, &|x| v.evaluate(x))?;
        let q = model.cost(s, a) + model.gamma * ev;
        if q < best {
            best = q;
            best_a = a;
        }
    }
    Ok(best_a)
}
