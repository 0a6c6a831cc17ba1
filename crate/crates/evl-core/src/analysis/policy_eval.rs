//! Monte Carlo evaluation of the greedy policy extracted from a fitted
//! value function, measured against an oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::mdp::{greedy_action_exact_or_empirical, MdpModel, State};
use crate::rng::substream;
use crate::value::ValueFn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyErrorReport {
    /// `sup_s |v*(s) - v_hat_pi(s)| / |v*(s)|` over the evaluated states.
    pub rel_error: f64,
    /// Worst-case bias from truncating rollouts: `gamma^horizon * v_max`.
    pub truncation_bias: f64,
    /// States skipped because `|v*(s)|` was below the guard threshold.
    pub skipped: usize,
}

/// Estimate the relative sup error of the greedy policy under `v` against
/// the oracle value function, by averaging truncated discounted rollouts.
///
/// The greedy action uses the model's transition quadrature when available,
/// otherwise `m_eval` empirical next-state draws. States where
/// `|oracle(s)| < 1e-6` are skipped and counted.
pub fn policy_relative_error(
    model: &MdpModel,
    v: &ValueFn,
    oracle: &ValueFn,
    eval_states: &[State],
    rollouts: usize,
    horizon: usize,
    m_eval: usize,
    seed: u64,
) -> Result<PolicyErrorReport> {
    if eval_states.is_empty() {
        return Err(EvlError::InvalidInput("empty evaluation grid".into()));
    }
    if rollouts < 1 || horizon < 1 {
        return Err(EvlError::InvalidInput("rollouts and horizon must be at least 1".into()));
    }

    let per_state: Vec<Result<Option<f64>>> = eval_states
        .par_iter()
        .enumerate()
        .map(|(i, s0)| {
            let v_star = oracle.try_evaluate(s0)?;
            if v_star.abs() < 1e-6 {
                return Ok(None);
            }
            let mut acc = 0.0;
            for r in 0..rollouts {
                let mut rng = substream(seed, &[i as u64, r as u64]);
                let mut s = s0.clone();
                let mut discount = 1.0;
                for _ in 0..horizon {
                    let a = greedy_action_exact_or_empirical(model, v, &s, m_eval, &mut rng)?;
                    acc += discount * model.cost(&s, a);
                    s = model.next_state(&s, a, &mut rng);
                    discount *= model.gamma;
                }
            }
            let v_pi = acc / rollouts as f64;
            Ok(Some((v_star - v_pi).abs() / v_star.abs()))
        })
        .collect();

    let mut rel_error = 0.0_f64;
    let mut skipped = 0;
    for r in per_state {
        match r? {
            Some(e) => rel_error = rel_error.max(e),
            None => skipped += 1,
        }
    }
    Ok(PolicyErrorReport {
        rel_error,
        truncation_bias: model.gamma.powi(horizon as i32) * model.v_max(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{replacement_model, replacement_oracle, ReplacementParams};
    use crate::mdp::greedy_policy_action;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<State> {
        (0..n)
            .map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64])
            .collect()
    }

    #[test]
    fn oracle_policy_is_nearly_self_consistent() {
        let params = ReplacementParams::default();
        let model = replacement_model(&params);
        let oracle = replacement_oracle(&params, 400, 1e-6).unwrap();
        let report = policy_relative_error(
            &model,
            &oracle,
            &oracle,
            &grid(11, 0.0, 10.0),
            300,
            50,
            64,
            17,
        )
        .unwrap();
        assert!(report.rel_error <= 0.03, "relative error {}", report.rel_error);
        assert!(report.truncation_bias <= 1e-9);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn zero_value_fn_has_positive_error() {
        let params = ReplacementParams::default();
        let model = replacement_model(&params);
        let oracle = replacement_oracle(&params, 400, 1e-6).unwrap();
        let report = policy_relative_error(
            &model,
            &ValueFn::zero(),
            &oracle,
            &grid(11, 0.0, 10.0),
            100,
            50,
            64,
            17,
        )
        .unwrap();
        assert!(report.rel_error > 0.0);
    }

    #[test]
    fn greedy_argmin_invariant_under_constant_shift() {
        let params = ReplacementParams::default();
        let model = replacement_model(&params);
        let v = replacement_oracle(&params, 200, 1e-5).unwrap();
        let mut shifted = v.clone();
        // lift the clamp so the +7 shift is not clipped away
        shifted.clamp = None;
        for w in shifted.weights.iter_mut() {
            *w += 7.0;
        }
        for i in 0..21 {
            let s = [i as f64 * 0.5];
            let a1 = greedy_policy_action(&model, &v, &s, 32, &mut substream(3, &[i])).unwrap();
            let a2 =
                greedy_policy_action(&model, &shifted, &s, 32, &mut substream(3, &[i])).unwrap();
            assert_eq!(a1, a2, "state {s:?}");
        }
    }

    #[test]
    fn empty_grid_is_an_error() {
        let params = ReplacementParams::default();
        let model = replacement_model(&params);
        let oracle = replacement_oracle(&params, 100, 1e-4).unwrap();
        assert!(
            policy_relative_error(&model, &oracle, &oracle, &[], 10, 10, 8, 0).is_err()
        );
    }
}
