//! Optimal replacement of a deteriorating asset.
//!
//! The state is accumulated utilization `s >= 0`. Keeping the asset
//! (action 1) costs `maint_coeff * s` and the state grows by an
//! `Exp(lambda_rate)` increment; replacing it (action 0) costs
//! `replace_cost` and resets the state to a fresh exponential draw. The
//! state space is truncated at `s_max` with the exponential tail mass
//! folded onto the boundary, so the oracle and the learners share one
//! compact model.

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::mdp::MdpModel;
use crate::value::{Basis, ValueFn};

pub const ACTION_REPLACE: usize = 0;
pub const ACTION_KEEP: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplacementParams {
    pub gamma: f64,
    pub lambda_rate: f64,
    pub replace_cost: f64,
    pub maint_coeff: f64,
    pub s_max: f64,
    /// Target node count for the transition quadrature over `[0, s_max]`.
    pub quad_n: usize,
}

impl Default for ReplacementParams {
    fn default() -> Self {
        ReplacementParams {
            gamma: 0.6,
            lambda_rate: 0.5,
            replace_cost: 30.0,
            maint_coeff: 4.0,
            s_max: 10.0,
            quad_n: 2000,
        }
    }
}

impl ReplacementParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 || self.gamma >= 1.0 {
            return Err(EvlError::InvalidInput("gamma must be in (0, 1)".into()));
        }
        if self.lambda_rate <= 0.0
            || self.replace_cost <= 0.0
            || self.maint_coeff <= 0.0
            || self.s_max <= 0.0
        {
            return Err(EvlError::InvalidInput(
                "replacement parameters must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `E[v(X) | base]` where `X = min(base + Exp(lambda), s_max)`:
    /// trapezoidal quadrature of the truncated exponential density plus the
    /// tail-mass atom at `s_max`. Keep uses `base = s`, replace `base = 0`.
    pub fn expected_value(&self, base: f64, v: &dyn Fn(f64) -> f64) -> f64 {
        let lam = self.lambda_rate;
        let span = self.s_max - base;
        if span <= 1e-12 {
            return v(self.s_max);
        }
        let h_target = self.s_max / self.quad_n as f64;
        let m = ((span / h_target - 1e-9).ceil() as usize).max(16);
        let h = span / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let x = base + i as f64 * h;
            let f = v(x) * lam * (-lam * (x - base)).exp();
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            acc += w * f;
        }
        acc * h + (-lam * span).exp() * v(self.s_max)
    }
}

/// Build the replacement MDP. Costs: `maint_coeff * s` for keep,
/// `replace_cost` for replace.
pub fn replacement_model(params: &ReplacementParams) -> MdpModel {
    params.validate().expect("valid replacement parameters");
    let p = params.clone();
    let cost = {
        let p = p.clone();
        move |s: &[f64], a: usize| -> f64 {
            if a == ACTION_KEEP {
                p.maint_coeff * s[0]
            } else {
                p.replace_cost
            }
        }
    };
    let sampler = {
        let p = p.clone();
        move |s: &[f64], a: usize, rng: &mut crate::rng::Rng| -> Vec<f64> {
            let exp = Exp::new(p.lambda_rate).expect("positive rate");
            let base = if a == ACTION_KEEP { s[0] } else { 0.0 };
            vec![(base + exp.sample(rng)).min(p.s_max)]
        }
    };
    let expectation = {
        let p = p.clone();
        move |s: &[f64], a: usize, v: &dyn Fn(&[f64]) -> f64| -> f64 {
            let base = if a == ACTION_KEEP { s[0] } else { 0.0 };
            p.expected_value(base, &|x| v(&[x]))
        }
    };
    let c_max = (params.maint_coeff * params.s_max).max(params.replace_cost);
    MdpModel::new(
        1,
        vec![(0.0, params.s_max)],
        2,
        params.gamma,
        c_max,
        Box::new(cost),
        Box::new(sampler),
        Some(Box::new(expectation)),
    )
}

/// Brute-force fixed-point oracle: value iteration on a uniform grid over
/// `[0, s_max]` with the same quadrature as the model, run until the
/// sup-change is at most `tol * (1 - gamma) / gamma` so the fixed-point
/// error is at most `tol`. Returns a tabular-grid value function with
/// linear interpolation.
pub fn replacement_oracle(
    params: &ReplacementParams,
    grid_n: usize,
    tol: f64,
) -> Result<ValueFn> {
    params.validate()?;
    if grid_n < 100 {
        return Err(EvlError::InvalidInput("oracle grid needs at least 100 nodes".into()));
    }
    // quadrature spacing tied to the oracle grid so T evaluated on the grid
    // reproduces the discrete fixed point exactly
    let mut p = params.clone();
    p.quad_n = grid_n - 1;
    let h = p.s_max / (grid_n - 1) as f64;
    let nodes: Vec<f64> = (0..grid_n).map(|i| i as f64 * h).collect();
    let mut values = vec![0.0_f64; grid_n];
    let stop = tol * (1.0 - p.gamma) / p.gamma;
    let v_max = p.maint_coeff.mul_add(p.s_max, 0.0).max(p.replace_cost) / (1.0 - p.gamma);

    for _sweep in 0..10_000 {
        let interp = |x: f64| -> f64 {
            let idx = ((x / h).floor() as usize).min(grid_n - 2);
            let frac = (x - idx as f64 * h) / h;
            values[idx] * (1.0 - frac) + values[idx + 1] * frac
        };
        let e_replace = p.expected_value(0.0, &interp);
        let next: Vec<f64> = nodes
            .iter()
            .map(|&s| {
                let keep = p.maint_coeff * s + p.gamma * p.expected_value(s, &interp);
                let replace = p.replace_cost + p.gamma * e_replace;
                keep.min(replace)
            })
            .collect();
        let delta = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        values = next;
        if delta <= stop {
            return Ok(ValueFn::new(
                Basis::Grid { lo: 0.0, hi: p.s_max },
                values,
                Some(v_max),
            ));
        }
    }
    Err(EvlError::NoConvergence(
        "replacement oracle value iteration exceeded 10000 sweeps".into(),
    ))
}
