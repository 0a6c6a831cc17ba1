//! The outer EVL iteration: repeatedly sample states, compute empirical
//! Bellman targets, and fit a new value function, for K iterations.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::fit::{fit_polynomial, fit_rkhs, fit_rpbf};
use crate::mdp::{exact_bellman_grid, sample_backups, MdpModel, State};
use crate::rng::{substream, Rng};
use crate::value::{Basis, Kernel, RpbfFamily, ValueFn};

/// State-sampling distribution `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum MuSampler {
    /// Uniform over a box; defaults to the model's state bounds.
    UniformBox { bounds: Vec<(f64, f64)> },
}

impl MuSampler {
    pub fn uniform_over(model: &MdpModel) -> Self {
        MuSampler::UniformBox { bounds: model.state_bounds.clone() }
    }

    pub fn sample(&self, rng: &mut Rng) -> State {
        use rand::Rng as _;
        match self {
            MuSampler::UniformBox { bounds } => bounds
                .iter()
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect(),
        }
    }
}

/// Which fitting operator closes the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum FitterSpec {
    Rpbf { family: RpbfFamily, c_bound: f64 },
    Rkhs { kernel: Kernel, lambda: f64 },
    Polynomial { degree: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvlConfig {
    pub n_states: usize,
    pub m_next: usize,
    /// Number of random basis functions; required for (and only for) RPBF.
    pub j_features: Option<usize>,
    pub k_iters: usize,
    pub fitter: FitterSpec,
    pub mu: MuSampler,
    pub seed: u64,
    /// Consumers checkpoint every this many iterations; 0 disables.
    pub checkpoint_every: usize,
}

impl EvlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states < 1 || self.m_next < 1 || self.k_iters < 1 {
            return Err(EvlError::InvalidInput("N, M, K must all be at least 1".into()));
        }
        match (&self.fitter, self.j_features) {
            (FitterSpec::Rpbf { .. }, None) => {
                Err(EvlError::InvalidInput("j_features is required for the RPBF fitter".into()))
            }
            (FitterSpec::Rpbf { .. }, Some(0)) => {
                Err(EvlError::InvalidInput("j_features must be at least 1".into()))
            }
            (FitterSpec::Rkhs { .. }, Some(_)) | (FitterSpec::Polynomial { .. }, Some(_)) => {
                Err(EvlError::InvalidInput(
                    "j_features is only meaningful for the RPBF fitter".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Per-iteration record: empirical residuals of the fit on the sampled
/// states (`||v_{k+1} - target||` in 1-, 2- and sup-norm), fit diagnostics,
/// wall time, and the relative error against an oracle when one is attached
/// by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub residual_l1: f64,
    pub residual_l2: f64,
    pub residual_sup: f64,
    pub fit_objective: f64,
    pub fit_residual: f64,
    /// `sup |v_{k+1} - T v_k|` on a held-out grid, available when the model
    /// exposes a transition quadrature (1-d models only).
    pub bellman_residual_sup: Option<f64>,
    pub wall_secs: f64,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    /// The iterate produced by each iteration, `iterates[k] = v_{k+1}`.
    pub iterates: Vec<ValueFn>,
}

/// Run K iterations of EVL from `v0`. Bit-reproducible given the config
/// seed; every iteration uses fresh state, parameter, and next-state
/// samples drawn from pre-split substreams.
pub fn run_evl(model: &MdpModel, config: &EvlConfig, v0: &ValueFn) -> Result<(ValueFn, RunTrace)> {
    config.validate()?;
    let v_max = model.v_max();
    let mut v = v0.clone();
    let mut trace = RunTrace::default();

    for k in 0..config.k_iters {
        let started = Instant::now();
        let data = match sample_backups(
            model,
            &v,
            &|rng| config.mu.sample(rng),
            config.n_states,
            config.m_next,
            config.seed,
            k as u64,
        ) {
            Ok(d) => d,
            Err(e) => {
                return Err(EvlError::FitFailed {
                    iteration: k,
                    source: Box::new(e),
                    trace,
                })
            }
        };

        let fit_result = match &config.fitter {
            FitterSpec::Rpbf { family, c_bound } => {
                let j = config.j_features.expect("validated");
                let thetas = family.sample(j, &mut substream(config.seed, &[k as u64, 2]));
                fit_rpbf(&thetas, &data, *c_bound, Some(v_max))
            }
            FitterSpec::Rkhs { kernel, lambda } => fit_rkhs(*kernel, *lambda, &data, Some(v_max)),
            FitterSpec::Polynomial { degree } => fit_polynomial(*degree, &data, Some(v_max)),
        };
        let (next, report) = match fit_result {
            Ok(x) => x,
            Err(e) => {
                return Err(EvlError::FitFailed {
                    iteration: k,
                    source: Box::new(e),
                    trace,
                })
            }
        };

        let n = data.len() as f64;
        let (mut l1, mut l2, mut sup) = (0.0_f64, 0.0_f64, 0.0_f64);
        for (s, t) in data.states.iter().zip(&data.targets) {
            let d = (next.evaluate(s) - t).abs();
            l1 += d;
            l2 += d * d;
            sup = sup.max(d);
        }
        let bellman_residual_sup = if model.has_expectation() && model.state_dim == 1 {
            let (lo, hi) = model.state_bounds[0];
            let grid: Vec<State> = (0..=100)
                .map(|i| vec![lo + (hi - lo) * i as f64 / 100.0])
                .collect();
            let tv = exact_bellman_grid(model, &v, &grid, None)?;
            Some(
                grid.iter()
                    .zip(&tv)
                    .map(|(s, t)| (next.evaluate(s) - t).abs())
                    .fold(0.0_f64, f64::max),
            )
        } else {
            None
        };
        trace.records.push(IterationRecord {
            k,
            residual_l1: l1 / n,
            residual_l2: (l2 / n).sqrt(),
            residual_sup: sup,
            fit_objective: report.objective,
            fit_residual: report.residual,
            bellman_residual_sup,
            wall_secs: started.elapsed().as_secs_f64(),
            rel_error: None,
        });
        trace.iterates.push(next.clone());
        v = next;
    }
    Ok((v, trace))
}

/// Pointwise evaluation of a value function on a list of states, with the
/// clamp applied and non-finite results reported as errors.
pub fn evaluate_value_fn(v: &ValueFn, states: &[State]) -> Result<Vec<f64>> {
    states.iter().map(|s| v.try_evaluate(s)).collect()
}

/// Checkpoint file schema: a versioned JSON object holding the basis,
/// weights, clamp, iteration index and run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: u32,
    pub kind: String,
    pub basis: Basis,
    pub weights: Vec<f64>,
    pub clamp: Option<f64>,
    pub iteration: usize,
    pub seed: u64,
}

impl Checkpoint {
    pub fn new(v: &ValueFn, iteration: usize, seed: u64) -> Self {
        Checkpoint {
            format: 1,
            kind: v.basis.kind_name().to_string(),
            basis: v.basis.clone(),
            weights: v.weights.clone(),
            clamp: v.clamp,
            iteration,
            seed,
        }
    }

    pub fn into_value_fn(self) -> ValueFn {
        ValueFn::new(self.basis, self.weights, self.clamp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{replacement_model, ReplacementParams};
    use crate::mdp::MdpModel;
    use approx::assert_abs_diff_eq;

    fn deterministic_model(gamma: f64) -> MdpModel {
        // two actions, transitions collapse to fixed points
        MdpModel::new(
            1,
            vec![(0.0, 10.0)],
            2,
            gamma,
            100.0,
            Box::new(|s: &[f64], a: usize| if a == 0 { s[0] } else { 8.0 - s[0] }),
            Box::new(|_s: &[f64], a: usize, _rng: &mut Rng| vec![if a == 0 { 2.0 } else { 6.0 }]),
            None,
        )
    }

    #[test]
    fn interpolating_fit_reproduces_exact_backup() {
        // deterministic model, one iteration, rich polynomial: v_1 equals
        // T v_0 on the sampled states
        let model = deterministic_model(0.9);
        let config = EvlConfig {
            n_states: 12,
            m_next: 1,
            j_features: None,
            k_iters: 1,
            fitter: FitterSpec::Polynomial { degree: 3 },
            mu: MuSampler::uniform_over(&model),
            seed: 5,
            checkpoint_every: 0,
        };
        let v0 = ValueFn::zero();
        let (_v1, trace) = run_evl(&model, &config, &v0).unwrap();
        // T v0 is min(s, 8 - s): piecewise linear, degree 3 cannot
        // interpolate exactly at the kink, but residuals must match the
        // recorded fit on sampled states
        assert_eq!(trace.records.len(), 1);
        // exact interpolation check with linear costs only on one branch:
        // rebuild with a single action so T v0 = s is degree-1
        let model = MdpModel::new(
            1,
            vec![(0.0, 10.0)],
            1,
            0.9,
            100.0,
            Box::new(|s: &[f64], _a| s[0]),
            Box::new(|_s: &[f64], _a, _r: &mut Rng| vec![2.0]),
            None,
        );
        let config = EvlConfig {
            fitter: FitterSpec::Polynomial { degree: 2 },
            ..config
        };
        let (_v1, trace) = run_evl(&model, &config, &v0).unwrap();
        assert!(trace.records[0].residual_sup <= 1e-8, "{:?}", trace.records[0]);
    }

    #[test]
    fn gamma_zero_converges_in_one_iteration() {
        // gamma = 0 makes the backup target min_a c(s, a); with a single
        // linear cost every fit recovers the same function exactly, so all
        // iterates after the first coincide
        let model = MdpModel::new(
            1,
            vec![(0.0, 10.0)],
            1,
            0.0,
            100.0,
            Box::new(|s: &[f64], _a| 3.0 * s[0] + 1.0),
            Box::new(|_s: &[f64], _a, _r: &mut Rng| vec![2.0]),
            None,
        );
        let config = EvlConfig {
            n_states: 30,
            m_next: 1,
            j_features: None,
            k_iters: 4,
            fitter: FitterSpec::Polynomial { degree: 2 },
            mu: MuSampler::uniform_over(&model),
            seed: 11,
            checkpoint_every: 0,
        };
        let (_v, trace) = run_evl(&model, &config, &ValueFn::zero()).unwrap();
        for rec in &trace.records {
            assert!(rec.residual_sup <= 1e-8, "{rec:?}");
        }
        let first = &trace.iterates[0];
        for it in &trace.iterates[1..] {
            for i in 0..=20 {
                let s = [i as f64 * 0.5];
                assert_abs_diff_eq!(it.evaluate(&s), first.evaluate(&s), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn seed_determinism_of_full_runs() {
        let model = replacement_model(&ReplacementParams::default());
        let config = EvlConfig {
            n_states: 25,
            m_next: 3,
            j_features: Some(4),
            k_iters: 3,
            fitter: FitterSpec::Rpbf {
                family: RpbfFamily::Fourier { dim: 1, omega_std: 0.1 },
                c_bound: 150.0,
            },
            mu: MuSampler::uniform_over(&model),
            seed: 99,
            checkpoint_every: 0,
        };
        let (v_a, trace_a) = run_evl(&model, &config, &ValueFn::zero()).unwrap();
        let (v_b, trace_b) = run_evl(&model, &config, &ValueFn::zero()).unwrap();
        assert_eq!(v_a, v_b);
        assert_eq!(trace_a.iterates, trace_b.iterates);
        for (a, b) in trace_a.records.iter().zip(&trace_b.records) {
            assert_eq!(a.residual_sup, b.residual_sup);
            assert_eq!(a.residual_l1, b.residual_l1);
        }
    }

    #[test]
    fn iterates_respect_the_clamp() {
        let model = replacement_model(&ReplacementParams::default());
        let config = EvlConfig {
            n_states: 20,
            m_next: 2,
            j_features: None,
            k_iters: 5,
            fitter: FitterSpec::Polynomial { degree: 4 },
            mu: MuSampler::uniform_over(&model),
            seed: 3,
            checkpoint_every: 0,
        };
        let (_v, trace) = run_evl(&model, &config, &ValueFn::zero()).unwrap();
        let v_max = model.v_max();
        for it in &trace.iterates {
            for i in 0..=100 {
                let s = [i as f64 * 0.1];
                assert!(it.evaluate(&s).abs() <= v_max + 1e-12);
            }
        }
    }

    #[test]
    fn config_validation_rejects_mismatched_j() {
        let model = replacement_model(&ReplacementParams::default());
        let config = EvlConfig {
            n_states: 10,
            m_next: 1,
            j_features: Some(5),
            k_iters: 1,
            fitter: FitterSpec::Rkhs {
                kernel: Kernel::Gaussian { inv_sq_bandwidth: 0.01 },
                lambda: 0.01,
            },
            mu: MuSampler::uniform_over(&model),
            seed: 1,
            checkpoint_every: 0,
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn checkpoint_roundtrips_value_fn() {
        let v = ValueFn::constant(7.0);
        let cp = Checkpoint::new(&v, 12, 42);
        let json = serde_json::to_string(&cp).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back.format, 1);
        assert_eq!(back.kind, "constant");
        assert_abs_diff_eq!(back.into_value_fn().evaluate(&[0.0]), 7.0);
    }
}
