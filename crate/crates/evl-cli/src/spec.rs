//! Experiment spec: a JSON file describing one experiment family over a
//! seed list. Unknown fields are rejected so typos fail loudly.

use evl_core::env::{
    acrobot_model, cartpole_model, replacement_model, AcrobotParams, CartPoleParams,
    ReplacementParams,
};
use evl_core::{EvlConfig, FitterSpec, Kernel, MdpModel, MuSampler, RpbfFamily};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum EnvironmentSpec {
    Replacement {
        #[serde(default)]
        params: ReplacementParams,
    },
    CartPole {
        #[serde(default)]
        params: CartPoleParams,
    },
    Acrobot {
        #[serde(default)]
        params: AcrobotParams,
    },
}

impl EnvironmentSpec {
    pub fn build(&self) -> MdpModel {
        match self {
            EnvironmentSpec::Replacement { params } => replacement_model(params),
            EnvironmentSpec::CartPole { params } => cartpole_model(params),
            EnvironmentSpec::Acrobot { params } => acrobot_model(params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    EvlRpbf { family: RpbfFamily, c_bound: f64 },
    EvlRkhs { kernel: Kernel, lambda: f64 },
    FviPoly { degree: usize },
}

impl AlgorithmSpec {
    pub fn fitter(&self) -> FitterSpec {
        match self {
            AlgorithmSpec::EvlRpbf { family, c_bound } => FitterSpec::Rpbf {
                family: family.clone(),
                c_bound: *c_bound,
            },
            AlgorithmSpec::EvlRkhs { kernel, lambda } => FitterSpec::Rkhs {
                kernel: *kernel,
                lambda: *lambda,
            },
            AlgorithmSpec::FviPoly { degree } => FitterSpec::Polynomial { degree: *degree },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    pub grid_n: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSettings {
    /// Uniform evaluation grid size over the first state dimension.
    pub eval_grid: usize,
    pub rollouts: usize,
    pub horizon: usize,
    pub m_eval: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Schema version; must be 1.
    pub format: u32,
    pub environment: EnvironmentSpec,
    pub algorithm: AlgorithmSpec,
    pub n_states: usize,
    pub m_next: usize,
    #[serde(default)]
    pub j_features: Option<usize>,
    pub k_iters: usize,
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub oracle: Option<OracleSettings>,
    #[serde(default)]
    pub evaluation: Option<EvaluationSettings>,
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.format != 1 {
            return Err(format!("unsupported spec format {}", self.format));
        }
        if self.seeds.is_empty() {
            return Err("seed list must be nonempty".into());
        }
        match (&self.algorithm, self.j_features) {
            (AlgorithmSpec::EvlRpbf { .. }, None) => {
                return Err("j_features is required for algorithm evl-rpbf".into())
            }
            (AlgorithmSpec::EvlRkhs { .. }, Some(_)) => {
                return Err("j_features is meaningless for algorithm evl-rkhs".into())
            }
            (AlgorithmSpec::FviPoly { .. }, Some(_)) => {
                return Err("j_features is meaningless for algorithm fvi-poly".into())
            }
            _ => {}
        }
        if let Some(o) = &self.oracle {
            if o.grid_n < 100 || o.tol <= 0.0 {
                return Err("oracle needs grid_n >= 100 and tol > 0".into());
            }
            if !matches!(self.environment, EnvironmentSpec::Replacement { .. }) {
                return Err("oracle settings are only available for the replacement environment".into());
            }
        }
        if let Some(e) = &self.evaluation {
            if e.eval_grid < 2 || e.rollouts < 1 || e.horizon < 1 || e.m_eval < 1 {
                return Err("evaluation settings must all be positive (eval_grid >= 2)".into());
            }
        }
        // defer numeric config checks to the engine
        let model = self.environment.build();
        self.evl_config(self.seeds[0], &model)
            .validate()
            .map_err(|e| e.to_string())
    }

    pub fn evl_config(&self, seed: u64, model: &MdpModel) -> EvlConfig {
        EvlConfig {
            n_states: self.n_states,
            m_next: self.m_next,
            j_features: self.j_features,
            k_iters: self.k_iters,
            fitter: self.algorithm.fitter(),
            mu: MuSampler::uniform_over(model),
            seed,
            checkpoint_every: self.checkpoint_every,
        }
    }
}
