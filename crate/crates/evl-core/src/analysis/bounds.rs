//! Error-propagation bounds and sample-complexity calculators.
//!
//! Natural logarithm is used everywhere. The constants `c_rho_mu` and `c_k`
//! have no estimation procedure, so all outputs are conditional on the
//! user-supplied values (default 1.0).

use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};

/// Problem constants feeding the complexity calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInputs {
    pub epsilon: f64,
    pub delta: f64,
    pub v_max: f64,
    pub gamma: f64,
    /// Concentrability coefficient; user-supplied, >= 1.
    pub c_rho_mu: f64,
    /// Weight bound `C` of the random-feature class.
    pub c_const: f64,
    pub n_actions: usize,
    /// RKHS regression constant; user-supplied.
    pub c_k: f64,
    /// Kernel diagonal bound `kappa = sup_s sqrt(K(s,s))`.
    pub kappa: f64,
}

impl ComplexityInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.epsilon,
            self.v_max,
            self.c_rho_mu,
            self.c_const,
            self.c_k,
            self.kappa,
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(EvlError::InvalidInput(
                "epsilon, v_max, c_rho_mu, c_const, c_k, kappa must be positive".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(EvlError::InvalidInput("delta must be in (0, 1)".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(EvlError::InvalidInput("gamma must be in (0, 1)".into()));
        }
        if self.c_rho_mu < 1.0 {
            return Err(EvlError::InvalidInput("c_rho_mu must be at least 1".into()));
        }
        if self.n_actions < 1 {
            return Err(EvlError::InvalidInput("n_actions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which error norm the RPBF guarantee is stated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormChoice {
    L1,
    L2,
}

/// Weighted p-norm error bound after K iterations with per-iteration
/// fitting error eps:
/// `2 ((1 - gamma^{K+1})/(1 - gamma))^{(p-1)/p} [C^{1/p} eps + gamma^{K/p} 2 v_max]`.
pub fn error_bound_lp(
    p: f64,
    eps: f64,
    k: u32,
    gamma: f64,
    c_rho_mu: f64,
    v_max: f64,
) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    let horizon = (1.0 - gamma.powi(k as i32 + 1)) / (1.0 - gamma);
    let outer = 2.0 * horizon.powf((p - 1.0) / p);
    outer * (c_rho_mu.powf(1.0 / p) * eps + gamma.powf(k as f64 / p) * 2.0 * v_max)
}

/// Sup-norm error bound after K iterations: `eps/(1-gamma) + gamma^K 2 v_max`.
pub fn error_bound_sup(eps: f64, k: u32, gamma: f64, v_max: f64) -> f64 {
    eps / (1.0 - gamma) + gamma.powi(k as i32) * 2.0 * v_max
}

/// Sample sizes for one EVL+RPBF run. All counts are ceilings of the
/// displayed formulas, stored as whole-valued floats because they can
/// exceed any fixed-width integer for small epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpbfComplexity {
    pub n: f64,
    pub m: f64,
    pub j: f64,
    pub k_star: i64,
    pub k_min: i64,
}

/// Sample sizes for one EVL+RKHS run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkhsComplexity {
    pub n: f64,
    pub m: f64,
    pub k_star: i64,
    pub k_min: i64,
}

fn delta_prime(delta: f64, k_star: i64) -> Result<f64> {
    if k_star <= 1 {
        return Err(EvlError::InvalidInput(
            "K* = 1 leaves delta' undefined; decrease epsilon or increase v_max".into(),
        ));
    }
    Ok(1.0 - (1.0 - delta / 2.0).powf(1.0 / (k_star as f64 - 1.0)))
}

fn mu_star(p: f64, k_star: i64) -> f64 {
    (1.0 - p) * p.powi(k_star as i32 - 1)
}

fn k_min(delta: f64, k_star: i64) -> i64 {
    (4.0 / (delta * mu_star(delta, k_star))).ln().ceil() as i64
}

/// Sample complexity of EVL with random parametric basis functions, in the
/// chosen norm. Resolves the N-J reference by computing J first, then N(J),
/// then M(N).
pub fn complexity_rpbf(inputs: &ComplexityInputs, norm: NormChoice) -> Result<RpbfComplexity> {
    inputs.validate()?;
    let eps = inputs.epsilon;
    let v_bar = inputs.v_max / eps;
    let k_star = match norm {
        NormChoice::L1 => {
            let raw = ((inputs.c_rho_mu * eps).ln() - (2.0 * inputs.v_max).ln())
                / inputs.gamma.ln();
            raw.ceil() as i64
        }
        NormChoice::L2 => {
            let raw = ((inputs.c_rho_mu.sqrt() * eps).ln() - (2.0 * inputs.v_max).ln())
                / inputs.gamma.ln();
            2 * raw.ceil() as i64
        }
    };
    let dp = delta_prime(inputs.delta, k_star)?;

    let j = (5.0 * inputs.c_const / eps * (1.0 + (2.0 * (5.0 / dp).ln()).sqrt())).powi(2);
    let j = j.ceil();

    // the (10 e v_bar^pow)^J factor is evaluated in log space to avoid
    // overflow at large J
    let (v_bar_pow_outer, v_bar_pow_inner) = match norm {
        NormChoice::L1 => (2, 1),
        NormChoice::L2 => (4, 2),
    };
    let log_term = (40.0 * std::f64::consts::E * (j + 1.0) / inputs.delta).ln()
        + j * (10.0 * std::f64::consts::E * v_bar.powi(v_bar_pow_inner)).ln();
    let n = (128.0 * 25.0 * v_bar.powi(v_bar_pow_outer) * log_term).ceil();

    let m = (v_bar * v_bar / 2.0 * (10.0 * n * inputs.n_actions as f64 / dp).ln()).ceil();

    Ok(RpbfComplexity {
        n,
        m,
        j,
        k_star,
        k_min: k_min(inputs.delta, k_star),
    })
}

/// Sample complexity of EVL with regularized RKHS regression (sup norm).
pub fn complexity_rkhs(inputs: &ComplexityInputs) -> Result<RkhsComplexity> {
    inputs.validate()?;
    let eps = inputs.epsilon;
    let gap = eps * (1.0 - inputs.gamma);
    let k_star = ((eps.ln() - (4.0 * inputs.v_max).ln()) / inputs.gamma.ln()).ceil() as i64;
    let dp = delta_prime(inputs.delta, k_star)?;

    let n = ((4.0 * inputs.c_k * inputs.kappa / gap).powi(6) * (4.0 / dp).ln().powi(2)).ceil();
    let m = (160.0 * inputs.v_max * inputs.v_max / (gap * gap)
        * (2.0 * inputs.n_actions as f64 * inputs.gamma * (8.0 * inputs.v_max - gap)
            / (gap * (2.0 - inputs.gamma)))
            .ln())
    .ceil();

    Ok(RkhsComplexity {
        n,
        m,
        k_star,
        k_min: k_min(inputs.delta, k_star),
    })
}
