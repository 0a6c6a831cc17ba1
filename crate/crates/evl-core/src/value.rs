//! Fitted value-function representations.
//!
//! A [`ValueFn`] is a basis descriptor plus a weight vector, evaluable at any
//! state. Evaluation is deterministic given `(basis, weights)`; an optional
//! clamp keeps the output inside `[-v_max, v_max]`.

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::rng::Rng;

/// One random parameter draw for a parametric basis function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RpbfTheta {
    /// `phi(s; omega, b) = cos(<omega, s> + b)`.
    Fourier { omega: Vec<f64>, b: f64 },
    /// `phi(s; k, t) = sign(s_k - t)`.
    Sign { dim: usize, threshold: f64 },
}

/// Evaluate a single parametric feature; bounded by 1 in absolute value.
pub fn rpbf_feature(theta: &RpbfTheta, s: &[f64]) -> f64 {
    match theta {
        RpbfTheta::Fourier { omega, b } => {
            let dot: f64 = omega.iter().zip(s).map(|(w, x)| w * x).sum();
            (dot + b).cos()
        }
        RpbfTheta::Sign { dim, threshold } => {
            if s[*dim] >= *threshold {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// A family of random parametric basis functions: the feature shape plus the
/// sampling distribution `nu` over parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum RpbfFamily {
    /// Fourier features with `omega ~ Normal(0, omega_std^2 I)` and
    /// `b ~ Uniform[-pi, pi]`.
    Fourier { dim: usize, omega_std: f64 },
    /// Sign features with `k ~ Uniform{0..dim}` and
    /// `t ~ Uniform[-half_width, half_width]`.
    Sign { dim: usize, half_width: f64 },
}

impl RpbfFamily {
    /// Draw `j` iid parameters from `nu`. Deterministic given the rng state.
    pub fn sample(&self, j: usize, rng: &mut Rng) -> Vec<RpbfTheta> {
        assert!(j >= 1, "need at least one basis function");
        match self {
            RpbfFamily::Fourier { dim, omega_std } => {
                let normal = Normal::new(0.0, *omega_std).expect("valid std");
                let unif = Uniform::new_inclusive(-std::f64::consts::PI, std::f64::consts::PI);
                (0..j)
                    .map(|_| RpbfTheta::Fourier {
                        omega: (0..*dim).map(|_| normal.sample(rng)).collect(),
                        b: unif.sample(rng),
                    })
                    .collect()
            }
            RpbfFamily::Sign { dim, half_width } => {
                let unif = Uniform::new_inclusive(-*half_width, *half_width);
                (0..j)
                    .map(|_| RpbfTheta::Sign {
                        dim: rng.gen_range(0..*dim),
                        threshold: unif.sample(rng),
                    })
                    .collect()
            }
        }
    }
}

/// A symmetric positive-semidefinite kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum Kernel {
    /// `K(x, y) = exp(-inv_sq_bandwidth * ||x - y||^2 / 2)`.
    Gaussian { inv_sq_bandwidth: f64 },
    /// `K(x, y) = exp(-rate * ||x - y||_1)`.
    Laplacian { rate: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian { inv_sq_bandwidth } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-inv_sq_bandwidth * sq / 2.0).exp()
            }
            Kernel::Laplacian { rate } => {
                let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-rate * l1).exp()
            }
        }
    }

    /// `kappa = sup_s sqrt(K(s, s))`; 1 for both built-in kernels.
    pub fn kappa(&self) -> f64 {
        1.0
    }
}

/// Basis descriptor for a fitted value function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis-kind", rename_all = "kebab-case")]
pub enum Basis {
    /// Single constant feature; `weights = [c]`.
    Constant,
    /// Random parametric basis functions; one weight per theta.
    Rpbf { thetas: Vec<RpbfTheta> },
    /// Kernel expansion over fixed centers; one weight per center.
    Rkhs { kernel: Kernel, centers: Vec<Vec<f64>> },
    /// Monomials of total degree `<= degree` over a `dim`-dimensional state.
    Polynomial { degree: usize, dim: usize },
    /// Uniform 1-d grid on `[lo, hi]` with linear interpolation between
    /// nodes; `weights` holds the node values.
    Grid { lo: f64, hi: f64 },
}

impl Basis {
    /// Number of weights this basis expects.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            Basis::Constant => Some(1),
            Basis::Rpbf { thetas } => Some(thetas.len()),
            Basis::Rkhs { centers, .. } => Some(centers.len()),
            Basis::Polynomial { degree, dim } => Some(monomial_exponents(*degree, *dim).len()),
            // grid cardinality is the node count, carried by the weights
            Basis::Grid { .. } => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Basis::Constant => "constant",
            Basis::Rpbf { .. } => "rpbf",
            Basis::Rkhs { .. } => "rkhs",
            Basis::Polynomial { .. } => "polynomial",
            Basis::Grid { .. } => "tabular-grid",
        }
    }
}

/// Exponent tuples for all monomials of total degree `<= degree` in `dim`
/// variables, in a fixed deterministic order.
pub fn monomial_exponents(degree: usize, dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    fn rec(out: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, pos: usize, remaining: usize) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for e in 0..=remaining {
            current[pos] = e;
            rec(out, current, pos + 1, remaining - e);
        }
        current[pos] = 0;
    }
    rec(&mut out, &mut current, 0, degree);
    out
}

/// A fitted value-function estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFn {
    pub basis: Basis,
    pub weights: Vec<f64>,
    /// When set, evaluation output is clamped to `[-clamp, clamp]`.
    pub clamp: Option<f64>,
}

impl ValueFn {
    pub fn new(basis: Basis, weights: Vec<f64>, clamp: Option<f64>) -> Self {
        if let Some(n) = basis.cardinality() {
            assert_eq!(weights.len(), n, "weights length must match basis cardinality");
        }
        ValueFn { basis, weights, clamp }
    }

    pub fn constant(c: f64) -> Self {
        ValueFn { basis: Basis::Constant, weights: vec![c], clamp: None }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Pointwise evaluation; applies the clamp when configured.
    pub fn evaluate(&self, s: &[f64]) -> f64 {
        let raw = match &self.basis {
            Basis::Constant => self.weights[0],
            Basis::Rpbf { thetas } => thetas
                .iter()
                .zip(&self.weights)
                .map(|(th, w)| w * rpbf_feature(th, s))
                .sum(),
            Basis::Rkhs { kernel, centers } => centers
                .iter()
                .zip(&self.weights)
                .map(|(c, w)| w * kernel.eval(c, s))
                .sum(),
            Basis::Polynomial { degree, dim } => monomial_exponents(*degree, *dim)
                .iter()
                .zip(&self.weights)
                .map(|(exps, w)| {
                    let m: f64 = exps
                        .iter()
                        .zip(s)
                        .map(|(&e, &x)| x.powi(e as i32))
                        .product();
                    w * m
                })
                .sum(),
            Basis::Grid { lo, hi } => {
                let n = self.weights.len();
                debug_assert!(n >= 2);
                let x = s[0].clamp(*lo, *hi);
                let h = (hi - lo) / (n as f64 - 1.0);
                let idx = ((x - lo) / h).floor() as usize;
                let idx = idx.min(n - 2);
                let frac = (x - lo - idx as f64 * h) / h;
                self.weights[idx] * (1.0 - frac) + self.weights[idx + 1] * frac
            }
        };
        match self.clamp {
            Some(b) => raw.clamp(-b, b),
            None => raw,
        }
    }

    /// Evaluation that propagates non-finite results as errors.
    pub fn try_evaluate(&self, s: &[f64]) -> Result<f64> {
        let v = self.evaluate(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvlError::NonFinite {
                state: s.to_vec(),
                context: format!("{} value function evaluation", self.basis.kind_name()),
            })
        }
    }
}
