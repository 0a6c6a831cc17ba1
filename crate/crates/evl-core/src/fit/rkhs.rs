//! Regularized least squares in an RKHS.
//!
//! By the Representer theorem the minimizer of
//! `(1/N) sum (f(s_n) - y_n)^2 + lambda ||f||_H^2` is a kernel expansion
//! over the sample states with weights solving the symmetric positive
//! definite system `(G + lambda N I) a = y`. The shift makes the system
//! positive definite, so a plain Cholesky factorization suffices.

use nalgebra::{DMatrix, DVector};

use super::FitReport;
use crate::error::{EvlError, Result};
use crate::mdp::SampledBackup;
use crate::value::{Basis, Kernel, ValueFn};

const RESIDUAL_TOL: f64 = 1e-10;

pub fn fit_rkhs(
    kernel: Kernel,
    lambda: f64,
    data: &SampledBackup,
    clamp: Option<f64>,
) -> Result<(ValueFn, FitReport)> {
    if data.is_empty() {
        return Err(EvlError::InvalidInput("empty fitting data".into()));
    }
    if lambda <= 0.0 {
        return Err(EvlError::InvalidInput("lambda must be positive".into()));
    }
    let n = data.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = kernel.eval(&data.states[i], &data.states[j]);
            if !k.is_finite() {
                return Err(EvlError::NonFiniteKernel { i, j });
            }
            a[(i, j)] = k;
            a[(j, i)] = k;
        }
        a[(i, i)] += lambda * n as f64;
    }
    let y = DVector::from_column_slice(&data.targets);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| EvlError::LinearSolve("Cholesky factorization failed".into()))?;
    let mut alpha = chol.solve(&y);

    // iterative refinement until the relative residual contract is met
    let y_norm = y.norm().max(1e-300);
    let mut residual = (&a * &alpha - &y).norm() / y_norm;
    let mut refinements = 0;
    while residual > RESIDUAL_TOL && refinements < 4 {
        let r = &y - &a * &alpha;
        alpha += chol.solve(&r);
        residual = (&a * &alpha - &y).norm() / y_norm;
        refinements += 1;
    }
    if residual > RESIDUAL_TOL {
        return Err(EvlError::LinearSolve(format!(
            "relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )));
    }

    let objective = {
        let fitted = kernel_predictions(&kernel, data, alpha.as_slice());
        fitted
            .iter()
            .zip(&data.targets)
            .map(|(f, t)| (f - t) * (f - t))
            .sum::<f64>()
            / n as f64
    };
    let vf = ValueFn::new(
        Basis::Rkhs { kernel, centers: data.states.clone() },
        alpha.iter().copied().collect(),
        clamp,
    );
    Ok((vf, FitReport { objective, residual, iterations: refinements }))
}

fn kernel_predictions(kernel: &Kernel, data: &SampledBackup, alpha: &[f64]) -> Vec<f64> {
    data.states
        .iter()
        .map(|s| {
            data.states
                .iter()
                .zip(alpha)
                .map(|(c, w)| w * kernel.eval(c, s))
                .sum()
        })
        .collect()
}
