//! Ordinary least squares on monomial features, the fitted-value-iteration
//! baseline. Rank-deficient or under-determined systems fall back to a
//! fixed 1e-8 ridge.

use nalgebra::{DMatrix, DVector};

use super::FitReport;
use crate::error::{EvlError, Result};
use crate::mdp::SampledBackup;
use crate::value::{monomial_exponents, Basis, ValueFn};

const RIDGE_FLOOR: f64 = 1e-8;

pub fn fit_polynomial(
    degree: usize,
    data: &SampledBackup,
    clamp: Option<f64>,
) -> Result<(ValueFn, FitReport)> {
    if data.is_empty() {
        return Err(EvlError::InvalidInput("empty fitting data".into()));
    }
    let dim = data.states[0].len();
    let exps = monomial_exponents(degree, dim);
    let n = data.len();
    let p = exps.len();

    let a = DMatrix::from_fn(n, p, |r, c| {
        exps[c]
            .iter()
            .zip(&data.states[r])
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    });
    let y = DVector::from_column_slice(&data.targets);
    let gram = a.transpose() * &a;
    let rhs = a.transpose() * &y;

    let solve = |ridge: f64| -> Option<DVector<f64>> {
        let mut g = gram.clone();
        for i in 0..p {
            g[(i, i)] += ridge;
        }
        let chol = g.clone().cholesky()?;
        let mut coeffs = chol.solve(&rhs);
        // two refinement passes recover digits lost in the normal equations
        for _ in 0..2 {
            let r = &rhs - &g * &coeffs;
            coeffs += chol.solve(&r);
        }
        Some(coeffs)
    };

    let coeffs = if n > degree {
        solve(0.0).or_else(|| solve(RIDGE_FLOOR))
    } else {
        solve(RIDGE_FLOOR)
    }
    .ok_or_else(|| EvlError::LinearSolve("normal equations not factorizable".into()))?;

    let objective = (&a * &coeffs - &y).norm_squared() / n as f64;
    let residual = (&gram * &coeffs - &rhs).norm() / rhs.norm().max(1e-300);
    let vf = ValueFn::new(
        Basis::Polynomial { degree, dim },
        coeffs.iter().copied().collect(),
        clamp,
    );
    Ok((vf, FitReport { objective, residual, iterations: 0 }))
}
