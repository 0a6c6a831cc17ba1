//! Box-constrained least squares over random parametric basis functions.
//!
//! Minimizes `(1/N) ||Phi a - y||^2` subject to `||a||_inf <= C/J`, solved
//! by projected gradient with Nesterov acceleration and step `1/L` where
//! `L` is the largest eigenvalue of the scaled feature Gram. The feasible
//! set is a box, so the projection is a coordinate-wise clamp and a
//! minimizer always exists even for degenerate feature matrices.

use nalgebra::{DMatrix, DVector};

use super::FitReport;
use crate::error::{EvlError, Result};
use crate::mdp::SampledBackup;
use crate::value::{rpbf_feature, Basis, RpbfTheta, ValueFn};

const KKT_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 100_000;

pub fn fit_rpbf(
    thetas: &[RpbfTheta],
    data: &SampledBackup,
    c_bound: f64,
    clamp: Option<f64>,
) -> Result<(ValueFn, FitReport)> {
    if data.is_empty() {
        return Err(EvlError::InvalidInput("empty fitting data".into()));
    }
    if thetas.is_empty() {
        return Err(EvlError::InvalidInput("need at least one basis function".into()));
    }
    let n = data.len();
    let j = thetas.len();
    let bound = c_bound / j as f64;

    let phi = DMatrix::from_fn(n, j, |r, c| rpbf_feature(&thetas[c], &data.states[r]));
    let y = DVector::from_column_slice(&data.targets);
    if y.iter().any(|t| !t.is_finite()) {
        return Err(EvlError::InvalidInput("non-finite fitting target".into()));
    }

    let scale = 2.0 / n as f64;
    let gram = phi.transpose() * &phi; // J x J
    let phi_t_y = phi.transpose() * &y;
    let y_sq = y.norm_squared();
    let lip = (scale * largest_eigenvalue(&gram)).max(1e-12);
    let step = 1.0 / (lip * 1.000_001);

    let grad = |a: &DVector<f64>| -> DVector<f64> { (&gram * a - &phi_t_y) * scale };
    // ||Phi a - y||^2 / n expanded through the Gram matrix, so the per
    // iteration cost stays J^2 instead of N*J
    let objective = |a: &DVector<f64>| -> f64 {
        ((&gram * a).dot(a) - 2.0 * phi_t_y.dot(a) + y_sq) / n as f64
    };
    let project = |a: &mut DVector<f64>| {
        for x in a.iter_mut() {
            *x = x.clamp(-bound, bound);
        }
    };
    let kkt_residual = |a: &DVector<f64>, g: &DVector<f64>| -> f64 {
        a.iter()
            .zip(g.iter())
            .map(|(&ai, &gi)| (ai - (ai - gi).clamp(-bound, bound)).abs())
            .fold(0.0_f64, f64::max)
    };

    let mut alpha = DVector::zeros(j);
    let mut momentum = alpha.clone();
    let mut t = 1.0_f64;
    let mut prev_obj = objective(&alpha);
    let mut report = FitReport { objective: prev_obj, residual: f64::INFINITY, iterations: 0 };

    for iter in 0..MAX_ITERS {
        let g = grad(&alpha);
        report.residual = kkt_residual(&alpha, &g);
        report.iterations = iter;
        if report.residual <= KKT_TOL {
            break;
        }
        let gm = grad(&momentum);
        let mut next = &momentum - step * gm;
        project(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        momentum = &next + ((t - 1.0) / t_next) * (&next - &alpha);
        let obj = objective(&next);
        if obj > prev_obj {
            // restart the momentum when the objective overshoots
            momentum = next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        prev_obj = obj;
        alpha = next;
    }
    report.objective = objective(&alpha);

    let vf = ValueFn::new(
        Basis::Rpbf { thetas: thetas.to_vec() },
        alpha.iter().copied().collect(),
        clamp,
    );
    Ok((vf, report))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = m * &v;
        let norm = w.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        v = w / norm;
        lambda = (m * &v).dot(&v);
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::SampledBackup;
    use crate::rng::substream;
    use crate::value::RpbfFamily;
    use approx::assert_abs_diff_eq;

    fn constant_theta() -> RpbfTheta {
        // sign feature with threshold below the data range acts as phi == 1
        RpbfTheta::Sign { dim: 0, threshold: -1e18 }
    }

    fn backup(states: Vec<f64>, targets: Vec<f64>) -> SampledBackup {
        SampledBackup {
            states: states.into_iter().map(|s| vec![s]).collect(),
            targets,
            m_per_backup: 1,
        }
    }

    #[test]
    fn constant_feature_fits_sample_mean() {
        let data = backup(vec![0.0, 1.0], vec![1.0, 3.0]);
        let (vf, report) = fit_rpbf(&[constant_theta()], &data, 1e6, None).unwrap();
        assert_abs_diff_eq!(vf.weights[0], 2.0, epsilon = 1e-7);
        assert!(report.residual <= 1e-8);
    }

    #[test]
    fn active_box_clips_the_mean() {
        let data = backup(vec![0.0, 1.0], vec![10.0, 10.0]);
        let (vf, _) = fit_rpbf(&[constant_theta()], &data, 4.0, None).unwrap();
        assert_abs_diff_eq!(vf.weights[0], 4.0, epsilon = 1e-10);
    }

    #[test]
    fn box_feasibility_always_holds() {
        let family = RpbfFamily::Fourier { dim: 1, omega_std: 1.0 };
        let thetas = family.sample(8, &mut substream(3, &[0]));
        let mut rng = substream(3, &[1]);
        use rand::Rng as _;
        let states: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..10.0)).collect();
        let targets: Vec<f64> = (0..40).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let data = backup(states, targets);
        let c = 12.0;
        let (vf, _) = fit_rpbf(&thetas, &data, c, None).unwrap();
        let bound = c / 8.0;
        for w in &vf.weights {
            assert!(w.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn kkt_conditions_at_termination() {
        let family = RpbfFamily::Fourier { dim: 1, omega_std: 0.5 };
        let thetas = family.sample(5, &mut substream(9, &[0]));
        let mut rng = substream(9, &[1]);
        use rand::Rng as _;
        let states: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..10.0)).collect();
        let targets: Vec<f64> = (0..30).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let data = backup(states.clone(), targets.clone());
        let c = 10.0;
        let (vf, _) = fit_rpbf(&thetas, &data, c, None).unwrap();
        let bound = c / 5.0;
        // recompute the gradient of the objective at the solution
        let n = data.len();
        for (jj, w) in vf.weights.iter().enumerate() {
            let g: f64 = (0..n)
                .map(|i| {
                    let pred: f64 = thetas
                        .iter()
                        .zip(&vf.weights)
                        .map(|(t, a)| a * rpbf_feature(t, &data.states[i]))
                        .sum();
                    2.0 / n as f64
                        * (pred - data.targets[i])
                        * rpbf_feature(&thetas[jj], &data.states[i])
                })
                .sum();
            if w.abs() < bound - 1e-9 {
                assert!(g.abs() <= 1e-6, "inactive coordinate {jj} gradient {g}");
            } else {
                // active constraint: the gradient pushes outward
                assert!(g * w <= 1e-6, "active coordinate {jj} gradient {g} weight {w}");
            }
        }
    }
}
