//! Cart-pole balancing with noisy force actions.
//!
//! 4-d state `(x, x_dot, theta, theta_dot)`, two actions pushing the cart
//! with -10 N or +10 N, each multiplied by `(1 + U[-noise_frac, noise_frac])`.
//! One Euler step per transition. Cost is 0 except in the absorbing failure
//! region (cart beyond `fail_x` or pole beyond `fail_theta`), which costs 1.

use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::mdp::MdpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartPoleParams {
    pub m_c: f64,
    pub m_p: f64,
    /// Pole half-length as it enters the printed dynamics.
    pub l: f64,
    pub g: f64,
    pub tau: f64,
    pub force_mag: f64,
    pub noise_frac: f64,
    pub fail_x: f64,
    /// Failure angle in radians.
    pub fail_theta: f64,
    pub gamma: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        CartPoleParams {
            m_c: 1.0,
            m_p: 0.1,
            l: 0.5,
            g: 9.8,
            tau: 0.02,
            force_mag: 10.0,
            noise_frac: 0.5,
            fail_x: 2.4,
            fail_theta: 12.0_f64.to_radians(),
            gamma: 0.95,
        }
    }
}

impl CartPoleParams {
    pub fn is_failure(&self, s: &[f64]) -> bool {
        s[0].abs() > self.fail_x || s[2].abs() > self.fail_theta
    }

    /// Pole and cart accelerations for a given applied force.
    pub fn accel(&self, s: &[f64], force: f64) -> (f64, f64) {
        let (theta, theta_dot) = (s[2], s[3]);
        let total_mass = self.m_c + self.m_p;
        let sin = theta.sin();
        let cos = theta.cos();
        let theta_acc = (self.g * sin
            + cos * ((-force - self.m_p * self.l * theta_dot * theta_dot * sin) / total_mass))
            / (self.l * (4.0 / 3.0 - self.m_p * cos * cos / total_mass));
        let x_acc =
            (force + self.m_p * self.l * (theta_dot * theta_dot * sin - theta_acc * cos))
                / total_mass;
        (x_acc, theta_acc)
    }

    /// One Euler step with the given force.
    pub fn step(&self, s: &[f64], force: f64) -> Vec<f64> {
        let (x_acc, theta_acc) = self.accel(s, force);
        vec![
            s[0] + self.tau * s[1],
            s[1] + self.tau * x_acc,
            s[2] + self.tau * s[3],
            s[3] + self.tau * theta_acc,
        ]
    }
}

/// Build the cart-pole MDP. Action 0 pushes left, action 1 pushes right.
pub fn cartpole_model(params: &CartPoleParams) -> MdpModel {
    assert!(params.noise_frac >= 0.0 && params.noise_frac <= 1.0);
    let bounds = vec![(-4.8, 4.8), (-20.0, 20.0), (-1.0, 1.0), (-20.0, 20.0)];
    let p = params.clone();
    let cost = {
        let p = p.clone();
        move |s: &[f64], _a: usize| -> f64 {
            if p.is_failure(s) {
                1.0
            } else {
                0.0
            }
        }
    };
    let sampler = {
        let p = p.clone();
        let b = bounds.clone();
        move |s: &[f64], a: usize, rng: &mut crate::rng::Rng| -> Vec<f64> {
            if p.is_failure(s) {
                return s.to_vec();
            }
            let direction = if a == 0 { -1.0 } else { 1.0 };
            let noise = if p.noise_frac > 0.0 {
                Uniform::new_inclusive(-p.noise_frac, p.noise_frac).sample(rng)
            } else {
                0.0
            };
            let force = direction * p.force_mag * (1.0 + noise);
            let mut next = p.step(s, force);
            for (x, (lo, hi)) in next.iter_mut().zip(&b) {
                *x = x.clamp(*lo, *hi);
            }
            next
        }
    };
    MdpModel::new(
        4,
        bounds,
        2,
        params.gamma,
        1.0,
        Box::new(cost),
        Box::new(sampler),
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equilibrium_has_zero_accelerations() {
        let p = CartPoleParams::default();
        let (x_acc, theta_acc) = p.accel(&[0.0, 0.0, 0.0, 0.0], 0.0);
        assert_abs_diff_eq!(x_acc, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_acc, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverted_pendulum_is_unstable() {
        // with no force, the pole accelerates away from upright
        let p = CartPoleParams::default();
        for theta in [-0.1, -0.01, 0.01, 0.1] {
            let (_, theta_acc) = p.accel(&[0.0, 0.0, theta, 0.0], 0.0);
            assert!(theta_acc.signum() == theta.signum(), "theta {theta}");
        }
    }

    #[test]
    fn noisy_force_spans_the_expected_interval() {
        // the x-acceleration image of F in [5, 15] under the push-forward of
        // the uniform noise
        let p = CartPoleParams::default();
        let model = cartpole_model(&p);
        let s = [0.0, 0.0, 0.05, 0.0];
        let lo_acc = p.accel(&s, 5.0).0;
        let hi_acc = p.accel(&s, 15.0).0;
        let mut rng = crate::rng::substream(13, &[0]);
        let mut min_seen = f64::INFINITY;
        let mut max_seen = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let next = model.next_state(&s, 1, &mut rng);
            // recover x_acc from the Euler update
            let x_acc = (next[1] - s[1]) / p.tau;
            min_seen = min_seen.min(x_acc);
            max_seen = max_seen.max(x_acc);
        }
        let span = hi_acc - lo_acc;
        assert!((min_seen - lo_acc).abs() <= 0.01 * span, "min {min_seen} vs {lo_acc}");
        assert!((max_seen - hi_acc).abs() <= 0.01 * span, "max {max_seen} vs {hi_acc}");
    }

    #[test]
    fn failure_states_are_absorbing_and_costly() {
        let p = CartPoleParams::default();
        let model = cartpole_model(&p);
        let failed = vec![3.0, 0.0, 0.0, 0.0];
        let mut rng = crate::rng::substream(14, &[0]);
        assert_eq!(model.next_state(&failed, 0, &mut rng), failed);
        assert_eq!(model.cost(&failed, 0), 1.0);
        assert_eq!(model.cost(&[0.0, 0.0, 0.0, 0.0], 0), 0.0);
    }
}
