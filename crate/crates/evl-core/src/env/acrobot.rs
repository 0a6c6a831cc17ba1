//! Acrobot: a two-link pendulum with only the second joint actuated.
//!
//! The observed state is 6-d: sin/cos of both joint angles plus the two
//! angular velocities. Dynamics use the standard two-link equations with
//! RK4 integration; the chosen torque is perturbed by uniform noise so
//! transitions are stochastic. The goal is reached when the free end rises
//! one link length above the base; reaching it yields cost -1 (reward 1
//! negated), every other step costs 0.

use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::mdp::MdpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcrobotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
    pub g: f64,
    /// Action duration; each action integrates RK4 over `substeps` pieces.
    pub tau: f64,
    pub substeps: usize,
    pub torques: Vec<f64>,
    /// Uniform action-noise amplitude added to the torque.
    pub noise_amp: f64,
    pub max_vel1: f64,
    pub max_vel2: f64,
    pub gamma: f64,
}

impl Default for AcrobotParams {
    fn default() -> Self {
        AcrobotParams {
            m1: 1.0,
            m2: 1.0,
            l1: 1.0,
            l2: 1.0,
            lc1: 0.5,
            lc2: 0.5,
            i1: 1.0,
            i2: 1.0,
            g: 9.8,
            tau: 0.2,
            substeps: 10,
            torques: vec![-1.0, 0.0, 1.0],
            noise_amp: 0.1,
            max_vel1: 4.0 * std::f64::consts::PI,
            max_vel2: 9.0 * std::f64::consts::PI,
            gamma: 0.95,
        }
    }
}

impl AcrobotParams {
    /// Time derivative of `(theta1, theta2, omega1, omega2)` under `torque`.
    fn deriv(&self, q: &[f64; 4], torque: f64) -> [f64; 4] {
        let (t1, t2, w1, w2) = (q[0], q[1], q[2], q[3]);
        let d1 = self.m1 * self.lc1 * self.lc1
            + self.m2
                * (self.l1 * self.l1
                    + self.lc2 * self.lc2
                    + 2.0 * self.l1 * self.lc2 * t2.cos())
            + self.i1
            + self.i2;
        let d2 = self.m2 * (self.lc2 * self.lc2 + self.l1 * self.lc2 * t2.cos()) + self.i2;
        let phi2 = self.m2 * self.lc2 * self.g * (t1 + t2 - std::f64::consts::FRAC_PI_2).cos();
        let phi1 = -self.m2 * self.l1 * self.lc2 * w2 * w2 * t2.sin()
            - 2.0 * self.m2 * self.l1 * self.lc2 * w2 * w1 * t2.sin()
            + (self.m1 * self.lc1 + self.m2 * self.l1)
                * self.g
                * (t1 - std::f64::consts::FRAC_PI_2).cos()
            + phi2;
        let a2 = (torque + d2 / d1 * phi1
            - self.m2 * self.l1 * self.lc2 * w1 * w1 * t2.sin()
            - phi2)
            / (self.m2 * self.lc2 * self.lc2 + self.i2 - d2 * d2 / d1);
        let a1 = -(d2 * a2 + phi1) / d1;
        [w1, w2, a1, a2]
    }

    /// Integrate the angle-space state over one action duration with RK4.
    pub fn integrate(&self, q: &[f64; 4], torque: f64) -> [f64; 4] {
        let h = self.tau / self.substeps as f64;
        let mut y = *q;
        for _ in 0..self.substeps {
            let k1 = self.deriv(&y, torque);
            let k2 = self.deriv(&rk_add(&y, &k1, h / 2.0), torque);
            let k3 = self.deriv(&rk_add(&y, &k2, h / 2.0), torque);
            let k4 = self.deriv(&rk_add(&y, &k3, h), torque);
            for i in 0..4 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y[2] = y[2].clamp(-self.max_vel1, self.max_vel1);
        y[3] = y[3].clamp(-self.max_vel2, self.max_vel2);
        y
    }

    /// Total mechanical energy of the unactuated system; conserved by the
    /// continuous dynamics, used as a physics oracle for the integrator.
    pub fn energy(&self, q: &[f64; 4]) -> f64 {
        let (t1, t2, w1, w2) = (q[0], q[1], q[2], q[3]);
        let d1 = self.m1 * self.lc1 * self.lc1
            + self.m2
                * (self.l1 * self.l1
                    + self.lc2 * self.lc2
                    + 2.0 * self.l1 * self.lc2 * t2.cos())
            + self.i1
            + self.i2;
        let d2 = self.m2 * (self.lc2 * self.lc2 + self.l1 * self.lc2 * t2.cos()) + self.i2;
        let d22 = self.m2 * self.lc2 * self.lc2 + self.i2;
        let kinetic = 0.5 * d1 * w1 * w1 + d2 * w1 * w2 + 0.5 * d22 * w2 * w2;
        let potential = -(self.m1 * self.lc1 + self.m2 * self.l1) * self.g * t1.cos()
            - self.m2 * self.lc2 * self.g * (t1 + t2).cos();
        kinetic + potential
    }

    /// Goal: free end at least one link length above the base.
    pub fn is_goal(&self, q: &[f64; 4]) -> bool {
        -self.l1 * q[0].cos() - self.l2 * (q[0] + q[1]).cos() > self.l1
    }

    pub fn observe(&self, q: &[f64; 4]) -> Vec<f64> {
        vec![q[0].cos(), q[0].sin(), q[1].cos(), q[1].sin(), q[2], q[3]]
    }

    pub fn angles_from_observation(&self, s: &[f64]) -> [f64; 4] {
        [s[1].atan2(s[0]), s[3].atan2(s[2]), s[4], s[5]]
    }
}

fn rk_add(y: &[f64; 4], k: &[f64; 4], h: f64) -> [f64; 4] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

/// Build the acrobot MDP over the 6-d observation space.
pub fn acrobot_model(params: &AcrobotParams) -> MdpModel {
    assert_eq!(params.torques.len(), 3, "torque set has 3 elements");
    let p = params.clone();
    let bounds = vec![
        (-1.0, 1.0),
        (-1.0, 1.0),
        (-1.0, 1.0),
        (-1.0, 1.0),
        (-p.max_vel1, p.max_vel1),
        (-p.max_vel2, p.max_vel2),
    ];
    let cost = {
        let p = p.clone();
        move |s: &[f64], _a: usize| -> f64 {
            let q = p.angles_from_observation(s);
            if p.is_goal(&q) {
                -1.0
            } else {
                0.0
            }
        }
    };
    let sampler = {
        let p = p.clone();
        move |s: &[f64], a: usize, rng: &mut crate::rng::Rng| -> Vec<f64> {
            let q = p.angles_from_observation(s);
            let noise = if p.noise_amp > 0.0 {
                Uniform::new_inclusive(-p.noise_amp, p.noise_amp).sample(rng)
            } else {
                0.0
            };
            let next = p.integrate(&q, p.torques[a] + noise);
            p.observe(&next)
        }
    };
    MdpModel::new(
        6,
        bounds,
        params.torques.len(),
        params.gamma,
        1.0,
        Box::new(cost),
        Box::new(sampler),
        None,
    )
}
