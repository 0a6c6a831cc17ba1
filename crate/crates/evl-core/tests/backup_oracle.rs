//! Bellman backup and greedy policy checked against the grid oracle for
//! the replacement problem.

use evl_core::env::{
    replacement_model, replacement_oracle, ReplacementParams, ACTION_KEEP, ACTION_REPLACE,
};
use evl_core::mdp::{
    empirical_bellman_backup, exact_bellman_grid, greedy_policy_action, sample_backups,
};
use evl_core::{substream, ValueFn};

fn grid_1d(n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64])
        .collect()
}

#[test]
fn zero_value_backup_is_one_step_cost() {
    let model = replacement_model(&ReplacementParams::default());
    let v = ValueFn::zero();
    let mut rng = substream(1, &[0]);
    // min(4 * 5, 30) = 20, independent of m
    for m in [1, 7, 100] {
        let b = empirical_bellman_backup(&model, &v, &[5.0], m, &mut rng).unwrap();
        assert_eq!(b, 20.0);
    }
    let b = empirical_bellman_backup(&model, &v, &[10.0], 3, &mut rng).unwrap();
    assert_eq!(b, 30.0);
}

#[test]
fn backup_at_oracle_fixed_point_is_hoeffding_close() {
    let params = ReplacementParams::default();
    let model = replacement_model(&params);
    let oracle = replacement_oracle(&params, 2000, 2.5e-4).unwrap();
    let m = 10_000;
    let tol = 3.0 * model.gamma * model.v_max() / (m as f64).sqrt();
    for (i, s) in [0.0, 2.5, 5.0, 9.0].iter().enumerate() {
        let mut rng = substream(42, &[i as u64]);
        let b = empirical_bellman_backup(&model, &oracle, &[*s], m, &mut rng).unwrap();
        let v_star = oracle.evaluate(&[*s]);
        assert!(
            (b - v_star).abs() <= tol,
            "s={s}: backup {b} vs oracle {v_star}, tol {tol}"
        );
    }
}

#[test]
fn exact_backup_of_zero_is_min_cost() {
    let model = replacement_model(&ReplacementParams::default());
    let grid = grid_1d(101, 0.0, 10.0);
    let tv = exact_bellman_grid(&model, &ValueFn::zero(), &grid, None).unwrap();
    for (s, t) in grid.iter().zip(&tv) {
        assert!((t - (4.0 * s[0]).min(30.0)).abs() < 1e-12);
    }
}

#[test]
fn exact_backup_of_one_adds_discounted_mass() {
    // the transition density integrates to 1, so T(1) = min_a c + gamma
    let model = replacement_model(&ReplacementParams::default());
    let grid = grid_1d(101, 0.0, 10.0);
    let one = ValueFn::constant(1.0);
    let tv = exact_bellman_grid(&model, &one, &grid, None).unwrap();
    for (s, t) in grid.iter().zip(&tv) {
        let expected = (4.0 * s[0]).min(30.0) + 0.6;
        assert!((t - expected).abs() < 1e-6, "s={} t={t}", s[0]);
    }
}

#[test]
fn oracle_is_a_fixed_point_of_the_exact_backup() {
    let params = ReplacementParams::default();
    let model = replacement_model(&params);
    let oracle = replacement_oracle(&params, 2000, 2.5e-4).unwrap();
    let grid = grid_1d(2000, 0.0, 10.0);
    let tv = exact_bellman_grid(&model, &oracle, &grid, None).unwrap();
    let sup = grid
        .iter()
        .zip(&tv)
        .map(|(s, t)| (oracle.evaluate(s) - t).abs())
        .fold(0.0_f64, f64::max);
    assert!(sup <= 1e-3, "sup |T v* - v*| = {sup}");
}

#[test]
fn greedy_threshold_matches_oracle_switch_point() {
    let params = ReplacementParams::default();
    let model = replacement_model(&params);
    let grid_n = 2000;
    let oracle = replacement_oracle(&params, grid_n, 1e-4).unwrap();
    let h = params.s_max / (grid_n - 1) as f64;

    // oracle switch point: first grid state where replace is at least as
    // good as keep under the quadrature backup
    let mut p = params.clone();
    p.quad_n = grid_n - 1;
    let interp = |x: f64| oracle.evaluate(&[x]);
    let e_replace = p.expected_value(0.0, &interp);
    let mut oracle_switch = p.s_max;
    for i in 0..grid_n {
        let s = i as f64 * h;
        let keep = p.maint_coeff * s + p.gamma * p.expected_value(s, &interp);
        let replace = p.replace_cost + p.gamma * e_replace;
        if replace < keep {
            oracle_switch = s;
            break;
        }
    }

    // empirical greedy switch point with a large evaluation sample
    let mut greedy_switch = p.s_max;
    for i in 0..=400 {
        let s = i as f64 * 0.025;
        let mut rng = substream(7, &[i as u64]);
        let a = greedy_policy_action(&model, &oracle, &[s], 20_000, &mut rng).unwrap();
        if a == ACTION_REPLACE {
            greedy_switch = s;
            break;
        }
    }
    assert!(
        (greedy_switch - oracle_switch).abs() <= 0.1,
        "greedy switch {greedy_switch} vs oracle switch {oracle_switch}"
    );
}

#[test]
fn greedy_examples_from_zero_value() {
    let model = replacement_model(&ReplacementParams::default());
    let v = ValueFn::zero();
    let mut rng = substream(3, &[0]);
    assert_eq!(
        greedy_policy_action(&model, &v, &[5.0], 1, &mut rng).unwrap(),
        ACTION_KEEP
    );
    assert_eq!(
        greedy_policy_action(&model, &v, &[10.0], 1, &mut rng).unwrap(),
        ACTION_REPLACE
    );
}

#[test]
fn sampled_targets_stay_in_cost_range() {
    let model = replacement_model(&ReplacementParams::default());
    let mu = |rng: &mut evl_core::Rng| -> Vec<f64> {
        use rand::Rng as _;
        vec![rng.gen_range(0.0..=10.0)]
    };
    let data = sample_backups(&model, &ValueFn::zero(), &mu, 100, 5, 11, 0).unwrap();
    assert_eq!(data.len(), 100);
    for t in &data.targets {
        assert!((0.0..=30.0).contains(t), "target {t}");
    }
}
