//! Property tests for the crate's cross-module contracts.

use proptest::prelude::*;

use pathtrack::env::{Env, EnvConfig, RewardConfig, TaskConfig};
use pathtrack::limits::{
    brake_to_rest, end_of, feasible_range, JointLimits, KinematicState, Segment,
};
use pathtrack::policy::refit_elites;
use pathtrack::spline::{CubicPath, Parameterization, SampleStrategy};
use pathtrack::topp::min_time_parameterize;
use pathtrack::RobotConfig;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Knot sets whose consecutive points stay well separated, so chord
/// parameterization is well conditioned.
fn arb_knots(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(
        proptest::collection::vec(-1.0..1.0f64, dim),
        3..8,
    )
    .prop_filter("consecutive knots too close", |ks| {
        ks.windows(2).all(|w| dist(&w[0], &w[1]) > 1e-2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spline_arc_table_is_consistent(knots in arb_knots(3), f in 0.0..1.0f64) {
        let path = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let l = path.total_length();
        prop_assert!(l > 0.0);
        let arcs = path.knot_arcs();
        prop_assert_eq!(arcs.len(), knots.len());
        prop_assert!(arcs.windows(2).all(|w| w[1] > w[0]));
        prop_assert!((arcs.last().unwrap() - l).abs() <= 1e-9 * l);

        // Arc length dominates chord length: the path is 1-Lipschitz in s.
        let s = f * l;
        let step = 0.01 * l;
        let a = path.eval(s);
        let b = path.eval((s + step).min(l));
        prop_assert!(dist(&a, &b) <= ((s + step).min(l) - s) + 1e-7 * l);
    }

    #[test]
    fn spline_distance_samples_are_even(knots in arb_knots(2), n in 3usize..20) {
        let path = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let arcs = path.sample_arcs(n, SampleStrategy::Distance).unwrap();
        prop_assert_eq!(arcs.len(), n);
        let l = path.total_length();
        let expect = l / (n as f64 - 1.0);
        for w in arcs.windows(2) {
            prop_assert!(((w[1] - w[0]) - expect).abs() <= 1e-9 * l);
        }
    }

    #[test]
    fn knot_window_invariants(knots in arb_knots(3), f in 0.0..1.0f64, n in 2usize..12) {
        let path = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let w = path.knot_window(f * path.total_length(), n);
        prop_assert_eq!(w.knots.len(), n);
        prop_assert!(w.l_state >= 0.0);
        prop_assert!(w.offset >= -1e-12);
        prop_assert!(w.l_state <= path.total_length() + 1e-9);
    }

    #[test]
    fn feasible_rollouts_stay_inside_boxes(
        seed_pos in proptest::collection::vec(-0.5..0.5f64, 3),
        actions in proptest::collection::vec(
            proptest::collection::vec(-1.0..1.0f64, 3), 10),
    ) {
        let robot = RobotConfig::planar3();
        let lim = &robot.limits;
        let dt = 0.1;
        let mut state = KinematicState::at_rest(seed_pos);
        for action in &actions {
            let range = feasible_range(&state, lim, dt).unwrap();
            for j in 0..3 {
                prop_assert!(range.lo[j] <= range.hi[j] + 1e-12);
            }
            let seg = Segment { start: state, acc_end: range.map_action(action), dt };
            for sub in seg.sample(25) {
                prop_assert!(sub.within(lim));
            }
            state = seg.end_state();
        }
        let segs = brake_to_rest(&state, lim, dt, 5).unwrap();
        let rest = end_of(&segs, &state);
        prop_assert!(rest.vel.iter().all(|v| v.abs() <= 1e-6));
        prop_assert!(rest.acc.iter().all(|a| a.abs() <= 1e-6));
        for seg in &segs {
            for sub in seg.sample(25) {
                prop_assert!(sub.within(lim));
            }
        }
    }

    #[test]
    fn rewards_stay_in_range_and_combine_linearly(
        knots in arb_knots(3),
        actions in proptest::collection::vec(
            proptest::collection::vec(-1.0..1.0f64, 3), 8),
        alpha in 0.0..3.0f64,
        beta in 0.0..3.0f64,
    ) {
        let mut cfg = EnvConfig::default();
        cfg.reward = RewardConfig { alpha, beta, ..RewardConfig::default() };
        cfg.termination_deviation = f64::INFINITY;
        let mut env = Env::new(RobotConfig::planar3(), cfg).unwrap();
        env.reset(&knots).unwrap();
        let l = env.path().unwrap().total_length();
        let mut progress = 0.0;
        for action in &actions {
            let out = env.step(action).unwrap();
            let r = &out.reward;
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.progress));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.deviation));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.task));
            let combined = alpha * r.progress + beta * r.deviation;
            prop_assert!((r.total - combined).abs() <= 1e-12 * combined.max(1.0));
            prop_assert!(out.info.progress_after >= progress - 1e-12);
            prop_assert!(out.info.progress_after <= l + 1e-9);
            progress = out.info.progress_after;
            if out.done { break; }
        }
    }

    #[test]
    fn ball_task_reward_component_bounded(
        knots in arb_knots(3),
        actions in proptest::collection::vec(
            proptest::collection::vec(-0.3..0.3f64, 3), 6),
    ) {
        let mut cfg = EnvConfig::default();
        cfg.task = TaskConfig::BallBeam { half_length: 0.2 };
        cfg.reward.gamma = 1.0;
        cfg.termination_deviation = f64::INFINITY;
        let mut env = Env::new(RobotConfig::planar3(), cfg).unwrap();
        let obs = env.reset(&knots).unwrap();
        prop_assert!(obs.ball.is_some());
        for action in &actions {
            let out = env.step(action).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&out.reward.task));
            if out.done { break; }
        }
    }

    #[test]
    fn topp_times_are_monotone_and_bounded(knots in arb_knots(2), k in 50usize..200) {
        let path = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let lim = JointLimits {
            pos_min: vec![-50.0; 2],
            pos_max: vec![50.0; 2],
            vel_max: vec![1.5; 2],
            acc_max: vec![8.0; 2],
            jerk_max: vec![100.0; 2],
        };
        let res = min_time_parameterize(&path, &lim, k).unwrap();
        prop_assert_eq!(res.times.len(), k + 1);
        prop_assert!(res.times.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((res.x[0]).abs() <= 1e-12);
        prop_assert!((res.x[k]).abs() <= 1e-12);
        // The joint-space speed cap gives a hard floor on the duration.
        let l = path.total_length();
        let vmax_path = (2.0f64 * 1.5 * 1.5).sqrt();
        prop_assert!(res.duration >= l / vmax_path - 1e-9);
    }

    #[test]
    fn elite_refit_ignores_candidate_order(
        scores in proptest::collection::vec(-10.0..10.0f64, 8),
        shift in 0usize..8,
    ) {
        let dim = 5;
        let cands: Vec<Vec<f64>> = (0..8)
            .map(|i| (0..dim).map(|d| (i * dim + d) as f64 * 0.1 - 1.7).collect())
            .collect();
        let (m1, s1) = refit_elites(&cands, &scores, 3);
        let mut perm: Vec<usize> = (0..8).collect();
        perm.rotate_left(shift);
        let cands2: Vec<Vec<f64>> = perm.iter().map(|&i| cands[i].clone()).collect();
        let scores2: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
        let (m2, s2) = refit_elites(&cands2, &scores2, 3);
        prop_assert_eq!(m1, m2);
        prop_assert_eq!(s1, s2);
    }
}
