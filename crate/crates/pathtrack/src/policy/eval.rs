//! Deterministic policy evaluation: rollouts for training feedback and a
//! full per-path report with joint, Cartesian, and orientation deviations.

use serde::{Deserialize, Serialize};

use crate::dataset::PathRecord;
use crate::env::{Env, EnvConfig, Termination};
use crate::kinematics::rotation_angle_between;
use crate::limits::{brake_to_rest, KinematicState};
use crate::policy::{Normalizer, PolicyParams, TrainError};
use crate::RobotConfig;

/// Progress this close to the full length counts as having reached the end.
const END_EPS: f64 = 1e-9;

/// Summary of one training rollout.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RolloutStats {
    pub return_sum: f64,
    pub steps: usize,
    /// Decision time until the path end was first reached, or until the
    /// episode stopped.
    pub duration: f64,
    pub mean_deviation: f64,
    pub reached_end: bool,
}

/// Runs one episode with deterministic actions; used by the trainers.
pub(crate) fn run_episode(
    env: &mut Env,
    params: &PolicyParams,
    norm: &Normalizer,
    knots: &[Vec<f64>],
) -> Result<RolloutStats, TrainError> {
    let mut obs = env.reset(knots)?;
    let total_len = env.path().unwrap().total_length();
    let dt = env.config().dt;
    let mut stats = RolloutStats {
        return_sum: 0.0,
        steps: 0,
        duration: 0.0,
        mean_deviation: 0.0,
        reached_end: false,
    };
    let mut dev_sum = 0.0;
    let mut end_step = None;
    loop {
        let action = params
            .act(&norm.flatten(&obs))
            .map_err(|_| TrainError::BadConfig("policy shape does not match env".into()))?;
        let out = env.step(&action)?;
        stats.return_sum += out.reward.total;
        stats.steps += 1;
        dev_sum += out.info.deviation;
        if end_step.is_none() && out.info.progress_after >= total_len - END_EPS {
            end_step = Some(stats.steps);
        }
        obs = out.obs;
        if out.done {
            break;
        }
    }
    stats.reached_end = end_step.is_some();
    stats.duration = dt * end_step.unwrap_or(stats.steps) as f64;
    stats.mean_deviation = if stats.steps > 0 {
        dev_sum / stats.steps as f64
    } else {
        0.0
    };
    Ok(stats)
}

/// Per-path evaluation metrics. Deviations are measured at every substep
/// against the reference point moved by the robot's own traversed arc;
/// `final` values are taken at the fully stopped state after braking, where
/// a completed run's reference point is the path end.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalRow {
    pub id: String,
    pub steps: usize,
    /// Seconds from start to full rest, braking included.
    pub duration: f64,
    pub return_sum: f64,
    /// Fraction of the reference arc actually covered.
    pub progress_ratio: f64,
    pub joint_dev_mean: f64,
    pub joint_dev_max: f64,
    pub joint_dev_final: f64,
    pub cart_dev_mean: f64,
    pub cart_dev_max: f64,
    pub cart_dev_final: f64,
    pub orient_dev_mean: f64,
    pub orient_dev_max: f64,
    pub orient_dev_final: f64,
    /// "completed" when the path end was reached, otherwise the termination
    /// cause.
    pub termination: String,
}

/// Column means over all rows (zeros when the report is empty).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalAggregate {
    pub count: usize,
    pub completed: usize,
    pub duration: f64,
    pub return_sum: f64,
    pub progress_ratio: f64,
    pub joint_dev_mean: f64,
    pub joint_dev_max: f64,
    pub joint_dev_final: f64,
    pub cart_dev_mean: f64,
    pub cart_dev_max: f64,
    pub cart_dev_final: f64,
    pub orient_dev_mean: f64,
    pub orient_dev_max: f64,
    pub orient_dev_final: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregate: EvalAggregate,
}

struct DevAccum {
    sum: f64,
    max: f64,
    last: f64,
    n: usize,
}

impl DevAccum {
    fn new() -> DevAccum {
        DevAccum {
            sum: 0.0,
            max: 0.0,
            last: 0.0,
            n: 0,
        }
    }

    fn push(&mut self, d: f64) {
        self.sum += d;
        self.max = self.max.max(d);
        self.last = d;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        if self.n > 0 {
            self.sum / self.n as f64
        } else {
            0.0
        }
    }
}

/// Evaluates `params` on every path of `records` with deterministic actions.
///
/// Each episode runs until the environment stops it or the path end is
/// reached, then brakes to rest; the braking time and its deviations count
/// toward the row. An empty dataset produces an empty report.
pub fn evaluate(
    robot: &RobotConfig,
    env_cfg: &EnvConfig,
    params: &PolicyParams,
    records: &[PathRecord],
) -> Result<EvalReport, TrainError> {
    let norm = Normalizer::new(&robot.limits, env_cfg);
    let mut env = Env::new(robot.clone(), env_cfg.clone())?;
    let dt = env_cfg.dt;
    let mut rows = Vec::with_capacity(records.len());

    for rec in records {
        let mut obs = env.reset(&rec.knots)?;
        let path = env.path().unwrap().clone();
        let total_len = path.total_length();

        let mut joint = DevAccum::new();
        let mut cart = DevAccum::new();
        let mut orient = DevAccum::new();
        let measure = |state: &KinematicState,
                           arc: f64,
                           joint: &mut DevAccum,
                           cart: &mut DevAccum,
                           orient: &mut DevAccum|
         -> Result<(), TrainError> {
            let ref_q = path.eval(arc);
            joint.push(crate::spline::dist(&state.pos, &ref_q));
            let pose = robot
                .chain
                .fk(&state.pos)
                .map_err(|e| TrainError::BadConfig(e.to_string()))?;
            let ref_pose = robot
                .chain
                .fk(&ref_q)
                .map_err(|e| TrainError::BadConfig(e.to_string()))?;
            cart.push((pose.translation.vector - ref_pose.translation.vector).norm());
            orient.push(rotation_angle_between(&pose, &ref_pose));
            Ok(())
        };

        let mut return_sum = 0.0;
        let mut steps = 0;
        let (reached_end, last_termination) = loop {
            let action = params
                .act(&norm.flatten(&obs))
                .map_err(|_| TrainError::BadConfig("policy shape does not match env".into()))?;
            let out = env.step(&action)?;
            return_sum += out.reward.total;
            steps += 1;
            let samples = out.info.segment.sample(env_cfg.substeps);
            for (s, &arc) in samples.iter().zip(&out.info.substep_arcs).skip(1) {
                measure(s, arc, &mut joint, &mut cart, &mut orient)?;
            }
            let reached = out.info.progress_after >= total_len - END_EPS;
            if out.done || reached {
                break (reached, out.termination);
            }
            obs = out.obs;
        };

        // Brake to full rest; deviations keep tracking the co-moving
        // reference point, clamped at the path end.
        let stop_state = env.state().unwrap().clone();
        let mut arc = env.progress();
        let brake = brake_to_rest(&stop_state, &robot.limits, dt, env_cfg.substeps)?;
        let mut brake_time = 0.0;
        for seg in &brake {
            let samples = seg.sample(env_cfg.substeps);
            for k in 1..samples.len() {
                arc = (arc + crate::spline::dist(&samples[k - 1].pos, &samples[k].pos))
                    .min(total_len);
                measure(&samples[k], arc, &mut joint, &mut cart, &mut orient)?;
            }
            brake_time += seg.dt;
        }
        if joint.n == 0 {
            // Zero-length episode (cannot normally happen): measure once in
            // place so the row is well-defined.
            measure(&stop_state, env.progress().min(total_len), &mut joint, &mut cart, &mut orient)?;
        }

        let termination = if reached_end {
            "completed".to_string()
        } else {
            match last_termination {
                Some(Termination::Deviation) => "deviation",
                Some(Termination::TaskFailure) => "task_failure",
                Some(Termination::MaxSteps) => "max_steps",
                None => "stopped",
            }
            .to_string()
        };
        rows.push(EvalRow {
            id: rec.id.clone(),
            steps,
            duration: dt * steps as f64 + brake_time,
            return_sum,
            progress_ratio: if total_len > 0.0 {
                env.progress() / total_len
            } else {
                1.0
            },
            joint_dev_mean: joint.mean(),
            joint_dev_max: joint.max,
            joint_dev_final: joint.last,
            cart_dev_mean: cart.mean(),
            cart_dev_max: cart.max,
            cart_dev_final: cart.last,
            orient_dev_mean: orient.mean(),
            orient_dev_max: orient.max,
            orient_dev_final: orient.last,
            termination,
        });
    }

    let aggregate = aggregate_rows(&rows);
    Ok(EvalReport { rows, aggregate })
}

fn aggregate_rows(rows: &[EvalRow]) -> EvalAggregate {
    let n = rows.len();
    let mean = |f: fn(&EvalRow) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / n as f64
        }
    };
    EvalAggregate {
        count: n,
        completed: rows.iter().filter(|r| r.termination == "completed").count(),
        duration: mean(|r| r.duration),
        return_sum: mean(|r| r.return_sum),
        progress_ratio: mean(|r| r.progress_ratio),
        joint_dev_mean: mean(|r| r.joint_dev_mean),
        joint_dev_max: mean(|r| r.joint_dev_max),
        joint_dev_final: mean(|r| r.joint_dev_final),
        cart_dev_mean: mean(|r| r.cart_dev_mean),
        cart_dev_max: mean(|r| r.cart_dev_max),
        cart_dev_final: mean(|r| r.cart_dev_final),
        orient_dev_mean: mean(|r| r.orient_dev_mean),
        orient_dev_max: mean(|r| r.orient_dev_max),
        orient_dev_final: mean(|r| r.orient_dev_final),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_waypoint_paths;

    #[test]
    fn empty_dataset_gives_empty_report() {
        let robot = RobotConfig::planar3();
        let cfg = EnvConfig::default();
        let norm = Normalizer::new(&robot.limits, &cfg);
        let params = PolicyParams::init(norm.obs_dim(), 3, 0);
        let report = evaluate(&robot, &cfg, &params, &[]).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.aggregate.count, 0);
        assert_eq!(report.aggregate.duration, 0.0);
    }

    #[test]
    fn report_is_deterministic_and_consistent() {
        let robot = RobotConfig::planar3();
        let cfg = EnvConfig::default();
        let norm = Normalizer::new(&robot.limits, &cfg);
        let params = PolicyParams::init(norm.obs_dim(), 3, 11);
        let recs = gen_waypoint_paths(&robot, 3, 21);
        let a = evaluate(&robot, &cfg, &params, &recs).unwrap();
        let b = evaluate(&robot, &cfg, &params, &recs).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 3);
        for row in &a.rows {
            assert!(row.duration > 0.0);
            assert!(row.joint_dev_max >= row.joint_dev_mean);
            assert!(row.cart_dev_max >= row.cart_dev_mean);
            assert!((0.0..=1.0 + 1e-9).contains(&row.progress_ratio));
            assert!(!row.termination.is_empty());
        }
        assert_eq!(a.aggregate.count, 3);
    }

    #[test]
    fn rollout_stats_reflect_parked_policy() {
        // A policy that cannot act (zero weights) parks at the start: the
        // deviation reward pays 1 per step for max_steps steps.
        let robot = RobotConfig::planar3();
        let cfg = EnvConfig::default();
        let norm = Normalizer::new(&robot.limits, &cfg);
        let mut params = PolicyParams::init(norm.obs_dim(), 3, 0);
        params.weights.iter_mut().for_each(|w| *w = 0.0);
        let mut env = Env::new(robot.clone(), cfg.clone()).unwrap();
        // Start far from the position walls so the feasible interval is
        // exactly symmetric and the zero action parks perfectly.
        let knots = vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.2, -0.1]];
        let stats = run_episode(&mut env, &params, &norm, &knots).unwrap();
        assert_eq!(stats.steps, 100);
        assert!((stats.return_sum - 100.0).abs() < 1e-6, "{}", stats.return_sum);
        assert!(!stats.reached_end);
    }
}
