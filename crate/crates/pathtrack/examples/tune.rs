//! Scratch probe for acceptance tuning. Not part of the deliverable.

use std::time::Instant;

use pathtrack::dataset::{gen_random_paths, split, PathRecord};
use pathtrack::env::{EnvConfig, TaskConfig};
use pathtrack::policy::{evaluate, train_cem, CemConfig};
use pathtrack::RobotConfig;

fn ball_cem() -> CemConfig {
    CemConfig {
        iterations: 250,
        population: 64,
        elites: 8,
        init_scale: 0.05,
        std_floor: 0.01,
        paths_per_iter: 2,
        seed: 0,
    }
}

fn level_start_paths(robot: &RobotConfig, count: usize, seed: u64, dt: f64) -> Vec<PathRecord> {
    let mut recs = gen_random_paths(robot, count, seed, dt).unwrap();
    for rec in &mut recs {
        let origin = rec.knots[0].clone();
        for knot in &mut rec.knots {
            for (k, o) in knot.iter_mut().zip(&origin) {
                *k -= o;
            }
        }
    }
    recs
}

fn main() {
    let robot = RobotConfig::planar3();
    let base = EnvConfig::default();
    let level = level_start_paths(&robot, 300, 11, base.dt);
    let (btrain, bheld) = split(&level, 2.0 / 3.0, 7).unwrap();

    for term_dev in [base.termination_deviation, 3.0] {
        for gamma in [0.0, 1.5] {
            let mut cfg = base.clone();
            cfg.task = TaskConfig::BallBeam { half_length: 0.2 };
            cfg.reward.beta = 0.0;
            cfg.reward.gamma = gamma;
            cfg.termination_deviation = term_dev;
            let t = Instant::now();
            let (policy, _) = train_cem(&robot, &cfg, &btrain, &ball_cem()).unwrap();
            let rep = evaluate(&robot, &cfg, &policy, &bheld[..100]).unwrap();
            let mut drops = 0;
            let mut devs = 0;
            let mut maxed = 0;
            for r in &rep.rows {
                match r.termination.as_str() {
                    "task_failure" => drops += 1,
                    "deviation" => devs += 1,
                    "max_steps" => maxed += 1,
                    _ => {}
                }
            }
            println!(
                "term_dev {term_dev} gamma {gamma}: ret {:8.2} dur {:.3} completed {} drops {} devs {} maxed {} ({:.0}s)",
                rep.aggregate.return_sum,
                rep.aggregate.duration,
                rep.aggregate.completed,
                drops,
                devs,
                maxed,
                t.elapsed().as_secs_f64()
            );
        }
    }
}
