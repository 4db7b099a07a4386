//! Cross-entropy policy search: a population of parameter vectors sampled
//! around a running mean, scored by deterministic rollouts, refit from the
//! elite fraction. Gradient-free, robust on this environment's short
//! horizons, and fully deterministic for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::PathRecord;
use crate::env::{Env, EnvConfig};
use crate::policy::eval::run_episode;
use crate::policy::{CurvePoint, Normalizer, PolicyParams, TrainError};
use crate::RobotConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CemConfig {
    /// Search iterations; the budget knob.
    pub iterations: usize,
    /// Candidates per iteration (rounded up to even for antithetic pairs).
    pub population: usize,
    /// Candidates kept for the refit.
    pub elites: usize,
    /// Initial per-parameter sampling standard deviation.
    pub init_scale: f64,
    /// Lower bound on the sampling standard deviation.
    pub std_floor: f64,
    /// Paths evaluated per candidate each iteration (cycled from the
    /// dataset in order).
    pub paths_per_iter: usize,
    pub seed: u64,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            iterations: 40,
            population: 64,
            elites: 8,
            init_scale: 0.1,
            std_floor: 0.02,
            paths_per_iter: 8,
            seed: 0,
        }
    }
}

/// Refits (mean, std) from the elite candidates. Selection is permutation
/// invariant: candidates are ranked by score descending with exact ties
/// broken by the parameter vectors' lexicographic order, so reordering the
/// input cannot change the outcome.
pub fn refit_elites(
    candidates: &[Vec<f64>],
    scores: &[f64],
    elites: usize,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(candidates.len(), scores.len());
    assert!(elites >= 1 && elites <= candidates.len());
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                candidates[a]
                    .iter()
                    .map(|x| x.to_bits())
                    .cmp(candidates[b].iter().map(|x| x.to_bits()))
            })
    });
    let dim = candidates[0].len();
    let mut mean = vec![0.0; dim];
    for &i in order.iter().take(elites) {
        for (m, x) in mean.iter_mut().zip(&candidates[i]) {
            *m += x / elites as f64;
        }
    }
    let mut var = vec![0.0; dim];
    for &i in order.iter().take(elites) {
        for (v, (x, m)) in var.iter_mut().zip(candidates[i].iter().zip(&mean)) {
            *v += (x - m) * (x - m) / elites as f64;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

/// Trains a policy by cross-entropy search over the full weight vector.
///
/// Starts from [`PolicyParams::init`] with the same seed, so the returned
/// policy is directly comparable against that untrained baseline. All
/// candidates within an iteration are scored on the same paths.
pub fn train_cem(
    robot: &RobotConfig,
    env_cfg: &EnvConfig,
    records: &[PathRecord],
    cfg: &CemConfig,
) -> Result<(PolicyParams, Vec<CurvePoint>), TrainError> {
    train_cem_core(robot, env_cfg, records, cfg, None)
}

/// Continues cross-entropy search from an existing policy's weights.
///
/// The search mean starts at `start` instead of a fresh initialization;
/// everything else matches [`train_cem`]. Used to specialize one trained
/// policy under several reward weightings without independent restarts.
pub fn train_cem_from(
    robot: &RobotConfig,
    env_cfg: &EnvConfig,
    records: &[PathRecord],
    cfg: &CemConfig,
    start: &PolicyParams,
) -> Result<(PolicyParams, Vec<CurvePoint>), TrainError> {
    train_cem_core(robot, env_cfg, records, cfg, Some(start))
}

fn train_cem_core(
    robot: &RobotConfig,
    env_cfg: &EnvConfig,
    records: &[PathRecord],
    cfg: &CemConfig,
    start: Option<&PolicyParams>,
) -> Result<(PolicyParams, Vec<CurvePoint>), TrainError> {
    if records.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if cfg.elites == 0 || cfg.population < 2 || cfg.elites > cfg.population {
        return Err(TrainError::BadConfig(
            "need population >= 2 and 1 <= elites <= population".into(),
        ));
    }
    let norm = Normalizer::new(&robot.limits, env_cfg);
    let action_dim = robot.dof();
    let mut template = PolicyParams::init(norm.obs_dim(), action_dim, cfg.seed);
    if let Some(s) = start {
        if s.obs_dim != template.obs_dim || s.action_dim != template.action_dim {
            return Err(TrainError::BadConfig(format!(
                "start policy is {}x{}, this robot and environment need {}x{}",
                s.obs_dim, s.action_dim, template.obs_dim, template.action_dim
            )));
        }
        template = s.clone();
    }
    let n_params = template.weights.len();

    let mut env = Env::new(robot.clone(), env_cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mean = template.weights.clone();
    let mut std = vec![cfg.init_scale; n_params];
    let pairs = (cfg.population + 1) / 2;
    let mut curve = Vec::with_capacity(cfg.iterations);

    let mut candidate = template.clone();
    for iter in 0..cfg.iterations {
        let paths: Vec<&PathRecord> = (0..cfg.paths_per_iter)
            .map(|k| &records[(iter * cfg.paths_per_iter + k) % records.len()])
            .collect();

        // Antithetic pairs around the mean.
        let mut population: Vec<Vec<f64>> = Vec::with_capacity(pairs * 2);
        for _ in 0..pairs {
            let mut plus = mean.clone();
            let mut minus = mean.clone();
            for ((p, m), s) in plus.iter_mut().zip(minus.iter_mut()).zip(&std) {
                let eps = gauss(&mut rng) * s;
                *p += eps;
                *m -= eps;
            }
            population.push(plus);
            population.push(minus);
        }

        let mut scores = Vec::with_capacity(population.len());
        let mut durations = Vec::with_capacity(population.len());
        let mut deviations = Vec::with_capacity(population.len());
        for weights in &population {
            candidate.weights.copy_from_slice(weights);
            let mut ret = 0.0;
            let mut dur = 0.0;
            let mut dev = 0.0;
            for rec in &paths {
                let stats = run_episode(&mut env, &candidate, &norm, &rec.knots)?;
                ret += stats.return_sum;
                dur += stats.duration;
                dev += stats.mean_deviation;
            }
            let k = paths.len() as f64;
            if !ret.is_finite() {
                return Err(TrainError::NonFinite { iteration: iter });
            }
            scores.push(ret / k);
            durations.push(dur / k);
            deviations.push(dev / k);
        }

        let (new_mean, emp_std) = refit_elites(&population, &scores, cfg.elites);
        mean = new_mean;
        for (s, e) in std.iter_mut().zip(emp_std) {
            *s = e.max(cfg.std_floor);
        }

        let n = scores.len() as f64;
        curve.push(CurvePoint {
            iteration: iter,
            mean_return: scores.iter().sum::<f64>() / n,
            mean_duration: durations.iter().sum::<f64>() / n,
            mean_deviation: deviations.iter().sum::<f64>() / n,
        });
    }

    let mut out = template;
    out.weights = mean;
    Ok((out, curve))
}

/// Standard normal draw (Box-Muller, one value per call for determinism
/// independent of usage pattern).
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_waypoint_paths;

    #[test]
    fn refit_is_permutation_invariant() {
        let candidates: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, -1.0],
            vec![-1.0, 3.0],
        ];
        // Deliberate ties between distinct candidates.
        let scores = vec![5.0, 5.0, 1.0, 5.0, 0.0];
        let (m1, s1) = refit_elites(&candidates, &scores, 3);
        let perm = [4usize, 2, 0, 3, 1];
        let pc: Vec<Vec<f64>> = perm.iter().map(|&i| candidates[i].clone()).collect();
        let ps: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
        let (m2, s2) = refit_elites(&pc, &ps, 3);
        assert_eq!(m1, m2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn refit_takes_the_best() {
        let candidates = vec![vec![0.0], vec![10.0], vec![20.0]];
        let scores = vec![0.0, 1.0, 2.0];
        let (m, _) = refit_elites(&candidates, &scores, 2);
        assert_eq!(m, vec![15.0]);
    }

    #[test]
    fn short_training_is_deterministic_and_improves_over_start() {
        let robot = RobotConfig::planar3();
        let mut env_cfg = EnvConfig::default();
        env_cfg.max_steps = 40;
        let recs = gen_waypoint_paths(&robot, 4, 100);
        let cfg = CemConfig {
            iterations: 3,
            population: 8,
            elites: 2,
            paths_per_iter: 2,
            seed: 5,
            ..CemConfig::default()
        };
        let (p1, c1) = train_cem(&robot, &env_cfg, &recs, &cfg).unwrap();
        let (p2, c2) = train_cem(&robot, &env_cfg, &recs, &cfg).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(c1, c2);
        assert_eq!(c1.len(), 3);
        assert!(c1.iter().all(|p| p.mean_return.is_finite()));
    }

    #[test]
    fn warm_start_resumes_from_the_given_weights() {
        let robot = RobotConfig::planar3();
        let mut env_cfg = EnvConfig::default();
        env_cfg.max_steps = 30;
        let recs = gen_waypoint_paths(&robot, 4, 100);
        let cfg = CemConfig {
            iterations: 2,
            population: 6,
            elites: 2,
            paths_per_iter: 2,
            seed: 5,
            ..CemConfig::default()
        };
        let (base, _) = train_cem(&robot, &env_cfg, &recs, &cfg).unwrap();
        let (w1, c1) = train_cem_from(&robot, &env_cfg, &recs, &cfg, &base).unwrap();
        let (w2, c2) = train_cem_from(&robot, &env_cfg, &recs, &cfg, &base).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(c1, c2);
        // Resuming from the untrained seed policy is identical to a cold
        // start with the same configuration.
        let norm = Normalizer::new(&robot.limits, &env_cfg);
        let fresh = PolicyParams::init(norm.obs_dim(), robot.dof(), cfg.seed);
        let cold = train_cem(&robot, &env_cfg, &recs, &cfg).unwrap();
        let warm = train_cem_from(&robot, &env_cfg, &recs, &cfg, &fresh).unwrap();
        assert_eq!(cold, warm);
    }

    #[test]
    fn warm_start_rejects_mismatched_shape() {
        let robot = RobotConfig::planar3();
        let env_cfg = EnvConfig::default();
        let recs = gen_waypoint_paths(&robot, 2, 100);
        let bad = PolicyParams::init(3, 2, 0);
        assert!(matches!(
            train_cem_from(&robot, &env_cfg, &recs, &CemConfig::default(), &bad),
            Err(TrainError::BadConfig(_))
        ));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let robot = RobotConfig::planar3();
        let env_cfg = EnvConfig::default();
        assert!(matches!(
            train_cem(&robot, &env_cfg, &[], &CemConfig::default()),
            Err(TrainError::EmptyDataset)
        ));
    }
}
