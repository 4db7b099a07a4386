//! Clipped policy-gradient training (PPO style) with a squashed Gaussian
//! actor, generalized advantage estimation, and a hand-rolled Adam
//! optimizer. The critic reuses the actor's MLP shape with a single output.
//!
//! Sampled pre-squash actions are stored, so the tanh correction term of the
//! log density cancels in the probability ratio and is omitted throughout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::PathRecord;
use crate::env::{Env, EnvConfig};
use crate::policy::{CurvePoint, Normalizer, PolicyParams, TrainError};
use crate::RobotConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    /// Rollout-update cycles; the budget knob.
    pub iterations: usize,
    /// Environment steps collected per iteration.
    pub steps_per_iter: usize,
    /// Gradient passes over each iteration's batch.
    pub epochs: usize,
    /// Probability-ratio clip radius.
    pub clip: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Advantage smoothing factor.
    pub lam: f64,
    pub lr: f64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            iterations: 30,
            steps_per_iter: 1024,
            epochs: 8,
            clip: 0.2,
            gamma: 0.99,
            lam: 0.95,
            lr: 3e-4,
            seed: 0,
        }
    }
}

struct Sample {
    obs: Vec<f64>,
    /// Pre-squash action draw.
    u: Vec<f64>,
    logp_old: f64,
    reward: f64,
    value: f64,
    /// True when this sample ended its episode.
    done: bool,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t);
        let bc2 = 1.0 - B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + EPS);
        }
    }
}

/// Gaussian log density over the pre-squash draws, tanh correction omitted
/// (it cancels between old and new in the ratio).
fn gauss_logp(u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((u, m), ls)| {
            let s = ls.exp();
            let z = (u - m) / s;
            -0.5 * z * z - ls
        })
        .sum()
}

/// Trains a policy with clipped policy gradients.
pub fn train_ppo(
    robot: &RobotConfig,
    env_cfg: &EnvConfig,
    records: &[PathRecord],
    cfg: &PpoConfig,
) -> Result<(PolicyParams, Vec<CurvePoint>), TrainError> {
    if records.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if cfg.steps_per_iter == 0 || cfg.epochs == 0 {
        return Err(TrainError::BadConfig(
            "steps_per_iter and epochs must be positive".into(),
        ));
    }
    let norm = Normalizer::new(&robot.limits, env_cfg);
    let action_dim = robot.dof();
    let mut actor = PolicyParams::init(norm.obs_dim(), action_dim, cfg.seed);
    let mut critic = PolicyParams::init(norm.obs_dim(), 1, cfg.seed.wrapping_add(1));

    let mut env = Env::new(robot.clone(), env_cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut adam_w = Adam::new(actor.weights.len(), cfg.lr);
    let mut adam_s = Adam::new(action_dim, cfg.lr);
    let mut adam_c = Adam::new(critic.weights.len(), cfg.lr);

    let mut curve = Vec::with_capacity(cfg.iterations);
    let mut path_cursor = 0usize;
    let dt = env_cfg.dt;

    for iter in 0..cfg.iterations {
        // Rollout phase.
        let mut samples: Vec<Sample> = Vec::with_capacity(cfg.steps_per_iter);
        let mut episode_returns = Vec::new();
        let mut episode_durations = Vec::new();
        let mut episode_deviations = Vec::new();
        let mut bootstrap = 0.0;
        {
            let mut obs = env.reset(&records[path_cursor % records.len()].knots)?;
            path_cursor += 1;
            let mut ep_return = 0.0;
            let mut ep_steps = 0usize;
            let mut ep_dev = 0.0;
            while samples.len() < cfg.steps_per_iter {
                let feats = norm.flatten(&obs);
                let mean = actor
                    .forward_raw(&feats)
                    .map_err(|_| TrainError::BadConfig("policy shape mismatch".into()))?;
                let u: Vec<f64> = mean
                    .iter()
                    .zip(&actor.log_std)
                    .map(|(m, ls)| m + ls.exp() * gauss(&mut rng))
                    .collect();
                let logp = gauss_logp(&u, &mean, &actor.log_std);
                let value = critic
                    .forward_raw(&feats)
                    .map_err(|_| TrainError::BadConfig("critic shape mismatch".into()))?[0];
                let action: Vec<f64> = u.iter().map(|x| x.tanh()).collect();
                let out = env.step(&action)?;
                ep_return += out.reward.total;
                ep_steps += 1;
                ep_dev += out.info.deviation;
                samples.push(Sample {
                    obs: feats,
                    u,
                    logp_old: logp,
                    reward: out.reward.total,
                    value,
                    done: out.done,
                });
                if out.done {
                    episode_returns.push(ep_return);
                    episode_durations.push(dt * ep_steps as f64);
                    episode_deviations.push(ep_dev / ep_steps.max(1) as f64);
                    ep_return = 0.0;
                    ep_steps = 0;
                    ep_dev = 0.0;
                    obs = env.reset(&records[path_cursor % records.len()].knots)?;
                    path_cursor += 1;
                } else {
                    obs = out.obs;
                }
            }
            // Bootstrap the truncated tail episode.
            if !samples.last().unwrap().done {
                let feats = norm.flatten(&obs);
                bootstrap = critic
                    .forward_raw(&feats)
                    .map_err(|_| TrainError::BadConfig("critic shape mismatch".into()))?[0];
                episode_returns.push(ep_return);
                episode_durations.push(dt * ep_steps as f64);
                episode_deviations.push(ep_dev / ep_steps.max(1) as f64);
            }
        }

        // Generalized advantage estimation.
        let n = samples.len();
        let mut adv = vec![0.0; n];
        let mut next_value = bootstrap;
        let mut next_adv = 0.0;
        for t in (0..n).rev() {
            let s = &samples[t];
            let cont = if s.done { 0.0 } else { 1.0 };
            let delta = s.reward + cfg.gamma * next_value * cont - s.value;
            next_adv = delta + cfg.gamma * cfg.lam * cont * next_adv;
            adv[t] = next_adv;
            next_value = s.value;
        }
        let returns: Vec<f64> = adv
            .iter()
            .zip(&samples)
            .map(|(a, s)| a + s.value)
            .collect();
        let adv_mean = adv.iter().sum::<f64>() / n as f64;
        let adv_var = adv.iter().map(|a| (a - adv_mean) * (a - adv_mean)).sum::<f64>() / n as f64;
        let adv_std = adv_var.sqrt().max(1e-8);
        for a in &mut adv {
            *a = (*a - adv_mean) / adv_std;
        }

        // Update phase.
        for _ in 0..cfg.epochs {
            let mut grad_w = vec![0.0; actor.weights.len()];
            let mut grad_s = vec![0.0; action_dim];
            let mut grad_c = vec![0.0; critic.weights.len()];
            let inv_n = 1.0 / n as f64;
            for (t, s) in samples.iter().enumerate() {
                let (acts, mean) = actor
                    .forward_full(&s.obs)
                    .map_err(|_| TrainError::BadConfig("policy shape mismatch".into()))?;
                let logp = gauss_logp(&s.u, &mean, &actor.log_std);
                let ratio = (logp - s.logp_old).exp();
                let a = adv[t];
                let surr1 = ratio * a;
                let surr2 = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a;
                // Gradient flows only through the unclipped branch.
                if surr1 <= surr2 + 1e-15 {
                    let dlogp_scale = -a * ratio * inv_n;
                    let mut d_raw = vec![0.0; action_dim];
                    for j in 0..action_dim {
                        let sd = actor.log_std[j].exp();
                        let z = (s.u[j] - mean[j]) / sd;
                        d_raw[j] = dlogp_scale * z / sd;
                        grad_s[j] += dlogp_scale * (z * z - 1.0);
                    }
                    actor.backprop(&s.obs, &acts, &d_raw, &mut grad_w);
                }

                let (c_acts, c_out) = critic
                    .forward_full(&s.obs)
                    .map_err(|_| TrainError::BadConfig("critic shape mismatch".into()))?;
                let d_v = [2.0 * (c_out[0] - returns[t]) * inv_n];
                critic.backprop(&s.obs, &c_acts, &d_v, &mut grad_c);
            }
            adam_w.step(&mut actor.weights, &grad_w);
            adam_s.step(&mut actor.log_std, &grad_s);
            adam_c.step(&mut critic.weights, &grad_c);
            for ls in &mut actor.log_std {
                *ls = ls.clamp(-4.0, 1.0);
            }
        }

        if actor.weights.iter().any(|w| !w.is_finite())
            || actor.log_std.iter().any(|w| !w.is_finite())
        {
            return Err(TrainError::NonFinite { iteration: iter });
        }

        let ne = episode_returns.len().max(1) as f64;
        curve.push(CurvePoint {
            iteration: iter,
            mean_return: episode_returns.iter().sum::<f64>() / ne,
            mean_duration: episode_durations.iter().sum::<f64>() / ne,
            mean_deviation: episode_deviations.iter().sum::<f64>() / ne,
        });
    }

    Ok((actor, curve))
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
