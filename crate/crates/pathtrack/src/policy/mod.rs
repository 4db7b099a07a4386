//! Policies over the tracking environment: a fixed-shape MLP actor,
//! observation normalization, two trainers (a cross-entropy search and a
//! clipped policy-gradient method), deterministic evaluation, and JSON
//! checkpoints.

mod cem;
mod eval;
mod ppo;

pub use cem::{refit_elites, train_cem, train_cem_from, CemConfig};
pub use eval::{evaluate, EvalAggregate, EvalReport, EvalRow};
pub use ppo::{train_ppo, PpoConfig};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvConfig, EnvError, Observation, TaskConfig};
use crate::limits::{JointLimits, LimitError};

/// Hidden layer widths of every policy in this crate.
pub const HIDDEN: [usize; 2] = [256, 128];

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("observation has {got} features, policy expects {expected}")]
    ObsDimension { got: usize, expected: usize },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint version {0} is not supported")]
    Version(u32),
    #[error("checkpoint weight count {got} does not match shape ({expected})")]
    WeightCount { got: usize, expected: usize },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("training needs at least one path")]
    EmptyDataset,
    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Actor parameters: a tanh MLP `obs -> 256 -> 128 -> action` stored flat,
/// plus a per-action log standard deviation for stochastic training.
///
/// The flat layout is layer-major: W1 (row-major), b1, W2, b2, W3, b3.
/// Deterministic actions are tanh of the final layer's output, so they
/// always land in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub weights: Vec<f64>,
    pub log_std: Vec<f64>,
}

/// Total weight count of the fixed shape.
pub fn weight_count(obs_dim: usize, action_dim: usize) -> usize {
    HIDDEN[0] * obs_dim + HIDDEN[0] + HIDDEN[1] * HIDDEN[0] + HIDDEN[1]
        + action_dim * HIDDEN[1]
        + action_dim
}

impl PolicyParams {
    /// Fresh parameters with fan-in scaled uniform weights; this is also the
    /// untrained baseline used in comparisons.
    pub fn init(obs_dim: usize, action_dim: usize, seed: u64) -> PolicyParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(weight_count(obs_dim, action_dim));
        let dims = [
            (obs_dim, HIDDEN[0]),
            (HIDDEN[0], HIDDEN[1]),
            (HIDDEN[1], action_dim),
        ];
        for (fan_in, fan_out) in dims {
            let scale = (1.0 / fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                weights.push(rng.gen_range(-scale..scale));
            }
            for _ in 0..fan_out {
                weights.push(0.0);
            }
        }
        PolicyParams {
            obs_dim,
            action_dim,
            weights,
            log_std: vec![(0.3_f64).ln(); action_dim],
        }
    }

    pub fn weight_count(&self) -> usize {
        weight_count(self.obs_dim, self.action_dim)
    }

    fn slices(&self) -> [(usize, usize, usize); 3] {
        // (weight offset, fan_in, fan_out); biases follow each weight block.
        let l1 = HIDDEN[0] * self.obs_dim;
        let l2 = HIDDEN[1] * HIDDEN[0];
        [
            (0, self.obs_dim, HIDDEN[0]),
            (l1 + HIDDEN[0], HIDDEN[0], HIDDEN[1]),
            (l1 + HIDDEN[0] + l2 + HIDDEN[1], HIDDEN[1], self.action_dim),
        ]
    }

    /// Full forward pass returning both hidden activations and the raw
    /// (pre-tanh) output.
    pub fn forward_full(&self, obs: &[f64]) -> Result<([Vec<f64>; 2], Vec<f64>), PolicyError> {
        if obs.len() != self.obs_dim {
            return Err(PolicyError::ObsDimension {
                got: obs.len(),
                expected: self.obs_dim,
            });
        }
        let [(o1, in1, out1), (o2, in2, out2), (o3, in3, out3)] = self.slices();
        let w = &self.weights;
        let mut h1 = vec![0.0; out1];
        for r in 0..out1 {
            let row = &w[o1 + r * in1..o1 + (r + 1) * in1];
            let mut acc = w[o1 + out1 * in1 + r];
            for (x, y) in row.iter().zip(obs) {
                acc += x * y;
            }
            h1[r] = acc.tanh();
        }
        let mut h2 = vec![0.0; out2];
        for r in 0..out2 {
            let row = &w[o2 + r * in2..o2 + (r + 1) * in2];
            let mut acc = w[o2 + out2 * in2 + r];
            for (x, y) in row.iter().zip(&h1) {
                acc += x * y;
            }
            h2[r] = acc.tanh();
        }
        let mut raw = vec![0.0; out3];
        for r in 0..out3 {
            let row = &w[o3 + r * in3..o3 + (r + 1) * in3];
            let mut acc = w[o3 + out3 * in3 + r];
            for (x, y) in row.iter().zip(&h2) {
                acc += x * y;
            }
            raw[r] = acc;
        }
        Ok(([h1, h2], raw))
    }

    /// Raw (pre-tanh) action means.
    pub fn forward_raw(&self, obs: &[f64]) -> Result<Vec<f64>, PolicyError> {
        Ok(self.forward_full(obs)?.1)
    }

    /// Deterministic action in [-1, 1]^action_dim.
    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>, PolicyError> {
        Ok(self
            .forward_raw(obs)?
            .into_iter()
            .map(f64::tanh)
            .collect())
    }

    /// Accumulates parameter gradients for `d_raw` = dL/d(raw output) at a
    /// single observation, given the activations from [`Self::forward_full`].
    /// Returns dL/d(obs) in case a caller ever chains further; biases are
    /// handled inside.
    pub(crate) fn backprop(
        &self,
        obs: &[f64],
        acts: &[Vec<f64>; 2],
        d_raw: &[f64],
        grad: &mut [f64],
    ) {
        let [(o1, in1, out1), (o2, in2, out2), (o3, in3, out3)] = self.slices();
        let w = &self.weights;
        let (h1, h2) = (&acts[0], &acts[1]);

        // Layer 3 (linear).
        let mut d_h2 = vec![0.0; in3];
        for r in 0..out3 {
            let g = d_raw[r];
            let row = o3 + r * in3;
            for c in 0..in3 {
                grad[row + c] += g * h2[c];
                d_h2[c] += g * w[row + c];
            }
            grad[o3 + out3 * in3 + r] += g;
        }
        // Layer 2 (tanh).
        let mut d_h1 = vec![0.0; in2];
        for r in 0..out2 {
            let g = d_h2[r] * (1.0 - h2[r] * h2[r]);
            let row = o2 + r * in2;
            for c in 0..in2 {
                grad[row + c] += g * h1[c];
                d_h1[c] += g * w[row + c];
            }
            grad[o2 + out2 * in2 + r] += g;
        }
        // Layer 1 (tanh).
        for r in 0..out1 {
            let g = d_h1[r] * (1.0 - h1[r] * h1[r]);
            let row = o1 + r * in1;
            for c in 0..in1 {
                grad[row + c] += g * obs[c];
            }
            grad[o1 + out1 * in1 + r] += g;
        }
    }
}

/// Scales raw observations into roughly [-1, 1] features using the limit
/// boxes and window geometry, independent of any data statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mid: Vec<f64>,
    half: Vec<f64>,
    v_scale: Vec<f64>,
    a_scale: Vec<f64>,
    len_scale: f64,
    ball_scales: Option<(f64, f64)>,
    n_knots: usize,
    dim: usize,
}

impl Normalizer {
    pub fn new(limits: &JointLimits, cfg: &EnvConfig) -> Normalizer {
        let dim = limits.dof();
        let mid: Vec<f64> = (0..dim)
            .map(|j| 0.5 * (limits.pos_min[j] + limits.pos_max[j]))
            .collect();
        let half: Vec<f64> = (0..dim)
            .map(|j| (0.5 * (limits.pos_max[j] - limits.pos_min[j])).max(1e-6))
            .collect();
        let len_scale = (cfg.knot_spacing * (cfg.n_knots.max(2) - 1) as f64).max(1e-6);
        let ball_scales = match cfg.task {
            TaskConfig::None => None,
            TaskConfig::BallBeam { half_length } => Some((
                half_length.max(1e-6),
                (9.81 * half_length).sqrt().max(1e-6),
            )),
        };
        Normalizer {
            mid,
            half,
            v_scale: limits.vel_max.clone(),
            a_scale: limits.acc_max.clone(),
            len_scale,
            ball_scales,
            n_knots: cfg.n_knots,
            dim,
        }
    }

    /// Feature count this normalizer produces.
    pub fn obs_dim(&self) -> usize {
        self.n_knots * self.dim + 2 + 3 * self.dim + if self.ball_scales.is_some() { 2 } else { 0 }
    }

    /// Flattens an observation into the fixed feature layout:
    /// window knots (knot-major), l_state, offset, positions, velocities,
    /// accelerations, then optional ball position and velocity.
    ///
    /// Window knots enter as offsets from the current joint position scaled
    /// by the window length, so the features a tracking policy needs (where
    /// the path goes, relative to the robot) appear directly instead of
    /// hiding in the difference of two near-equal position features.
    pub fn flatten(&self, obs: &Observation) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.obs_dim());
        for knot in &obs.window.knots {
            for j in 0..self.dim {
                out.push((knot[j] - obs.state.pos[j]) / self.len_scale);
            }
        }
        out.push(obs.window.l_state / self.len_scale);
        out.push(obs.window.offset / self.len_scale);
        for j in 0..self.dim {
            out.push((obs.state.pos[j] - self.mid[j]) / self.half[j]);
        }
        for j in 0..self.dim {
            out.push(obs.state.vel[j] / self.v_scale[j]);
        }
        for j in 0..self.dim {
            out.push(obs.state.acc[j] / self.a_scale[j]);
        }
        if let Some((ps, vs)) = self.ball_scales {
            let ball = obs.ball.unwrap_or(crate::env::BallState { pos: 0.0, vel: 0.0 });
            out.push(ball.pos / ps);
            out.push(ball.vel / vs);
        }
        out
    }
}

/// One row of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_return: f64,
    pub mean_duration: f64,
    pub mean_deviation: f64,
}

/// Serialized policy plus the environment shape it was trained for.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub algo: String,
    pub robot: String,
    pub dim: usize,
    pub n_knots: usize,
    pub task: TaskConfig,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub weights: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl Checkpoint {
    pub fn from_params(
        params: &PolicyParams,
        algo: &str,
        robot: &str,
        n_knots: usize,
        task: &TaskConfig,
    ) -> Checkpoint {
        Checkpoint {
            version: 1,
            algo: algo.into(),
            robot: robot.into(),
            dim: params.action_dim,
            n_knots,
            task: task.clone(),
            obs_dim: params.obs_dim,
            action_dim: params.action_dim,
            hidden: HIDDEN.to_vec(),
            weights: params.weights.clone(),
            log_std: params.log_std.clone(),
        }
    }

    pub fn into_params(self) -> Result<PolicyParams, PolicyError> {
        if self.version != 1 {
            return Err(PolicyError::Version(self.version));
        }
        let expected = weight_count(self.obs_dim, self.action_dim);
        if self.weights.len() != expected || self.hidden != HIDDEN.to_vec() {
            return Err(PolicyError::WeightCount {
                got: self.weights.len(),
                expected,
            });
        }
        Ok(PolicyParams {
            obs_dim: self.obs_dim,
            action_dim: self.action_dim,
            weights: self.weights,
            log_std: self.log_std,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let f = File::create(path)?;
        serde_json::to_writer(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, PolicyError> {
        let f = File::open(path)?;
        Ok(serde_json::from_reader(BufReader::new(f))?)
    }
}
