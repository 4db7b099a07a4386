//! The decision environment: a robot tracking a joint-space reference path
//! through the safe action space, with shaped rewards for progress, tracking
//! accuracy, and an optional ball-on-beam balancing task.
//!
//! The environment is fully deterministic: same path, same start state, same
//! actions, same outcome, bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::beam_tilt;
use crate::limits::{
    feasible_range, AccelRange, KinematicState, LimitError, Segment,
};
use crate::spline::{
    CubicPath, KnotWindow, Parameterization, SampleStrategy, SplineError,
};
use crate::RobotConfig;

const GRAVITY: f64 = 9.81;

/// Reward shaping weights and scales. All three components lie in [0, 1]
/// and the weights are non-negative, so the reward is never negative.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RewardConfig {
    /// Weight of the progress component.
    pub alpha: f64,
    /// Weight of the deviation component.
    pub beta: f64,
    /// Weight of the task component.
    pub gamma: f64,
    /// Arc budget for overshooting the visible path end before the progress
    /// reward drops to zero.
    pub l_end: f64,
    /// Deviation at which the deviation reward reaches zero.
    pub d_max: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
            l_end: 0.2,
            d_max: 0.4,
        }
    }
}

/// Optional task on top of path tracking.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskConfig {
    /// No extra task.
    None,
    /// A ball rolls on a beam along the tool's x direction; gravity
    /// accelerates it by -g sin(tilt). The episode fails when the ball
    /// leaves the beam.
    BallBeam { half_length: f64 },
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig::None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EnvConfig {
    /// Decision interval in seconds.
    pub dt: f64,
    /// Knots visible in the observation window.
    pub n_knots: usize,
    /// Target arc spacing between reference knots after resampling.
    pub knot_spacing: f64,
    /// Knot placement strategy used when resampling the raw path.
    pub sampling: SampleStrategy,
    pub reward: RewardConfig,
    /// Mean step deviation that terminates the episode.
    pub termination_deviation: f64,
    pub max_steps: usize,
    /// Integration samples per decision step for deviation measurement and
    /// task dynamics.
    pub substeps: usize,
    pub task: TaskConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            dt: 0.1,
            n_knots: 10,
            knot_spacing: 0.08,
            sampling: SampleStrategy::Distance,
            reward: RewardConfig::default(),
            termination_deviation: 0.8,
            max_steps: 100,
            substeps: 10,
            task: TaskConfig::None,
        }
    }
}

/// Ball position and velocity along the beam, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub pos: f64,
    pub vel: f64,
}

/// What the agent sees at a decision boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub window: KnotWindow,
    pub state: KinematicState,
    pub ball: Option<BallState>,
}

/// Unweighted reward components plus the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub progress: f64,
    pub deviation: f64,
    pub task: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Mean step deviation exceeded the configured threshold.
    Deviation,
    /// The task failed (ball left the beam).
    TaskFailure,
    /// Step budget exhausted.
    MaxSteps,
}

/// Everything a step produced beyond the observation: the executed segment
/// and the reference arc at each substep, for replay and offline analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub segment: Segment,
    /// Reference arc (clamped to the path) at each of the substeps + 1
    /// sample instants.
    pub substep_arcs: Vec<f64>,
    pub progress_before: f64,
    pub progress_after: f64,
    /// Mean joint-space distance to the reference over the sample instants.
    pub deviation: f64,
    /// Joint arc traversed during the step.
    pub traversed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub termination: Option<Termination>,
    pub info: StepInfo,
}

/// How [`Env::swap_path`] carries the episode over to the new path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    /// Move the progress marker to the arc on the new path nearest to the
    /// current reference point. Swapping in an identical path keeps the
    /// progress unchanged (within the nearest-point search resolution).
    KeepProgress,
    /// Reset progress to the start of the new path.
    Restart,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("config invalid: {0}")]
    BadConfig(String),
    #[error("no active episode; call reset first")]
    NotReset,
    #[error("step called after the episode finished")]
    StepAfterDone,
    #[error("action component {index} is not finite")]
    NonFiniteAction { index: usize },
    #[error("action has {got} components, robot has {expected} joints")]
    ActionDimension { got: usize, expected: usize },
    #[error("path dimension {got} does not match robot dimension {expected}")]
    PathDimension { got: usize, expected: usize },
}

pub struct Env {
    robot: RobotConfig,
    config: EnvConfig,
    path: Option<CubicPath>,
    state: Option<KinematicState>,
    progress: f64,
    steps: usize,
    done: bool,
    ball: Option<BallState>,
}

impl Env {
    pub fn new(robot: RobotConfig, config: EnvConfig) -> Result<Env, EnvError> {
        robot.limits.validate()?;
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(EnvError::BadConfig("dt must be positive".into()));
        }
        if config.n_knots < 2 {
            return Err(EnvError::BadConfig("n_knots must be at least 2".into()));
        }
        if config.knot_spacing <= 0.0 {
            return Err(EnvError::BadConfig("knot_spacing must be positive".into()));
        }
        if config.substeps == 0 {
            return Err(EnvError::BadConfig("substeps must be at least 1".into()));
        }
        if config.max_steps == 0 {
            return Err(EnvError::BadConfig("max_steps must be at least 1".into()));
        }
        let r = &config.reward;
        if r.alpha < 0.0 || r.beta < 0.0 || r.gamma < 0.0 || r.l_end <= 0.0 || r.d_max <= 0.0 {
            return Err(EnvError::BadConfig(
                "reward weights must be non-negative and scales positive".into(),
            ));
        }
        if let TaskConfig::BallBeam { half_length } = config.task {
            if half_length <= 0.0 {
                return Err(EnvError::BadConfig("half_length must be positive".into()));
            }
        }
        Ok(Env {
            robot,
            config,
            path: None,
            state: None,
            progress: 0.0,
            steps: 0,
            done: false,
            ball: None,
        })
    }

    pub fn robot(&self) -> &RobotConfig {
        &self.robot
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn path(&self) -> Option<&CubicPath> {
        self.path.as_ref()
    }

    pub fn state(&self) -> Option<&KinematicState> {
        self.state.as_ref()
    }

    pub fn progress(&self) -> f64 {
        self.progress
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Resamples `raw_knots` at the configured knot spacing and starts a new
    /// episode at rest at the path start.
    pub fn reset(&mut self, raw_knots: &[Vec<f64>]) -> Result<Observation, EnvError> {
        let path = self.build_reference(raw_knots)?;
        let start = KinematicState::at_rest(path.eval(0.0));
        self.start_episode(path, start)
    }

    /// Starts a new episode from an explicit kinematic state.
    pub fn reset_from(
        &mut self,
        raw_knots: &[Vec<f64>],
        start: KinematicState,
    ) -> Result<Observation, EnvError> {
        let path = self.build_reference(raw_knots)?;
        self.start_episode(path, start)
    }

    fn start_episode(
        &mut self,
        path: CubicPath,
        start: KinematicState,
    ) -> Result<Observation, EnvError> {
        if start.dof() != self.robot.dof() {
            return Err(EnvError::PathDimension {
                got: start.dof(),
                expected: self.robot.dof(),
            });
        }
        // Surfaces out-of-limits starts immediately instead of at step 1.
        feasible_range(&start, &self.robot.limits, self.config.dt)?;
        self.path = Some(path);
        self.state = Some(start);
        self.progress = 0.0;
        self.steps = 0;
        self.done = false;
        self.ball = match self.config.task {
            TaskConfig::None => None,
            TaskConfig::BallBeam { .. } => Some(BallState { pos: 0.0, vel: 0.0 }),
        };
        Ok(self.observation())
    }

    /// Builds the reference path the episode tracks: fit the raw knots, then
    /// resample at the configured spacing so window density is uniform.
    fn build_reference(&self, raw_knots: &[Vec<f64>]) -> Result<CubicPath, EnvError> {
        if let Some(k) = raw_knots.first() {
            if k.len() != self.robot.dof() {
                return Err(EnvError::PathDimension {
                    got: k.len(),
                    expected: self.robot.dof(),
                });
            }
        }
        let raw = CubicPath::build(raw_knots, Parameterization::Chord)?;
        let count = ((raw.total_length() / self.config.knot_spacing).ceil() as usize + 1).max(2);
        let mut knots = raw.sample_knots(count, self.config.sampling)?;
        // Curvature-based sampling can bunch knots; chord fitting rejects
        // coincident neighbors, so drop them.
        knots.dedup_by(|a, b| crate::spline::dist(a, b) < 1e-9);
        if knots.len() < 2 {
            knots = raw.sample_knots(2, SampleStrategy::Distance)?;
        }
        Ok(CubicPath::build(&knots, Parameterization::Chord)?)
    }

    /// Replaces the reference path mid-episode.
    pub fn swap_path(
        &mut self,
        raw_knots: &[Vec<f64>],
        mode: SwapMode,
    ) -> Result<Observation, EnvError> {
        let old = self.path.as_ref().ok_or(EnvError::NotReset)?;
        let anchor = old.eval(self.progress);
        let path = self.build_reference(raw_knots)?;
        self.progress = match mode {
            SwapMode::Restart => 0.0,
            SwapMode::KeepProgress => nearest_arc(&path, &anchor),
        };
        self.path = Some(path);
        Ok(self.observation())
    }

    /// The feasible acceleration interval at the current state.
    pub fn feasible(&self) -> Result<AccelRange, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(feasible_range(state, &self.robot.limits, self.config.dt)?)
    }

    pub fn observation(&self) -> Observation {
        let path = self.path.as_ref().expect("observation requires an episode");
        let state = self.state.as_ref().expect("observation requires an episode");
        Observation {
            window: path.knot_window(self.progress, self.config.n_knots),
            state: state.clone(),
            ball: self.ball,
        }
    }

    /// Advances one decision step.
    ///
    /// Pipeline: feasible interval, action mapping, exact integration,
    /// traversed arc, deviation against the co-moving reference point, reward
    /// from the pre-step window, termination checks, new window.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if self.path.is_none() {
            return Err(EnvError::NotReset);
        }
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        if action.len() != self.robot.dof() {
            return Err(EnvError::ActionDimension {
                got: action.len(),
                expected: self.robot.dof(),
            });
        }
        if let Some(index) = action.iter().position(|a| !a.is_finite()) {
            return Err(EnvError::NonFiniteAction { index });
        }

        let state = self.state.clone().unwrap();
        let path = self.path.as_ref().unwrap();
        let dt = self.config.dt;
        let pre_window = path.knot_window(self.progress, self.config.n_knots);

        let range = feasible_range(&state, &self.robot.limits, dt)?;
        let acc_end = range.map_action(action);
        let segment = Segment {
            start: state,
            acc_end,
            dt,
        };
        let samples = segment.sample(self.config.substeps);

        // Traversed arc and per-substep deviation against the reference
        // point moved by the same cumulative arc.
        let total_len = path.total_length();
        let progress_before = self.progress;
        let mut cum = 0.0;
        let mut substep_arcs = Vec::with_capacity(samples.len());
        let mut dev_sum = 0.0;
        for (k, s) in samples.iter().enumerate() {
            if k > 0 {
                cum += crate::spline::dist(&samples[k - 1].pos, &s.pos);
            }
            let arc = (progress_before + cum).min(total_len);
            substep_arcs.push(arc);
            dev_sum += crate::spline::dist(&s.pos, &path.eval(arc));
        }
        let traversed = cum;
        let deviation = dev_sum / samples.len() as f64;
        let progress_after = (progress_before + traversed).min(total_len);

        // Ball dynamics: beam tilt sampled once per decision step at the
        // pre-step joint positions, then constant-acceleration substeps.
        let mut task_reward = 0.0;
        let mut task_failed = false;
        if let (Some(mut ball), TaskConfig::BallBeam { half_length }) =
            (self.ball, self.config.task.clone())
        {
            let tilt = beam_tilt(
                &self
                    .robot
                    .chain
                    .fk(&segment.start.pos)
                    .map_err(|e| EnvError::BadConfig(e.to_string()))?,
            );
            let acc = -GRAVITY * tilt.sin();
            let h = dt / self.config.substeps as f64;
            for _ in 0..self.config.substeps {
                ball.vel += acc * h;
                ball.pos += ball.vel * h;
            }
            task_failed = ball.pos.abs() > half_length;
            task_reward = if ball.pos.abs() <= half_length {
                let x = (ball.pos.abs() - half_length) / half_length;
                (x * x).clamp(0.0, 1.0)
            } else {
                0.0
            };
            self.ball = Some(ball);
        }

        let r = &self.config.reward;
        let progress_reward = reward_length(traversed, pre_window.l_state, r);
        let deviation_reward = reward_deviation(deviation, r);
        let reward = RewardBreakdown {
            progress: progress_reward,
            deviation: deviation_reward,
            task: task_reward,
            total: r.alpha * progress_reward + r.beta * deviation_reward + r.gamma * task_reward,
        };

        self.state = Some(segment.end_state());
        self.progress = progress_after;
        self.steps += 1;

        let termination = if deviation > self.config.termination_deviation {
            Some(Termination::Deviation)
        } else if task_failed {
            Some(Termination::TaskFailure)
        } else if self.steps >= self.config.max_steps {
            Some(Termination::MaxSteps)
        } else {
            None
        };
        self.done = termination.is_some();

        Ok(StepOutcome {
            obs: self.observation(),
            reward,
            done: self.done,
            termination,
            info: StepInfo {
                segment,
                substep_arcs,
                progress_before,
                progress_after,
                deviation,
                traversed,
            },
        })
    }
}

/// Progress reward component. Rises quadratically as the step's traversed
/// arc `l` approaches the visible remaining arc `l_state`, peaks at 1 when
/// it is exactly consumed, and falls back to zero once the overshoot
/// exceeds `l_end`. With nothing left to traverse the peak sits at zero
/// motion, rewarding a full stop.
pub fn reward_length(l: f64, l_state: f64, cfg: &RewardConfig) -> f64 {
    let r = if l <= l_state && l_state > 0.0 {
        let x = l / l_state;
        x * x
    } else if l <= l_state + cfg.l_end {
        let x = (l - (l_state + cfg.l_end)) / cfg.l_end;
        x * x
    } else {
        0.0
    };
    r.clamp(0.0, 1.0)
}

/// Deviation reward component: 1 at zero deviation, falling quadratically
/// to 0 at `d_max` and staying there beyond.
pub fn reward_deviation(d: f64, cfg: &RewardConfig) -> f64 {
    if d <= cfg.d_max {
        let x = (d - cfg.d_max) / cfg.d_max;
        (x * x).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Arc position on `path` nearest to `point`: dense grid scan, then
/// golden-section refinement inside the two neighboring cells.
fn nearest_arc(path: &CubicPath, point: &[f64]) -> f64 {
    let l = path.total_length();
    if l <= 0.0 {
        return 0.0;
    }
    let cells = 1000usize;
    let d = |s: f64| crate::spline::dist(&path.eval(s), point);
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=cells {
        let s = l * i as f64 / cells as f64;
        let di = d(s);
        if di < best {
            best = di;
            best_i = i;
        }
    }
    let mut a = l * best_i.saturating_sub(1) as f64 / cells as f64;
    let mut b = l * (best_i + 1).min(cells) as f64 / cells as f64;
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (d(x1), d(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = d(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = d(x2);
        }
    }
    0.5 * (a + b)
}
