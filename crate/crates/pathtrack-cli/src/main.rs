//! Batch entry points for the pathtrack library: dataset generation, policy
//! training, evaluation, minimum-time comparison, and trace export.
//!
//! Exit codes: 0 on success, 2 for configuration errors (bad flags, files,
//! or dimension mismatches), 3 for runtime failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pathtrack::dataset::{
    gen_random_paths, gen_waypoint_paths, read_jsonl, write_jsonl, write_manifest,
    DatasetManifest, PathRecord,
};
use pathtrack::env::{Env, EnvConfig, Observation, TaskConfig, Termination};
use pathtrack::policy::{
    evaluate, train_cem, train_ppo, CemConfig, Checkpoint, CurvePoint, EvalRow, Normalizer,
    PolicyParams, PpoConfig,
};
use pathtrack::spline::{CubicPath, Parameterization};
use pathtrack::topp::min_time_parameterize;
use pathtrack::RobotConfig;

#[derive(Parser)]
#[command(name = "pathtrack", version, about = "Jerk-limited path tracking tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a reference-path dataset as JSON lines plus a manifest.
    GenDataset {
        /// Built-in robot name (planar3, spatial7) or a robot JSON file.
        #[arg(long)]
        robot: String,
        #[arg(long, value_enum)]
        kind: DatasetKind,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a tracking policy and write a checkpoint plus a learning curve.
    Train {
        #[arg(long)]
        robot: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Cem)]
        algo: Algo,
        #[arg(long, value_enum, default_value_t = TaskArg::None)]
        task: TaskArg,
        /// Beam half-length in meters when the task is ball-beam.
        #[arg(long, default_value_t = 0.2)]
        half_length: f64,
        /// Training iterations.
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Weight of the progress reward.
        #[arg(long)]
        alpha: Option<f64>,
        /// Weight of the path-accuracy reward.
        #[arg(long)]
        beta: Option<f64>,
        /// Weight of the task reward.
        #[arg(long)]
        gamma: Option<f64>,
        /// Checkpoint file to write.
        #[arg(long)]
        out: PathBuf,
        /// Learning-curve CSV; defaults to the checkpoint path with a .csv
        /// extension.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset and write a per-path CSV report.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        robot: String,
        #[arg(long)]
        report: PathBuf,
    },
    /// Minimum-time parameterization per path, optionally compared against
    /// a trained policy's durations.
    Topp {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        robot: String,
        /// Arc-length discretization cells.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long)]
        report: PathBuf,
        /// Checkpoint whose rollout durations fill the comparison columns.
        #[arg(long)]
        ckpt: Option<PathBuf>,
    },
    /// Replay one dataset path under a checkpoint and dump a step-by-step
    /// JSON trace with per-substep setpoints.
    Trace {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        path_id: String,
        #[arg(long)]
        robot: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a robot configuration document (JSON) for editing.
    ShowConfig {
        #[arg(long)]
        robot: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    Random,
    Waypoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Cem,
    Ppo,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    None,
    BallBeam,
}

/// Prints a status line, tolerating a closed stdout (e.g. piped to `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Errors split by exit code: configuration problems exit 2, runtime
/// failures exit 3.
enum AppError {
    Config(String),
    Runtime(String),
}

impl AppError {
    fn config(msg: impl Into<String>) -> AppError {
        AppError::Config(msg.into())
    }
    fn runtime(msg: impl Into<String>) -> AppError {
        AppError::Runtime(msg.into())
    }
}

/// Self-describing robot document: kinematics, limits, and the environment
/// defaults to run it with.
#[derive(Serialize, Deserialize)]
struct RobotDoc {
    #[serde(flatten)]
    robot: RobotConfig,
    #[serde(default)]
    env: EnvConfig,
}

fn load_robot(arg: &str) -> Result<RobotDoc, AppError> {
    let doc = if let Some(robot) = RobotConfig::builtin(arg) {
        RobotDoc {
            robot,
            env: EnvConfig::default(),
        }
    } else {
        let text = fs::read_to_string(arg)
            .map_err(|e| AppError::config(format!("robot file {arg}: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::config(format!("robot file {arg}: {e}")))?
    };
    doc.robot
        .limits
        .validate()
        .map_err(|e| AppError::config(format!("robot limits: {e}")))?;
    if doc.robot.chain.dof() != doc.robot.limits.dof() {
        return Err(AppError::config(format!(
            "chain has {} joints but limits describe {}",
            doc.robot.chain.dof(),
            doc.robot.limits.dof()
        )));
    }
    Ok(doc)
}

fn load_dataset(path: &Path) -> Result<Vec<PathRecord>, AppError> {
    read_jsonl(path).map_err(|e| AppError::config(format!("dataset {}: {e}", path.display())))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, AppError> {
    Checkpoint::load(path)
        .map_err(|e| AppError::config(format!("checkpoint {}: {e}", path.display())))
}

/// Applies checkpoint metadata to the environment so the observation layout
/// matches what the policy was trained on, and returns the policy.
fn restore(
    ckpt: Checkpoint,
    doc: &RobotDoc,
    env: &mut EnvConfig,
) -> Result<PolicyParams, AppError> {
    if ckpt.dim != doc.robot.dof() {
        return Err(AppError::config(format!(
            "checkpoint drives {} joints but robot {} has {}",
            ckpt.dim,
            doc.robot.name,
            doc.robot.dof()
        )));
    }
    env.n_knots = ckpt.n_knots;
    env.task = ckpt.task.clone();
    let expect = Normalizer::new(&doc.robot.limits, env).obs_dim();
    if ckpt.obs_dim != expect {
        return Err(AppError::config(format!(
            "checkpoint observation size {} does not match this robot/environment ({expect})",
            ckpt.obs_dim
        )));
    }
    ckpt.into_params()
        .map_err(|e| AppError::config(format!("checkpoint: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| AppError::runtime(format!("write {}: {e}", path.display())))
}

fn worker_count() -> Result<usize, AppError> {
    match std::env::var("PATHTRACK_WORKERS") {
        Err(_) => Ok(1),
        Ok(v) => {
            let n: usize = v
                .parse()
                .map_err(|_| AppError::config(format!("PATHTRACK_WORKERS={v} is not a number")))?;
            if n == 0 {
                return Err(AppError::config("PATHTRACK_WORKERS must be at least 1"));
            }
            Ok(n.min(1))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(AppError::Config(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), AppError> {
    let _workers = worker_count()?;
    match cli.cmd {
        Cmd::GenDataset {
            robot,
            kind,
            count,
            seed,
            out,
        } => cmd_gen_dataset(&robot, kind, count, seed, &out),
        Cmd::Train {
            robot,
            dataset,
            algo,
            task,
            half_length,
            budget,
            seed,
            alpha,
            beta,
            gamma,
            out,
            curve,
        } => cmd_train(
            &robot, &dataset, algo, task, half_length, budget, seed, alpha, beta, gamma, &out,
            curve,
        ),
        Cmd::Eval {
            ckpt,
            dataset,
            robot,
            report,
        } => cmd_eval(&ckpt, &dataset, &robot, &report),
        Cmd::Topp {
            dataset,
            robot,
            grid,
            report,
            ckpt,
        } => cmd_topp(&dataset, &robot, grid, &report, ckpt.as_deref()),
        Cmd::Trace {
            ckpt,
            dataset,
            path_id,
            robot,
            out,
        } => cmd_trace(&ckpt, &dataset, &path_id, &robot, &out),
        Cmd::ShowConfig { robot, out } => cmd_show_config(&robot, out.as_deref()),
    }
}

fn cmd_gen_dataset(
    robot: &str,
    kind: DatasetKind,
    count: usize,
    seed: u64,
    out: &Path,
) -> Result<(), AppError> {
    let doc = load_robot(robot)?;
    let (records, generator) = match kind {
        DatasetKind::Random => (
            gen_random_paths(&doc.robot, count, seed, doc.env.dt)
                .map_err(|e| AppError::runtime(format!("generation: {e}")))?,
            "random_walk",
        ),
        DatasetKind::Waypoint => (gen_waypoint_paths(&doc.robot, count, seed), "waypoint"),
    };
    write_jsonl(out, &records).map_err(|e| AppError::runtime(format!("write dataset: {e}")))?;
    let manifest = DatasetManifest {
        master_seed: seed,
        count: records.len(),
        generator: generator.into(),
        robot: doc.robot.name.clone(),
        dim: doc.robot.dof(),
    };
    write_manifest(out, &manifest).map_err(|e| AppError::runtime(format!("write manifest: {e}")))?;
    say!("wrote {} paths to {}", records.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    robot: &str,
    dataset: &Path,
    algo: Algo,
    task: TaskArg,
    half_length: f64,
    budget: usize,
    seed: u64,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    out: &Path,
    curve_path: Option<PathBuf>,
) -> Result<(), AppError> {
    let doc = load_robot(robot)?;
    let records = load_dataset(dataset)?;
    let mut env = doc.env.clone();
    env.task = match task {
        TaskArg::None => TaskConfig::None,
        TaskArg::BallBeam => {
            if half_length <= 0.0 {
                return Err(AppError::config("--half-length must be positive"));
            }
            TaskConfig::BallBeam { half_length }
        }
    };
    if let Some(a) = alpha {
        env.reward.alpha = a;
    }
    if let Some(b) = beta {
        env.reward.beta = b;
    }
    if let Some(g) = gamma {
        env.reward.gamma = g;
    }

    let (name, params, curve) = match algo {
        Algo::Cem => {
            let cfg = CemConfig {
                iterations: budget,
                seed,
                ..CemConfig::default()
            };
            let (p, c) = train_cem(&doc.robot, &env, &records, &cfg)
                .map_err(|e| AppError::runtime(format!("training: {e}")))?;
            ("cem", p, c)
        }
        Algo::Ppo => {
            let cfg = PpoConfig {
                iterations: budget,
                seed,
                ..PpoConfig::default()
            };
            let (p, c) = train_ppo(&doc.robot, &env, &records, &cfg)
                .map_err(|e| AppError::runtime(format!("training: {e}")))?;
            ("ppo", p, c)
        }
    };

    let ckpt = Checkpoint::from_params(&params, name, &doc.robot.name, env.n_knots, &env.task);
    ckpt.save(out)
        .map_err(|e| AppError::runtime(format!("write checkpoint: {e}")))?;
    let curve_path = curve_path.unwrap_or_else(|| out.with_extension("csv"));
    write_text(&curve_path, &curve_csv(&curve))?;
    match curve.last() {
        Some(p) => say!("final mean return: {}", p.mean_return),
        None => say!("final mean return: n/a (budget 0)"),
    }
    Ok(())
}

fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from("iteration,mean_return,mean_duration,mean_deviation\n");
    for p in curve {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.iteration, p.mean_return, p.mean_duration, p.mean_deviation
        );
    }
    s
}

fn eval_csv(rows: &[EvalRow]) -> String {
    let mut s = String::from(
        "id,steps,duration,return_sum,progress_ratio,joint_dev_mean,joint_dev_max,joint_dev_final,cart_dev_mean,cart_dev_max,cart_dev_final,orient_dev_mean,orient_dev_max,orient_dev_final,termination\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.steps,
            r.duration,
            r.return_sum,
            r.progress_ratio,
            r.joint_dev_mean,
            r.joint_dev_max,
            r.joint_dev_final,
            r.cart_dev_mean,
            r.cart_dev_max,
            r.cart_dev_final,
            r.orient_dev_mean,
            r.orient_dev_max,
            r.orient_dev_final,
            r.termination
        );
    }
    s
}

fn cmd_eval(ckpt: &Path, dataset: &Path, robot: &str, report: &Path) -> Result<(), AppError> {
    let doc = load_robot(robot)?;
    let records = load_dataset(dataset)?;
    let mut env = doc.env.clone();
    let params = restore(load_checkpoint(ckpt)?, &doc, &mut env)?;
    let rep = evaluate(&doc.robot, &env, &params, &records)
        .map_err(|e| AppError::runtime(format!("evaluation: {e}")))?;
    write_text(report, &eval_csv(&rep.rows))?;
    let a = &rep.aggregate;
    say!(
        "{} paths: completed {}, mean duration {:.3} s, mean joint deviation {:.4}",
        a.count, a.completed, a.duration, a.joint_dev_mean
    );
    Ok(())
}

fn cmd_topp(
    dataset: &Path,
    robot: &str,
    grid: usize,
    report: &Path,
    ckpt: Option<&Path>,
) -> Result<(), AppError> {
    let doc = load_robot(robot)?;
    let records = load_dataset(dataset)?;

    // Policy durations come from full rollouts on the same paths.
    let mut policy_durations: Option<Vec<f64>> = None;
    if let Some(ckpt_path) = ckpt {
        let mut env = doc.env.clone();
        let params = restore(load_checkpoint(ckpt_path)?, &doc, &mut env)?;
        let rep = evaluate(&doc.robot, &env, &params, &records)
            .map_err(|e| AppError::runtime(format!("evaluation: {e}")))?;
        policy_durations = Some(rep.rows.iter().map(|r| r.duration).collect());
    }

    let mut s = String::from("id,grid,duration_topp,duration_policy,ratio\n");
    for (i, rec) in records.iter().enumerate() {
        let path = CubicPath::build(&rec.knots, Parameterization::Chord)
            .map_err(|e| AppError::runtime(format!("path {}: {e}", rec.id)))?;
        let topp = min_time_parameterize(&path, &doc.robot.limits, grid)
            .map_err(|e| AppError::runtime(format!("path {}: {e}", rec.id)))?;
        match &policy_durations {
            Some(durs) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    rec.id,
                    grid,
                    topp.duration,
                    durs[i],
                    topp.duration / durs[i]
                );
            }
            None => {
                let _ = writeln!(s, "{},{},{},,", rec.id, grid, topp.duration);
            }
        }
    }
    write_text(report, &s)?;
    say!("wrote {} rows to {}", records.len(), report.display());
    Ok(())
}

/// One decision step of a trace: the commanded acceleration ramp target and
/// the state, progress, and reward it produced.
#[derive(Serialize)]
struct TraceStep {
    t: f64,
    action: Vec<f64>,
    acc_cmd: Vec<f64>,
    pos: Vec<f64>,
    vel: Vec<f64>,
    acc: Vec<f64>,
    progress: f64,
    traversed: f64,
    deviation: f64,
    reward_length: f64,
    reward_deviation: f64,
    reward_task: f64,
    reward_total: f64,
    done_reason: Option<String>,
}

/// Joint-space setpoint at one substep instant, for external controllers
/// and plotting.
#[derive(Serialize)]
struct Setpoint {
    t: f64,
    pos: Vec<f64>,
    vel: Vec<f64>,
    acc: Vec<f64>,
}

#[derive(Serialize)]
struct Trace {
    path_id: String,
    robot: String,
    algo: String,
    dt: f64,
    substeps: usize,
    steps: Vec<TraceStep>,
    setpoints: Vec<Setpoint>,
}

fn cmd_trace(
    ckpt_path: &Path,
    dataset: &Path,
    path_id: &str,
    robot: &str,
    out: &Path,
) -> Result<(), AppError> {
    let doc = load_robot(robot)?;
    let records = load_dataset(dataset)?;
    let rec = records
        .iter()
        .find(|r| r.id == path_id)
        .ok_or_else(|| AppError::config(format!("path id {path_id} not in dataset")))?;
    let ckpt = load_checkpoint(ckpt_path)?;
    let algo = ckpt.algo.clone();
    let mut env_cfg = doc.env.clone();
    let params = restore(ckpt, &doc, &mut env_cfg)?;
    let norm = Normalizer::new(&doc.robot.limits, &env_cfg);

    let mut env = Env::new(doc.robot.clone(), env_cfg.clone())
        .map_err(|e| AppError::runtime(format!("environment: {e}")))?;
    let mut obs: Observation = env
        .reset(&rec.knots)
        .map_err(|e| AppError::runtime(format!("reset: {e}")))?;

    let dt = env_cfg.dt;
    let sub = env_cfg.substeps;
    let mut trace = Trace {
        path_id: path_id.into(),
        robot: doc.robot.name.clone(),
        algo,
        dt,
        substeps: sub,
        steps: Vec::new(),
        setpoints: Vec::new(),
    };

    let mut t = 0.0;
    loop {
        let action = params
            .act(&norm.flatten(&obs))
            .map_err(|e| AppError::runtime(format!("policy: {e}")))?;
        let out_step = env
            .step(&action)
            .map_err(|e| AppError::runtime(format!("step: {e}")))?;
        let seg = &out_step.info.segment;
        for (k, s) in seg.sample(sub).iter().enumerate() {
            // The segment start duplicates the previous segment's end.
            if k == 0 && !trace.setpoints.is_empty() {
                continue;
            }
            trace.setpoints.push(Setpoint {
                t: t + seg.dt * k as f64 / sub as f64,
                pos: s.pos.clone(),
                vel: s.vel.clone(),
                acc: s.acc.clone(),
            });
        }
        t += dt;
        let end = seg.end_state();
        trace.steps.push(TraceStep {
            t,
            action,
            acc_cmd: seg.acc_end.clone(),
            pos: end.pos,
            vel: end.vel,
            acc: end.acc,
            progress: out_step.info.progress_after,
            traversed: out_step.info.traversed,
            deviation: out_step.info.deviation,
            reward_length: out_step.reward.progress,
            reward_deviation: out_step.reward.deviation,
            reward_task: out_step.reward.task,
            reward_total: out_step.reward.total,
            done_reason: out_step.termination.map(|term| {
                match term {
                    Termination::Deviation => "deviation",
                    Termination::TaskFailure => "task_failure",
                    Termination::MaxSteps => "max_steps",
                }
                .into()
            }),
        });
        if out_step.done {
            break;
        }
        obs = out_step.obs;
    }

    let text = serde_json::to_string_pretty(&trace)
        .map_err(|e| AppError::runtime(format!("serialize: {e}")))?;
    write_text(out, &text)?;
    say!(
        "wrote {} steps ({} setpoints) to {}",
        trace.steps.len(),
        trace.setpoints.len(),
        out.display()
    );
    Ok(())
}

fn cmd_show_config(robot: &str, out: Option<&Path>) -> Result<(), AppError> {
    let doc = load_robot(robot)?;
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| AppError::runtime(format!("serialize: {e}")))?;
    match out {
        Some(path) => write_text(path, &text)?,
        None => say!("{text}"),
    }
    Ok(())
}
