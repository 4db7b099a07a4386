//! Path datasets: generation of random reference paths, JSON-lines storage
//! with a sidecar manifest, and seeded train/test splitting.
//!
//! Records serialize through serde_json, which round-trips every finite f64
//! bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limits::{brake_to_rest, feasible_range, KinematicState, LimitError, Segment};
use crate::RobotConfig;

/// One reference path: the knots a spline is fitted through, plus enough
/// metadata to regenerate or audit it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PathRecord {
    pub id: String,
    pub dim: usize,
    pub generator: String,
    pub seed: u64,
    pub knots: Vec<Vec<f64>>,
}

/// Sidecar metadata written next to a dataset file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub master_seed: u64,
    pub count: usize,
    pub generator: String,
    pub robot: String,
    pub dim: usize,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("manifest: {0}")]
    Manifest(serde_json::Error),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("record {id} has dim {got}, expected {expected}")]
    DimMismatch {
        id: String,
        got: usize,
        expected: usize,
    },
    #[error("train ratio {0} outside [0, 1]")]
    BadRatio(f64),
}

/// Writes records as one JSON object per line.
pub fn write_jsonl(path: &Path, records: &[PathRecord]) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| DatasetError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines dataset; blank lines are skipped.
pub fn read_jsonl(path: &Path) -> Result<Vec<PathRecord>, DatasetError> {
    let r = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| DatasetError::Json {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(records)
}

/// The manifest file that belongs to a dataset path: `<dataset>.manifest.json`.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    dataset.with_file_name(name)
}

pub fn write_manifest(dataset: &Path, manifest: &DatasetManifest) -> Result<(), DatasetError> {
    let f = File::create(manifest_path(dataset))?;
    serde_json::to_writer_pretty(BufWriter::new(f), manifest).map_err(DatasetError::Manifest)?;
    Ok(())
}

pub fn read_manifest(dataset: &Path) -> Result<DatasetManifest, DatasetError> {
    let f = File::open(manifest_path(dataset))?;
    serde_json::from_reader(BufReader::new(f)).map_err(DatasetError::Manifest)
}

/// Per-path seed stream: splitmix64 over the master seed.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform_in_box(rng: &mut ChaCha8Rng, robot: &RobotConfig, margin: f64) -> Vec<f64> {
    (0..robot.dof())
        .map(|j| {
            let lo = robot.limits.pos_min[j];
            let hi = robot.limits.pos_max[j];
            let pad = margin * (hi - lo);
            rng.gen_range(lo + pad..hi - pad)
        })
        .collect()
}

fn dedup_knots(knots: &mut Vec<Vec<f64>>) {
    knots.dedup_by(|a, b| crate::spline::dist(a, b) < 1e-6);
}

/// Generates paths by rolling the robot forward with uniform random actions
/// through the safe action space, then braking to rest; the knots are the
/// decision-boundary joint positions. Every generated path is dynamically
/// traversable by construction.
pub fn gen_random_paths(
    robot: &RobotConfig,
    count: usize,
    master_seed: u64,
    dt: f64,
) -> Result<Vec<PathRecord>, DatasetError> {
    let mut stream = master_seed;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let seed = splitmix64(&mut stream);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let knots = loop {
            let start = uniform_in_box(&mut rng, robot, 0.05);
            let steps = rng.gen_range(10..=40);
            let mut state = KinematicState::at_rest(start.clone());
            let mut knots = vec![start];
            for _ in 0..steps {
                let range = feasible_range(&state, &robot.limits, dt)?;
                let action: Vec<f64> =
                    (0..robot.dof()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let seg = Segment {
                    start: state,
                    acc_end: range.map_action(&action),
                    dt,
                };
                state = seg.end_state();
                knots.push(state.pos.clone());
            }
            for seg in brake_to_rest(&state, &robot.limits, dt, 1)? {
                knots.push(seg.end_state().pos);
            }
            dedup_knots(&mut knots);
            if knots.len() >= 2 {
                break knots;
            }
        };
        records.push(PathRecord {
            id: format!("rw-{i:05}"),
            dim: robot.dof(),
            generator: "random_walk".into(),
            seed,
            knots,
        });
    }
    Ok(records)
}

/// Generates paths through waypoints drawn uniformly from the position box
/// shrunk by 5% per side.
pub fn gen_waypoint_paths(robot: &RobotConfig, count: usize, master_seed: u64) -> Vec<PathRecord> {
    let mut stream = master_seed;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let seed = splitmix64(&mut stream);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let knots = loop {
            let n = rng.gen_range(3..=6);
            let mut knots: Vec<Vec<f64>> =
                (0..n).map(|_| uniform_in_box(&mut rng, robot, 0.05)).collect();
            dedup_knots(&mut knots);
            if knots.len() >= 2 {
                break knots;
            }
        };
        records.push(PathRecord {
            id: format!("wp-{i:05}"),
            dim: robot.dof(),
            generator: "waypoints".into(),
            seed,
            knots,
        });
    }
    records
}

/// Seeded train/test split. The shuffle decides membership; both halves keep
/// the input order.
pub fn split(
    records: &[PathRecord],
    train_ratio: f64,
    seed: u64,
) -> Result<(Vec<PathRecord>, Vec<PathRecord>), DatasetError> {
    if !(0.0..=1.0).contains(&train_ratio) {
        return Err(DatasetError::BadRatio(train_ratio));
    }
    let n = records.len();
    let n_train = ((train_ratio * n as f64).round() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let mut in_train = vec![false; n];
    for &k in idx.iter().take(n_train) {
        in_train[k] = true;
    }
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (k, r) in records.iter().enumerate() {
        if in_train[k] {
            train.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::STATE_SLACK;
    use crate::spline::{CubicPath, Parameterization};

    #[test]
    fn random_paths_are_deterministic_and_in_bounds() {
        let robot = RobotConfig::planar3();
        let a = gen_random_paths(&robot, 5, 42, 0.1).unwrap();
        let b = gen_random_paths(&robot, 5, 42, 0.1).unwrap();
        assert_eq!(a, b);
        let c = gen_random_paths(&robot, 5, 43, 0.1).unwrap();
        assert_ne!(a, c);
        for r in &a {
            assert_eq!(r.dim, 3);
            assert!(r.knots.len() >= 2);
            for k in &r.knots {
                for (j, &q) in k.iter().enumerate() {
                    assert!(q >= robot.limits.pos_min[j] - STATE_SLACK);
                    assert!(q <= robot.limits.pos_max[j] + STATE_SLACK);
                }
            }
            // Knots must be spline-fittable (no coincident neighbors).
            CubicPath::build(&r.knots, Parameterization::Chord).unwrap();
        }
    }

    #[test]
    fn waypoint_paths_fit_and_stay_inside() {
        let robot = RobotConfig::spatial7();
        let recs = gen_waypoint_paths(&robot, 8, 7);
        assert_eq!(recs.len(), 8);
        for r in &recs {
            assert_eq!(r.dim, 7);
            CubicPath::build(&r.knots, Parameterization::Chord).unwrap();
            for k in &r.knots {
                for (j, &q) in k.iter().enumerate() {
                    let span = robot.limits.pos_max[j] - robot.limits.pos_min[j];
                    assert!(q >= robot.limits.pos_min[j] + 0.05 * span - 1e-9);
                    assert!(q <= robot.limits.pos_max[j] - 0.05 * span + 1e-9);
                }
            }
        }
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let robot = RobotConfig::planar3();
        let recs = gen_random_paths(&robot, 4, 1234, 0.1).unwrap();
        let dir = std::env::temp_dir().join(format!("pathtrack-ds-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("paths.jsonl");
        write_jsonl(&file, &recs).unwrap();
        let back = read_jsonl(&file).unwrap();
        assert_eq!(recs, back);
        for (a, b) in recs.iter().zip(&back) {
            for (ka, kb) in a.knots.iter().zip(&b.knots) {
                for (x, y) in ka.iter().zip(kb) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        let manifest = DatasetManifest {
            master_seed: 1234,
            count: 4,
            generator: "random_walk".into(),
            robot: "planar3".into(),
            dim: 3,
        };
        write_manifest(&file, &manifest).unwrap();
        assert_eq!(read_manifest(&file).unwrap(), manifest);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn split_is_seeded_and_partitions() {
        let robot = RobotConfig::planar3();
        let recs = gen_waypoint_paths(&robot, 20, 9);
        let (tr1, te1) = split(&recs, 0.7, 5).unwrap();
        let (tr2, te2) = split(&recs, 0.7, 5).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        assert_eq!(tr1.len(), 14);
        assert_eq!(te1.len(), 6);
        let mut all: Vec<&str> = tr1.iter().chain(&te1).map(|r| r.id.as_str()).collect();
        all.sort();
        let mut expect: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        expect.sort();
        assert_eq!(all, expect);
        let (tr3, _) = split(&recs, 0.7, 6).unwrap();
        assert_ne!(tr1, tr3);
        assert!(split(&recs, 1.5, 0).is_err());
        let (tr4, te4) = split(&recs, 1.0, 0).unwrap();
        assert_eq!(tr4.len(), 20);
        assert!(te4.is_empty());
    }

    #[test]
    fn manifest_path_is_sibling() {
        assert_eq!(
            manifest_path(Path::new("/tmp/x/train.jsonl")),
            Path::new("/tmp/x/train.jsonl.manifest.json")
        );
    }
}
