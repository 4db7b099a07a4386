//! Online generation of jerk-limited robot trajectories that follow
//! joint-space reference paths.
//!
//! The crate splits into a geometric layer ([`spline`]), a dynamic-safety
//! layer ([`limits`]), a decision layer ([`env`], [`policy`]), and
//! supporting tooling ([`dataset`], [`topp`], [`kinematics`]).
//!
//! The core loop: a reference path is a cubic spline through joint-space
//! knots; an agent observes a sliding window of upcoming knots plus its own
//! kinematic state and picks one bounded scalar per joint; the safe action
//! space maps that scalar onto an acceleration interval guaranteed to respect
//! position, velocity, acceleration, and jerk limits for all future time;
//! exact integration advances the joints; a shaped reward trades off path
//! progress against tracking deviation.
//!
//! ```
//! use pathtrack::spline::{CubicPath, Parameterization};
//!
//! let knots = vec![vec![0.0, 0.0], vec![0.5, 0.2], vec![1.0, 0.0]];
//! let path = CubicPath::build(&knots, Parameterization::Chord).unwrap();
//! assert!(path.total_length() >= 1.0);
//! ```

pub mod dataset;
pub mod env;
pub mod kinematics;
pub mod limits;
pub mod policy;
pub mod spline;
pub mod topp;

use serde::{Deserialize, Serialize};

use kinematics::ChainSpec;
use limits::JointLimits;

/// A robot for this crate's purposes: joint limits plus forward kinematics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RobotConfig {
    pub name: String,
    pub limits: JointLimits,
    pub chain: ChainSpec,
}

impl RobotConfig {
    pub fn dof(&self) -> usize {
        self.limits.dof()
    }

    /// Built-in robot by name.
    pub fn builtin(name: &str) -> Option<RobotConfig> {
        match name {
            "planar3" => Some(Self::planar3()),
            "spatial7" => Some(Self::spatial7()),
            _ => None,
        }
    }

    /// Three revolute joints about the y axis, links along x: moves in the
    /// x-z plane, so the tool's x direction tilts against gravity. Compact
    /// desk-scale limits.
    pub fn planar3() -> RobotConfig {
        let dof = 3;
        RobotConfig {
            name: "planar3".into(),
            limits: JointLimits {
                pos_min: vec![-2.9; dof],
                pos_max: vec![2.9; dof],
                vel_max: vec![2.0; dof],
                acc_max: vec![10.0; dof],
                jerk_max: vec![80.0; dof],
            },
            chain: ChainSpec::serial_chain(
                &[
                    ([0.0, 1.0, 0.0], [0.4, 0.0, 0.0]),
                    ([0.0, 1.0, 0.0], [0.4, 0.0, 0.0]),
                    ([0.0, 1.0, 0.0], [0.3, 0.0, 0.0]),
                ],
                [0.0, 0.0, 0.4],
            ),
        }
    }

    /// Seven-joint spatial arm with alternating z/y axes; position and
    /// velocity limits follow a common 7-dof collaborative arm datasheet.
    pub fn spatial7() -> RobotConfig {
        let deg = std::f64::consts::PI / 180.0;
        let pos: Vec<f64> = [170.0, 120.0, 170.0, 120.0, 170.0, 120.0, 175.0]
            .iter()
            .map(|d| d * deg)
            .collect();
        let vel: Vec<f64> = [85.0, 85.0, 100.0, 75.0, 130.0, 135.0, 135.0]
            .iter()
            .map(|d| d * deg)
            .collect();
        RobotConfig {
            name: "spatial7".into(),
            limits: JointLimits {
                pos_min: pos.iter().map(|p| -p).collect(),
                pos_max: pos,
                vel_max: vel,
                acc_max: vec![10.0; 7],
                jerk_max: vec![100.0; 7],
            },
            chain: ChainSpec::serial_chain(
                &[
                    ([0.0, 0.0, 1.0], [0.0, 0.0, 0.34]),
                    ([0.0, 1.0, 0.0], [0.0, 0.0, 0.19]),
                    ([0.0, 0.0, 1.0], [0.0, 0.0, 0.21]),
                    ([0.0, -1.0, 0.0], [0.0, 0.0, 0.19]),
                    ([0.0, 0.0, 1.0], [0.0, 0.0, 0.21]),
                    ([0.0, 1.0, 0.0], [0.0, 0.0, 0.19]),
                    ([0.0, 0.0, 1.0], [0.0, 0.0, 0.126]),
                ],
                [0.0, 0.0, 0.0],
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lookup() {
        assert_eq!(RobotConfig::builtin("planar3").unwrap().dof(), 3);
        assert_eq!(RobotConfig::builtin("spatial7").unwrap().dof(), 7);
        assert!(RobotConfig::builtin("nope").is_none());
    }

    #[test]
    fn configs_serde_round_trip() {
        for name in ["planar3", "spatial7"] {
            let c = RobotConfig::builtin(name).unwrap();
            let s = serde_json::to_string_pretty(&c).unwrap();
            let back: RobotConfig = serde_json::from_str(&s).unwrap();
            assert_eq!(c, back);
        }
    }
}

/// Runs every code block in the guide under `book/` as a doctest, one
/// module per chapter so failures name their source file.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/environment.md")]
    mod environment {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/ball-beam.md")]
    mod ball_beam {}
    #[doc = include_str!("../../../book/src/time-optimal.md")]
    mod time_optimal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
