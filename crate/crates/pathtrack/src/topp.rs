//! Minimum-time path parameterization under velocity and acceleration
//! limits, used as a lower-bound baseline for policy traversal times.
//!
//! The path is gridded in arc length; the squared path speed x(s) = (ds/dt)^2
//! is propagated backward (largest stoppable speed) and forward (largest
//! reachable speed) against the per-stage linear constraints
//! a_min <= q''_j x + q'_j u <= a_max, where u = dx/ds / 2 is the path
//! acceleration. Jerk is not modeled, so the result is a lower bound on any
//! jerk-limited traversal time.

use thiserror::Error;

use crate::limits::JointLimits;
use crate::spline::CubicPath;

/// Below this |q'_j| a joint imposes no velocity constraint at a grid point
/// and its acceleration constraint degenerates to a pure bound on x.
const TANGENT_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ToppError {
    #[error("grid must have at least 2 cells, got {0}")]
    BadGrid(usize),
    #[error("path dimension {path} does not match limits dimension {limits}")]
    DimensionMismatch { path: usize, limits: usize },
    #[error("no admissible path acceleration at stage {stage}")]
    EmptyControlSet { stage: usize },
    #[error("path speed pinned to zero at interior stage {stage}")]
    ZeroSpeedStage { stage: usize },
}

/// Result of the parameterization on a uniform arc grid.
#[derive(Debug, Clone)]
pub struct ToppResult {
    /// Grid arc positions, length `grid + 1`.
    pub arcs: Vec<f64>,
    /// Squared path speed at each grid point.
    pub x: Vec<f64>,
    /// Cumulative time at each grid point; the last entry is the duration.
    pub times: Vec<f64>,
    pub duration: f64,
}

struct Stage {
    /// min over joints of (v_max_j / |q'_j|)^2, plus degenerate-tangent
    /// acceleration caps.
    x_max: f64,
    dq: Vec<f64>,
    ddq: Vec<f64>,
}

impl Stage {
    /// Admissible u interval at squared speed `x`; empty means infeasible.
    fn u_interval(&self, x: f64, limits: &JointLimits) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for j in 0..self.dq.len() {
            let a_max = limits.acc_max[j];
            let rest = self.ddq[j] * x;
            if self.dq[j].abs() < TANGENT_EPS {
                if rest.abs() > a_max + 1e-9 {
                    return None;
                }
                continue;
            }
            let u1 = (-a_max - rest) / self.dq[j];
            let u2 = (a_max - rest) / self.dq[j];
            lo = lo.max(u1.min(u2));
            hi = hi.min(u1.max(u2));
        }
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }
}

/// Computes the minimum-time parameterization of `path` on a uniform grid of
/// `grid` cells, starting and ending at rest.
pub fn min_time_parameterize(
    path: &CubicPath,
    limits: &JointLimits,
    grid: usize,
) -> Result<ToppResult, ToppError> {
    if grid < 2 {
        return Err(ToppError::BadGrid(grid));
    }
    if path.dim() != limits.dof() {
        return Err(ToppError::DimensionMismatch {
            path: path.dim(),
            limits: limits.dof(),
        });
    }
    let total = path.total_length();
    let n = grid + 1;
    let arcs: Vec<f64> = (0..n).map(|i| total * i as f64 / grid as f64).collect();
    if total <= 0.0 {
        return Ok(ToppResult {
            arcs,
            x: vec![0.0; n],
            times: vec![0.0; n],
            duration: 0.0,
        });
    }
    let ds = total / grid as f64;

    let stages: Vec<Stage> = arcs
        .iter()
        .map(|&s| {
            let (_, dq, ddq) = path.arc_derivatives(s);
            let mut x_max = f64::INFINITY;
            for j in 0..dq.len() {
                if dq[j].abs() >= TANGENT_EPS {
                    let cap = limits.vel_max[j] / dq[j].abs();
                    x_max = x_max.min(cap * cap);
                } else if ddq[j].abs() >= TANGENT_EPS {
                    // Acceleration along a joint with no tangent component:
                    // |q''_j| x <= a_max.
                    x_max = x_max.min(limits.acc_max[j] / ddq[j].abs());
                }
            }
            Stage { x_max, dq, ddq }
        })
        .collect();

    // Backward pass: largest x at stage i from which the remaining path can
    // still be brought to rest through admissible controls.
    let mut b = vec![0.0_f64; n];
    for i in (0..n - 1).rev() {
        let next = b[i + 1];
        let reachable = |x: f64| -> bool {
            match stages[i].u_interval(x, limits) {
                None => false,
                Some((u_lo, u_hi)) => {
                    x + 2.0 * ds * u_lo <= next + 1e-15 && x + 2.0 * ds * u_hi >= -1e-15
                }
            }
        };
        let cap = stages[i].x_max;
        b[i] = if reachable(cap) {
            cap
        } else if !reachable(0.0) {
            return Err(ToppError::EmptyControlSet { stage: i });
        } else {
            let (mut good, mut bad) = (0.0, cap);
            for _ in 0..60 {
                let mid = 0.5 * (good + bad);
                if reachable(mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            good
        };
    }

    // Forward pass: greedily push the speed to the backward envelope.
    let mut x = vec![0.0_f64; n];
    for i in 0..n - 1 {
        let (_, u_hi) = stages[i]
            .u_interval(x[i], limits)
            .ok_or(ToppError::EmptyControlSet { stage: i })?;
        x[i + 1] = (x[i] + 2.0 * ds * u_hi).min(b[i + 1]).max(0.0);
    }

    let mut times = Vec::with_capacity(n);
    times.push(0.0);
    for i in 0..n - 1 {
        let denom = x[i].sqrt() + x[i + 1].sqrt();
        if denom <= 0.0 {
            return Err(ToppError::ZeroSpeedStage { stage: i });
        }
        // Exact cell time for x linear in s (constant u).
        times.push(times[i] + 2.0 * ds / denom);
    }
    let duration = *times.last().unwrap();
    Ok(ToppResult {
        arcs,
        x,
        times,
        duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::{CubicPath, Parameterization};

    fn line(len: f64) -> CubicPath {
        CubicPath::build(&[vec![0.0], vec![len]], Parameterization::Chord).unwrap()
    }

    fn unit_limits() -> JointLimits {
        JointLimits {
            pos_min: vec![-100.0],
            pos_max: vec![100.0],
            vel_max: vec![1.0],
            acc_max: vec![1.0],
            jerk_max: vec![1e9],
        }
    }

    #[test]
    fn triangle_profile_duration() {
        // Length 1, v_max = a_max = 1: accelerate half way, brake half way,
        // peak speed exactly 1: duration 2 s.
        let r = min_time_parameterize(&line(1.0), &unit_limits(), 2000).unwrap();
        assert!((r.duration - 2.0).abs() < 2e-3, "duration {}", r.duration);
    }

    #[test]
    fn trapezoid_profile_duration() {
        // Length 4: 1 s ramp-up, 3 s cruise at v = 1, 1 s ramp-down.
        let r = min_time_parameterize(&line(4.0), &unit_limits(), 2000).unwrap();
        assert!((r.duration - 5.0).abs() < 2e-3, "duration {}", r.duration);
        // Cruise speed saturates the velocity limit.
        let mid = r.x[r.x.len() / 2];
        assert!((mid - 1.0).abs() < 1e-6, "mid x {mid}");
    }

    #[test]
    fn starts_and_ends_at_rest() {
        let r = min_time_parameterize(&line(2.0), &unit_limits(), 500).unwrap();
        assert_eq!(r.x[0], 0.0);
        assert_eq!(*r.x.last().unwrap(), 0.0);
        assert!(r.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn speed_envelope_is_feasible_everywhere() {
        // A curved two-joint path: check the discrete profile against the
        // velocity and acceleration boxes at every stage.
        let knots: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let t = i as f64 / 8.0;
                vec![t * 2.0, (std::f64::consts::PI * t).sin()]
            })
            .collect();
        let path = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let limits = JointLimits {
            pos_min: vec![-10.0; 2],
            pos_max: vec![10.0; 2],
            vel_max: vec![1.5, 1.0],
            acc_max: vec![3.0, 2.0],
            jerk_max: vec![1e9; 2],
        };
        let grid = 800;
        let r = min_time_parameterize(&path, &limits, grid).unwrap();
        let ds = path.total_length() / grid as f64;
        for i in 0..r.x.len() {
            let (_, dq, ddq) = path.arc_derivatives(r.arcs[i]);
            for j in 0..2 {
                let v = dq[j] * r.x[i].sqrt();
                assert!(v.abs() <= limits.vel_max[j] + 1e-6, "stage {i} joint {j} v {v}");
            }
            if i + 1 < r.x.len() {
                let u = (r.x[i + 1] - r.x[i]) / (2.0 * ds);
                for j in 0..2 {
                    let a = ddq[j] * r.x[i] + dq[j] * u;
                    assert!(
                        a.abs() <= limits.acc_max[j] + 1e-6,
                        "stage {i} joint {j} a {a}"
                    );
                }
            }
        }
        // Monotone non-decreasing times and positive duration.
        assert!(r.duration > 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let path = line(1.0);
        let mut limits = unit_limits();
        limits.pos_min.push(-1.0);
        assert!(matches!(
            min_time_parameterize(&path, &limits, 100),
            Err(ToppError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            min_time_parameterize(&path, &unit_limits(), 1),
            Err(ToppError::BadGrid(1))
        ));
    }
}
