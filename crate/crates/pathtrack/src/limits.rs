//! The safe action space: per-joint acceleration intervals that keep
//! position, velocity, acceleration, and jerk inside their boxes for all
//! future time, plus exact integration and guaranteed braking.
//!
//! Actions are accelerations to reach at the end of the control interval;
//! acceleration ramps linearly in between, so jerk is piecewise constant and
//! velocity/position follow in closed form. Feasibility is recursive: every
//! acceleration admitted by [`feasible_range`] leaves the joint able to brake
//! to rest without ever leaving its boxes, so a safe action always exists at
//! the next step too.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack tolerated when validating that a state sits inside its limit boxes.
pub const STATE_SLACK: f64 = 1e-6;

/// Wall tolerance used when admitting candidate actions. Far below
/// STATE_SLACK, so accepted trajectories stay clear of the ingest check even
/// after riding a position boundary for many steps, and below the 1e-9
/// audit line so a trajectory sitting exactly on an admitted edge still
/// clears dense compliance checks with headroom.
const POS_TOL: f64 = 2e-10;

/// Velocity and acceleration magnitudes below this count as rest.
const REST_EPS: f64 = 1e-12;

/// Joint limit boxes. Velocity, acceleration and jerk boxes are symmetric
/// around zero; position boxes are general intervals.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JointLimits {
    pub pos_min: Vec<f64>,
    pub pos_max: Vec<f64>,
    pub vel_max: Vec<f64>,
    pub acc_max: Vec<f64>,
    pub jerk_max: Vec<f64>,
}

impl JointLimits {
    pub fn dof(&self) -> usize {
        self.pos_min.len()
    }

    pub fn validate(&self) -> Result<(), LimitError> {
        let n = self.pos_min.len();
        if [
            self.pos_max.len(),
            self.vel_max.len(),
            self.acc_max.len(),
            self.jerk_max.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(LimitError::MismatchedFields);
        }
        for j in 0..n {
            if !(self.pos_min[j] < self.pos_max[j]) {
                return Err(LimitError::BadField {
                    joint: j,
                    field: "pos_min/pos_max",
                });
            }
            for (field, v) in [
                ("vel_max", self.vel_max[j]),
                ("acc_max", self.acc_max[j]),
                ("jerk_max", self.jerk_max[j]),
            ] {
                if !(v > 0.0) {
                    return Err(LimitError::BadField { joint: j, field });
                }
            }
        }
        Ok(())
    }

    /// Bounds of one joint as a value struct.
    pub fn joint(&self, j: usize) -> JointBounds {
        JointBounds {
            p_min: self.pos_min[j],
            p_max: self.pos_max[j],
            v_max: self.vel_max[j],
            a_max: self.acc_max[j],
            j_max: self.jerk_max[j],
        }
    }
}

/// Scalar bounds of a single joint.
#[derive(Debug, Clone, Copy)]
pub struct JointBounds {
    pub p_min: f64,
    pub p_max: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub j_max: f64,
}

impl JointBounds {
    /// Mirror image: the bounds seen by the reflected state (-p, -v, -a).
    fn reflect(self) -> JointBounds {
        JointBounds {
            p_min: -self.p_max,
            p_max: -self.p_min,
            ..self
        }
    }
}

/// Position, velocity, and acceleration of every joint at a decision
/// boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
    pub acc: Vec<f64>,
}

impl KinematicState {
    pub fn at_rest(pos: Vec<f64>) -> KinematicState {
        let n = pos.len();
        KinematicState {
            pos,
            vel: vec![0.0; n],
            acc: vec![0.0; n],
        }
    }

    pub fn dof(&self) -> usize {
        self.pos.len()
    }

    /// True when every joint sits inside its boxes with `STATE_SLACK` slack.
    pub fn within(&self, limits: &JointLimits) -> bool {
        (0..self.dof()).all(|j| {
            let b = limits.joint(j);
            self.pos[j] >= b.p_min - STATE_SLACK
                && self.pos[j] <= b.p_max + STATE_SLACK
                && self.vel[j].abs() <= b.v_max + STATE_SLACK
                && self.acc[j].abs() <= b.a_max + STATE_SLACK
        })
    }
}

/// Per-joint closed acceleration intervals, each guaranteed recursively
/// feasible. `lo[j] <= hi[j]` always holds, and every interval lies inside
/// the acceleration box and the jerk window around the current acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelRange {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AccelRange {
    /// Maps a normalized action in [-1, 1] (clamped on ingest) onto the
    /// interval: -1 selects `lo`, +1 selects `hi`.
    pub fn map_action(&self, action: &[f64]) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(action)
            .map(|((&lo, &hi), &a)| {
                let a = a.clamp(-1.0, 1.0);
                lo + 0.5 * (1.0 + a) * (hi - lo)
            })
            .collect()
    }
}

/// One control interval of one decision step: the closed-form state evolution
/// from `start` under a linear acceleration ramp to `acc_end` over `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: KinematicState,
    pub acc_end: Vec<f64>,
    pub dt: f64,
}

impl Segment {
    /// State at time `tau` in `[0, dt]`, by exact integration of the ramp.
    pub fn state_at(&self, tau: f64) -> KinematicState {
        let tau = tau.clamp(0.0, self.dt);
        let n = self.start.dof();
        let mut pos = Vec::with_capacity(n);
        let mut vel = Vec::with_capacity(n);
        let mut acc = Vec::with_capacity(n);
        for j in 0..n {
            let (p, v, a) = (self.start.pos[j], self.start.vel[j], self.start.acc[j]);
            let slope = (self.acc_end[j] - a) / self.dt;
            acc.push(a + slope * tau);
            vel.push(v + a * tau + 0.5 * slope * tau * tau);
            pos.push(p + v * tau + 0.5 * a * tau * tau + slope * tau * tau * tau / 6.0);
        }
        KinematicState { pos, vel, acc }
    }

    pub fn end_state(&self) -> KinematicState {
        self.state_at(self.dt)
    }

    /// States at `substeps` equal intervals, endpoints included
    /// (`substeps + 1` states).
    pub fn sample(&self, substeps: usize) -> Vec<KinematicState> {
        (0..=substeps)
            .map(|k| self.state_at(self.dt * k as f64 / substeps as f64))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("limit vectors have mismatched lengths")]
    MismatchedFields,
    #[error("joint {joint}: {field} is empty or non-positive")]
    BadField { joint: usize, field: &'static str },
    #[error("state dimension {state} does not match limits dimension {limits}")]
    DimensionMismatch { state: usize, limits: usize },
    #[error("joint {joint} {field} = {value} outside limits beyond slack")]
    StateOutsideLimits {
        joint: usize,
        field: &'static str,
        value: f64,
    },
    #[error("dt must be positive and finite, got {0}")]
    BadDt(f64),
}

/// Computes the per-joint safe acceleration interval at `state`.
///
/// For every `a_end` in the returned interval of joint j:
///  - the jerk over the ramp obeys |a_end - a| <= jerk_max * dt,
///  - `a_end` lies in the acceleration box,
///  - velocity stays inside its box during the interval and a subsequent
///    maximal-jerk ramp of the acceleration back to zero cannot push it out,
///  - position stays inside its box during the interval, and from the end
///    state a braking profile to full rest exists that also stays inside.
///
/// A state already at a limit boundary still gets a nonempty interval (the
/// braking direction); `Err` is reserved for states beyond the validation
/// slack or malformed inputs.
pub fn feasible_range(
    state: &KinematicState,
    limits: &JointLimits,
    dt: f64,
) -> Result<AccelRange, LimitError> {
    validate_inputs(state, limits, dt)?;
    let n = state.dof();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for j in 0..n {
        let b = limits.joint(j);
        let (l, h) = joint_range(state.pos[j], state.vel[j], state.acc[j], b, dt);
        lo.push(l);
        hi.push(h);
    }
    Ok(AccelRange { lo, hi })
}

fn validate_inputs(
    state: &KinematicState,
    limits: &JointLimits,
    dt: f64,
) -> Result<(), LimitError> {
    limits.validate()?;
    if state.dof() != limits.dof()
        || state.vel.len() != state.dof()
        || state.acc.len() != state.dof()
    {
        return Err(LimitError::DimensionMismatch {
            state: state.dof(),
            limits: limits.dof(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(LimitError::BadDt(dt));
    }
    for j in 0..state.dof() {
        let b = limits.joint(j);
        let checks: [(&'static str, f64, f64, f64); 3] = [
            ("pos", state.pos[j], b.p_min, b.p_max),
            ("vel", state.vel[j], -b.v_max, b.v_max),
            ("acc", state.acc[j], -b.a_max, b.a_max),
        ];
        for (field, value, lo, hi) in checks {
            if !(value >= lo - STATE_SLACK && value <= hi + STATE_SLACK) {
                return Err(LimitError::StateOutsideLimits {
                    joint: j,
                    field,
                    value,
                });
            }
        }
    }
    Ok(())
}

/// Velocity-safe upper bound for the end acceleration of one joint, ignoring
/// position. Closed form.
///
/// Mechanism A (end of interval): the end velocity plus the worst-case
/// increment while ramping a positive end acceleration back to zero,
/// v_end + max(a_end, 0)^2 / (2 jerk_max), must not exceed v_max.
/// Mechanism B (interior peak): when the ramp crosses zero from above
/// (a > 0 > a_end) the velocity peaks inside the interval at
/// v + a^2 dt / (2 (a - a_end)); that peak must not exceed v_max. B can bind
/// only when A already forces a_end < 0, so the admitted set stays an
/// interval.
fn vel_hi(v: f64, a: f64, b: JointBounds, dt: f64) -> f64 {
    let v_end0 = v + 0.5 * a * dt;
    let bound_a = if v_end0 > b.v_max {
        // The binding a_end is negative, so no ramp-down overshoot term:
        // v + (a + a_end) dt / 2 <= v_max.
        2.0 * (b.v_max - v) / dt - a
    } else {
        // Positive root of a_end^2 / (2 jerk) + a_end dt / 2 = v_max - v_end0.
        b.j_max
            * (-0.5 * dt
                + (0.25 * dt * dt + 2.0 * (b.v_max - v_end0) / b.j_max).sqrt())
    };
    if a > 0.0 && bound_a < 0.0 {
        let margin = b.v_max - v;
        if margin <= 0.0 {
            f64::NEG_INFINITY
        } else {
            bound_a.min(a - a * a * dt / (2.0 * margin))
        }
    } else {
        bound_a
    }
}

/// Velocity-safe window for one joint; the lower side comes from the upper
/// side of the reflected state.
fn vel_window(v: f64, a: f64, b: JointBounds, dt: f64) -> (f64, f64) {
    let hi = vel_hi(v, a, b, dt);
    let lo = -vel_hi(-v, -a, b.reflect(), dt);
    (lo, hi)
}

/// Exact position extremes over one ramp interval: endpoints plus interior
/// roots of v(tau) = 0.
fn interval_pos_range(p: f64, v: f64, a: f64, a_end: f64, dt: f64) -> (f64, f64) {
    let slope = (a_end - a) / dt;
    let pos_at = |tau: f64| p + v * tau + 0.5 * a * tau * tau + slope * tau * tau * tau / 6.0;
    let p_end = pos_at(dt);
    let mut lo = p.min(p_end);
    let mut hi = p.max(p_end);
    // v(tau) = v + a tau + slope tau^2 / 2.
    if slope.abs() < 1e-300 {
        if a != 0.0 {
            let tau = -v / a;
            if tau > 0.0 && tau < dt {
                let q = pos_at(tau);
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
    } else {
        let disc = a * a - 2.0 * slope * v;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for tau in [(-a + sq) / slope, (-a - sq) / slope] {
                if tau > 0.0 && tau < dt {
                    let q = pos_at(tau);
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
        }
    }
    (lo, hi)
}

/// Velocity extremes over one ramp interval: endpoints plus the interior
/// stationary point where the acceleration crosses zero.
fn interval_vel_range(v: f64, a: f64, a_end: f64, dt: f64) -> (f64, f64) {
    let v_end = v + 0.5 * (a + a_end) * dt;
    let mut lo = v.min(v_end);
    let mut hi = v.max(v_end);
    if (a > 0.0 && a_end < 0.0) || (a < 0.0 && a_end > 0.0) {
        let tau = a * dt / (a - a_end);
        let slope = (a_end - a) / dt;
        let v_peak = v + a * tau + 0.5 * slope * tau * tau;
        lo = lo.min(v_peak);
        hi = hi.max(v_peak);
    }
    (lo, hi)
}

/// Scalar state of one joint during braking.
#[derive(Debug, Clone, Copy)]
struct ScalarState {
    p: f64,
    v: f64,
    a: f64,
}

impl ScalarState {
    fn step(self, a_end: f64, dt: f64) -> ScalarState {
        ScalarState {
            p: self.p + self.v * dt + (2.0 * self.a + a_end) * dt * dt / 6.0,
            v: self.v + 0.5 * (self.a + a_end) * dt,
            a: a_end,
        }
    }

    fn at_rest(self) -> bool {
        self.v.abs() <= REST_EPS && self.a.abs() <= REST_EPS
    }
}

/// Two-step exact landing: end accelerations (x, 0) that reach v = 0, a = 0
/// after two intervals, when jerk, acceleration, and velocity boxes admit it.
fn two_step_landing(s: ScalarState, b: JointBounds, dt: f64) -> Option<f64> {
    // v after both steps: v + (a + x) dt/2 + (x + 0) dt/2 = 0.
    let x = -s.v / dt - 0.5 * s.a;
    if (x - s.a).abs() > b.j_max * dt + 1e-12
        || x.abs() > b.j_max * dt + 1e-12
        || x.abs() > b.a_max + 1e-12
    {
        return None;
    }
    let v_mid = s.v + 0.5 * (s.a + x) * dt;
    let inside = |v0: f64, a0: f64, a1: f64| {
        let (lo, hi) = interval_vel_range(v0, a0, a1, dt);
        lo >= -b.v_max - STATE_SLACK && hi <= b.v_max + STATE_SLACK
    };
    if inside(s.v, s.a, x) && inside(v_mid, x, 0.0) {
        Some(x)
    } else {
        None
    }
}

/// One greedy brake step: the end acceleration that pushes the velocity
/// toward zero as fast as jerk and acceleration boxes allow while keeping the
/// certificate |v_end| >= a_end^2 / (2 jerk_max) on the decelerating side, so
/// a later ramp of the acceleration back to zero cannot drive the velocity
/// through zero and away again.
fn brake_step(s: ScalarState, b: JointBounds, dt: f64) -> f64 {
    if (s.v + 0.5 * s.a * dt).abs() <= REST_EPS && s.a.abs() <= b.j_max * dt {
        return 0.0;
    }
    let dir = if s.v.abs() > REST_EPS {
        s.v.signum()
    } else {
        s.a.signum()
    };
    if dir > 0.0 {
        // Lower root of v + (a + a_end) dt/2 = a_end^2 / (2 jerk_max).
        let disc = 0.25 * dt * dt + (2.0 * s.v + s.a * dt) / b.j_max;
        if disc < 0.0 {
            // No end acceleration keeps the certificate: the velocity is
            // about to plunge through zero. Ramp the acceleration up as hard
            // as the jerk box allows to keep the overshoot shallow.
            return (s.a + b.j_max * dt).min(b.a_max);
        }
        let cert_floor = b.j_max * (0.5 * dt - disc.sqrt());
        (s.a - b.j_max * dt)
            .max(-b.a_max)
            .max(cert_floor)
            .min(s.a + b.j_max * dt)
            .min(b.a_max)
    } else {
        let disc = 0.25 * dt * dt + (-2.0 * s.v - s.a * dt) / b.j_max;
        if disc < 0.0 {
            return (s.a - b.j_max * dt).max(-b.a_max);
        }
        let cert_cap = -b.j_max * (0.5 * dt - disc.sqrt());
        (s.a + b.j_max * dt)
            .min(b.a_max)
            .min(cert_cap)
            .max(s.a - b.j_max * dt)
            .max(-b.a_max)
    }
}

/// Next end acceleration of the deterministic brake plan for one joint.
fn brake_action(s: ScalarState, b: JointBounds, dt: f64) -> f64 {
    match two_step_landing(s, b, dt) {
        Some(x) => x,
        None => brake_step(s, b, dt),
    }
}

/// Step cap of the brake plan for one joint's bounds.
fn brake_cap(b: JointBounds, dt: f64) -> usize {
    (2.0 * b.v_max / (b.a_max * dt)).ceil() as usize
        + (2.0 * b.a_max / (b.j_max * dt)).ceil() as usize
        + 2
}

/// Plans a braking trajectory from `state` to full rest.
///
/// Deterministic and per-joint independent: each joint runs its own plan and
/// holds zero end acceleration once at rest, so the segment count is the
/// maximum over joints, capped at
/// ceil(2 v_max / (a_max dt)) + ceil(2 a_max / (jerk_max dt)) + 2.
/// The returned segments chain: each segment's end state is the next one's
/// start. `substeps` is the sampling resolution of the debug-mode audit that
/// rechecks the plan against the velocity, acceleration, and jerk boxes.
pub fn brake_to_rest(
    state: &KinematicState,
    limits: &JointLimits,
    dt: f64,
    substeps: usize,
) -> Result<Vec<Segment>, LimitError> {
    validate_inputs(state, limits, dt)?;
    let n = state.dof();
    let mut plans: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let b = limits.joint(j);
        let mut s = ScalarState {
            p: state.pos[j],
            v: state.vel[j],
            a: state.acc[j],
        };
        let mut plan = Vec::new();
        for _ in 0..brake_cap(b, dt) {
            if s.at_rest() {
                break;
            }
            let a_next = brake_action(s, b, dt);
            s = s.step(a_next, dt);
            plan.push(a_next);
        }
        plans.push(plan);
    }

    let steps = plans.iter().map(Vec::len).max().unwrap_or(0);
    let mut segments = Vec::with_capacity(steps);
    let mut current = state.clone();
    for k in 0..steps {
        let acc_end: Vec<f64> = (0..n)
            .map(|j| plans[j].get(k).copied().unwrap_or(0.0))
            .collect();
        let seg = Segment {
            start: current,
            acc_end,
            dt,
        };
        current = seg.end_state();
        segments.push(seg);
    }

    #[cfg(debug_assertions)]
    {
        // A start state may carry acceleration pointing away from rest; the
        // finite jerk then forces a transient velocity peak of up to
        // a^2 / (2 jerk_max) plus one step of acceleration drift beyond the
        // start speed, so the audit bounds speed by that envelope.
        let v_cap: Vec<f64> = (0..n)
            .map(|j| {
                let b = limits.joint(j);
                let peak =
                    state.vel[j].abs() + state.acc[j] * state.acc[j] / (2.0 * b.j_max)
                        + b.a_max * dt;
                b.v_max.max(peak) + 1e-6
            })
            .collect();
        for seg in &segments {
            for j in 0..n {
                let b = limits.joint(j);
                debug_assert!((seg.acc_end[j] - seg.start.acc[j]).abs() <= b.j_max * dt + 1e-9);
            }
            for sub in seg.sample(substeps.max(1)) {
                for j in 0..n {
                    let b = limits.joint(j);
                    debug_assert!(sub.vel[j].abs() <= v_cap[j]);
                    debug_assert!(sub.acc[j].abs() <= b.a_max + 1e-6);
                }
            }
        }
    }
    #[cfg(not(debug_assertions))]
    let _ = substeps;

    Ok(segments)
}

/// End state after running `segments` in order; `state` itself when empty.
pub fn end_of(segments: &[Segment], state: &KinematicState) -> KinematicState {
    segments
        .last()
        .map(Segment::end_state)
        .unwrap_or_else(|| state.clone())
}

/// One joint's full feasible interval, combining the jerk, acceleration,
/// velocity, and position mechanisms.
fn joint_range(p: f64, v: f64, a: f64, b: JointBounds, dt: f64) -> (f64, f64) {
    let (vel_lo, vel_hi_) = vel_window(v, a, b, dt);
    let lo = (a - b.j_max * dt).max(-b.a_max).max(vel_lo);
    let hi = (a + b.j_max * dt).min(b.a_max).min(vel_hi_);

    let s = ScalarState { p, v, a };
    let a_brk = if s.at_rest() { 0.0 } else { brake_action(s, b, dt) };

    if lo > hi {
        // The velocity window collapsed (state at or beyond a boundary by
        // slack dust): fall back to the braking action alone.
        return (a_brk, a_brk);
    }
    // The braking action obeys all three boxes by construction; clamping
    // absorbs floating-point dust without widening the interval.
    let a_brk = a_brk.clamp(lo, hi);

    let admissible = |a_end: f64| -> bool {
        let (plo, phi) = interval_pos_range(p, v, a, a_end, dt);
        if plo < b.p_min - POS_TOL || phi > b.p_max + POS_TOL {
            return false;
        }
        let v_end = v + 0.5 * (a + a_end) * dt;
        let p_end = p + v * dt + (2.0 * a + a_end) * dt * dt / 6.0;
        brake_clears(p_end, v_end, a_end, b, dt)
    };

    // Sufficient condition that no braking simulation is needed: even a
    // coarse over-estimate of the stopping sweep keeps every candidate away
    // from both position walls.
    let sweep_bound = |a_end: f64| -> f64 {
        let v_end = v + 0.5 * (a + a_end) * dt;
        let v_reach = v_end.abs() + a_end * a_end / (2.0 * b.j_max) + b.a_max * dt;
        let t_stop = v_reach / b.a_max + 2.0 * b.a_max / b.j_max + 2.0 * dt;
        v_reach * t_stop
    };
    let sweep = sweep_bound(lo).max(sweep_bound(hi));
    let (plo_l, phi_l) = interval_pos_range(p, v, a, lo, dt);
    let (plo_h, phi_h) = interval_pos_range(p, v, a, hi, dt);
    if plo_l.min(plo_h) - sweep >= b.p_min + STATE_SLACK
        && phi_l.max(phi_h) + sweep <= b.p_max - STATE_SLACK
    {
        return (lo, hi);
    }

    if !admissible(a_brk) {
        // Doomed state; not reachable through this module's own intervals.
        // Keep the braking action so the caller still gets a deterministic
        // reply.
        return (a_brk, a_brk);
    }
    // The brake-based admissible set is close to an interval around the
    // braking action but not exactly one, so scan a fixed grid outward from
    // the braking action on each side and keep the contiguous admissible
    // run, refining the first failing gap by bisection.
    let scan = |from: f64, to: f64| -> f64 {
        const PROBES: usize = 16;
        let mut good = from;
        for i in 1..=PROBES {
            let t = from + (to - from) * (i as f64 / PROBES as f64);
            if admissible(t) {
                good = t;
            } else {
                return bisect_edge(good, t, &admissible);
            }
        }
        good
    };
    let hi = scan(a_brk, hi);
    let lo = scan(a_brk, lo);
    (lo.min(hi), hi.max(lo))
}

/// Furthest admissible point on the segment from `good` toward `bad`
/// (60 bisections pin the boundary well below any audit tolerance).
fn bisect_edge(good: f64, bad: f64, admissible: &dyn Fn(f64) -> bool) -> f64 {
    let mut good = good;
    let mut bad = bad;
    for _ in 0..60 {
        let mid = 0.5 * (good + bad);
        if admissible(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Whether the deterministic brake plan from (p, v, a) keeps the position
/// inside its box the whole way to rest.
fn brake_clears(p: f64, v: f64, a: f64, b: JointBounds, dt: f64) -> bool {
    let mut s = ScalarState { p, v, a };
    if s.p < b.p_min - POS_TOL || s.p > b.p_max + POS_TOL {
        return false;
    }
    for _ in 0..brake_cap(b, dt) {
        if s.at_rest() {
            return true;
        }
        let a_next = brake_action(s, b, dt);
        let (plo, phi) = interval_pos_range(s.p, s.v, s.a, a_next, dt);
        if plo < b.p_min - POS_TOL || phi > b.p_max + POS_TOL {
            return false;
        }
        s = s.step(a_next, dt);
    }
    s.v.abs() <= 1e-6 && s.a.abs() <= 1e-6
}
