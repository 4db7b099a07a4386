//! Joint-space reference paths: cubic splines through knots, arc-length
//! reparameterization, curvature, and the two knot-sampling strategies.
//!
//! A path is a purely geometric object. It carries no timing; traversal speed
//! is decided online by the policy acting through the safe action space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How knot parameter values are assigned before fitting the spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Cumulative Euclidean distance between consecutive knots.
    Chord,
    /// Knot index (0, 1, 2, ...).
    Uniform,
}

/// Strategy for placing knots along an existing path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStrategy {
    /// Equal arc length between consecutive knots.
    Distance,
    /// Equal integrated curvature between consecutive knots; falls back to
    /// `Distance` on straight paths.
    Curvature,
}

#[derive(Debug, Error)]
pub enum SplineError {
    #[error("need at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("consecutive knots {0} and {1} coincide (zero chord length)")]
    DuplicateKnots(usize, usize),
    #[error("sample count must be at least 2, got {0}")]
    BadSampleCount(usize),
}

/// Nodes and weights of 10-point Gauss–Legendre quadrature on [-1, 1].
const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Grid resolution of the integrated-curvature table used by curvature-based
/// knot sampling.
const CURVATURE_GRID: usize = 1000;

/// Total integrated curvature below this counts as a straight path.
const STRAIGHT_EPS: f64 = 1e-9;

/// One cubic segment of one joint, coefficients in the local parameter
/// t = u - u_i: q(t) = c0 + c1 t + c2 t^2 + c3 t^3.
type SegCoef = [f64; 4];

/// A C2 cubic spline through joint-space knots with natural end conditions
/// (zero second derivative at both ends), reparameterized by arc length.
///
/// Arc length here is the cumulative Euclidean length of the joint-position
/// curve, in radians. All public entry points taking an arc length clamp it
/// to `[0, total_length]`.
#[derive(Debug, Clone)]
pub struct CubicPath {
    dim: usize,
    knots: Vec<Vec<f64>>,
    knot_params: Vec<f64>,
    /// Per segment, per joint cubic coefficients.
    coeffs: Vec<Vec<SegCoef>>,
    /// Breakpoints of the arc-length table; includes every knot parameter.
    arc_u: Vec<f64>,
    /// Cumulative arc length at each `arc_u` entry.
    arc_s: Vec<f64>,
    /// Arc length at each knot.
    knot_arcs: Vec<f64>,
    total_len: f64,
}

/// The sliding window of reference knots exposed to the agent.
///
/// `l_state` is the remaining reference arc visible in the window, measured
/// from the current path position; `offset` is the arc from the first window
/// knot back to that position. Near the path end the final knot repeats to
/// keep the window length fixed, and `l_state` decays to zero — that decay is
/// the slow-down signal.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotWindow {
    pub knots: Vec<Vec<f64>>,
    pub l_state: f64,
    pub offset: f64,
}

impl CubicPath {
    /// Fits a natural cubic spline through `knots` and builds the arc-length
    /// table by adaptive Gauss–Legendre quadrature (relative error <= 1e-8).
    pub fn build(knots: &[Vec<f64>], param: Parameterization) -> Result<Self, SplineError> {
        if knots.len() < 2 {
            return Err(SplineError::TooFewKnots(knots.len()));
        }
        let dim = knots[0].len();
        for (i, k) in knots.iter().enumerate() {
            if k.len() != dim {
                return Err(SplineError::DimensionMismatch {
                    index: i,
                    got: k.len(),
                    expected: dim,
                });
            }
        }

        let mut params = Vec::with_capacity(knots.len());
        params.push(0.0);
        for i in 1..knots.len() {
            let du = match param {
                Parameterization::Chord => {
                    let d = dist(&knots[i - 1], &knots[i]);
                    if d < 1e-12 {
                        return Err(SplineError::DuplicateKnots(i - 1, i));
                    }
                    d
                }
                Parameterization::Uniform => 1.0,
            };
            params.push(params[i - 1] + du);
        }

        let coeffs = fit_natural(knots, &params, dim);
        let mut path = CubicPath {
            dim,
            knots: knots.to_vec(),
            knot_params: params,
            coeffs,
            arc_u: Vec::new(),
            arc_s: Vec::new(),
            knot_arcs: Vec::new(),
            total_len: 0.0,
        };
        path.build_arc_table();
        Ok(path)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knot_count(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[Vec<f64>] {
        &self.knots
    }

    /// Arc length at each knot, in knot order.
    pub fn knot_arcs(&self) -> &[f64] {
        &self.knot_arcs
    }

    pub fn total_length(&self) -> f64 {
        self.total_len
    }

    /// Joint position at arc length `s` (clamped to the path).
    pub fn eval(&self, s: f64) -> Vec<f64> {
        let u = self.param_of_arc(s);
        self.eval_param(u).0
    }

    /// First and second derivatives of the joint position with respect to
    /// arc length, at arc length `s`.
    pub fn arc_derivatives(&self, s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let u = self.param_of_arc(s);
        let (q, d1, d2) = self.eval_param(u);
        let sp2 = norm_sq(&d1);
        let sp = sp2.sqrt();
        if sp < 1e-12 {
            // Degenerate tangent; report a straight continuation.
            return (q, vec![0.0; self.dim], vec![0.0; self.dim]);
        }
        let dq: Vec<f64> = d1.iter().map(|x| x / sp).collect();
        let dot12 = dot(&d1, &d2);
        let ddq: Vec<f64> = (0..self.dim)
            .map(|j| d2[j] / sp2 - d1[j] * dot12 / (sp2 * sp2))
            .collect();
        (q, dq, ddq)
    }

    /// Curvature at arc length `s`: the Euclidean norm of d²q/ds² over all
    /// joints. Equals 1/r on a circle of radius r.
    pub fn curvature(&self, s: f64) -> f64 {
        let (_, _, ddq) = self.arc_derivatives(s);
        norm_sq(&ddq).sqrt()
    }

    /// Places `n` knots on the path using `strategy`; endpoints are always
    /// included.
    pub fn sample_knots(
        &self,
        n: usize,
        strategy: SampleStrategy,
    ) -> Result<Vec<Vec<f64>>, SplineError> {
        Ok(self
            .sample_arcs(n, strategy)?
            .iter()
            .map(|&s| self.eval(s))
            .collect())
    }

    /// Arc positions backing [`CubicPath::sample_knots`].
    pub fn sample_arcs(&self, n: usize, strategy: SampleStrategy) -> Result<Vec<f64>, SplineError> {
        if n < 2 {
            return Err(SplineError::BadSampleCount(n));
        }
        let arcs = match strategy {
            SampleStrategy::Distance => (0..n)
                .map(|k| self.total_len * k as f64 / (n - 1) as f64)
                .collect(),
            SampleStrategy::Curvature => {
                let (grid_s, grid_k) = self.curvature_integral();
                let total_k = *grid_k.last().unwrap();
                if total_k < STRAIGHT_EPS {
                    return self.sample_arcs(n, SampleStrategy::Distance);
                }
                let mut arcs = Vec::with_capacity(n);
                arcs.push(0.0);
                for k in 1..n - 1 {
                    let target = total_k * k as f64 / (n - 1) as f64;
                    arcs.push(interp_inverse(&grid_s, &grid_k, target));
                }
                arcs.push(self.total_len);
                arcs
            }
        };
        Ok(arcs)
    }

    /// Cumulative integrated curvature K(s) on a fixed dense grid
    /// (trapezoidal rule).
    pub fn curvature_integral(&self) -> (Vec<f64>, Vec<f64>) {
        let g = CURVATURE_GRID;
        let mut grid_s = Vec::with_capacity(g);
        let mut kappa = Vec::with_capacity(g);
        for i in 0..g {
            let s = self.total_len * i as f64 / (g - 1) as f64;
            grid_s.push(s);
            kappa.push(self.curvature(s));
        }
        let mut cum = Vec::with_capacity(g);
        cum.push(0.0);
        for i in 1..g {
            let ds = grid_s[i] - grid_s[i - 1];
            cum.push(cum[i - 1] + 0.5 * (kappa[i - 1] + kappa[i]) * ds);
        }
        (grid_s, cum)
    }

    /// The `n`-knot observation window at the given progress.
    ///
    /// The window starts at the last knot whose arc length does not exceed
    /// `progress` (capped so at least one knot lies ahead); missing trailing
    /// knots repeat the final knot.
    pub fn knot_window(&self, progress: f64, n: usize) -> KnotWindow {
        let progress = progress.clamp(0.0, self.total_len);
        let m = self.knots.len();
        let mut j = match self
            .knot_arcs
            .binary_search_by(|a| a.partial_cmp(&progress).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        j = j.min(m - 2);
        let mut knots = Vec::with_capacity(n);
        let mut last_distinct = j;
        for k in 0..n {
            let idx = (j + k).min(m - 1);
            knots.push(self.knots[idx].clone());
            last_distinct = idx;
        }
        KnotWindow {
            knots,
            l_state: (self.knot_arcs[last_distinct] - progress).max(0.0),
            offset: progress - self.knot_arcs[j],
        }
    }

    /// Inverts the arc-length table: the spline parameter u with s(u) = s.
    pub fn param_of_arc(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_len);
        let i = match self
            .arc_s
            .binary_search_by(|a| a.partial_cmp(&s).unwrap())
        {
            Ok(i) => return self.arc_u[i],
            Err(i) => i.clamp(1, self.arc_u.len() - 1),
        };
        let base = self.arc_u[i - 1];
        let (mut lo, mut hi) = (base, self.arc_u[i]);
        let need = s - self.arc_s[i - 1];
        let tol = 1e-10 * self.total_len.max(1e-300);
        // Newton with bisection safeguard on g(u) = quad(base..u) - need.
        // The integral base stays fixed while the bracket shrinks.
        let mut u = base + (hi - base) * need / (self.arc_s[i] - self.arc_s[i - 1]).max(1e-300);
        for _ in 0..60 {
            let g = self.quad(base, u) - need;
            if g.abs() <= tol {
                return u;
            }
            if g > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let sp = self.speed(u);
            let step = if sp > 1e-12 { -g / sp } else { 0.0 };
            let next = u + step;
            u = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        u
    }

    /// Position and first/second parameter derivatives at parameter u.
    fn eval_param(&self, u: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (seg, t) = self.locate(u);
        let mut q = Vec::with_capacity(self.dim);
        let mut d1 = Vec::with_capacity(self.dim);
        let mut d2 = Vec::with_capacity(self.dim);
        for c in &self.coeffs[seg] {
            q.push(c[0] + t * (c[1] + t * (c[2] + t * c[3])));
            d1.push(c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]));
            d2.push(2.0 * c[2] + t * 6.0 * c[3]);
        }
        (q, d1, d2)
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let n = self.knot_params.len();
        let u = u.clamp(self.knot_params[0], self.knot_params[n - 1]);
        let seg = match self
            .knot_params
            .binary_search_by(|a| a.partial_cmp(&u).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        (seg, u - self.knot_params[seg])
    }

    /// |dq/du| at parameter u.
    fn speed(&self, u: f64) -> f64 {
        let (seg, t) = self.locate(u);
        let mut acc = 0.0;
        for c in &self.coeffs[seg] {
            let d = c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]);
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Gauss–Legendre 10 of |dq/du| over [a, b], assumed inside one table
    /// cell (the integrand is smooth there).
    fn quad(&self, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for i in 0..5 {
            acc += GL_W[i] * (self.speed(c - h * GL_X[i]) + self.speed(c + h * GL_X[i]));
        }
        acc * h
    }

    fn build_arc_table(&mut self) {
        let mut arc_u = vec![self.knot_params[0]];
        let mut arc_s = vec![0.0];
        let mut knot_arcs = vec![0.0];
        for seg in 0..self.coeffs.len() {
            let a = self.knot_params[seg];
            let b = self.knot_params[seg + 1];
            self.subdivide(a, b, self.quad(a, b), 0, &mut arc_u, &mut arc_s);
            knot_arcs.push(*arc_s.last().unwrap());
        }
        self.total_len = *arc_s.last().unwrap();
        self.arc_u = arc_u;
        self.arc_s = arc_s;
        self.knot_arcs = knot_arcs;
    }

    /// Adaptive refinement: accept an interval once halving changes its
    /// integral by less than a 1e-10 relative slice, which keeps the summed
    /// table well inside the 1e-8 relative contract.
    fn subdivide(
        &self,
        a: f64,
        b: f64,
        whole: f64,
        depth: usize,
        arc_u: &mut Vec<f64>,
        arc_s: &mut Vec<f64>,
    ) {
        let mid = 0.5 * (a + b);
        let left = self.quad(a, mid);
        let right = self.quad(mid, b);
        let refined = left + right;
        if depth >= 24 || (whole - refined).abs() <= 1e-10 * refined.abs() + 1e-15 {
            arc_u.push(mid);
            arc_s.push(arc_s.last().unwrap() + left);
            arc_u.push(b);
            arc_s.push(arc_s.last().unwrap() + right);
        } else {
            self.subdivide(a, mid, left, depth + 1, arc_u, arc_s);
            self.subdivide(mid, b, right, depth + 1, arc_u, arc_s);
        }
    }
}

/// Natural-spline fit: second derivatives from the tridiagonal system, then
/// per-segment power-basis coefficients.
fn fit_natural(knots: &[Vec<f64>], params: &[f64], dim: usize) -> Vec<Vec<SegCoef>> {
    let n = knots.len();
    let h: Vec<f64> = (0..n - 1).map(|i| params[i + 1] - params[i]).collect();
    let mut coeffs = vec![vec![[0.0; 4]; dim]; n - 1];

    for d in 0..dim {
        let y: Vec<f64> = knots.iter().map(|k| k[d]).collect();
        let m = solve_natural_m(&y, &h);
        for i in 0..n - 1 {
            let b = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
            coeffs[i][d] = [y[i], b, m[i] / 2.0, (m[i + 1] - m[i]) / (6.0 * h[i])];
        }
    }
    coeffs
}

/// Second derivatives M_i of the natural cubic spline (Thomas algorithm).
fn solve_natural_m(y: &[f64], h: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let rows = n - 2;
    let mut diag = vec![0.0; rows];
    let mut rhs = vec![0.0; rows];
    let mut upper = vec![0.0; rows];
    for i in 0..rows {
        diag[i] = 2.0 * (h[i] + h[i + 1]);
        upper[i] = h[i + 1];
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
    }
    for i in 1..rows {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[rows] = rhs[rows - 1] / diag[rows - 1];
    for i in (0..rows - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}

/// Inverse of a piecewise-linear non-decreasing table: smallest s with
/// table(s) >= target, linearly interpolated.
fn interp_inverse(xs: &[f64], ys: &[f64], target: f64) -> f64 {
    let i = ys.partition_point(|&y| y < target).clamp(1, ys.len() - 1);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if y1 - y0 < 1e-300 {
        return xs[i];
    }
    let t = (target - y0) / (y1 - y0);
    xs[i - 1] + t * (xs[i] - xs[i - 1])
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_knots(n: usize, r: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
                vec![r * th.cos(), r * th.sin()]
            })
            .collect()
    }

    /// Independent length oracle: dense polyline over the same spline.
    fn polyline_len(path: &CubicPath, segments: usize) -> f64 {
        let u0 = path.knot_params[0];
        let u1 = *path.knot_params.last().unwrap();
        let mut prev = path.eval_param(u0).0;
        let mut acc = 0.0;
        for i in 1..=segments {
            let u = u0 + (u1 - u0) * i as f64 / segments as f64;
            let p = path.eval_param(u).0;
            acc += dist(&prev, &p);
            prev = p;
        }
        acc
    }

    #[test]
    fn straight_two_knot_path_has_unit_length() {
        let p = CubicPath::build(&[vec![0.0], vec![1.0]], Parameterization::Chord).unwrap();
        assert!((p.total_length() - 1.0).abs() < 1e-12);
        assert!((p.eval(0.25)[0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn collinear_knots_stay_straight() {
        let p = CubicPath::build(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
            Parameterization::Chord,
        )
        .unwrap();
        assert!((p.total_length() - 2.0).abs() < 1e-8);
        assert!(p.curvature(1.0) < 1e-9);
    }

    #[test]
    fn circle_arc_length_matches_polyline_oracle() {
        let p = CubicPath::build(&circle_knots(16, 1.0), Parameterization::Chord).unwrap();
        let oracle = polyline_len(&p, 1_000_000);
        // Quadrature against the independent polyline measurement of the
        // same curve.
        assert!(
            (p.total_length() - oracle).abs() <= 1e-8 * oracle,
            "table {} vs polyline {}",
            p.total_length(),
            oracle
        );
        // Geometric fidelity to the ideal circle. The natural end condition
        // flattens the two end segments, costing ~2.8e-3 of arc; tolerance is
        // therefore relative to the circumference.
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!(
            (p.total_length() - two_pi).abs() <= 1e-3 * two_pi,
            "len {}",
            p.total_length()
        );
    }

    #[test]
    fn circle_quarter_point() {
        let p = CubicPath::build(&circle_knots(16, 1.0), Parameterization::Chord).unwrap();
        let q = p.eval(std::f64::consts::FRAC_PI_2);
        let d = dist(&q, &[0.0, 1.0]);
        // Same natural-end caveat as above: budget relative to path length.
        assert!(d <= 1e-3 * p.total_length(), "quarter point off by {d}");
    }

    #[test]
    fn dense_circle_curvature_matches_radius() {
        // 64 knots, radius 0.5 -> curvature 2, checked away from the ends.
        let p = CubicPath::build(&circle_knots(64, 0.5), Parameterization::Chord).unwrap();
        let l = p.total_length();
        for frac in [0.2, 0.35, 0.5, 0.65, 0.8] {
            let k = p.curvature(l * frac);
            assert!((k - 2.0).abs() < 0.1, "kappa {k} at {frac}");
        }
    }

    #[test]
    fn interpolation_hits_every_knot() {
        let knots = vec![
            vec![0.0, 0.0, 1.0],
            vec![0.4, -0.2, 0.9],
            vec![0.9, 0.3, 0.2],
            vec![1.5, 0.1, -0.4],
        ];
        let p = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        for (i, k) in knots.iter().enumerate() {
            let q = p.eval(p.knot_arcs()[i]);
            let err = q
                .iter()
                .zip(k)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-9, "knot {i} err {err}");
        }
    }

    #[test]
    fn eval_rejects_nothing_and_clamps() {
        let p = CubicPath::build(&[vec![0.0], vec![1.0]], Parameterization::Chord).unwrap();
        assert_eq!(p.eval(-5.0)[0], 0.0);
        assert!((p.eval(99.0)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            CubicPath::build(&[vec![0.0]], Parameterization::Chord),
            Err(SplineError::TooFewKnots(1))
        ));
        assert!(matches!(
            CubicPath::build(&[vec![0.0], vec![1.0, 2.0]], Parameterization::Chord),
            Err(SplineError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            CubicPath::build(
                &[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]],
                Parameterization::Chord
            ),
            Err(SplineError::DuplicateKnots(0, 1))
        ));
        // Uniform parameterization tolerates duplicates.
        assert!(CubicPath::build(
            &[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]],
            Parameterization::Uniform
        )
        .is_ok());
    }

    #[test]
    fn distance_sampling_is_even() {
        let p = CubicPath::build(&circle_knots(24, 1.0), Parameterization::Chord).unwrap();
        let arcs = p.sample_arcs(9, SampleStrategy::Distance).unwrap();
        let step = p.total_length() / 8.0;
        for (k, s) in arcs.iter().enumerate() {
            assert!((s - step * k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn curvature_sampling_equalizes_increments() {
        // Figure-eight: curvature concentrates near the crossing, so
        // curvature-based knots must bunch there.
        let knots: Vec<Vec<f64>> = (0..65)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                vec![t.sin(), t.sin() * t.cos()]
            })
            .collect();
        let p = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let arcs = p.sample_arcs(9, SampleStrategy::Curvature).unwrap();
        let (grid_s, grid_k) = p.curvature_integral();
        let kk: Vec<f64> = arcs
            .iter()
            .map(|&s| {
                let i = grid_s.partition_point(|&g| g < s).clamp(1, grid_s.len() - 1);
                let t = (s - grid_s[i - 1]) / (grid_s[i] - grid_s[i - 1]);
                grid_k[i - 1] + t * (grid_k[i] - grid_k[i - 1])
            })
            .collect();
        let incs: Vec<f64> = kk.windows(2).map(|w| w[1] - w[0]).collect();
        let (min, max) = incs
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        assert!(max / min <= 1.0 + 1e-3, "increment spread {}", max / min);
    }

    #[test]
    fn straight_path_curvature_sampling_falls_back() {
        let p = CubicPath::build(&[vec![0.0, 0.0], vec![1.0, 1.0]], Parameterization::Chord)
            .unwrap();
        let arcs = p.sample_arcs(5, SampleStrategy::Curvature).unwrap();
        let step = p.total_length() / 4.0;
        for (k, s) in arcs.iter().enumerate() {
            assert!((s - step * k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn window_at_start_and_end() {
        let knots: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.3]).collect();
        let p = CubicPath::build(&knots, Parameterization::Chord).unwrap();

        let w = p.knot_window(0.0, 5);
        assert_eq!(w.knots.len(), 5);
        assert_eq!(w.knots[0], knots[0]);
        assert_eq!(w.knots[4], knots[4]);
        assert_eq!(w.offset, 0.0);
        assert!((w.l_state - p.knot_arcs()[4]).abs() < 1e-12);

        let l = p.total_length();
        let w = p.knot_window(l, 5);
        assert_eq!(w.knots[0], knots[8]);
        for k in 1..5 {
            assert_eq!(w.knots[k], knots[9]);
        }
        assert!(w.l_state.abs() < 1e-12);
        assert!((w.offset - (l - p.knot_arcs()[8])).abs() < 1e-12);
    }

    #[test]
    fn window_midway_between_knots() {
        let knots: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.3]).collect();
        let p = CubicPath::build(&knots, Parameterization::Chord).unwrap();
        let progress = 0.5 * (p.knot_arcs()[2] + p.knot_arcs()[3]);
        let w = p.knot_window(progress, 5);
        assert_eq!(w.knots[0], knots[2]);
        assert!((w.offset - (progress - p.knot_arcs()[2])).abs() < 1e-12);
    }

    #[test]
    fn short_path_window_repeats_final_knot() {
        let p = CubicPath::build(&[vec![0.0], vec![1.0]], Parameterization::Chord).unwrap();
        let w = p.knot_window(0.2, 5);
        assert_eq!(w.knots[0], vec![0.0]);
        for k in 1..5 {
            assert_eq!(w.knots[k], vec![1.0]);
        }
        assert!((w.l_state - 0.8).abs() < 1e-9);
    }
}
