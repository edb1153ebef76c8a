//! Piecewise degree-7 minimum-snap trajectories.
//!
//! Each segment stores coefficients in its own normalized time
//! `tau = (t - t_start) / T`, so `p(t) = sum_k c_k tau^k` and the n-th time
//! derivative carries a `T^-n` factor. Per axis, the coefficients minimize
//! `sum_s integral (d^4 p / dt^4)^2 dt` subject to waypoint positions,
//! continuity of velocity, acceleration and jerk at interior junctions, and
//! zero velocity and acceleration at both ends. The equality-constrained QP
//! is solved through its KKT system.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::{GeometricPath, OccupancyGrid};
use crate::scenario::DynamicsLimits;

pub const DEGREE: usize = 7;
pub const NCOEF: usize = DEGREE + 1;
pub const TIME_SAFETY_FACTOR: f64 = 1.2;
pub const MIN_SEGMENT_DURATION: f64 = 0.1;
pub const MAX_RETIME_ROUNDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSequence {
    pub points: Vec<Vec3>,
    /// Reserved dwell flags; goals are currently pass-through.
    pub hold: Vec<bool>,
}

impl WaypointSequence {
    pub fn new(points: Vec<Vec3>) -> Self {
        let hold = vec![false; points.len()];
        Self { points, hold }
    }

    pub fn num_segments(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    /// Per-axis coefficients in normalized time, lowest power first.
    pub coeffs: [[f64; NCOEF]; 3],
}

impl Segment {
    /// n-th time derivative at normalized time `tau`.
    pub fn derivative(&self, tau: f64, n: usize) -> Vec3 {
        let scale = self.duration.powi(-(n as i32));
        let mut out = [0.0; 3];
        for (axis, c) in self.coeffs.iter().enumerate() {
            out[axis] = poly_derivative(c, tau, n) * scale;
        }
        Vec3::from(out)
    }

    /// Snap cost of this segment summed over axes.
    pub fn snap_cost(&self) -> f64 {
        let q = snap_gram();
        let mut total = 0.0;
        for c in &self.coeffs {
            for k in 0..NCOEF {
                for l in 0..NCOEF {
                    total += c[k] * q[k][l] * c[l];
                }
            }
        }
        total * self.duration.powi(-7)
    }
}

/// `d^n/dtau^n sum_k c_k tau^k` at `tau`.
pub fn poly_derivative(c: &[f64; NCOEF], tau: f64, n: usize) -> f64 {
    let mut acc = 0.0;
    for k in (n..NCOEF).rev() {
        acc = acc * tau + c[k] * falling(k, n);
    }
    acc
}

/// `k! / (k - n)!`.
fn falling(k: usize, n: usize) -> f64 {
    ((k + 1 - n)..=k).map(|x| x as f64).product()
}

/// Gram matrix of the fourth derivative on `[0, 1]`:
/// `Q[k][l] = integral_0^1 (d^4 tau^k)(d^4 tau^l) dtau`.
pub fn snap_gram() -> [[f64; NCOEF]; NCOEF] {
    let mut q = [[0.0; NCOEF]; NCOEF];
    for k in 4..NCOEF {
        for l in 4..NCOEF {
            q[k][l] = falling(k, 4) * falling(l, 4) / (k + l - 7) as f64;
        }
    }
    q
}

/// Time-parameterized trajectory. Before `t0` the robot holds its first
/// position; after the last segment it holds the final position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTrajectory {
    pub t0: f64,
    pub segments: Vec<Segment>,
    /// Position used when there are no segments (a robot that never moves).
    pub rest: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl PiecewiseTrajectory {
    pub fn stationary(p: Vec3) -> Self {
        Self { t0: 0.0, segments: Vec::new(), rest: p }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn t_final(&self) -> f64 {
        self.t0 + self.duration()
    }

    /// Start times of each segment on the mission clock, plus `t_final`.
    pub fn junction_times(&self) -> Vec<f64> {
        let mut t = self.t0;
        let mut out = vec![t];
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self { t0: self.t0 + delta, ..self.clone() }
    }

    pub fn snap_cost(&self) -> f64 {
        self.segments.iter().map(Segment::snap_cost).sum()
    }

    /// Largest jump across interior junctions of position, velocity,
    /// acceleration and jerk (in mission-time units).
    pub fn junction_residuals(&self) -> [f64; 4] {
        let mut out = [0.0f64; 4];
        for w in self.segments.windows(2) {
            for (n, r) in out.iter_mut().enumerate() {
                *r = r.max((w[0].derivative(1.0, n) - w[1].derivative(0.0, n)).norm());
            }
        }
        out
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if self.segments.is_empty() {
            return None;
        }
        let mut start = self.t0;
        if t <= start {
            return Some((0, 0.0));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let end = start + s.duration;
            if t <= end || i + 1 == self.segments.len() {
                let tau = ((t - start) / s.duration).clamp(0.0, 1.0);
                return Some((i, tau));
            }
            start = end;
        }
        unreachable!()
    }

    pub fn state(&self, t: f64) -> State {
        match self.locate(t) {
            None => State { position: self.rest, velocity: Vec3::ZERO, acceleration: Vec3::ZERO },
            Some((i, tau)) => {
                let s = &self.segments[i];
                let outside = t < self.t0 || t > self.t_final();
                if outside {
                    State { position: s.derivative(tau, 0), velocity: Vec3::ZERO, acceleration: Vec3::ZERO }
                } else {
                    State { position: s.derivative(tau, 0), velocity: s.derivative(tau, 1), acceleration: s.derivative(tau, 2) }
                }
            }
        }
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.state(t).position
    }

    /// Peak speed and acceleration norm from dense per-segment sampling.
    pub fn peak_speed_accel(&self) -> (f64, f64) {
        const N: usize = 64;
        let mut v: f64 = 0.0;
        let mut a: f64 = 0.0;
        for s in &self.segments {
            for k in 0..=N {
                let tau = k as f64 / N as f64;
                v = v.max(s.derivative(tau, 1).norm());
                a = a.max(s.derivative(tau, 2).norm());
            }
        }
        (v, a)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampledStates {
    pub times: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub accelerations: Vec<Vec3>,
}

impl SampledStates {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evaluate the trajectory at arbitrary mission times (holding outside its
/// active window).
pub fn sample_at(tr: &PiecewiseTrajectory, times: &[f64]) -> SampledStates {
    let mut out = SampledStates { times: times.to_vec(), ..Default::default() };
    for &t in times {
        let s = tr.state(t);
        out.positions.push(s.position);
        out.velocities.push(s.velocity);
        out.accelerations.push(s.acceleration);
    }
    out
}

/// Uniform grid `t0, t0 + dt, ...` that always ends exactly at `t_final`.
pub fn time_grid(t0: f64, tf: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0, "sampling step must be positive");
    let n = ((tf - t0) / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    if tf - times[times.len() - 1] > 1e-9 * dt.max(1.0) {
        times.push(tf);
    }
    times
}

pub fn sample(tr: &PiecewiseTrajectory, dt: f64) -> SampledStates {
    sample_at(tr, &time_grid(tr.t0, tr.t_final(), dt))
}

/// Keep endpoints and direction-change cells; drop collinear interior
/// cells. A kept pair whose straight chord would leave free space keeps the
/// cells between them.
pub fn simplify_path(gp: &GeometricPath, grid: &OccupancyGrid) -> WaypointSequence {
    let n = gp.cells.len();
    if n <= 2 {
        return WaypointSequence::new(gp.waypoints.clone());
    }
    let dir = |k: usize| {
        let a = gp.cells[k].as_array();
        let b = gp.cells[k + 1].as_array();
        [0, 1, 2].map(|x| b[x] as isize - a[x] as isize)
    };
    let mut corners = vec![0];
    for k in 1..n - 1 {
        if dir(k - 1) != dir(k) {
            corners.push(k);
        }
    }
    corners.push(n - 1);

    let mut kept = vec![0];
    for w in corners.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !grid.segment_is_free(gp.waypoints[a], gp.waypoints[b]) {
            kept.extend(a + 1..b);
        }
        kept.push(b);
    }
    WaypointSequence::new(kept.iter().map(|&k| gp.waypoints[k]).collect())
}

/// Greedy line-of-sight pruning: from each kept point, jump to the farthest
/// later point whose chord satisfies `clear`. Adjacent points are always
/// kept connected.
pub fn shortcut(points: &[Vec3], clear: impl Fn(Vec3, Vec3) -> bool) -> Vec<Vec3> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut i = 0;
    while i + 1 < points.len() {
        let mut j = points.len() - 1;
        while j > i + 1 && !clear(points[i], points[j]) {
            j -= 1;
        }
        out.push(points[j]);
        i = j;
    }
    out
}

/// `max(d / v, sqrt(2 d / a)) * 1.2` per segment, with a 0.1 s floor for
/// zero-length segments.
pub fn allocate_times(ws: &WaypointSequence, limits: &DynamicsLimits) -> Vec<f64> {
    ws.points
        .windows(2)
        .map(|w| {
            let d = w[0].distance(w[1]);
            if d <= 1e-12 {
                MIN_SEGMENT_DURATION
            } else {
                (d / limits.v_max).max((2.0 * d / limits.a_max).sqrt()) * TIME_SAFETY_FACTOR
            }
        })
        .collect()
}

/// Equality constraint rows shared by all three axes, with the
/// right-hand-side source for each row.
#[derive(Debug, Clone)]
pub struct Constraints {
    pub a: DMatrix<f64>,
    /// `Some(k)` means the row equals waypoint `k`'s coordinate; `None`
    /// means zero.
    pub rhs_waypoint: Vec<Option<usize>>,
}

/// Constraint matrix over `NCOEF * S` coefficients for normalized
/// durations `tn`.
pub fn constraint_matrix(tn: &[f64]) -> Constraints {
    let s = tn.len();
    let rows = 2 * s + 3 * (s - 1) + 4;
    let mut a = DMatrix::zeros(rows, NCOEF * s);
    let mut rhs = Vec::with_capacity(rows);
    let mut r = 0;
    for seg in 0..s {
        let base = seg * NCOEF;
        a[(r, base)] = 1.0;
        rhs.push(Some(seg));
        r += 1;
        for k in 0..NCOEF {
            a[(r, base + k)] = 1.0;
        }
        rhs.push(Some(seg + 1));
        r += 1;
    }
    for seg in 0..s.saturating_sub(1) {
        let left = seg * NCOEF;
        let right = left + NCOEF;
        for n in 1..=3 {
            // scale by T_left^n so the row stays O(1)
            let ratio = (tn[seg] / tn[seg + 1]).powi(n as i32);
            for k in n..NCOEF {
                a[(r, left + k)] = falling(k, n);
            }
            a[(r, right + n)] = -falling(n, n) * ratio;
            rhs.push(None);
            r += 1;
        }
    }
    for n in 1..=2 {
        a[(r, n)] = falling(n, n);
        rhs.push(None);
        r += 1;
    }
    let last = (s - 1) * NCOEF;
    for n in 1..=2 {
        for k in n..NCOEF {
            a[(r, last + k)] = falling(k, n);
        }
        rhs.push(None);
        r += 1;
    }
    debug_assert_eq!(r, rows);
    Constraints { a, rhs_waypoint: rhs }
}

/// Block-diagonal snap Hessian for normalized durations.
pub fn hessian(tn: &[f64]) -> DMatrix<f64> {
    let q = snap_gram();
    let n = NCOEF * tn.len();
    let mut h = DMatrix::zeros(n, n);
    for (seg, &t) in tn.iter().enumerate() {
        let w = t.powi(-7);
        let base = seg * NCOEF;
        for k in 0..NCOEF {
            for l in 0..NCOEF {
                h[(base + k, base + l)] = q[k][l] * w;
            }
        }
    }
    h
}

/// Symmetric Ruiz equilibration in place: `K <- D K D` with `D` chosen so
/// every row and column has unit max-norm. Returns the diagonal of `D`.
fn equilibrate(k: &mut DMatrix<f64>) -> Vec<f64> {
    let n = k.nrows();
    let mut d = vec![1.0; n];
    for _ in 0..20 {
        let r: Vec<f64> = (0..n)
            .map(|i| {
                let m = k.row(i).amax();
                if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 }
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] *= r[i] * r[j];
            }
            d[i] *= r[i];
        }
        if r.iter().all(|x| (x - 1.0).abs() < 1e-3) {
            break;
        }
    }
    d
}

pub fn solve_minsnap(ws: &WaypointSequence, durations: &[f64]) -> Result<PiecewiseTrajectory> {
    let s = ws.num_segments();
    assert!(s >= 1, "min-snap needs at least one segment");
    assert_eq!(durations.len(), s, "one duration per segment");
    assert!(durations.iter().all(|&d| d > 0.0), "durations must be positive");

    // normalize by the mean duration; tau-coefficients are unaffected
    let mean = durations.iter().sum::<f64>() / s as f64;
    let tn: Vec<f64> = durations.iter().map(|d| d / mean).collect();

    let cons = constraint_matrix(&tn);
    let h = hessian(&tn);
    let nv = NCOEF * s;
    let nc = cons.a.nrows();
    let mut kkt = DMatrix::zeros(nv + nc, nv + nc);
    kkt.view_mut((0, 0), (nv, nv)).copy_from(&(h * 2.0));
    kkt.view_mut((0, nv), (nv, nc)).copy_from(&cons.a.transpose());
    kkt.view_mut((nv, 0), (nc, nv)).copy_from(&cons.a);

    let mut rhs = DMatrix::zeros(nv + nc, 3);
    for (row, src) in cons.rhs_waypoint.iter().enumerate() {
        if let Some(k) = src {
            let p = ws.points[*k];
            for axis in 0..3 {
                rhs[(nv + row, axis)] = p[axis];
            }
        }
    }

    // snap rows scale like T^-7 while constraint rows are O(1); equilibrate
    // symmetrically so the pivot-based conditioning estimate is meaningful
    let scale = equilibrate(&mut kkt);
    let scaled_rhs = DMatrix::from_fn(rhs.nrows(), 3, |i, j| rhs[(i, j)] * scale[i]);
    let lu = kkt.clone().full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
    let singular = || Error::SingularKkt { segments: s, condition };
    if !(condition < 1e15) {
        return Err(singular());
    }
    let y = lu.solve(&scaled_rhs).ok_or_else(singular)?;
    let residual = (&kkt * &y - &scaled_rhs).amax();
    if y.iter().any(|v| !v.is_finite()) || residual > 1e-8 * scaled_rhs.amax().max(1.0) {
        return Err(singular());
    }
    let sol = DMatrix::from_fn(y.nrows(), 3, |i, j| y[(i, j)] * scale[i]);

    let segments = (0..s)
        .map(|seg| {
            let mut coeffs = [[0.0; NCOEF]; 3];
            for (axis, c) in coeffs.iter_mut().enumerate() {
                for (k, ck) in c.iter_mut().enumerate() {
                    *ck = sol[(seg * NCOEF + k, axis)];
                }
            }
            Segment { duration: durations[seg], coeffs }
        })
        .collect();
    Ok(PiecewiseTrajectory { t0: 0.0, segments, rest: ws.points[0] })
}

/// Solve with the given durations, keeping the start time `t0`.
pub fn solve_at(ws: &WaypointSequence, durations: &[f64], t0: f64) -> Result<PiecewiseTrajectory> {
    if ws.num_segments() == 0 {
        return Ok(PiecewiseTrajectory { t0, ..PiecewiseTrajectory::stationary(ws.points[0]) });
    }
    let mut tr = solve_minsnap(ws, durations)?;
    tr.t0 = t0;
    Ok(tr)
}

fn within(value: f64, limit: f64) -> bool {
    value <= limit * (1.0 + 1e-9)
}

/// Uniformly stretch all durations by the smallest factor that restores the
/// speed and acceleration limits (speed scales as `1/lambda`, acceleration
/// as `1/lambda^2`), re-solve, and re-check, for at most five rounds.
pub fn retime(tr: &PiecewiseTrajectory, ws: &WaypointSequence, limits: &DynamicsLimits) -> Result<PiecewiseTrajectory> {
    let mut cur = tr.clone();
    let (mut v, mut a) = cur.peak_speed_accel();
    if within(v, limits.v_max) && within(a, limits.a_max) {
        return Ok(cur);
    }
    for _ in 0..MAX_RETIME_ROUNDS {
        let lambda = (v / limits.v_max).max((a / limits.a_max).sqrt()).max(1.0) * 1.001;
        let durations: Vec<f64> = cur.segments.iter().map(|s| s.duration * lambda).collect();
        cur = solve_at(ws, &durations, cur.t0)?;
        (v, a) = cur.peak_speed_accel();
        if within(v, limits.v_max) && within(a, limits.a_max) {
            return Ok(cur);
        }
    }
    Err(Error::RetimeInfeasible { rounds: MAX_RETIME_ROUNDS, speed: v, accel: a })
}

/// Allocate, solve and retime in one call.
pub fn plan_trajectory(ws: &WaypointSequence, limits: &DynamicsLimits, t0: f64) -> Result<PiecewiseTrajectory> {
    if ws.num_segments() == 0 {
        return solve_at(ws, &[], t0);
    }
    let durations = allocate_times(ws, limits);
    let tr = solve_at(ws, &durations, t0)?;
    retime(&tr, ws, limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{path_from_cells, CellIndex, DEFAULT_MAX_CELLS};

    fn limits(v: f64, a: f64) -> DynamicsLimits {
        DynamicsLimits { v_max: v, a_max: a }
    }

    #[test]
    fn ten_meter_allocation() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)]);
        let t = allocate_times(&ws, &limits(2.0, 10.0));
        assert!((t[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_length_gets_floor() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::ZERO]);
        assert_eq!(allocate_times(&ws, &limits(1.0, 1.0)), vec![0.1]);
    }

    #[test]
    fn rest_to_rest_midpoint_is_half() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
        let tr = solve_minsnap(&ws, &[1.0]).unwrap();
        let p = tr.position(0.5);
        assert!((p.x - 0.5).abs() < 1e-9);
        assert!(p.y.abs() < 1e-12 && p.z.abs() < 1e-12);
    }

    #[test]
    fn boundary_states_are_rest() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(3.0, 1.0, 0.0), Vec3::new(5.0, -2.0, 1.0)]);
        let tr = solve_minsnap(&ws, &[2.0, 3.0]).unwrap();
        let s0 = tr.segments[0].derivative(0.0, 1);
        let a0 = tr.segments[0].derivative(0.0, 2);
        let s1 = tr.segments[1].derivative(1.0, 1);
        let a1 = tr.segments[1].derivative(1.0, 2);
        for v in [s0, a0, s1, a1] {
            assert!(v.norm() < 1e-6, "{v:?}");
        }
    }

    #[test]
    fn peak_speed_of_rest_to_rest_segment() {
        // with free end jerk the optimality conditions add zero snap at both
        // ends; the resulting septic peaks at 63/32 of the mean speed
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
        let tr = solve_minsnap(&ws, &[1.0]).unwrap();
        let (v, _) = tr.peak_speed_accel();
        assert!((v - 63.0 / 32.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn retime_within_limits_is_identity() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
        let tr = solve_minsnap(&ws, &[100.0]).unwrap();
        assert_eq!(retime(&tr, &ws, &limits(1.0, 1.0)).unwrap(), tr);
    }

    #[test]
    fn retime_restores_limits() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(4.0, 0.0, 0.0), Vec3::new(4.0, 4.0, 0.0)]);
        let tr = solve_minsnap(&ws, &[1.0, 1.0]).unwrap();
        let out = retime(&tr, &ws, &limits(1.5, 2.0)).unwrap();
        let (v, a) = out.peak_speed_accel();
        assert!(v <= 1.5 * (1.0 + 1e-9) && a <= 2.0 * (1.0 + 1e-9));
    }

    #[test]
    fn time_grid_ends_at_tf() {
        let g = time_grid(0.0, 1.05, 0.1);
        assert_eq!(g.len(), 12);
        assert_eq!(*g.last().unwrap(), 1.05);
        let g = time_grid(0.0, 1.0, 0.25);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn hold_outside_active_window() {
        let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0)]);
        let tr = solve_at(&ws, &[2.0], 5.0).unwrap();
        assert_eq!(tr.position(0.0), Vec3::ZERO);
        let end = tr.state(100.0);
        assert!((end.position.x - 2.0).abs() < 1e-9);
        assert_eq!(end.velocity, Vec3::ZERO);
    }

    fn grid(n: usize) -> OccupancyGrid {
        let hi = n as f64;
        OccupancyGrid::build(Vec3::ZERO, Vec3::new(hi, hi, hi), 1.0, &[], 0.0, DEFAULT_MAX_CELLS).unwrap()
    }

    #[test]
    fn straight_corridor_simplifies_to_two() {
        let g = grid(12);
        let cells: Vec<CellIndex> = (0..10).map(|i| CellIndex::new(i, 3, 3)).collect();
        let ws = simplify_path(&path_from_cells(&g, cells), &g);
        assert_eq!(ws.points.len(), 2);
    }

    #[test]
    fn right_angle_keeps_corner() {
        let g = grid(8);
        let mut cells: Vec<CellIndex> = (0..5).map(|i| CellIndex::new(i, 0, 0)).collect();
        cells.extend((1..5).map(|j| CellIndex::new(4, j, 0)));
        let ws = simplify_path(&path_from_cells(&g, cells), &g);
        assert_eq!(ws.points.len(), 3);
        assert_eq!(ws.points[1], g.cell_center(CellIndex::new(4, 0, 0)));
    }

    #[test]
    fn shortcut_prunes_only_clear_chords() {
        let pts = [Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0)];
        assert_eq!(shortcut(&pts, |_, _| true), vec![pts[0], pts[3]]);
        assert_eq!(shortcut(&pts, |a, b| a.distance(b) <= 1.0 + 1e-9), pts.to_vec());
    }
}
