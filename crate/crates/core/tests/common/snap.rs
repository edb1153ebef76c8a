//! Independent checks for minimum-snap trajectories: quadrature, a feasible
//! competitor built from a natural cubic spline, and a null-space
//! optimality certificate.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use rand::Rng;

use swarmplan::minsnap::{PiecewiseTrajectory, Segment, WaypointSequence, NCOEF};
use swarmplan::Vec3;

pub fn random_waypoints(n: usize, rng: &mut impl Rng) -> WaypointSequence {
    let pts = (0..n)
        .map(|_| Vec3::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), rng.random_range(0.0..6.0)))
        .collect();
    WaypointSequence::new(pts)
}

pub fn random_durations(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..4.0)).collect()
}

/// Snap cost by 5-point Gauss-Legendre quadrature per segment (exact for
/// the degree-6 integrand).
pub fn quadrature_snap(tr: &PiecewiseTrajectory) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    tr.segments
        .iter()
        .map(|s| {
            let half = s.duration / 2.0;
            (0..5)
                .map(|q| {
                    let tau = 0.5 * (X[q] + 1.0);
                    let d = s.derivative(tau, 4);
                    W[q] * d.dot(d)
                })
                .sum::<f64>()
                * half
        })
        .sum()
}

/// Natural cubic spline through `y` at knot times `t`; returns per-knot
/// first derivative, second derivative, and one-sided third derivatives
/// (left, right) at each knot.
fn natural_cubic(t: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<(f64, f64)>) {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    a[(0, 0)] = 1.0;
    a[(n - 1, n - 1)] = 1.0;
    for i in 1..n - 1 {
        a[(i, i - 1)] = h[i - 1];
        a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
        a[(i, i + 1)] = h[i];
        b[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    let m = a.lu().solve(&b).expect("spline system is regular");
    let mut d1 = vec![0.0; n];
    let mut d3 = vec![(0.0, 0.0); n];
    for i in 0..n - 1 {
        let slope = (y[i + 1] - y[i]) / h[i];
        d1[i] = slope - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
        let jerk = (m[i + 1] - m[i]) / h[i];
        d3[i].1 = jerk;
        d3[i + 1].0 = jerk;
    }
    let last = n - 2;
    d1[n - 1] = (y[n - 1] - y[last]) / h[last] + h[last] * (m[last] + 2.0 * m[n - 1]) / 6.0;
    (d1, m.iter().copied().collect(), d3)
}

/// Degree-7 segment in normalized time matching position, velocity,
/// acceleration and jerk (time derivatives) at both ends.
fn hermite7(t: f64, start: [f64; 4], end: [f64; 4]) -> [f64; NCOEF] {
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    let mut rhs = SVector::<f64, 8>::zeros();
    for n in 0..4 {
        let scale = t.powi(n as i32);
        for k in n..NCOEF {
            let falling: f64 = ((k + 1 - n)..=k).map(|x| x as f64).product();
            m[(n, k)] = if k == n { falling } else { 0.0 };
            m[(4 + n, k)] = falling;
        }
        rhs[n] = start[n] * scale;
        rhs[4 + n] = end[n] * scale;
    }
    let c = m.lu().solve(&rhs).expect("hermite system is regular");
    std::array::from_fn(|k| c[k])
}

/// Feasible competitor: junction velocity and acceleration from the natural
/// cubic spline (zero at both ends), junction jerk the mean of the spline's
/// one-sided jerks, each segment the degree-7 Hermite interpolant.
pub fn lifted_cubic(ws: &WaypointSequence, durations: &[f64]) -> PiecewiseTrajectory {
    let n = ws.points.len();
    let mut t = vec![0.0];
    for d in durations {
        t.push(t.last().unwrap() + d);
    }
    let mut derivs = vec![[[0.0; 4]; 3]; n];
    for axis in 0..3 {
        let y: Vec<f64> = ws.points.iter().map(|p| p[axis]).collect();
        let (d1, d2, d3) = natural_cubic(&t, &y);
        for i in 0..n {
            let interior = i > 0 && i + 1 < n;
            let jerk = match i {
                0 => d3[0].1,
                _ if i + 1 == n => d3[i].0,
                _ => 0.5 * (d3[i].0 + d3[i].1),
            };
            derivs[i][axis] = [y[i], if interior { d1[i] } else { 0.0 }, if interior { d2[i] } else { 0.0 }, jerk];
        }
    }
    let segments = (0..n - 1)
        .map(|s| Segment {
            duration: durations[s],
            coeffs: std::array::from_fn(|axis| hermite7(durations[s], derivs[s][axis], derivs[s + 1][axis])),
        })
        .collect();
    PiecewiseTrajectory { t0: 0.0, segments, rest: ws.points[0] }
}

/// Homogeneous constraint map of the min-snap problem for one axis, built
/// by evaluating each constraint on unit coefficient vectors: segment end
/// positions, velocity/acceleration/jerk continuity, rest at both ends.
/// Rows are normalized.
fn constraint_rows(durations: &[f64]) -> DMatrix<f64> {
    let s = durations.len();
    let nv = NCOEF * s;
    let eval = |coeffs: &DVector<f64>| -> Vec<f64> {
        let seg = |k: usize| {
            let mut c = [[0.0; NCOEF]; 3];
            for i in 0..NCOEF {
                c[0][i] = coeffs[k * NCOEF + i];
            }
            Segment { duration: durations[k], coeffs: c }
        };
        let mut out = Vec::new();
        for k in 0..s {
            out.push(seg(k).derivative(0.0, 0).x);
            out.push(seg(k).derivative(1.0, 0).x);
        }
        for k in 0..s - 1 {
            for n in 1..4 {
                out.push(seg(k).derivative(1.0, n).x - seg(k + 1).derivative(0.0, n).x);
            }
        }
        for n in 1..3 {
            out.push(seg(0).derivative(0.0, n).x);
            out.push(seg(s - 1).derivative(1.0, n).x);
        }
        out
    };
    let rows = eval(&DVector::zeros(nv)).len();
    let mut a = DMatrix::zeros(rows, nv);
    for j in 0..nv {
        let mut e = DVector::zeros(nv);
        e[j] = 1.0;
        for (i, v) in eval(&e).into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    // unit rows: same null space, better conditioned A^T A
    for mut row in a.row_iter_mut() {
        let n = row.norm();
        row /= n;
    }
    a
}

/// Orthonormal basis of the constraint null space, from the zero
/// eigenvalues of `A^T A`.
pub fn null_space(durations: &[f64]) -> DMatrix<f64> {
    let a = constraint_rows(durations);
    let eig = (a.transpose() * &a).symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<DVector<f64>> = (0..a.ncols())
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-12 * top)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Perturb every axis of `tr` along random null-space directions of step
/// `eps` and return the smallest relative change in snap cost.
pub fn worst_perturbation(tr: &PiecewiseTrajectory, eps: f64, trials: usize, rng: &mut impl Rng) -> f64 {
    let durations: Vec<f64> = tr.segments.iter().map(|s| s.duration).collect();
    let basis = null_space(&durations);
    let base = tr.snap_cost();
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let w = DVector::from_fn(basis.ncols(), |_, _| rng.random_range(-1.0..1.0));
        let dir = &basis * w;
        let dir = &dir / dir.norm();
        let axis = rng.random_range(0..3);
        let mut p = tr.clone();
        for (k, seg) in p.segments.iter_mut().enumerate() {
            for i in 0..NCOEF {
                seg.coeffs[axis][i] += eps * dir[k * NCOEF + i];
            }
        }
        worst = worst.min((p.snap_cost() - base) / base);
    }
    worst
}

/// Null-space directions keep every constraint satisfied.
pub fn constraint_residual(durations: &[f64]) -> f64 {
    let a = constraint_rows(durations);
    let n = null_space(durations);
    (a * n).amax()
}
