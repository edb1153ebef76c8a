mod common;

use rand::Rng;

use common::snap::{constraint_residual, lifted_cubic, quadrature_snap, random_durations, random_waypoints, worst_perturbation};
use common::{limits, rng};
use swarmplan::grid::{path_from_cells, CellIndex, OccupancyGrid, DEFAULT_MAX_CELLS};
use swarmplan::minsnap::{
    allocate_times, plan_trajectory, retime, sample, simplify_path, solve_minsnap, WaypointSequence,
};
use swarmplan::Vec3;

#[test]
fn rest_to_rest_midpoint_is_symmetric() {
    let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
    let tr = solve_minsnap(&ws, &[1.0]).unwrap();
    let p = tr.position(0.5);
    assert!((p.x - 0.5).abs() < 1e-12 && p.y.abs() < 1e-12 && p.z.abs() < 1e-12);
}

#[test]
fn continuity_boundary_and_waypoints_on_random_instances() {
    let mut r = rng(1);
    for _ in 0..50 {
        let n = r.random_range(3..=10);
        let ws = random_waypoints(n, &mut r);
        let d = random_durations(n - 1, &mut r);
        let tr = solve_minsnap(&ws, &d).unwrap();
        let res = tr.junction_residuals();
        assert!(res[0] < 1e-6 && res[1] < 1e-6 && res[2] < 1e-4 && res[3] < 1e-3, "{res:?}");
        let first = &tr.segments[0];
        let last = tr.segments.last().unwrap();
        for v in [first.derivative(0.0, 1), first.derivative(0.0, 2), last.derivative(1.0, 1), last.derivative(1.0, 2)] {
            assert!(v.norm() < 1e-6);
        }
        for (k, t) in tr.junction_times().iter().enumerate() {
            assert!(tr.position(*t).distance(ws.points[k]) < 1e-6);
        }
        assert!((tr.duration() - d.iter().sum::<f64>()).abs() < 1e-12);
    }
}

#[test]
fn snap_cost_matches_quadrature() {
    let mut r = rng(2);
    for _ in 0..50 {
        let n = r.random_range(3..=10);
        let ws = random_waypoints(n, &mut r);
        let tr = solve_minsnap(&ws, &random_durations(n - 1, &mut r)).unwrap();
        let (a, b) = (tr.snap_cost(), quadrature_snap(&tr));
        assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
    }
}

#[test]
fn never_worse_than_lifted_cubic_spline() {
    let mut r = rng(3);
    for _ in 0..50 {
        let n = r.random_range(3..=10);
        let ws = random_waypoints(n, &mut r);
        let d = random_durations(n - 1, &mut r);
        let tr = solve_minsnap(&ws, &d).unwrap();
        let competitor = lifted_cubic(&ws, &d);
        // the competitor is feasible for the same constraints
        let res = competitor.junction_residuals();
        assert!(res.iter().all(|&x| x < 1e-6), "{res:?}");
        assert!(tr.snap_cost() <= quadrature_snap(&competitor) * (1.0 + 1e-9));
    }
}

#[test]
fn feasible_perturbations_never_decrease_snap() {
    let mut r = rng(4);
    for _ in 0..20 {
        let n = r.random_range(3..=8);
        let ws = random_waypoints(n, &mut r);
        let d = random_durations(n - 1, &mut r);
        assert!(constraint_residual(&d) < 1e-9);
        let tr = solve_minsnap(&ws, &d).unwrap();
        assert!(worst_perturbation(&tr, 1e-4, 100, &mut r) >= -1e-9);
    }
}

#[test]
fn time_scaling_law() {
    let mut r = rng(5);
    for _ in 0..50 {
        let n = r.random_range(3..=10);
        let ws = random_waypoints(n, &mut r);
        let d = random_durations(n - 1, &mut r);
        let lambda = r.random_range(0.5..3.0);
        let a = solve_minsnap(&ws, &d).unwrap();
        let scaled: Vec<f64> = d.iter().map(|x| x * lambda).collect();
        let b = solve_minsnap(&ws, &scaled).unwrap();
        let expect = a.snap_cost() * lambda.powi(-7);
        assert!((b.snap_cost() - expect).abs() <= 1e-6 * expect);
        let (va, _) = a.peak_speed_accel();
        let (vb, _) = b.peak_speed_accel();
        assert!((vb - va / lambda).abs() <= 1e-6 * va);
    }
}

#[test]
fn doubling_durations_halves_peak_speed() {
    let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(3.0, 1.0, 0.0), Vec3::new(5.0, 4.0, 2.0)]);
    let a = solve_minsnap(&ws, &[2.0, 3.0]).unwrap().peak_speed_accel().0;
    let b = solve_minsnap(&ws, &[4.0, 6.0]).unwrap().peak_speed_accel().0;
    assert!((b - a / 2.0).abs() <= 1e-6 * a);
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let mut r = rng(6);
    let h = 1e-3;
    for _ in 0..20 {
        let n = r.random_range(3..=10);
        let ws = random_waypoints(n, &mut r);
        let tr = solve_minsnap(&ws, &random_durations(n - 1, &mut r)).unwrap();
        for _ in 0..50 {
            let t = r.random_range(h..tr.duration() - h);
            let s = tr.state(t);
            let fd_v = (tr.position(t + h) - tr.position(t - h)) / (2.0 * h);
            let fd_a = (tr.state(t + h).velocity - tr.state(t - h).velocity) / (2.0 * h);
            assert!((fd_v - s.velocity).norm() < 1e-3);
            assert!((fd_a - s.acceleration).norm() < 1e-3);
        }
    }
}

#[test]
fn sampled_acceleration_is_continuous() {
    let mut r = rng(7);
    let ws = random_waypoints(6, &mut r);
    let tr = solve_minsnap(&ws, &random_durations(5, &mut r)).unwrap();
    for t in &tr.junction_times()[1..5] {
        let jump = (tr.state(t - 1e-9).acceleration - tr.state(t + 1e-9).acceleration).norm();
        assert!(jump < 1e-4);
    }
    let s = sample(&tr, 0.05);
    assert_eq!(*s.times.last().unwrap(), tr.t_final());
}

#[test]
fn allocation_examples() {
    let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)]);
    assert!((allocate_times(&ws, &limits(2.0, 10.0))[0] - 6.0).abs() < 1e-12);
    let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::ZERO]);
    assert_eq!(allocate_times(&ws, &limits(1.0, 1.0)), vec![0.1]);
}

/// Fraction of random instances whose heuristic allocation alone keeps the
/// sampled speed within 5% of the limit.
fn allocation_speed_fraction() -> f64 {
    let mut r = rng(8);
    let lim = limits(2.0, 2.0);
    let total = 200;
    let ok = (0..total)
        .filter(|_| {
            let n = r.random_range(3..=10);
            let ws = random_waypoints(n, &mut r);
            let tr = solve_minsnap(&ws, &allocate_times(&ws, &lim)).unwrap();
            tr.peak_speed_accel().0 <= 1.05 * lim.v_max
        })
        .count();
    ok as f64 / total as f64
}

#[test]
fn allocation_speed_rate_is_reported() {
    // The heuristic allocation is not required to meet the limit on its own;
    // the retime loop enforces it. The rate is printed for reference.
    let f = allocation_speed_fraction();
    println!("allocation alone within 1.05 v_max on {:.1}% of instances", 100.0 * f);
    assert!((0.0..=1.0).contains(&f));
}

#[test]
fn retimed_trajectories_respect_limits() {
    let mut r = rng(9);
    for _ in 0..50 {
        let n = r.random_range(3..=10);
        let ws = random_waypoints(n, &mut r);
        let lim = limits(r.random_range(0.5..3.0), r.random_range(0.5..3.0));
        let tr = plan_trajectory(&ws, &lim, 0.0).unwrap();
        let (v, a) = tr.peak_speed_accel();
        assert!(v <= lim.v_max * 1.05 && a <= lim.a_max * 1.05, "{v} {a}");
    }
}

#[test]
fn retime_within_limits_returns_input() {
    let ws = WaypointSequence::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)]);
    let tr = solve_minsnap(&ws, &[50.0, 50.0]).unwrap();
    assert_eq!(retime(&tr, &ws, &limits(1.0, 1.0)).unwrap(), tr);
}

fn grid(dims: [usize; 3]) -> OccupancyGrid {
    let hi = Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64);
    OccupancyGrid::build(Vec3::ZERO, hi, 1.0, &[], 0.0, DEFAULT_MAX_CELLS).unwrap()
}

#[test]
fn simplify_keeps_corners_only() {
    let g = grid([12, 12, 2]);
    let straight: Vec<CellIndex> = (0..10).map(|i| CellIndex::new(i, 0, 0)).collect();
    assert_eq!(simplify_path(&path_from_cells(&g, straight), &g).points.len(), 2);
    let mut turn: Vec<CellIndex> = (0..5).map(|i| CellIndex::new(i, 0, 0)).collect();
    turn.extend((1..5).map(|j| CellIndex::new(4, j, 0)));
    assert_eq!(simplify_path(&path_from_cells(&g, turn), &g).points.len(), 3);
}

#[test]
fn simplified_chords_stay_in_free_cells() {
    use swarmplan::grid::shortest_path;
    use swarmplan::scenario::Connectivity;
    let mut r = rng(10);
    let mut checked = 0;
    for _ in 0..200 {
        let g = common::random_grid([10, 10, 4], 0.2, &mut r);
        let (Some(a), Some(b)) = (common::random_free_cell(&g, &mut r), common::random_free_cell(&g, &mut r)) else { continue };
        let Some(p) = shortest_path(&g, a, b, Connectivity::TwentySix).unwrap() else { continue };
        let ws = simplify_path(&p, &g);
        for w in ws.points.windows(2) {
            // dense ray sampling, 200 samples per chord
            for k in 0..=200 {
                let q = w[0].lerp(w[1], k as f64 / 200.0);
                assert!(g.point_is_free(q), "chord leaves free space at {q:?}");
            }
        }
        checked += 1;
    }
    assert!(checked > 100);
}
