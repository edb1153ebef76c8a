//! Per-robot routes: geometric legs through the assigned goals and the
//! trajectory built from them.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{min_signed_distance, BoxObstacle, Vec3};
use crate::grid::{GeometricPath, OccupancyGrid};
use crate::minsnap::{plan_trajectory, shortcut, simplify_path, PiecewiseTrajectory, WaypointSequence};
use crate::scenario::{Connectivity, DynamicsLimits, Scenario};

/// Shared read-only inputs for building and repairing routes.
#[derive(Debug, Clone, Copy)]
pub struct PlanningContext<'a> {
    pub grid: &'a OccupancyGrid,
    pub obstacles: &'a [BoxObstacle],
    pub limits: DynamicsLimits,
    pub connectivity: Connectivity,
    /// Required distance from chord samples to every obstacle when pruning
    /// waypoints.
    pub chord_clearance: f64,
}

impl<'a> PlanningContext<'a> {
    pub fn new(s: &'a Scenario, grid: &'a OccupancyGrid) -> Self {
        Self {
            grid,
            obstacles: &s.obstacles,
            limits: s.dynamics,
            connectivity: s.grid.connectivity,
            chord_clearance: s.safety.r_r + s.safety.clearance_margin,
        }
    }

    /// Chord `a -> b` stays in free cells of `grid` and keeps
    /// `chord_clearance` from every obstacle at a sampling step of a tenth of
    /// a cell.
    pub fn chord_is_clear(&self, grid: &OccupancyGrid, a: Vec3, b: Vec3) -> bool {
        if !grid.segment_is_free(a, b) {
            return false;
        }
        let steps = ((a.distance(b) / (grid.resolution() * 0.1)).ceil() as usize).max(1);
        (0..=steps).all(|k| min_signed_distance(self.obstacles, a.lerp(b, k as f64 / steps as f64)) >= self.chord_clearance)
    }

    /// Waypoints for one leg: the true endpoints around the simplified grid
    /// path, optionally pruned by line of sight.
    pub fn leg_polyline(&self, grid: &OccupancyGrid, from: Vec3, to: Vec3, path: &GeometricPath, prune: bool) -> Vec<Vec3> {
        if path.cells.len() <= 1 {
            return vec![from, to];
        }
        let mut pts = vec![from];
        pts.extend(simplify_path(path, grid).points);
        pts.push(to);
        pts.dedup_by(|b, a| a.distance(*b) < 1e-9);
        if pts.len() == 1 {
            pts.push(to);
        }
        if prune {
            pts = shortcut(&pts, |a, b| self.chord_is_clear(grid, a, b));
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRoute {
    /// Index of the robot in the scenario.
    pub robot: usize,
    pub robot_id: u32,
    pub start: Vec3,
    /// Scenario goal indices in visit order.
    pub goals: Vec<usize>,
    /// One polyline per leg; each starts where the previous one ends.
    pub legs: Vec<Vec<Vec3>>,
    pub trajectory: PiecewiseTrajectory,
}

impl RobotRoute {
    pub fn idle(robot: usize, robot_id: u32, start: Vec3) -> Self {
        Self { robot, robot_id, start, goals: Vec::new(), legs: Vec::new(), trajectory: PiecewiseTrajectory::stationary(start) }
    }

    /// All leg polylines joined, shared junction points listed once.
    pub fn waypoints(&self) -> WaypointSequence {
        let mut pts = vec![self.start];
        for leg in &self.legs {
            pts.extend_from_slice(&leg[1..]);
        }
        WaypointSequence::new(pts)
    }

    /// Leg containing trajectory segment `seg`, and the segment's offset
    /// within that leg.
    pub fn leg_of_segment(&self, seg: usize) -> Option<(usize, usize)> {
        let mut base = 0;
        for (l, leg) in self.legs.iter().enumerate() {
            let n = leg.len() - 1;
            if seg < base + n {
                return Some((l, seg - base));
            }
            base += n;
        }
        None
    }

    /// Active segment index at mission time `t`, clamped to the ends.
    pub fn segment_at(&self, t: f64) -> Option<usize> {
        let times = self.trajectory.junction_times();
        let n = self.trajectory.segments.len();
        if n == 0 {
            return None;
        }
        Some((0..n).find(|&s| t <= times[s + 1]).unwrap_or(n - 1))
    }

    /// Re-solve the trajectory from the current legs, keeping the departure
    /// time.
    pub fn rebuild(&mut self, limits: &DynamicsLimits) -> Result<()> {
        let ws = self.waypoints();
        self.trajectory = plan_trajectory(&ws, limits, self.trajectory.t0)?;
        Ok(())
    }
}

/// Build the route for `robot` visiting `goals` (scenario indices, in
/// order) using the stored grid paths, and solve its trajectory.
pub fn build_route(
    ctx: &PlanningContext<'_>,
    robot: usize,
    robot_id: u32,
    start: Vec3,
    goals: &[usize],
    goal_positions: &[Vec3],
    path_rg: impl Fn(usize) -> GeometricPath,
    path_gg: impl Fn(usize, usize) -> GeometricPath,
) -> Result<RobotRoute> {
    let mut route = RobotRoute::idle(robot, robot_id, start);
    if goals.is_empty() {
        return Ok(route);
    }
    route.goals = goals.to_vec();
    let mut prev_point = start;
    let mut prev_goal: Option<usize> = None;
    for &g in goals {
        let path = match prev_goal {
            None => path_rg(g),
            Some(p) => path_gg(p, g),
        };
        let to = goal_positions[g];
        route.legs.push(ctx.leg_polyline(ctx.grid, prev_point, to, &path, true));
        prev_point = to;
        prev_goal = Some(g);
    }
    let back = path_rg(*goals.last().expect("non-empty")).reversed();
    route.legs.push(ctx.leg_polyline(ctx.grid, prev_point, start, &back, true));
    route.rebuild(&ctx.limits)?;
    Ok(route)
}
