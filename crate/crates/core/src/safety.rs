//! Rollout checks for inter-robot separation and obstacle clearance, and the
//! local replanning loop.
//!
//! Trajectories are checked on a shared time grid starting at zero with step
//! `check_dt`, each robot holding its start position before departure and
//! its final position after arrival.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_signed_distance, BoxObstacle, Vec3};
use crate::grid::shortest_path;
use crate::minsnap::{sample_at, time_grid, SampledStates};
use crate::mission::{PlanningContext, RobotRoute};
use crate::scenario::Scenario;

pub const DEFAULT_CHECK_DT: f64 = 0.05;
pub const DEFAULT_MAX_REPLAN_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    /// `2 R_r phi`.
    pub separation_min: f64,
    /// Required clearance beyond the body radius.
    pub clearance_min: f64,
    pub body_radius: f64,
    pub check_dt: f64,
    pub max_replan_rounds: usize,
}

impl SafetyConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            separation_min: s.separation_min(),
            clearance_min: s.safety.clearance_margin,
            body_radius: s.safety.r_r,
            check_dt: DEFAULT_CHECK_DT,
            max_replan_rounds: DEFAULT_MAX_REPLAN_ROUNDS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Separation,
    Clearance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub time: f64,
    /// Robot indices: two for separation (ascending), one for clearance.
    pub robots: Vec<usize>,
    pub distance: f64,
    pub location: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetyReport {
    pub times: Vec<f64>,
    /// Minimum pairwise distance per sample (`inf` with one robot).
    pub min_separation: Vec<f64>,
    /// Minimum clearance over robots per sample (`inf` without obstacles).
    pub min_clearance: Vec<f64>,
    pub violations: Vec<Violation>,
    pub rounds_used: usize,
    pub final_ok: bool,
    pub replan_log: Vec<String>,
}

/// Pairwise separation on a shared time grid. Returns every sample and pair
/// closer than `separation_min`, and the per-sample minimum distance.
pub fn check_separation(trajs: &[SampledStates], cfg: &SafetyConfig) -> (Vec<Violation>, Vec<f64>) {
    let n = trajs.first().map_or(0, SampledStates::len);
    debug_assert!(trajs.iter().all(|t| t.len() == n), "shared time grid required");
    let mut violations = Vec::new();
    let mut series = vec![f64::INFINITY; n];
    for (k, min_k) in series.iter_mut().enumerate() {
        for i in 0..trajs.len() {
            for j in i + 1..trajs.len() {
                let (a, b) = (trajs[i].positions[k], trajs[j].positions[k]);
                let d = a.distance(b);
                *min_k = min_k.min(d);
                if d < cfg.separation_min {
                    violations.push(Violation {
                        kind: ViolationKind::Separation,
                        time: trajs[i].times[k],
                        robots: vec![i, j],
                        distance: d,
                        location: a.lerp(b, 0.5),
                    });
                }
            }
        }
    }
    (violations, series)
}

/// Clearance per sample: signed distance to the nearest box minus the body
/// radius. Returns violations below `clearance_min` and the series.
pub fn check_clearance(
    traj: &SampledStates,
    robot: usize,
    obstacles: &[BoxObstacle],
    cfg: &SafetyConfig,
) -> (Vec<Violation>, Vec<f64>) {
    let mut violations = Vec::new();
    let mut series = Vec::with_capacity(traj.len());
    for (t, &p) in traj.times.iter().zip(&traj.positions) {
        let c = min_signed_distance(obstacles, p) - cfg.body_radius;
        series.push(c);
        if c < cfg.clearance_min {
            violations.push(Violation {
                kind: ViolationKind::Clearance,
                time: *t,
                robots: vec![robot],
                distance: c,
                location: p,
            });
        }
    }
    (violations, series)
}

/// Sample every route on the shared grid `0, dt, ..., max t_final`.
pub fn sample_routes(routes: &[RobotRoute], dt: f64) -> Vec<SampledStates> {
    let t_end = routes.iter().map(|r| r.trajectory.t_final()).fold(0.0, f64::max);
    let times = time_grid(0.0, t_end, dt);
    routes.iter().map(|r| sample_at(&r.trajectory, &times)).collect()
}

/// Combined check of all routes at step `dt`.
pub fn check_all(routes: &[RobotRoute], obstacles: &[BoxObstacle], cfg: &SafetyConfig, dt: f64) -> SafetyReport {
    let samples = sample_routes(routes, dt);
    let (mut violations, min_separation) = check_separation(&samples, cfg);
    let mut min_clearance = vec![f64::INFINITY; min_separation.len()];
    for (i, s) in samples.iter().enumerate() {
        let (v, series) = check_clearance(s, i, obstacles, cfg);
        violations.extend(v);
        for (m, c) in min_clearance.iter_mut().zip(series) {
            *m = m.min(c);
        }
    }
    violations.sort_by(|a, b| a.time.total_cmp(&b.time));
    SafetyReport {
        times: samples.first().map(|s| s.times.clone()).unwrap_or_default(),
        min_separation,
        min_clearance,
        violations,
        ..Default::default()
    }
}

/// Replanning strategy applied in a given round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    DelayDeparture,
    InsertWaypoint,
    Reroute,
}

/// The ladder timing -> insertion -> reroute, repeated from the top once
/// exhausted. Clearance violations never use timing.
pub fn strategy_for(kind: ViolationKind, round: usize) -> Strategy {
    let step = (round.max(1) - 1) % 3;
    match (kind, step) {
        (ViolationKind::Separation, 0) => Strategy::DelayDeparture,
        (ViolationKind::Clearance, 0) | (_, 1) => Strategy::InsertWaypoint,
        _ => Strategy::Reroute,
    }
}

fn fail(reason: impl Into<String>, v: &Violation) -> Error {
    Error::ReplanFailed { reason: reason.into(), violation: Box::new(v.clone()) }
}

/// Resolve the earliest violation with the strategy for `round`, modifying
/// the lower-priority robot (higher index) of a separation conflict or the
/// offending robot of a clearance violation. Returns a log line.
pub fn replan(
    routes: &mut [RobotRoute],
    violations: &[Violation],
    ctx: &PlanningContext<'_>,
    cfg: &SafetyConfig,
    round: usize,
) -> Result<String> {
    let v = violations
        .iter()
        .min_by(|a, b| a.time.total_cmp(&b.time))
        .expect("replan called with violations");
    let strategy = strategy_for(v.kind, round);
    let target = *v.robots.iter().max().expect("violation names a robot");
    let other = match v.kind {
        ViolationKind::Separation => Some(v.robots[0]),
        ViolationKind::Clearance => None,
    };
    let other_pos = other.map(|o| routes[o].trajectory.position(v.time));

    match strategy {
        Strategy::DelayDeparture => {
            let delta = cfg.separation_min / ctx.limits.v_max;
            let r = &mut routes[target];
            r.trajectory = r.trajectory.shifted(delta);
            Ok(format!("round {round}: delayed robot {} by {delta:.3} s", r.robot_id))
        }
        Strategy::InsertWaypoint => insert_waypoint(&mut routes[target], v, other_pos, ctx, cfg, round),
        Strategy::Reroute => reroute(&mut routes[target], v, other_pos, ctx, cfg, round),
    }
}

fn insert_waypoint(
    route: &mut RobotRoute,
    v: &Violation,
    other_pos: Option<Vec3>,
    ctx: &PlanningContext<'_>,
    cfg: &SafetyConfig,
    round: usize,
) -> Result<String> {
    let seg = route.segment_at(v.time).ok_or_else(|| fail("robot has no trajectory segment", v))?;
    let (leg, off) = route.leg_of_segment(seg).ok_or_else(|| fail("segment outside legs", v))?;
    let a = route.legs[leg][off];
    let b = route.legs[leg][off + 1];
    let here = route.trajectory.position(v.time);

    let point = match other_pos {
        None => {
            // pull the trajectory back onto the chord, which was verified clear
            let ab = b - a;
            let len2 = ab.dot(ab);
            let s = if len2 > 0.0 { ((here - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.5 };
            let s = if !(0.05..=0.95).contains(&s) { 0.5 } else { s };
            a.lerp(b, s)
        }
        Some(o) => {
            let dir = (b - a).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
            let away = here - o;
            let lateral = away - dir * away.dot(dir);
            let fallback = dir.cross(Vec3::new(0.0, 0.0, 1.0)).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0));
            let primary = lateral.normalized().unwrap_or(fallback);
            let up = dir.cross(primary).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
            let search = (cfg.separation_min / ctx.grid.resolution()).ceil() as usize + 1;
            let candidates = [primary, -primary, up, -up];
            candidates
                .iter()
                .filter_map(|d| {
                    let want = here + *d * cfg.separation_min;
                    let cell = ctx.grid.nearest_free_cell(want, search)?;
                    let p = ctx.grid.cell_center(cell);
                    (ctx.grid.segment_is_free(a, p) && ctx.grid.segment_is_free(p, b)).then_some(p)
                })
                .next()
                .ok_or_else(|| fail("no free detour cell", v))?
        }
    };
    route.legs[leg].insert(off + 1, point);
    route.rebuild(&ctx.limits)?;
    Ok(format!(
        "round {round}: inserted waypoint ({:.2}, {:.2}, {:.2}) for robot {}",
        point.x, point.y, point.z, route.robot_id
    ))
}

fn reroute(
    route: &mut RobotRoute,
    v: &Violation,
    other_pos: Option<Vec3>,
    ctx: &PlanningContext<'_>,
    cfg: &SafetyConfig,
    round: usize,
) -> Result<String> {
    let seg = route.segment_at(v.time).ok_or_else(|| fail("robot has no trajectory segment", v))?;
    let (leg, _) = route.leg_of_segment(seg).ok_or_else(|| fail("segment outside legs", v))?;
    let from = route.legs[leg][0];
    let to = *route.legs[leg].last().expect("legs have two points");
    let g = ctx.grid;
    let (Ok(c_from), Ok(c_to)) = (g.world_to_cell(from), g.world_to_cell(to)) else {
        return Err(fail("leg endpoint outside grid", v));
    };
    let res = g.resolution();
    let radius = (cfg.separation_min / res).ceil() * res;
    let center = other_pos.unwrap_or(v.location);
    let blocked = g.with_blocked_ball(center, radius, &[c_from, c_to]);
    let path = shortest_path(&blocked, c_from, c_to, ctx.connectivity)
        .map_err(|e| fail(e.to_string(), v))?
        .ok_or_else(|| fail("no path around conflict region", v))?;
    // clearance reroutes keep every corner to stay close to the grid path
    let prune = other_pos.is_some();
    route.legs[leg] = ctx.leg_polyline(&blocked, from, to, &path, prune);
    route.rebuild(&ctx.limits)?;
    Ok(format!("round {round}: rerouted leg {leg} of robot {}", route.robot_id))
}

/// Check, replan, repeat: at most `max_replan_rounds` replanning rounds.
/// A failed replan consumes its round without changing the routes.
pub fn validate_loop(routes: &mut [RobotRoute], ctx: &PlanningContext<'_>, cfg: &SafetyConfig) -> SafetyReport {
    let mut log = Vec::new();
    let mut round = 0;
    loop {
        let mut report = check_all(routes, ctx.obstacles, cfg, cfg.check_dt);
        if report.violations.is_empty() || round == cfg.max_replan_rounds {
            report.final_ok = report.violations.is_empty();
            report.rounds_used = round;
            report.replan_log = log;
            return report;
        }
        round += 1;
        match replan(routes, &report.violations, ctx, cfg, round) {
            Ok(line) => log.push(line),
            Err(e) => log.push(format!("round {round}: {e}")),
        }
    }
}
