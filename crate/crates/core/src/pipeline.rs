//! End-to-end mission planning: grid, cost matrices, allocation and
//! sequencing, trajectories, safety validation, and the output files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::costs::{build_cost_matrices, filter_unreachable, CostMatrices};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::build_grid;
use crate::ipso::{optimize, IpsoParams, Plan};
use crate::minsnap::{sample_at, time_grid, PiecewiseTrajectory};
use crate::mission::{build_route, PlanningContext, RobotRoute};
use crate::safety::{validate_loop, SafetyConfig, SafetyReport, Violation, DEFAULT_CHECK_DT, DEFAULT_MAX_REPLAN_ROUNDS};
use crate::scenario::{validate_scenario, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Sampling step for `trajectories.csv`.
    pub dt: f64,
    pub ipso: IpsoParams,
    pub check_dt: f64,
    pub max_replan_rounds: usize,
}

impl RunConfig {
    /// Defaults, with optimizer overrides taken from the scenario if present.
    pub fn for_scenario(s: &Scenario) -> Self {
        Self {
            seed: 0,
            dt: 0.05,
            ipso: s.ipso.unwrap_or_default(),
            check_dt: DEFAULT_CHECK_DT,
            max_replan_rounds: DEFAULT_MAX_REPLAN_ROUNDS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    pub grid_s: f64,
    pub matrices_s: f64,
    pub optimize_s: f64,
    pub trajectories_s: f64,
    pub validation_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotTrajectory {
    pub robot_id: u32,
    /// Scenario goal indices in visit order.
    pub goals: Vec<usize>,
    pub waypoints: Vec<Vec3>,
    pub trajectory: PiecewiseTrajectory,
}

/// Contents of `result.json`. Deterministic for a given scenario and seed;
/// wall-clock timing is written separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionResult {
    pub schema_version: u32,
    pub seed: u64,
    /// Optimizer plan over the retained robots and goals (filtered indices).
    pub plan: Plan,
    /// Scenario index of each retained robot, in plan order.
    pub plan_robots: Vec<usize>,
    /// Scenario index of each retained goal.
    pub plan_goals: Vec<usize>,
    /// Longest closed tour over the drone speed, in seconds.
    pub makespan_pre: f64,
    /// Latest arrival time of the validated trajectories, in seconds.
    pub makespan_post: f64,
    pub trajectories: Vec<RobotTrajectory>,
    pub safety: SafetyReportRecord,
    /// Global best makespan per optimizer iteration (entry 0 is the initial
    /// swarm).
    pub convergence: Vec<f64>,
    pub iterations: usize,
    pub dropped_goals: Vec<Dropped>,
    pub dropped_robots: Vec<Dropped>,
}

/// `SafetyReport` as stored on disk; infinite series values (one robot, no
/// obstacles) are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyReportRecord {
    pub separation_min: f64,
    pub clearance_min: f64,
    pub check_dt: f64,
    pub times: Vec<f64>,
    #[serde(deserialize_with = "null_as_inf")]
    pub min_separation: Vec<f64>,
    #[serde(deserialize_with = "null_as_inf")]
    pub min_clearance: Vec<f64>,
    pub violations: Vec<Violation>,
    pub rounds_used: usize,
    pub final_ok: bool,
    pub replan_log: Vec<String>,
}

fn null_as_inf<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Vec::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
}

impl SafetyReportRecord {
    fn new(r: SafetyReport, cfg: &SafetyConfig) -> Self {
        Self {
            separation_min: cfg.separation_min,
            clearance_min: cfg.clearance_min,
            check_dt: cfg.check_dt,
            times: r.times,
            min_separation: r.min_separation,
            min_clearance: r.min_clearance,
            violations: r.violations,
            rounds_used: r.rounds_used,
            final_ok: r.final_ok,
            replan_log: r.replan_log,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub result: MissionResult,
    pub matrices: CostMatrices,
    pub routes: Vec<RobotRoute>,
    pub timing: StageTiming,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs every stage on a validated scenario.
pub fn run_pipeline(s: &Scenario, cfg: &RunConfig) -> Result<PipelineOutput> {
    let report = validate_scenario(s);
    if !report.ok {
        return Err(Error::Validation(report.violations).in_stage("scenario"));
    }
    let t_all = Instant::now();
    let mut timing = StageTiming::default();

    let t = Instant::now();
    let grid = stage("grid", build_grid(s))?;
    timing.grid_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let matrices = build_cost_matrices(&grid, s);
    let fp = stage("filter", filter_unreachable(&matrices))?;
    timing.matrices_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let opt = stage("optimize", optimize(&fp, &s.dynamics, &cfg.ipso, cfg.seed))?;
    if !opt.fitness.is_finite() {
        return Err(Error::EmptyProblem("no allocation with a finite makespan".to_string()).in_stage("optimize"));
    }
    timing.optimize_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let ctx = PlanningContext::new(s, &grid);
    let mut routes: Vec<RobotRoute> = s.robots.iter().enumerate().map(|(i, r)| RobotRoute::idle(i, r.id, r.start)).collect();
    for (k, tour) in opt.plan.tours().iter().enumerate() {
        let robot = fp.active_robots[k];
        let goals: Vec<usize> = tour.iter().map(|&j| fp.active_goals[j]).collect();
        let path_rg = |g: usize| matrices.paths_rg[robot][g].clone().expect("finite leg has a path");
        let path_gg = |a: usize, b: usize| matrices.paths_gg[a][b].clone().expect("finite leg has a path");
        let r = &s.robots[robot];
        routes[robot] = stage("trajectory", build_route(&ctx, robot, r.id, r.start, &goals, &s.goals, path_rg, path_gg))?;
    }
    timing.trajectories_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut safety_cfg = SafetyConfig::from_scenario(s);
    safety_cfg.check_dt = cfg.check_dt;
    safety_cfg.max_replan_rounds = cfg.max_replan_rounds;
    let safety = validate_loop(&mut routes, &ctx, &safety_cfg);
    timing.validation_s = t.elapsed().as_secs_f64();
    timing.total_s = t_all.elapsed().as_secs_f64();

    let makespan_post = routes.iter().map(|r| r.trajectory.t_final()).fold(0.0, f64::max);
    let trajectories = routes
        .iter()
        .map(|r| RobotTrajectory {
            robot_id: r.robot_id,
            goals: r.goals.clone(),
            waypoints: r.waypoints().points,
            trajectory: r.trajectory.clone(),
        })
        .collect();
    let dropped = |v: &[(usize, String)]| v.iter().map(|(i, reason)| Dropped { index: *i, reason: reason.clone() }).collect();
    let result = MissionResult {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        plan: opt.plan,
        plan_robots: fp.active_robots.clone(),
        plan_goals: fp.active_goals.clone(),
        makespan_pre: opt.fitness,
        makespan_post,
        trajectories,
        safety: SafetyReportRecord::new(safety, &safety_cfg),
        convergence: opt.history,
        iterations: opt.iterations,
        dropped_goals: dropped(&fp.dropped_goals),
        dropped_robots: dropped(&fp.dropped_robots),
    };
    Ok(PipelineOutput { result, matrices, routes, timing })
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn convergence_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,gbest_makespan_s\n");
    for (i, v) in history.iter().enumerate() {
        writeln!(out, "{i},{}", fmt_f64(*v)).unwrap();
    }
    out
}

/// Every robot sampled on the shared grid `0, dt, ..., makespan_post`.
pub fn trajectories_csv(trajs: &[RobotTrajectory], dt: f64) -> String {
    let t_end = trajs.iter().map(|r| r.trajectory.t_final()).fold(0.0, f64::max);
    let times = time_grid(0.0, t_end, dt);
    let mut out = String::from("robot_id,t,x,y,z,vx,vy,vz,ax,ay,az\n");
    for r in trajs {
        let s = sample_at(&r.trajectory, &times);
        for k in 0..s.len() {
            let (p, v, a) = (s.positions[k], s.velocities[k], s.accelerations[k]);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.robot_id, s.times[k], p.x, p.y, p.z, v.x, v.y, v.z, a.x, a.y, a.z
            )
            .unwrap();
        }
    }
    out
}

pub fn safety_csv(r: &SafetyReportRecord) -> String {
    let mut out = String::from("t,min_separation,min_clearance\n");
    for k in 0..r.times.len() {
        writeln!(out, "{},{},{}", r.times[k], fmt_f64(r.min_separation[k]), fmt_f64(r.min_clearance[k])).unwrap();
    }
    out
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| Error::io(p, e))
}

pub fn result_json(r: &MissionResult) -> String {
    serde_json::to_string_pretty(r).expect("result serializes")
}

/// Writes `result.json`, `convergence.csv`, `trajectories.csv`,
/// `safety.csv`, `matrices_rg.csv`, `matrices_gg.csv` and `timing.json`.
pub fn write_outputs(dir: &Path, out: &PipelineOutput, dt: f64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "result.json", &result_json(&out.result))?;
    write(dir, "convergence.csv", &convergence_csv(&out.result.convergence))?;
    write(dir, "trajectories.csv", &trajectories_csv(&out.result.trajectories, dt))?;
    write(dir, "safety.csv", &safety_csv(&out.result.safety))?;
    write_matrices(dir, &out.matrices)?;
    let timing = serde_json::to_string_pretty(&out.timing).expect("timing serializes");
    write(dir, "timing.json", &timing)
}

pub fn write_matrices(dir: &Path, m: &CostMatrices) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "matrices_rg.csv", &m.rg_csv())?;
    write(dir, "matrices_gg.csv", &m.gg_csv())
}

pub fn load_result(path: &Path) -> Result<MissionResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
