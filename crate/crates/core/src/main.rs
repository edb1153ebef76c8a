use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use swarmplan::costs::{build_cost_matrices, filter_unreachable};
use swarmplan::error::{Error, Result};
use swarmplan::grid::build_grid;
use swarmplan::ipso::Plan;
use swarmplan::mission::RobotRoute;
use swarmplan::oracle::{exhaustive_makespan, DEFAULT_MAX_GOALS};
use swarmplan::pipeline::{load_result, run_pipeline, write_matrices, write_outputs, RunConfig};
use swarmplan::safety::{check_all, SafetyConfig};
use swarmplan::scenario::{load_scenario, validate_scenario, Scenario};

#[derive(Parser)]
#[command(name = "swarmplan", version, about = "Multi-drone goal allocation and trajectory planning")]
struct Cli {
    /// Worker threads for parallel stages (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write all output files.
    Plan(PlanArgs),
    /// Exhaustive optimum for small instances (at most 8 goals).
    Oracle(IoArgs),
    /// Re-check the trajectories in an existing output directory.
    Validate(ValidateArgs),
    /// Write the cost matrices only.
    Matrices(IoArgs),
}

#[derive(Args)]
struct IoArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling step of trajectories.csv in seconds.
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long)]
    ipso_iters: Option<usize>,
    #[arg(long)]
    swarm: Option<usize>,
    /// Disable periodic MLA injection.
    #[arg(long)]
    no_inject: bool,
    /// Disable MLA seeding of the initial swarm.
    #[arg(long)]
    no_mla_seed: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Check step in seconds (default: the step used when planning).
    #[arg(long)]
    dt: Option<f64>,
}

const EXIT_SAFETY: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INPUT: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } | Error::Parse(_) | Error::Validation(_) | Error::GridTooLarge { .. } | Error::OutOfBounds { .. } => {
            EXIT_INPUT
        }
        _ => EXIT_INFEASIBLE,
    }
}

fn load_valid(path: &Path) -> Result<Scenario> {
    let s = load_scenario(path)?;
    let report = validate_scenario(&s);
    if !report.ok {
        return Err(Error::Validation(report.violations));
    }
    Ok(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn plan(a: &PlanArgs, quiet: bool) -> Result<u8> {
    let s = load_valid(&a.io.scenario)?;
    let mut cfg = RunConfig::for_scenario(&s);
    cfg.seed = a.seed;
    cfg.dt = a.dt;
    if let Some(n) = a.ipso_iters {
        cfg.ipso.max_iterations = n;
    }
    if let Some(n) = a.swarm {
        cfg.ipso.swarm_size = n;
    }
    cfg.ipso.inject &= !a.no_inject;
    cfg.ipso.mla_seed &= !a.no_mla_seed;
    if !(cfg.dt > 0.0) {
        return Err(Error::Validation(vec![format!("--dt must be > 0, got {}", cfg.dt)]));
    }

    let out = run_pipeline(&s, &cfg)?;
    write_outputs(&a.io.out, &out, cfg.dt)?;
    let r = &out.result;
    if !quiet {
        eprintln!("makespan (tours): {:.3} s after {} iterations", r.makespan_pre, r.iterations);
        eprintln!("makespan (trajectories): {:.3} s", r.makespan_post);
        for d in &r.dropped_goals {
            eprintln!("dropped goal {}: {}", d.index, d.reason);
        }
        for d in &r.dropped_robots {
            eprintln!("idle robot index {}: {}", d.index, d.reason);
        }
        eprintln!(
            "safety: {} after {} replanning rounds",
            if r.safety.final_ok { "ok" } else { "VIOLATED" },
            r.safety.rounds_used
        );
        eprintln!("wrote {}", a.io.out.display());
    }
    Ok(if r.safety.final_ok { 0 } else { EXIT_SAFETY })
}

#[derive(Serialize)]
struct OracleOutput {
    optimal_makespan: f64,
    /// Plans over filtered indices; see `plan_robots` / `plan_goals`.
    plans: Vec<Plan>,
    plan_robots: Vec<usize>,
    plan_goals: Vec<usize>,
    nodes_enumerated: u64,
}

fn oracle(a: &IoArgs, quiet: bool) -> Result<u8> {
    let s = load_valid(&a.scenario)?;
    let grid = build_grid(&s)?;
    let m = build_cost_matrices(&grid, &s);
    let fp = filter_unreachable(&m)?;
    let res = exhaustive_makespan(&fp.matrices, &s.dynamics, DEFAULT_MAX_GOALS)?;
    let out = OracleOutput {
        optimal_makespan: res.optimal_makespan,
        plans: res.plans,
        plan_robots: fp.active_robots,
        plan_goals: fp.active_goals,
        nodes_enumerated: res.nodes_enumerated,
    };
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let path = a.out.join("oracle.json");
    write_text(&path, &serde_json::to_string_pretty(&out).expect("oracle output serializes"))?;
    if !quiet {
        eprintln!("optimal makespan {:.6} s ({} optimal plans)", out.optimal_makespan, out.plans.len());
    }
    Ok(0)
}

fn matrices(a: &IoArgs, quiet: bool) -> Result<u8> {
    let s = load_valid(&a.scenario)?;
    let grid = build_grid(&s)?;
    let m = build_cost_matrices(&grid, &s);
    write_matrices(&a.out, &m)?;
    if !quiet {
        eprintln!("wrote {}x{} and {}x{} matrices", m.num_robots(), m.num_goals(), m.num_goals(), m.num_goals());
    }
    Ok(0)
}

/// Re-checks separation, clearance, dynamic limits and junction continuity of
/// the trajectories stored in `result.json`.
fn validate(a: &ValidateArgs, quiet: bool) -> Result<u8> {
    let s = load_valid(&a.io.scenario)?;
    let r = load_result(&a.io.out.join("result.json"))?;
    let mut cfg = SafetyConfig::from_scenario(&s);
    let dt = a.dt.unwrap_or(r.safety.check_dt);
    if !(dt > 0.0) {
        return Err(Error::Validation(vec![format!("--dt must be > 0, got {dt}")]));
    }
    cfg.check_dt = dt;
    let routes: Vec<RobotRoute> = r
        .trajectories
        .iter()
        .enumerate()
        .map(|(i, t)| RobotRoute { trajectory: t.trajectory.clone(), ..RobotRoute::idle(i, t.robot_id, t.trajectory.rest) })
        .collect();
    let report = check_all(&routes, &s.obstacles, &cfg, dt);
    let mut problems: Vec<String> = report
        .violations
        .iter()
        .map(|v| format!("{:?} at t={:.3}: robots {:?}, distance {:.4}", v.kind, v.time, v.robots, v.distance))
        .collect();
    for t in &r.trajectories {
        let (v, acc) = t.trajectory.peak_speed_accel();
        if v > s.dynamics.v_max * (1.0 + 1e-6) || acc > s.dynamics.a_max * (1.0 + 1e-6) {
            problems.push(format!("robot {}: peak speed {v:.4}, peak accel {acc:.4} exceed limits", t.robot_id));
        }
        let res = t.trajectory.junction_residuals();
        if res[0] > 1e-6 || res[1] > 1e-6 || res[2] > 1e-4 {
            problems.push(format!("robot {}: junction discontinuity {:?}", t.robot_id, res));
        }
    }
    if !quiet {
        for p in &problems {
            eprintln!("{p}");
        }
        eprintln!("{} problems at check step {dt} s", problems.len());
    }
    Ok(if problems.is_empty() { 0 } else { EXIT_SAFETY })
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Plan(a) => plan(a, cli.quiet),
        Command::Oracle(a) => oracle(a, cli.quiet),
        Command::Validate(a) => validate(a, cli.quiet),
        Command::Matrices(a) => matrices(a, cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
