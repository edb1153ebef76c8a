#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swarmplan::costs::{filter_unreachable, CostMatrices, FilteredProblem};
use swarmplan::grid::{CellIndex, OccupancyGrid, DEFAULT_MAX_CELLS};
use swarmplan::scenario::{
    Bounds, Connectivity, DynamicsLimits, GridParams, Robot, SafetyParams, Scenario,
};
use swarmplan::{BoxObstacle, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn limits(v: f64, a: f64) -> DynamicsLimits {
    DynamicsLimits { v_max: v, a_max: a }
}

/// Empty grid of `dims` unit cells with each cell blocked with
/// probability `p`.
pub fn random_grid(dims: [usize; 3], p: f64, rng: &mut impl Rng) -> OccupancyGrid {
    let hi = Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64);
    let mut g = OccupancyGrid::build(Vec3::ZERO, hi, 1.0, &[], 0.0, DEFAULT_MAX_CELLS).unwrap();
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                if rng.random::<f64>() < p {
                    g.set_blocked(CellIndex::new(i, j, k), true);
                }
            }
        }
    }
    g
}

pub fn random_free_cell(g: &OccupancyGrid, rng: &mut impl Rng) -> Option<CellIndex> {
    let d = g.dims();
    for _ in 0..1000 {
        let c = CellIndex::new(rng.random_range(0..d[0]), rng.random_range(0..d[1]), rng.random_range(0..d[2]));
        if !g.is_blocked(c) {
            return Some(c);
        }
    }
    None
}

pub fn random_connectivity(rng: &mut impl Rng) -> Connectivity {
    if rng.random::<bool>() {
        Connectivity::Six
    } else {
        Connectivity::TwentySix
    }
}

/// Metric cost matrices from random points in a 100 m cube: robots and
/// goals uniformly placed, costs are straight-line distances.
pub fn random_metric_matrices(robots: usize, goals: usize, rng: &mut impl Rng) -> CostMatrices {
    let pt = |rng: &mut dyn rand::RngCore| Vec3::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), rng.random_range(0.0..20.0));
    let rp: Vec<Vec3> = (0..robots).map(|_| pt(rng)).collect();
    let gp: Vec<Vec3> = (0..goals).map(|_| pt(rng)).collect();
    let c_rg = rp.iter().map(|r| gp.iter().map(|g| r.distance(*g)).collect()).collect();
    let c_gg = gp.iter().map(|a| gp.iter().map(|b| a.distance(*b)).collect()).collect();
    let mut m = CostMatrices::from_costs(c_rg, c_gg);
    m.robot_positions = rp;
    m.goal_positions = gp;
    m
}

pub fn random_problem(robots: usize, goals: usize, rng: &mut impl Rng) -> FilteredProblem {
    filter_unreachable(&random_metric_matrices(robots, goals, rng)).unwrap()
}

/// Cluttered two-robot scenario: a 24 x 24 x 8 m box with random pillars
/// and floating blocks, robots and goals placed in free space.
pub fn random_cluttered_scenario(goals: usize, rng: &mut impl Rng) -> Scenario {
    let lo = Vec3::ZERO;
    let hi = Vec3::new(24.0, 24.0, 8.0);
    let safety = SafetyParams { r_r: 0.25, phi: 1.5, clearance_margin: 0.1 };
    let n_obs = rng.random_range(3..7);
    let mut obstacles = Vec::new();
    for _ in 0..n_obs {
        let c = Vec3::new(rng.random_range(4.0..20.0), rng.random_range(4.0..20.0), 0.0);
        let w = Vec3::new(rng.random_range(1.0..4.0), rng.random_range(1.0..4.0), 0.0);
        let z_hi = rng.random_range(3.0..8.0);
        obstacles.push(BoxObstacle::new(Vec3::new(c.x - w.x / 2.0, c.y - w.y / 2.0, 0.0), Vec3::new(c.x + w.x / 2.0, c.y + w.y / 2.0, z_hi)));
    }
    let clear = |p: Vec3, obstacles: &[BoxObstacle]| obstacles.iter().all(|o| o.signed_distance(p) > 1.0);
    let place = |rng: &mut dyn rand::RngCore, margin: f64| loop {
        let p = Vec3::new(
            rng.random_range(margin..24.0 - margin),
            rng.random_range(margin..24.0 - margin),
            rng.random_range(1.0..7.0),
        );
        if clear(p, &obstacles) {
            return p;
        }
    };
    let robots = vec![
        Robot { id: 1, start: Vec3::new(1.5, 1.5, 1.5) },
        Robot { id: 2, start: Vec3::new(22.5, 22.5, 1.5) },
    ];
    let goals = (0..goals).map(|_| place(rng, 1.5)).collect();
    Scenario {
        bounds: Bounds { min: lo, max: hi },
        obstacles: obstacles.clone(),
        robots,
        goals,
        safety,
        dynamics: limits(1.0, 1.0),
        grid: GridParams { resolution: 0.5, connectivity: Connectivity::TwentySix },
        ipso: None,
    }
}

pub mod snap;

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
