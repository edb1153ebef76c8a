//! Robots-to-goals and goals-to-goals travel-cost matrices.
//!
//! Entries are path lengths in meters; `UNREACHABLE` (+inf) marks pairs with
//! no obstacle-free path. IEEE infinity saturates under addition, so tour sums
//! over unreachable legs stay unreachable.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::{shortest_path, CellIndex, GeometricPath, OccupancyGrid};
use crate::scenario::{Connectivity, Scenario};

pub const UNREACHABLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrices {
    /// Scenario robot ids, one per row of `c_rg`.
    pub robot_ids: Vec<u32>,
    /// Scenario goal indices, one per column of `c_rg`.
    pub goal_ids: Vec<usize>,
    pub robot_positions: Vec<Vec3>,
    pub goal_positions: Vec<Vec3>,
    pub c_rg: Vec<Vec<f64>>,
    pub c_gg: Vec<Vec<f64>>,
    pub paths_rg: Vec<Vec<Option<GeometricPath>>>,
    pub paths_gg: Vec<Vec<Option<GeometricPath>>>,
}

impl CostMatrices {
    pub fn num_robots(&self) -> usize {
        self.c_rg.len()
    }

    pub fn num_goals(&self) -> usize {
        self.c_gg.len()
    }

    /// Matrices built directly from numbers, with no stored paths. Used for
    /// optimizer-only workloads and tests.
    pub fn from_costs(c_rg: Vec<Vec<f64>>, c_gg: Vec<Vec<f64>>) -> CostMatrices {
        let r = c_rg.len();
        let g = c_gg.len();
        CostMatrices {
            robot_ids: (0..r as u32).collect(),
            goal_ids: (0..g).collect(),
            robot_positions: vec![Vec3::ZERO; r],
            goal_positions: vec![Vec3::ZERO; g],
            paths_rg: vec![vec![None; g]; r],
            paths_gg: vec![vec![None; g]; g],
            c_rg,
            c_gg,
        }
    }

    /// Matrices restricted to the given robot rows and goal columns.
    pub fn restrict(&self, robots: &[usize], goals: &[usize]) -> CostMatrices {
        let pick_row = |m: &Vec<Vec<f64>>, i: usize| goals.iter().map(|&j| m[i][j]).collect::<Vec<_>>();
        let pick_paths =
            |m: &Vec<Vec<Option<GeometricPath>>>, i: usize| goals.iter().map(|&j| m[i][j].clone()).collect::<Vec<_>>();
        CostMatrices {
            robot_ids: robots.iter().map(|&i| self.robot_ids[i]).collect(),
            goal_ids: goals.iter().map(|&j| self.goal_ids[j]).collect(),
            robot_positions: robots.iter().map(|&i| self.robot_positions[i]).collect(),
            goal_positions: goals.iter().map(|&j| self.goal_positions[j]).collect(),
            c_rg: robots.iter().map(|&i| pick_row(&self.c_rg, i)).collect(),
            c_gg: goals.iter().map(|&p| pick_row(&self.c_gg, p)).collect(),
            paths_rg: robots.iter().map(|&i| pick_paths(&self.paths_rg, i)).collect(),
            paths_gg: goals.iter().map(|&p| pick_paths(&self.paths_gg, p)).collect(),
        }
    }

    /// Every matrix entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CostMatrices {
        let scale = |m: &Vec<Vec<f64>>| m.iter().map(|r| r.iter().map(|c| c * factor).collect()).collect();
        CostMatrices { c_rg: scale(&self.c_rg), c_gg: scale(&self.c_gg), ..self.clone() }
    }

    pub fn rg_csv(&self) -> String {
        let rows: Vec<String> = self.robot_ids.iter().map(|id| format!("r{id}")).collect();
        matrix_csv("robot", &rows, &self.goal_headers(), &self.c_rg)
    }

    pub fn gg_csv(&self) -> String {
        let heads = self.goal_headers();
        matrix_csv("goal", &heads, &heads, &self.c_gg)
    }

    fn goal_headers(&self) -> Vec<String> {
        self.goal_ids.iter().map(|id| format!("g{id}")).collect()
    }
}

fn matrix_csv(corner: &str, rows: &[String], cols: &[String], m: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(corner);
    for c in cols {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (name, row) in rows.iter().zip(m) {
        out.push_str(name);
        for v in row {
            if v.is_finite() {
                write!(out, ",{v}").unwrap();
            } else {
                out.push_str(",inf");
            }
        }
        out.push('\n');
    }
    out
}

fn free_cell(g: &OccupancyGrid, p: Vec3) -> Option<CellIndex> {
    g.world_to_cell(p).ok().filter(|&c| !g.is_blocked(c))
}

fn search(g: &OccupancyGrid, a: Option<CellIndex>, b: Option<CellIndex>, conn: Connectivity) -> Option<GeometricPath> {
    let (a, b) = (a?, b?);
    shortest_path(g, a, b, conn).ok().flatten()
}

/// Runs one A* search per robot-goal pair and per unordered goal pair
/// (upper triangle, mirrored). Searches run in parallel; results are merged
/// by index, so the output does not depend on the worker count.
pub fn build_cost_matrices(g: &OccupancyGrid, s: &Scenario) -> CostMatrices {
    let conn = s.grid.connectivity;
    let robot_cells: Vec<_> = s.robots.iter().map(|r| free_cell(g, r.start)).collect();
    let goal_cells: Vec<_> = s.goals.iter().map(|&p| free_cell(g, p)).collect();
    let nr = s.robots.len();
    let ng = s.goals.len();

    let rg_pairs: Vec<(usize, usize)> = (0..nr).flat_map(|i| (0..ng).map(move |j| (i, j))).collect();
    let rg: Vec<Option<GeometricPath>> = rg_pairs
        .par_iter()
        .map(|&(i, j)| search(g, robot_cells[i], goal_cells[j], conn))
        .collect();

    let gg_pairs: Vec<(usize, usize)> = (0..ng).flat_map(|p| (p + 1..ng).map(move |q| (p, q))).collect();
    let gg: Vec<Option<GeometricPath>> = gg_pairs
        .par_iter()
        .map(|&(p, q)| search(g, goal_cells[p], goal_cells[q], conn))
        .collect();

    let cost = |p: &Option<GeometricPath>| p.as_ref().map_or(UNREACHABLE, |p| p.cost);

    let mut c_rg = vec![vec![UNREACHABLE; ng]; nr];
    let mut paths_rg = vec![vec![None; ng]; nr];
    for (&(i, j), path) in rg_pairs.iter().zip(rg) {
        c_rg[i][j] = cost(&path);
        paths_rg[i][j] = path;
    }

    let mut c_gg = vec![vec![UNREACHABLE; ng]; ng];
    let mut paths_gg: Vec<Vec<Option<GeometricPath>>> = vec![vec![None; ng]; ng];
    for p in 0..ng {
        if let Some(c) = goal_cells[p] {
            c_gg[p][p] = 0.0;
            paths_gg[p][p] = Some(crate::grid::path_from_cells(g, vec![c]));
        }
    }
    for (&(p, q), path) in gg_pairs.iter().zip(gg) {
        let c = cost(&path);
        c_gg[p][q] = c;
        c_gg[q][p] = c;
        paths_gg[q][p] = path.as_ref().map(GeometricPath::reversed);
        paths_gg[p][q] = path;
    }
    // diagonal is zero by definition, even for a sealed goal
    for (p, row) in c_gg.iter_mut().enumerate() {
        row[p] = 0.0;
    }

    CostMatrices {
        robot_ids: s.robots.iter().map(|r| r.id).collect(),
        goal_ids: (0..ng).collect(),
        robot_positions: s.robots.iter().map(|r| r.start).collect(),
        goal_positions: s.goals.clone(),
        c_rg,
        c_gg,
        paths_rg,
        paths_gg,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredProblem {
    /// Matrices restricted to the active robots and goals.
    pub matrices: CostMatrices,
    /// Row indices (into the input matrices) of retained robots.
    pub active_robots: Vec<usize>,
    /// Column indices (into the input matrices) of retained goals.
    pub active_goals: Vec<usize>,
    pub dropped_goals: Vec<(usize, String)>,
    pub dropped_robots: Vec<(usize, String)>,
}

impl FilteredProblem {
    pub fn num_robots(&self) -> usize {
        self.matrices.num_robots()
    }

    pub fn num_goals(&self) -> usize {
        self.matrices.num_goals()
    }
}

/// Drops goals no robot can reach and robots that reach no goal.
pub fn filter_unreachable(m: &CostMatrices) -> Result<FilteredProblem> {
    let nr = m.num_robots();
    let ng = m.num_goals();
    let mut active_goals = Vec::new();
    let mut dropped_goals = Vec::new();
    for j in 0..ng {
        if (0..nr).any(|i| m.c_rg[i][j].is_finite()) {
            active_goals.push(j);
        } else {
            dropped_goals.push((j, "unreachable from all robots".to_string()));
        }
    }
    let mut active_robots = Vec::new();
    let mut dropped_robots = Vec::new();
    for i in 0..nr {
        if active_goals.iter().any(|&j| m.c_rg[i][j].is_finite()) {
            active_robots.push(i);
        } else {
            dropped_robots.push((i, "cannot reach any goal".to_string()));
        }
    }
    if active_goals.is_empty() {
        return Err(Error::EmptyProblem(format!("all {ng} goals are unreachable")));
    }
    Ok(FilteredProblem {
        matrices: m.restrict(&active_robots, &active_goals),
        active_robots,
        active_goals,
        dropped_goals,
        dropped_robots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_connected_drops_nothing() {
        let m = CostMatrices::from_costs(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let f = filter_unreachable(&m).unwrap();
        assert!(f.dropped_goals.is_empty() && f.dropped_robots.is_empty());
        assert_eq!(f.matrices, m);
    }

    #[test]
    fn all_goals_unreachable_is_empty_problem() {
        let m = CostMatrices::from_costs(vec![vec![UNREACHABLE]], vec![vec![0.0]]);
        assert!(matches!(filter_unreachable(&m), Err(Error::EmptyProblem(_))));
    }

    #[test]
    fn unreachable_goal_is_dropped_with_reason() {
        let m = CostMatrices::from_costs(
            vec![vec![1.0, UNREACHABLE, 2.0]],
            vec![vec![0.0, UNREACHABLE, 1.0], vec![UNREACHABLE, 0.0, UNREACHABLE], vec![1.0, UNREACHABLE, 0.0]],
        );
        let f = filter_unreachable(&m).unwrap();
        assert_eq!(f.active_goals, vec![0, 2]);
        assert_eq!(f.dropped_goals, vec![(1, "unreachable from all robots".to_string())]);
        assert_eq!(f.matrices.goal_ids, vec![0, 2]);
        assert_eq!(f.matrices.c_gg, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn csv_prints_inf() {
        let m = CostMatrices::from_costs(vec![vec![1.5, UNREACHABLE]], vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert_eq!(m.rg_csv(), "robot,g0,g1\nr0,1.5,inf\n");
        assert_eq!(m.gg_csv(), "goal,g0,g1\ng0,0,2\ng1,2,0\n");
    }
}
