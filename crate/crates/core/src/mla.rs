//! Multiple linear assignment seeding.
//!
//! Each robot is replicated into `slots_per_robot` identical slots and goals
//! are matched to slots by a rectangular linear assignment over first-hop
//! costs. Each robot's goal set is then sequenced by nearest neighbor and
//! improved with 2-opt on the closed tour.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{CostMatrices, FilteredProblem};
use crate::ipso::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlaConfig {
    /// Slots per robot; `None` means `ceil(G / R)`. Values too small to cover
    /// every goal are raised to that minimum.
    pub slots_per_robot: Option<usize>,
    /// Run 2-opt on each tour after nearest-neighbor construction.
    pub local_improve: bool,
    /// Half-width of the multiplicative slot-cost noise used for randomized
    /// seeds.
    pub noise: f64,
}

impl Default for MlaConfig {
    fn default() -> Self {
        Self { slots_per_robot: None, local_improve: true, noise: 0.01 }
    }
}

impl MlaConfig {
    pub fn slots(&self, robots: usize, goals: usize) -> usize {
        let min = goals.div_ceil(robots).max(1);
        self.slots_per_robot.map_or(min, |s| s.max(min))
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows <= cols`), by shortest augmenting paths with dual potentials.
/// Returns the column chosen for each row and the total cost.
pub fn solve_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs at least as many columns as rows");

    // infinite entries become a finite penalty larger than any finite matching
    let finite_max = cost.iter().flatten().filter(|c| c.is_finite()).fold(0.0f64, |a, &c| a.max(c.abs()));
    let big = (finite_max + 1.0) * (n as f64 + 1.0) * 1e3;
    let c = |i: usize, j: usize| {
        let v = cost[i][j];
        if v.is_finite() { v } else { big }
    };

    // 1-based arrays; row/column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (assign, total)
}

/// Result of the slot assignment: one goal set per robot (ascending goal
/// index) and the total slot cost of the matching.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotAssignment {
    pub goal_sets: Vec<Vec<usize>>,
    pub cost: f64,
}

/// Slot costs for the replicated-robot assignment; rows are goals, columns
/// are slots `robot * slots + k`. With `rng`, each entry gets independent
/// multiplicative noise in `[1 - noise, 1 + noise]`.
pub fn slot_costs<R: Rng + ?Sized>(m: &CostMatrices, slots: usize, noise: f64, mut rng: Option<&mut R>) -> Vec<Vec<f64>> {
    let nr = m.num_robots();
    let ng = m.num_goals();
    let mut out = vec![vec![0.0; nr * slots]; ng];
    for (j, row) in out.iter_mut().enumerate() {
        for i in 0..nr {
            for k in 0..slots {
                let base = m.c_rg[i][j];
                let factor = match rng.as_deref_mut() {
                    Some(r) if noise > 0.0 => 1.0 + r.random_range(-noise..=noise),
                    _ => 1.0,
                };
                row[i * slots + k] = base * factor;
            }
        }
    }
    out
}

pub fn mla_assign<R: Rng + ?Sized>(fp: &FilteredProblem, cfg: &MlaConfig, rng: Option<&mut R>) -> SlotAssignment {
    let m = &fp.matrices;
    let nr = m.num_robots();
    let ng = m.num_goals();
    assert!(nr >= 1 && ng >= 1, "assignment needs a non-empty problem");
    let slots = cfg.slots(nr, ng);
    let costs = slot_costs(m, slots, cfg.noise, rng);
    let (assign, _) = solve_assignment(&costs);
    let mut goal_sets = vec![Vec::new(); nr];
    let mut cost = 0.0;
    for (j, &slot) in assign.iter().enumerate() {
        let robot = slot / slots;
        assert!(m.c_rg[robot][j].is_finite(), "filtered goals always have a finite slot");
        goal_sets[robot].push(j);
        cost += costs[j][slot];
    }
    SlotAssignment { goal_sets, cost }
}

/// Closed-tour length: start -> goals in order -> start.
pub fn closed_tour_length(robot: usize, tour: &[usize], m: &CostMatrices) -> f64 {
    let (Some(&first), Some(&last)) = (tour.first(), tour.last()) else {
        return 0.0;
    };
    let mut total = m.c_rg[robot][first];
    for w in tour.windows(2) {
        total += m.c_gg[w[0]][w[1]];
    }
    total + m.c_rg[robot][last]
}

/// Nearest-neighbor order from the robot's start. Exact ties go to the lower
/// goal index, or to a uniformly random tied goal when `rng` is given.
pub fn nearest_neighbor_order<R: Rng + ?Sized>(
    robot: usize,
    goals: &[usize],
    m: &CostMatrices,
    mut rng: Option<&mut R>,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = goals.to_vec();
    remaining.sort_unstable();
    let mut order = Vec::with_capacity(goals.len());
    let mut prev: Option<usize> = None;
    while !remaining.is_empty() {
        let leg = |g: usize| match prev {
            None => m.c_rg[robot][g],
            Some(p) => m.c_gg[p][g],
        };
        let best = remaining.iter().map(|&g| leg(g)).fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = (0..remaining.len()).filter(|&k| leg(remaining[k]) == best).collect();
        let pick = match (rng.as_deref_mut(), tied.len()) {
            (Some(r), n) if n > 1 => tied[r.random_range(0..n)],
            _ => tied.first().copied().unwrap_or(0),
        };
        let g = remaining.remove(pick);
        order.push(g);
        prev = Some(g);
    }
    order
}

/// 2-opt on the closed tour until no segment reversal strictly shortens it.
pub fn two_opt(robot: usize, tour: &mut [usize], m: &CostMatrices) {
    let n = tour.len();
    if n < 2 {
        return;
    }
    let mut best = closed_tour_length(robot, tour, m);
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                tour[i..=j].reverse();
                let cand = closed_tour_length(robot, tour, m);
                if cand < best && (best - cand) > 1e-12 * best.abs() {
                    best = cand;
                    improved = true;
                } else {
                    tour[i..=j].reverse();
                }
            }
        }
        if !improved {
            break;
        }
    }
}

pub fn order_tour<R: Rng + ?Sized>(
    robot: usize,
    goals: &[usize],
    m: &CostMatrices,
    cfg: &MlaConfig,
    rng: Option<&mut R>,
) -> Vec<usize> {
    let mut tour = nearest_neighbor_order(robot, goals, m, rng);
    if cfg.local_improve {
        two_opt(robot, &mut tour, m);
    }
    tour
}

/// Assignment plus sequencing, composed into a feasible plan. Without `rng`
/// the result is deterministic; with it, slot costs are perturbed and
/// nearest-neighbor ties are broken randomly.
pub fn mla_seed_plan<R: Rng + ?Sized>(fp: &FilteredProblem, cfg: &MlaConfig, mut rng: Option<&mut R>) -> Plan {
    let assignment = mla_assign(fp, cfg, rng.as_deref_mut());
    let tours: Vec<Vec<usize>> = assignment
        .goal_sets
        .iter()
        .enumerate()
        .map(|(i, set)| order_tour(i, set, &fp.matrices, cfg, rng.as_deref_mut()))
        .collect();
    Plan::from_tours(&tours)
}

/// Source of MLA plans for swarm injection: fresh noisy solutions or a
/// round-robin over a fixed set of initial seeds.
#[derive(Debug, Clone)]
pub struct MlaSeeder<'a> {
    fp: &'a FilteredProblem,
    cfg: MlaConfig,
    reuse: Option<(Vec<Plan>, usize)>,
}

impl<'a> MlaSeeder<'a> {
    pub fn fresh(fp: &'a FilteredProblem, cfg: MlaConfig) -> Self {
        Self { fp, cfg, reuse: None }
    }

    pub fn reusing(fp: &'a FilteredProblem, cfg: MlaConfig, seeds: Vec<Plan>) -> Self {
        assert!(!seeds.is_empty(), "seed reuse needs at least one plan");
        Self { fp, cfg, reuse: Some((seeds, 0)) }
    }

    pub fn next_plan<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Plan {
        match &mut self.reuse {
            Some((seeds, cursor)) => {
                let p = seeds[*cursor % seeds.len()].clone();
                *cursor += 1;
                p
            }
            None => mla_seed_plan(self.fp, &self.cfg, Some(rng)),
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::costs::filter_unreachable;

    type NoRng = ChaCha8Rng;

    fn problem(c_rg: Vec<Vec<f64>>, c_gg: Vec<Vec<f64>>) -> FilteredProblem {
        filter_unreachable(&CostMatrices::from_costs(c_rg, c_gg)).unwrap()
    }

    #[test]
    fn dominant_diagonal_assignment() {
        let fp = problem(vec![vec![1.0, 9.0], vec![9.0, 1.0]], vec![vec![0.0, 5.0], vec![5.0, 0.0]]);
        let a = mla_assign(&fp, &MlaConfig::default(), None::<&mut NoRng>);
        assert_eq!(a.goal_sets, vec![vec![0], vec![1]]);
        assert_eq!(a.cost, 2.0);
    }

    #[test]
    fn single_robot_takes_everything() {
        let c_gg = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let fp = problem(vec![vec![1.0, 2.0, 3.0]], c_gg);
        let a = mla_assign(&fp, &MlaConfig::default(), None::<&mut NoRng>);
        assert_eq!(a.goal_sets, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn assignment_handles_rectangular_and_infinite() {
        let inf = f64::INFINITY;
        let cost = vec![vec![4.0, inf, 1.0], vec![2.0, 3.0, inf]];
        let (a, total) = solve_assignment(&cost);
        assert_eq!(a, vec![2, 0]);
        assert_eq!(total, 3.0);
    }

    #[test]
    fn collinear_goals_visited_nearest_first() {
        // start at 0, goals at 1, 2, 3 on a line
        let pos = [1.0f64, 2.0, 3.0];
        let c_rg = vec![pos.to_vec()];
        let c_gg = pos.iter().map(|a| pos.iter().map(|b| (a - b).abs()).collect()).collect();
        let m = CostMatrices::from_costs(c_rg, c_gg);
        let t = order_tour(0, &[2, 0, 1], &m, &MlaConfig::default(), None::<&mut NoRng>);
        assert_eq!(t, vec![0, 1, 2]);
    }

    #[test]
    fn single_goal_tour() {
        let m = CostMatrices::from_costs(vec![vec![3.0]], vec![vec![0.0]]);
        assert_eq!(order_tour(0, &[0], &m, &MlaConfig::default(), None::<&mut NoRng>), vec![0]);
    }

    #[test]
    fn too_few_slots_are_raised() {
        let cfg = MlaConfig { slots_per_robot: Some(1), ..Default::default() };
        assert_eq!(cfg.slots(2, 7), 4);
        assert_eq!(MlaConfig::default().slots(3, 6), 2);
    }

    #[test]
    fn noise_free_seed_is_deterministic() {
        let c_rg = vec![vec![1.0, 4.0, 2.0, 6.0], vec![5.0, 1.0, 3.0, 2.0]];
        let c_gg = vec![
            vec![0.0, 3.0, 1.0, 5.0],
            vec![3.0, 0.0, 2.0, 1.0],
            vec![1.0, 2.0, 0.0, 4.0],
            vec![5.0, 1.0, 4.0, 0.0],
        ];
        let fp = problem(c_rg, c_gg);
        let a = mla_seed_plan(&fp, &MlaConfig::default(), None::<&mut NoRng>);
        let b = mla_seed_plan(&fp, &MlaConfig::default(), None::<&mut NoRng>);
        assert_eq!(a, b);
        assert!(a.is_feasible(4, 2));
    }

    #[test]
    fn reusing_seeder_cycles() {
        let fp = problem(vec![vec![1.0, 2.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p1 = Plan::from_tours(&[vec![0, 1]]);
        let p2 = Plan::from_tours(&[vec![1, 0]]);
        let mut s = MlaSeeder::reusing(&fp, MlaConfig::default(), vec![p1.clone(), p2.clone()]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.next_plan(&mut rng), p1);
        assert_eq!(s.next_plan(&mut rng), p2);
        assert_eq!(s.next_plan(&mut rng), p1);
    }
}
