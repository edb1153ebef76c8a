//! Brute-force reference solvers for small instances: uniform-cost grid
//! search and exhaustive makespan enumeration.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::CostMatrices;
use crate::error::{Error, Result};
use crate::grid::{canonical_length, CellIndex, OccupancyGrid};
use crate::ipso::Plan;
use crate::scenario::{Connectivity, DynamicsLimits};

pub const DEFAULT_MAX_GOALS: usize = 8;

/// Uniform-cost search over the same move set as `shortest_path`: 6 or 26
/// neighbors, no move may pass through a blocked face/edge neighbor. Path
/// length is tracked as move counts per kind so the returned cost is exact.
/// Returns `None` when unreachable or an endpoint is blocked.
pub fn dijkstra_path(grid: &OccupancyGrid, start: CellIndex, goal: CellIndex, conn: Connectivity) -> Option<f64> {
    let [nx, ny, nz] = grid.dims();
    let free = |i: isize, j: isize, k: isize| {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < nx
            && (j as usize) < ny
            && (k as usize) < nz
            && !grid.is_blocked(CellIndex::new(i as usize, j as usize, k as usize))
    };
    let id = |c: CellIndex| (c.i * ny + c.j) * nz + c.k;
    if !free(start.i as isize, start.j as isize, start.k as isize) || !free(goal.i as isize, goal.j as isize, goal.k as isize)
    {
        return None;
    }
    let res = grid.resolution();
    let len = |c: [usize; 3]| canonical_length(c, res);

    let mut moves = Vec::new();
    for di in -1isize..=1 {
        for dj in -1isize..=1 {
            for dk in -1isize..=1 {
                let axes = usize::from(di != 0) + usize::from(dj != 0) + usize::from(dk != 0);
                if axes == 0 || (conn == Connectivity::Six && axes > 1) {
                    continue;
                }
                moves.push(([di, dj, dk], axes));
            }
        }
    }

    let mut best: Vec<Option<[usize; 3]>> = vec![None; nx * ny * nz];
    let mut done = vec![false; nx * ny * nz];
    let mut heap = BinaryHeap::new();
    best[id(start)] = Some([0, 0, 0]);
    heap.push(Reverse((OrderedFloat(0.0), [0usize; 3], [start.i, start.j, start.k])));
    while let Some(Reverse((_, counts, [i, j, k]))) = heap.pop() {
        let c = CellIndex::new(i, j, k);
        if done[id(c)] {
            continue;
        }
        done[id(c)] = true;
        if c == goal {
            return Some(len(counts));
        }
        let (si, sj, sk) = (i as isize, j as isize, k as isize);
        for &(d, axes) in &moves {
            let (ti, tj, tk) = (si + d[0], sj + d[1], sk + d[2]);
            if !free(ti, tj, tk) {
                continue;
            }
            // every partial step of a diagonal move must land on a free cell
            let corners_free = (0..8u8).all(|mask| {
                let pick = |a: usize| if mask & (1 << a) != 0 { d[a] } else { 0 };
                let (pi, pj, pk) = (pick(0), pick(1), pick(2));
                let partial = (pi, pj, pk) != (0, 0, 0) && (pi, pj, pk) != (d[0], d[1], d[2]);
                !partial || free(si + pi, sj + pj, sk + pk)
            });
            if !corners_free {
                continue;
            }
            let t = CellIndex::new(ti as usize, tj as usize, tk as usize);
            if done[id(t)] {
                continue;
            }
            let mut nc = counts;
            nc[axes - 1] += 1;
            if best[id(t)].is_none_or(|b| len(nc) < len(b)) {
                best[id(t)] = Some(nc);
                heap.push(Reverse((OrderedFloat(len(nc)), nc, [t.i, t.j, t.k])));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimal_makespan: f64,
    /// Every plan achieving the optimum, in lexicographic (perm, breakpoints)
    /// order.
    pub plans: Vec<Plan>,
    pub nodes_enumerated: u64,
}

/// Number of plans for `goals` goals and `robots` robots:
/// `G! * C(G + R - 1, R - 1)`.
pub fn plan_count(goals: usize, robots: usize) -> u64 {
    let fact: u64 = (1..=goals as u64).product();
    let mut comb = 1u64;
    for k in 1..robots as u64 {
        comb = comb * (goals as u64 + k) / k;
    }
    fact * comb
}

/// Closed-tour length with the legs added in ascending order, so tours that
/// use the same legs in a different order compare exactly equal.
fn tour_cost(robot: usize, tour: &[usize], m: &CostMatrices) -> f64 {
    let (Some(&first), Some(&last)) = (tour.first(), tour.last()) else {
        return 0.0;
    };
    let mut legs = Vec::with_capacity(tour.len() + 1);
    legs.push(m.c_rg[robot][first]);
    legs.extend(tour.windows(2).map(|w| m.c_gg[w[0]][w[1]]));
    legs.push(m.c_rg[robot][last]);
    legs.sort_by(f64::total_cmp);
    legs.iter().sum()
}

fn plan_makespan(perm: &[usize], cuts: &[usize], m: &CostMatrices) -> f64 {
    let mut worst = 0.0f64;
    let mut lo = 0;
    for (r, &hi) in cuts.iter().chain(std::iter::once(&perm.len())).enumerate() {
        worst = worst.max(tour_cost(r, &perm[lo..hi], m));
        lo = hi;
    }
    worst
}

/// Advance to the next lexicographic permutation; false after the last.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Advance non-decreasing cut positions in `0..=g`; false after the last.
fn next_cuts(c: &mut [usize], g: usize) -> bool {
    let Some(i) = (0..c.len()).rev().find(|&i| c[i] < g) else {
        return false;
    };
    c[i] += 1;
    let v = c[i];
    for x in &mut c[i + 1..] {
        *x = v;
    }
    true
}

/// Exact minimum makespan by enumerating every goal permutation and every
/// split into per-robot tours. Work is split by the first goal of the
/// permutation and merged in order.
pub fn exhaustive_makespan(m: &CostMatrices, limits: &DynamicsLimits, max_goals: usize) -> Result<OracleResult> {
    let g = m.num_goals();
    let r = m.num_robots();
    if g > max_goals {
        return Err(Error::TooLarge { goals: g, max: max_goals });
    }
    if g == 0 || r == 0 {
        return Err(Error::EmptyProblem("oracle needs at least one robot and one goal".to_string()));
    }

    let parts: Vec<(f64, Vec<Plan>, u64)> = (0..g)
        .into_par_iter()
        .map(|first| {
            let mut perm: Vec<usize> = std::iter::once(first).chain((0..g).filter(|&x| x != first)).collect();
            let mut best = f64::INFINITY;
            let mut plans = Vec::new();
            let mut nodes = 0u64;
            loop {
                let mut cuts = vec![0usize; r - 1];
                loop {
                    nodes += 1;
                    let v = plan_makespan(&perm, &cuts, m);
                    if v < best {
                        best = v;
                        plans.clear();
                    }
                    if v == best {
                        plans.push(Plan { perm: perm.clone(), breakpoints: cuts.clone() });
                    }
                    if !next_cuts(&mut cuts, g) {
                        break;
                    }
                }
                if !next_permutation(&mut perm[1..]) {
                    break;
                }
            }
            (best, plans, nodes)
        })
        .collect();

    let best = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let nodes_enumerated = parts.iter().map(|p| p.2).sum();
    let plans = parts.into_iter().filter(|p| p.0 == best).flat_map(|p| p.1).collect();
    Ok(OracleResult { optimal_makespan: best / limits.v_max, plans, nodes_enumerated })
}
