//! Voxel occupancy grid and A* search over it.
//!
//! Cells are indexed `(i, j, k)` along x, y, z and stored row-major with `k`
//! varying fastest. Edge weights are center-to-center Euclidean distances, so
//! a move touching `n` axes costs `sqrt(n) * resolution`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::path::Path;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoxObstacle, Vec3};
use crate::scenario::{Connectivity, Scenario};

pub const DEFAULT_MAX_CELLS: u64 = 50_000_000;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl CellIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }

    pub fn as_array(self) -> [usize; 3] {
        [self.i, self.j, self.k]
    }

    /// Number of axes along which `self` and `o` differ, if they are
    /// 26-neighbors (or equal); `None` otherwise.
    pub fn axes_differing(self, o: CellIndex) -> Option<usize> {
        let mut n = 0;
        for (a, b) in self.as_array().into_iter().zip(o.as_array()) {
            match a.abs_diff(b) {
                0 => {}
                1 => n += 1,
                _ => return None,
            }
        }
        Some(n)
    }
}

/// Length of a grid move touching `axes` axes.
pub fn edge_length(axes: usize, resolution: f64) -> f64 {
    match axes {
        0 => 0.0,
        1 => resolution,
        2 => SQRT_2 * resolution,
        3 => SQRT_3 * resolution,
        _ => unreachable!("a grid move touches at most three axes"),
    }
}

/// Total length of a path with the given per-kind move counts, summed in a
/// fixed order so that equal-length paths report bit-identical costs.
pub fn canonical_length(counts: [usize; 3], resolution: f64) -> f64 {
    (counts[0] as f64 + counts[1] as f64 * SQRT_2 + counts[2] as f64 * SQRT_3) * resolution
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricPath {
    pub cells: Vec<CellIndex>,
    pub waypoints: Vec<Vec3>,
    pub cost: f64,
}

impl GeometricPath {
    pub fn reversed(&self) -> GeometricPath {
        let mut cells = self.cells.clone();
        cells.reverse();
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        GeometricPath { cells, waypoints, cost: self.cost }
    }

    pub fn polyline_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    dims: [usize; 3],
    resolution: f64,
    origin: Vec3,
    upper: Vec3,
    blocked: Vec<bool>,
    inflation_radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpHeader {
    dims: [usize; 3],
    resolution: f64,
    origin: Vec3,
    inflation_radius: f64,
    layout: String,
}

/// Grid for a scenario. Obstacles are dilated by the body radius plus the
/// clearance margin so that every free cell center keeps the required
/// obstacle clearance.
pub fn build_grid(s: &Scenario) -> Result<OccupancyGrid> {
    build_grid_with_cap(s, DEFAULT_MAX_CELLS)
}

pub fn build_grid_with_cap(s: &Scenario, max_cells: u64) -> Result<OccupancyGrid> {
    OccupancyGrid::build(
        s.bounds.min,
        s.bounds.max,
        s.grid.resolution,
        &s.obstacles,
        s.safety.r_r + s.safety.clearance_margin,
        max_cells,
    )
}

impl OccupancyGrid {
    /// Voxelize `[lo, hi]`. A cell is blocked when its volume overlaps an
    /// obstacle or its center lies within `inflation_radius` of one.
    pub fn build(
        lo: Vec3,
        hi: Vec3,
        resolution: f64,
        obstacles: &[BoxObstacle],
        inflation_radius: f64,
        max_cells: u64,
    ) -> Result<OccupancyGrid> {
        let mut dims = [0usize; 3];
        let mut cells: u64 = 1;
        for a in 0..3 {
            let extent = (hi[a] - lo[a]) / resolution;
            // absorb rounding so exact multiples do not gain a sliver cell
            let n = ((extent - 1e-9).ceil().max(1.0)) as u64;
            cells = cells.saturating_mul(n);
            dims[a] = n as usize;
        }
        if cells > max_cells {
            return Err(Error::GridTooLarge { cells, cap: max_cells });
        }
        let mut grid = OccupancyGrid {
            dims,
            resolution,
            origin: lo,
            upper: hi,
            blocked: vec![false; cells as usize],
            inflation_radius,
        };
        let half = Vec3::new(resolution, resolution, resolution) * 0.5;
        for ob in obstacles {
            // only cells near the dilated box can be affected
            let pad = Vec3::new(inflation_radius, inflation_radius, inflation_radius);
            let (Some(c0), Some(c1)) = (
                grid.clamped_cell(ob.min_corner - pad - half),
                grid.clamped_cell(ob.max_corner + pad + half),
            ) else {
                continue;
            };
            for i in c0.i..=c1.i {
                for j in c0.j..=c1.j {
                    for k in c0.k..=c1.k {
                        let c = CellIndex::new(i, j, k);
                        let center = grid.cell_center(c);
                        let hit = ob.overlaps_open(center - half, center + half)
                            || ob.signed_distance(center) <= inflation_radius;
                        if hit {
                            let idx = grid.flat(c);
                            grid.blocked[idx] = true;
                        }
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn inflation_radius(&self) -> f64 {
        self.inflation_radius
    }

    pub fn num_cells(&self) -> usize {
        self.blocked.len()
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn flat(&self, c: CellIndex) -> usize {
        (c.i * self.dims[1] + c.j) * self.dims[2] + c.k
    }

    pub fn unflat(&self, idx: usize) -> CellIndex {
        let k = idx % self.dims[2];
        let rest = idx / self.dims[2];
        CellIndex::new(rest / self.dims[1], rest % self.dims[1], k)
    }

    pub fn in_grid(&self, c: CellIndex) -> bool {
        c.i < self.dims[0] && c.j < self.dims[1] && c.k < self.dims[2]
    }

    pub fn is_blocked(&self, c: CellIndex) -> bool {
        self.blocked[self.flat(c)]
    }

    pub fn set_blocked(&mut self, c: CellIndex, value: bool) {
        let idx = self.flat(c);
        self.blocked[idx] = value;
    }

    pub fn cell_center(&self, c: CellIndex) -> Vec3 {
        let r = self.resolution;
        self.origin
            + Vec3::new(
                (c.i as f64 + 0.5) * r,
                (c.j as f64 + 0.5) * r,
                (c.k as f64 + 0.5) * r,
            )
    }

    fn axis_index(&self, u: f64, n: usize) -> usize {
        // half-open on the lower side: a point on a shared face belongs to
        // the lower-index cell
        let idx = u.ceil() - 1.0;
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(n - 1)
        }
    }

    /// Cell containing `p`, or an error when `p` is outside the bounds.
    pub fn world_to_cell(&self, p: Vec3) -> Result<CellIndex> {
        let inside = p.is_finite() && (0..3).all(|a| p[a] >= self.origin[a] && p[a] <= self.upper[a]);
        if !inside {
            return Err(Error::OutOfBounds { x: p.x, y: p.y, z: p.z });
        }
        Ok(self.clamped_cell(p).expect("finite point"))
    }

    /// Like `world_to_cell` but clamps outside points onto the grid.
    pub fn clamped_cell(&self, p: Vec3) -> Option<CellIndex> {
        if !p.is_finite() {
            return None;
        }
        let r = self.resolution;
        Some(CellIndex::new(
            self.axis_index((p.x - self.origin.x) / r, self.dims[0]),
            self.axis_index((p.y - self.origin.y) / r, self.dims[1]),
            self.axis_index((p.z - self.origin.z) / r, self.dims[2]),
        ))
    }

    /// True if `p` is inside the grid volume and its cell is free.
    pub fn point_is_free(&self, p: Vec3) -> bool {
        match self.world_to_cell(p) {
            Ok(c) => !self.is_blocked(c),
            Err(_) => false,
        }
    }

    /// Samples the chord `a -> b` every `resolution / 10` and checks each
    /// sample lies in a free cell.
    pub fn segment_is_free(&self, a: Vec3, b: Vec3) -> bool {
        let len = a.distance(b);
        let steps = ((len / (self.resolution * 0.1)).ceil() as usize).max(1);
        (0..=steps).all(|s| self.point_is_free(a.lerp(b, s as f64 / steps as f64)))
    }

    /// Nearest free cell to `p` by center distance, searching outward up to
    /// `max_radius_cells` rings. Ties go to the lower flat index.
    pub fn nearest_free_cell(&self, p: Vec3, max_radius_cells: usize) -> Option<CellIndex> {
        let c = self.clamped_cell(p)?;
        let mut best: Option<(OrderedFloat<f64>, usize)> = None;
        let r = max_radius_cells as isize;
        for di in -r..=r {
            for dj in -r..=r {
                for dk in -r..=r {
                    let Some(n) = self.offset(c, [di, dj, dk]) else { continue };
                    if self.is_blocked(n) {
                        continue;
                    }
                    let key = (OrderedFloat(self.cell_center(n).distance(p)), self.flat(n));
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
            }
        }
        best.map(|(_, idx)| self.unflat(idx))
    }

    pub fn offset(&self, c: CellIndex, d: [isize; 3]) -> Option<CellIndex> {
        let i = c.i.checked_add_signed(d[0])?;
        let j = c.j.checked_add_signed(d[1])?;
        let k = c.k.checked_add_signed(d[2])?;
        let n = CellIndex::new(i, j, k);
        self.in_grid(n).then_some(n)
    }

    /// Whether the move `c -> c + d` is allowed: the target is free and, for
    /// diagonal moves, every cell reached by a proper subset of the move's
    /// axis steps is free too (no corner cutting).
    pub fn move_allowed(&self, c: CellIndex, d: [isize; 3]) -> Option<CellIndex> {
        let n = self.offset(c, d)?;
        if self.is_blocked(n) {
            return None;
        }
        let axes: Vec<usize> = (0..3).filter(|&a| d[a] != 0).collect();
        if axes.len() > 1 {
            let full = (1u32 << axes.len()) - 1;
            for mask in 1..full {
                let mut sub = [0isize; 3];
                for (bit, &a) in axes.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        sub[a] = d[a];
                    }
                }
                match self.offset(c, sub) {
                    Some(m) if !self.is_blocked(m) => {}
                    _ => return None,
                }
            }
        }
        Some(n)
    }

    /// Copy with every cell whose center lies within `radius` of `center`
    /// marked blocked, except the cells listed in `keep_free`.
    pub fn with_blocked_ball(&self, center: Vec3, radius: f64, keep_free: &[CellIndex]) -> OccupancyGrid {
        let mut g = self.clone();
        let cells = (radius / self.resolution).ceil() as isize + 1;
        if let Some(c) = self.clamped_cell(center) {
            for di in -cells..=cells {
                for dj in -cells..=cells {
                    for dk in -cells..=cells {
                        if let Some(n) = self.offset(c, [di, dj, dk]) {
                            if self.cell_center(n).distance(center) <= radius && !keep_free.contains(&n) {
                                g.set_blocked(n, true);
                            }
                        }
                    }
                }
            }
        }
        g
    }

    /// Writes `blocked` as one byte per cell (row-major i, j, k; 0 free,
    /// 1 blocked) plus a JSON header.
    pub fn dump(&self, bin_path: &Path, header_path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.blocked.iter().map(|&b| u8::from(b)).collect();
        std::fs::write(bin_path, bytes).map_err(|e| Error::io(bin_path, e))?;
        let header = DumpHeader {
            dims: self.dims,
            resolution: self.resolution,
            origin: self.origin,
            inflation_radius: self.inflation_radius,
            layout: "row-major i,j,k; u8 per cell; 0=free 1=blocked".to_string(),
        };
        let text = serde_json::to_string_pretty(&header).expect("header serializes");
        std::fs::write(header_path, text).map_err(|e| Error::io(header_path, e))
    }
}

/// Neighbor offsets for a connectivity, in a fixed order.
pub fn neighbor_offsets(conn: Connectivity) -> Vec<[isize; 3]> {
    let mut out = Vec::with_capacity(26);
    for di in -1..=1isize {
        for dj in -1..=1isize {
            for dk in -1..=1isize {
                let n = (di != 0) as usize + (dj != 0) as usize + (dk != 0) as usize;
                let ok = match conn {
                    Connectivity::Six => n == 1,
                    Connectivity::TwentySix => n >= 1,
                };
                if ok {
                    out.push([di, dj, dk]);
                }
            }
        }
    }
    out
}

/// A* shortest path with the straight-line heuristic. Open-set ties break
/// on lower f, then lower h, then lower cell index. Returns `None` when the
/// goal is unreachable.
pub fn shortest_path(
    g: &OccupancyGrid,
    start: CellIndex,
    goal: CellIndex,
    conn: Connectivity,
) -> Result<Option<GeometricPath>> {
    for c in [start, goal] {
        if !g.in_grid(c) || g.is_blocked(c) {
            return Err(Error::BlockedEndpoint(c.as_array()));
        }
    }
    let n = g.num_cells();
    let res = g.resolution();
    let goal_center = g.cell_center(goal);
    let offsets = neighbor_offsets(conn);
    let step_len: Vec<f64> = offsets
        .iter()
        .map(|d| edge_length(d.iter().filter(|x| **x != 0).count(), res))
        .collect();

    let mut best_g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let s = g.flat(start);
    let goal_idx = g.flat(goal);
    best_g[s] = 0.0;
    let h0 = g.cell_center(start).distance(goal_center);
    heap.push(Reverse((OrderedFloat(h0), OrderedFloat(h0), s, OrderedFloat(0.0))));

    while let Some(Reverse((_, _, idx, OrderedFloat(gc)))) = heap.pop() {
        if gc > best_g[idx] {
            continue;
        }
        if idx == goal_idx {
            break;
        }
        let c = g.unflat(idx);
        for (d, len) in offsets.iter().zip(&step_len) {
            let Some(nb) = g.move_allowed(c, *d) else { continue };
            let ni = g.flat(nb);
            let ng = gc + len;
            if ng < best_g[ni] {
                best_g[ni] = ng;
                parent[ni] = idx;
                let h = g.cell_center(nb).distance(goal_center);
                heap.push(Reverse((OrderedFloat(ng + h), OrderedFloat(h), ni, OrderedFloat(ng))));
            }
        }
    }

    if !best_g[goal_idx].is_finite() {
        return Ok(None);
    }
    let mut flat_path = vec![goal_idx];
    let mut cur = goal_idx;
    while cur != s {
        cur = parent[cur];
        flat_path.push(cur);
    }
    flat_path.reverse();
    let cells: Vec<CellIndex> = flat_path.iter().map(|&i| g.unflat(i)).collect();
    Ok(Some(path_from_cells(g, cells)))
}

/// Build a `GeometricPath` from adjacent cells, with the canonical cost.
pub fn path_from_cells(g: &OccupancyGrid, cells: Vec<CellIndex>) -> GeometricPath {
    let mut counts = [0usize; 3];
    for w in cells.windows(2) {
        let axes = w[0].axes_differing(w[1]).expect("path cells are adjacent");
        if axes > 0 {
            counts[axes - 1] += 1;
        }
    }
    let waypoints = cells.iter().map(|&c| g.cell_center(c)).collect();
    GeometricPath { cost: canonical_length(counts, g.resolution()), cells, waypoints }
}
