//! Small 3D vector type and axis-aligned box primitives.

use std::ops::{Add, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or displacement in world coordinates (meters).
///
/// Serializes as a 3-element array `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 1e-12).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn lerp(self, o: Vec3, s: f64) -> Vec3 {
        self + (o - self) * s
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box obstacle. `min` is strictly less than `max` on every axis
/// for a valid obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxObstacle {
    #[serde(rename = "min")]
    pub min_corner: Vec3,
    #[serde(rename = "max")]
    pub max_corner: Vec3,
}

impl BoxObstacle {
    pub fn new(min_corner: Vec3, max_corner: Vec3) -> Self {
        Self { min_corner, max_corner }
    }

    pub fn is_well_formed(&self) -> bool {
        self.min_corner.is_finite()
            && self.max_corner.is_finite()
            && (0..3).all(|a| self.min_corner[a] < self.max_corner[a])
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min_corner[a] && p[a] <= self.max_corner[a])
    }

    /// Closest point of the (solid) box to `p`.
    pub fn closest_point(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min_corner.x, self.max_corner.x),
            p.y.clamp(self.min_corner.y, self.max_corner.y),
            p.z.clamp(self.min_corner.z, self.max_corner.z),
        )
    }

    /// Signed distance from `p` to the box surface: Euclidean distance when
    /// outside, minus the distance to the nearest face when inside.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        if self.contains(p) {
            let mut inner = f64::INFINITY;
            for a in 0..3 {
                inner = inner.min(p[a] - self.min_corner[a]).min(self.max_corner[a] - p[a]);
            }
            -inner
        } else {
            p.distance(self.closest_point(p))
        }
    }

    /// True when the open interiors of `self` and the box `[lo, hi]` overlap.
    pub fn overlaps_open(&self, lo: Vec3, hi: Vec3) -> bool {
        (0..3).all(|a| self.min_corner[a] < hi[a] && lo[a] < self.max_corner[a])
    }
}

/// Minimum signed distance from `p` to any obstacle; `+inf` with no obstacles.
pub fn min_signed_distance(obstacles: &[BoxObstacle], p: Vec3) -> f64 {
    obstacles
        .iter()
        .map(|b| b.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}
