//! Problem instance model, JSON file format and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoxObstacle, Vec3};
use crate::ipso::IpsoParams;

pub const DEFAULT_GRID_RESOLUTION: f64 = 0.5;

/// Grid neighborhood used by graph search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Six,
    TwentySix,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            6 => Ok(Connectivity::Six),
            26 => Ok(Connectivity::TwentySix),
            other => Err(format!("connectivity must be 6 or 26, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Robot {
    pub id: u32,
    pub start: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyParams {
    /// Conservative body radius R_r (m).
    pub r_r: f64,
    /// Separation inflation factor, strictly above 1.
    pub phi: f64,
    /// Required obstacle clearance beyond the body radius (m).
    pub clearance_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsLimits {
    /// Maximum drone speed (m/s).
    pub v_max: f64,
    /// Maximum drone acceleration (m/s^2).
    pub a_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_connectivity")]
    pub connectivity: Connectivity,
}

fn default_resolution() -> f64 {
    DEFAULT_GRID_RESOLUTION
}

fn default_connectivity() -> Connectivity {
    Connectivity::TwentySix
}

impl Default for GridParams {
    fn default() -> Self {
        Self { resolution: default_resolution(), connectivity: default_connectivity() }
    }
}

/// A complete mission-planning instance. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub bounds: Bounds,
    #[serde(default)]
    pub obstacles: Vec<BoxObstacle>,
    pub robots: Vec<Robot>,
    pub goals: Vec<Vec3>,
    pub safety: SafetyParams,
    pub dynamics: DynamicsLimits,
    #[serde(default)]
    pub grid: GridParams,
    /// Optional optimizer overrides; defaults apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ipso: Option<IpsoParams>,
}

impl Scenario {
    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn num_goals(&self) -> usize {
        self.goals.len()
    }

    /// Minimum inter-robot separation `2 R_r phi`.
    pub fn separation_min(&self) -> f64 {
        2.0 * self.safety.r_r * self.safety.phi
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Parse and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let scenario = Scenario::from_json(&text)?;
    let report = validate_scenario(&scenario);
    if report.ok {
        Ok(scenario)
    } else {
        Err(Error::Validation(report.violations))
    }
}

/// Check every scenario invariant, collecting all failures.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut v = Vec::new();

    if !s.bounds.min.is_finite() || !s.bounds.max.is_finite() {
        v.push("bounds: coordinates must be finite".to_string());
    } else if !(0..3).all(|a| s.bounds.min[a] < s.bounds.max[a]) {
        v.push("bounds: min must be strictly less than max on every axis".to_string());
    }

    for (k, b) in s.obstacles.iter().enumerate() {
        if !b.is_well_formed() {
            v.push(format!("obstacles[{k}]: min corner must be finite and strictly less than max corner"));
        }
    }

    if s.robots.is_empty() {
        v.push("robots: at least one robot is required".to_string());
    }
    if s.goals.is_empty() {
        v.push("goals: at least one goal is required".to_string());
    }

    let r_r = s.safety.r_r;
    if !(r_r > 0.0 && r_r.is_finite()) {
        v.push(format!("safety.r_r (safety_radius) must be > 0, got {r_r}"));
    }
    let phi = s.safety.phi;
    if !(phi > 1.0 && phi.is_finite()) {
        v.push(format!("safety.phi (inflation_factor) must be > 1, got {phi}"));
    }
    let margin = s.safety.clearance_margin;
    if !(margin >= 0.0 && margin.is_finite()) {
        v.push(format!("safety.clearance_margin must be >= 0, got {margin}"));
    }
    if !(s.dynamics.v_max > 0.0 && s.dynamics.v_max.is_finite()) {
        v.push(format!("dynamics.v_max must be > 0, got {}", s.dynamics.v_max));
    }
    if !(s.dynamics.a_max > 0.0 && s.dynamics.a_max.is_finite()) {
        v.push(format!("dynamics.a_max must be > 0, got {}", s.dynamics.a_max));
    }
    let res = s.grid.resolution;
    if !(res > 0.0 && res.is_finite()) {
        v.push(format!("grid.resolution must be > 0, got {res}"));
    }

    let clearance_radius = if r_r.is_finite() && r_r > 0.0 { r_r } else { 0.0 };
    let mut check_point = |label: String, p: Vec3| {
        if !p.is_finite() {
            v.push(format!("{label}: coordinates must be finite"));
            return;
        }
        if !s.bounds.contains(p) {
            v.push(format!("{label}: position {:?} lies outside bounds", p.to_array()));
        }
        for (k, b) in s.obstacles.iter().enumerate() {
            if b.is_well_formed() && b.signed_distance(p) <= clearance_radius {
                v.push(format!("{label}: position lies inside obstacles[{k}] inflated by r_r"));
            }
        }
    };
    for (i, r) in s.robots.iter().enumerate() {
        check_point(format!("robots[{i}] (id {})", r.id), r.start);
    }
    for (j, g) in s.goals.iter().enumerate() {
        check_point(format!("goals[{j}]"), *g);
    }

    for (i, a) in s.robots.iter().enumerate() {
        if s.robots[..i].iter().any(|b| b.id == a.id) {
            v.push(format!("robots[{i}]: duplicate id {}", a.id));
        }
    }

    if let Some(p) = &s.ipso {
        for msg in p.violations() {
            v.push(format!("ipso.{msg}"));
        }
    }

    ValidationReport { ok: v.is_empty(), violations: v }
}
