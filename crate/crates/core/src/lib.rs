//! Multi-drone mission planning in cluttered 3D workspaces.
//!
//! The pipeline voxelizes the workspace, computes obstacle-aware travel
//! costs by A*, allocates and sequences goals across robots with a
//! random-key particle swarm seeded by multiple linear assignment, turns
//! each closed tour into a minimum-snap trajectory, and validates
//! inter-robot separation and obstacle clearance with local replanning.

pub mod costs;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod ipso;
pub mod minsnap;
pub mod mission;
pub mod mla;
pub mod oracle;
pub mod pipeline;
pub mod safety;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::{BoxObstacle, Vec3};
pub use scenario::Scenario;
