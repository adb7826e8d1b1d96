//! Partition-parallel dynamic overset (chimera) grid assembly coupled to a
//! fractional-step incompressible flow solver on structured curvilinear grids.
//!
//! The crate is organized around the per-timestep pipeline: every block of the
//! composite grid is distributed across all ranks ([`mesh`]), holes are cut and
//! query points identified ([`assembly`]) using bounding-volume and ray-casting
//! predicates ([`geometry`]), donors are located by a walking search and turned
//! into a distributed sparse interpolation operator ([`interp`]), and the flow
//! is advanced in inertial or non-inertial frames ([`frames`], [`solver`]) with
//! sharp-interface immersed boundaries and rigid-body coupling ([`ibm`]).
//! Case setup, validation metrics and reporting live in [`harness`].

pub mod assembly;
pub mod comm;
pub mod error;
pub mod frames;
pub mod geometry;
pub mod harness;
pub mod ibm;
pub mod interp;
pub mod linalg;
pub mod math;
pub mod mesh;
pub mod solver;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
