//! Structured curvilinear blocks, their metrics, and the distribution of every
//! block across all ranks.

mod mapping;
mod metrics;
mod partition;
mod slab;

pub use mapping::{AxisSpec, Mapping};
pub use metrics::{compute_metrics, compute_metrics_lattice, Metrics};
pub use partition::{decompose, partition_block, Decomposition, Partition};
pub use slab::{Slab, GHOST_OTHER, GHOST_SPLIT};

use crate::math::Vec3;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-node classification used by hole cutting, immersed bodies and the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum NodeClass {
    /// Solved by the flow solver.
    Fluid = 0,
    /// Inside a blank region; excluded from the solve, carries no value.
    Blanked = 1,
    /// Block-boundary interface point; receives interpolated values.
    Interface = 2,
    /// Buffer layer just inside a blank boundary; receives interpolated values.
    BlankBuffer = 3,
    /// Buffer of a near-wall blank (interface crossed an immersed body).
    NearWallBuffer = 4,
    /// Inside an immersed body.
    Solid = 5,
    /// First fluid layer next to an immersed body; velocity reconstructed.
    IbBoundary = 6,
}

impl NodeClass {
    /// Unknown in the momentum/pressure solves.
    pub fn is_solved(self) -> bool {
        self == NodeClass::Fluid
    }

    /// Receives values from the interpolation pipeline.
    pub fn is_query(self) -> bool {
        matches!(
            self,
            NodeClass::Interface | NodeClass::BlankBuffer | NodeClass::NearWallBuffer
        )
    }

    /// Carries a velocity value usable as a donor corner.
    pub fn has_value(self) -> bool {
        !matches!(self, NodeClass::Blanked | NodeClass::Solid)
    }
}

/// Boundary-condition tag for one block face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BcTag {
    Periodic,
    Dirichlet { velocity: [f64; 3] },
    FarField { velocity: [f64; 3] },
    SlipWall,
    Symmetry,
    /// Filled from another block through the interpolation pipeline.
    Interface,
}

/// Faces ordered (i-min, i-max, j-min, j-max, k-min, k-max).
pub type BcSpec = [BcTag; 6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockRole {
    Background,
    Overset,
}

/// One structured curvilinear grid block. Node coordinates are expressed in the
/// block's own frame and never change as the frame moves.
#[derive(Debug, Clone)]
pub struct Block {
    pub id: usize,
    /// Node counts per curvilinear direction.
    pub dims: [usize; 3],
    pub frame_id: usize,
    pub role: BlockRole,
    pub bc: BcSpec,
    /// Third direction is a symmetric ("2D") direction with exactly 3 planes.
    pub symmetric_k: bool,
    nodes: Vec<Vec3>,
}

impl Block {
    pub fn new(
        id: usize,
        dims: [usize; 3],
        frame_id: usize,
        role: BlockRole,
        bc: BcSpec,
        symmetric_k: bool,
        nodes: Vec<Vec3>,
    ) -> Result<Self> {
        for (d, &n) in dims.iter().enumerate() {
            if n < 2 {
                return Err(Error::Config(format!(
                    "block {id}: dims[{d}] = {n}, need at least 2 node planes"
                )));
            }
        }
        if symmetric_k && dims[2] != 3 {
            return Err(Error::Config(format!(
                "block {id}: symmetric third direction requires exactly 3 planes, got {}",
                dims[2]
            )));
        }
        if nodes.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Config(format!(
                "block {id}: node count {} does not match dims {:?}",
                nodes.len(),
                dims
            )));
        }
        Ok(Self { id, dims, frame_id, role, bc, symmetric_k, nodes })
    }

    pub fn from_mapping(
        id: usize,
        dims: [usize; 3],
        mapping: &Mapping,
        frame_id: usize,
        role: BlockRole,
        bc: BcSpec,
        symmetric_k: bool,
    ) -> Result<Self> {
        let nodes = mapping.generate(dims)?;
        Self::new(id, dims, frame_id, role, bc, symmetric_k, nodes)
    }

    /// Cell counts per direction (one less than node counts).
    pub fn cells(&self) -> [usize; 3] {
        [self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1]
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.nodes[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    /// Solution-point location: centroid of the 8 cell corner nodes.
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let mut c = Vec3::zeros();
        for dk in 0..2 {
            for dj in 0..2 {
                for di in 0..2 {
                    c += self.node(i + di, j + dj, k + dk);
                }
            }
        }
        c / 8.0
    }

    pub fn bc_on(&self, face: usize) -> BcTag {
        self.bc[face]
    }

    /// True when any face of the block is an overset interface.
    pub fn has_interface(&self) -> bool {
        self.bc.iter().any(|t| matches!(t, BcTag::Interface))
    }
}
