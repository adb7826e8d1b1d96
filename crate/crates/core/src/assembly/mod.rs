//! The per-timestep grid-assembly pipeline: hole cutting, query-point
//! identification, the packed communication map, donor search and donor
//! selection.

mod holes;
mod query;
mod search;
mod select;

pub use holes::cut_holes;
pub use query::{identify_query_points, pack_and_exchange, RankBlockObb};
pub use search::{donor_search, DonorCandidate};
pub use select::select_donors;

use crate::geometry::TriSurface;
use crate::math::Vec3;
use crate::solver::World;
use crate::Result;
use std::time::Instant;

/// A node whose solution is interpolated from another grid.
#[derive(Debug, Clone, Copy)]
pub struct QueryPoint {
    /// Receiver block.
    pub block: usize,
    /// Block-global cell coordinates (owned by the listing rank).
    pub cell: [usize; 3],
    pub kind: QueryKind,
    /// World position of the solution point.
    pub pos: Vec3,
    /// Receiver row: global solution-point index.
    pub row: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    /// Block-boundary interface point.
    GridInterface,
    /// Buffer just inside a user blank region; donor block is designated.
    BlankBuffer { donor: u16 },
    /// Buffer of a near-wall blank; donor is the body's home grid.
    NearWallBlank { donor: u16 },
}

impl QueryKind {
    pub fn designated_donor(&self) -> Option<usize> {
        match self {
            QueryKind::GridInterface => None,
            QueryKind::BlankBuffer { donor } | QueryKind::NearWallBlank { donor } => {
                Some(*donor as usize)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DonorStatus {
    Found,
    Orphan,
}

/// Selected donor for one query point.
#[derive(Debug, Clone, Copy)]
pub struct DonorRecord {
    pub donor_rank: usize,
    pub donor_block: usize,
    /// Base cell of the donor hex (block cell coordinates).
    pub base: [i64; 3],
    /// Trilinear coefficients (a1, a2, a3).
    pub coeffs: [f64; 3],
    pub status: DonorStatus,
}

impl DonorRecord {
    pub fn orphan() -> Self {
        DonorRecord {
            donor_rank: usize::MAX,
            donor_block: usize::MAX,
            base: [0; 3],
            coeffs: [0.0; 3],
            status: DonorStatus::Orphan,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlankKind {
    /// User-specified blank region of an overset grid.
    UserBlank,
    /// Automatic blank around an immersed body inside foreign grids.
    NearWall,
}

/// A hole-cutting region: a closed surface attached to a frame, the block its
/// buffer interpolates from, and the blocks it blanks.
#[derive(Debug, Clone)]
pub struct BlankRegion {
    pub surface: TriSurface,
    pub frame: usize,
    pub donor_block: usize,
    /// Blocks this region is cut from.
    pub targets: BlankTargets,
    pub kind: BlankKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlankTargets {
    Blocks(Vec<usize>),
    AllExcept(usize),
}

impl BlankTargets {
    pub fn applies_to(&self, block: usize) -> bool {
        match self {
            BlankTargets::Blocks(v) => v.contains(&block),
            BlankTargets::AllExcept(b) => block != *b,
        }
    }
}

/// Result of one grid-assembly pass.
#[derive(Debug, Default)]
pub struct AssemblyResult {
    /// Per-rank query lists, sorted by (block, row).
    pub queries: Vec<Vec<QueryPoint>>,
    /// Per-rank donor records, parallel to `queries`.
    pub records: Vec<Vec<DonorRecord>>,
    /// Packed query messages actually sent (excludes self-delivery).
    pub packed_messages: usize,
    /// Reply messages sent back over the reversed map.
    pub reply_messages: usize,
    /// What separate per-block-pair messages would have cost.
    pub unpacked_tuples: usize,
    /// Communication map: (src, dst, block, query count) per packed message.
    pub comm_map: Vec<(usize, usize, usize, usize)>,
    pub orphans: usize,
}

impl AssemblyResult {
    pub fn total_queries(&self) -> usize {
        self.queries.iter().map(Vec::len).sum()
    }
}

/// Run the full pipeline: hole cutting, query identification, exchange, donor
/// search and selection. Stores the result in `world.assembly` and rebuilds
/// the interpolation operator.
pub fn assemble(world: &mut World) -> Result<()> {
    let t = Instant::now();
    cut_holes(world)?;
    crate::solver::bc::exchange_masks(world)?;
    world.stats.timings.hole_cut += t.elapsed();

    let t = Instant::now();
    let (queries, obbs) = identify_query_points(world)?;
    world.stats.timings.query_id += t.elapsed();

    let t = Instant::now();
    let exchange = pack_and_exchange(world, &queries, &obbs)?;
    world.stats.timings.exchange += t.elapsed();

    let t = Instant::now();
    let (replies, reply_messages) = donor_search(world, &exchange)?;
    world.stats.timings.search += t.elapsed();

    let t = Instant::now();
    let mut result = select_donors(world, queries, replies)?;
    result.packed_messages = exchange.packed_messages;
    result.reply_messages = reply_messages;
    result.unpacked_tuples = exchange.unpacked_tuples;
    result.comm_map = exchange.comm_map.clone();
    world.stats.timings.select += t.elapsed();

    world.stats.comm.query_messages += result.packed_messages;
    world.stats.comm.reply_messages += result.reply_messages;
    world.stats.comm.unpacked_tuples += result.unpacked_tuples;
    world.stats.assemblies += 1;

    world.assembly = Some(result);

    let t = Instant::now();
    crate::interp::assemble_matrix(world)?;
    world.stats.timings.matrix += t.elapsed();
    Ok(())
}
