//! Slab decomposition of every block across all ranks, and the local/global
//! solution-point index arithmetic built on top of it.

use super::Block;
use crate::{Error, Result};

/// The contiguous cell slab of one block owned by one rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    pub rank: usize,
    pub block: usize,
    /// First owned cell per direction.
    pub start: [usize; 3],
    /// Owned cell counts per direction (may be zero along the split).
    pub count: [usize; 3],
    /// Direction the block is split along.
    pub split_dir: usize,
}

impl Partition {
    pub fn num_cells(&self) -> usize {
        self.count[0] * self.count[1] * self.count[2]
    }

    pub fn is_empty(&self) -> bool {
        self.num_cells() == 0
    }

    pub fn contains_cell(&self, c: [usize; 3]) -> bool {
        (0..3).all(|d| c[d] >= self.start[d] && c[d] < self.start[d] + self.count[d])
    }

    /// Node-plane range covered by the owned cells (inclusive of both ends).
    pub fn node_range(&self, dir: usize) -> (usize, usize) {
        (self.start[dir], self.start[dir] + self.count[dir])
    }
}

/// Split direction: the direction with the most cells, excluding a symmetric
/// third direction; ties broken toward the later index.
pub fn split_direction(block: &Block) -> usize {
    let cells = block.cells();
    let mut best = 0;
    for d in 1..3 {
        if d == 2 && block.symmetric_k {
            continue;
        }
        if cells[d] >= cells[best] {
            best = d;
        }
    }
    best
}

/// Balanced contiguous slabs of one block over `nranks` ranks. Remainder cells
/// go to the lowest ranks, so the layout is deterministic.
pub fn partition_block(block: &Block, nranks: usize) -> Vec<Partition> {
    assert!(nranks >= 1);
    let cells = block.cells();
    let dir = split_direction(block);
    let n = cells[dir];
    let base = n / nranks;
    let rem = n % nranks;
    let mut parts = Vec::with_capacity(nranks);
    let mut at = 0;
    for rank in 0..nranks {
        let len = base + usize::from(rank < rem);
        let mut start = [0; 3];
        let mut count = cells;
        start[dir] = at;
        count[dir] = len;
        parts.push(Partition { rank, block: block.id, start, count, split_dir: dir });
        at += len;
    }
    parts
}

/// The full decomposition: every rank owns a (possibly empty) slab of every
/// block, with prefix sums for the global solution-point index.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub nranks: usize,
    /// parts[rank][block]
    pub parts: Vec<Vec<Partition>>,
    /// Global index of the first point owned by each rank.
    rank_offset: Vec<usize>,
    /// Offset of each block within a rank's packing.
    block_offset: Vec<Vec<usize>>,
    total: usize,
}

pub fn decompose(blocks: &[Block], nranks: usize) -> Result<Decomposition> {
    let per_block: Vec<Vec<Partition>> =
        blocks.iter().map(|b| partition_block(b, nranks)).collect();
    let mut parts = vec![Vec::with_capacity(blocks.len()); nranks];
    for bp in &per_block {
        for (rank, p) in bp.iter().enumerate() {
            parts[rank].push(*p);
        }
    }
    for (rank, rp) in parts.iter().enumerate() {
        if !rp.is_empty() && rp.iter().all(Partition::is_empty) {
            return Err(Error::TooManyRanks { rank });
        }
    }
    let mut rank_offset = Vec::with_capacity(nranks + 1);
    let mut block_offset = Vec::with_capacity(nranks);
    let mut at = 0;
    for rp in &parts {
        rank_offset.push(at);
        let mut offs = Vec::with_capacity(rp.len());
        let mut local = 0;
        for p in rp {
            offs.push(local);
            local += p.num_cells();
        }
        block_offset.push(offs);
        at += local;
    }
    rank_offset.push(at);
    Ok(Decomposition { nranks, parts, rank_offset, block_offset, total: at })
}

impl Decomposition {
    pub fn part(&self, rank: usize, block: usize) -> &Partition {
        &self.parts[rank][block]
    }

    pub fn total_points(&self) -> usize {
        self.total
    }

    /// Zero-based index of a solution point within rank `rank`'s packing:
    /// blocks one after the other in ascending id, i fastest within each slab.
    /// `cell` is the block-global cell index.
    pub fn local_index(&self, rank: usize, block: usize, cell: [usize; 3]) -> Result<usize> {
        let p = self.part(rank, block);
        if !p.contains_cell(cell) {
            return Err(Error::OutOfRange(format!(
                "cell {cell:?} of block {block} not owned by rank {rank}"
            )));
        }
        let r = [cell[0] - p.start[0], cell[1] - p.start[1], cell[2] - p.start[2]];
        Ok(self.block_offset[rank][block] + r[0] + p.count[0] * (r[1] + p.count[1] * r[2]))
    }

    /// Global index: prefix of all lower ranks plus the local index.
    pub fn global_index(&self, rank: usize, block: usize, cell: [usize; 3]) -> Result<usize> {
        Ok(self.rank_offset[rank] + self.local_index(rank, block, cell)?)
    }

    /// Rank owning a block-global cell.
    pub fn owner_rank(&self, block: usize, cell: [usize; 3]) -> usize {
        // slabs are contiguous along one direction; bisect over ranks
        let dir = self.parts[0][block].split_dir;
        let x = cell[dir];
        let mut lo = 0;
        let mut hi = self.nranks;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.parts[mid][block].start[dir] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Global index of a block-global cell, whoever owns it.
    pub fn global_index_of_cell(&self, block: usize, cell: [usize; 3]) -> Result<usize> {
        self.global_index(self.owner_rank(block, cell), block, cell)
    }

    /// Invert a global index into (rank, block, block-global cell).
    pub fn decode(&self, gid: usize) -> Result<(usize, usize, [usize; 3])> {
        if gid >= self.total {
            return Err(Error::OutOfRange(format!("global index {gid} >= {}", self.total)));
        }
        // zero-width (empty-rank) intervals are skipped by the strict bound
        let rank = self.rank_offset.partition_point(|&o| o <= gid) - 1;
        let mut local = gid - self.rank_offset[rank];
        let mut block = self.parts[rank].len() - 1;
        for (b, &off) in self.block_offset[rank].iter().enumerate().rev() {
            if local >= off {
                block = b;
                break;
            }
        }
        local -= self.block_offset[rank][block];
        let p = &self.parts[rank][block];
        let i = local % p.count[0];
        let j = (local / p.count[0]) % p.count[1];
        let k = local / (p.count[0] * p.count[1]);
        Ok((rank, block, [p.start[0] + i, p.start[1] + j, p.start[2] + k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BcTag, BlockRole, Mapping};

    fn block(id: usize, dims: [usize; 3], symmetric_k: bool) -> Block {
        Block::from_mapping(
            id,
            dims,
            &Mapping::Uniform { origin: [0.0; 3], spacing: [1.0; 3] },
            0,
            BlockRole::Background,
            [BcTag::Periodic; 6],
            symmetric_k,
        )
        .unwrap()
    }

    #[test]
    fn single_rank_owns_everything() {
        let b = block(0, [201, 201, 3], true);
        let parts = partition_block(&b, 1);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].count, [200, 200, 2]);
    }

    #[test]
    fn four_slabs_in_j() {
        let b = block(0, [201, 201, 3], true);
        let parts = partition_block(&b, 4);
        assert_eq!(parts[0].split_dir, 1);
        for p in &parts {
            assert_eq!(p.count[1], 50);
        }
        // node planes per rank: 51 for the first, 50 new planes for the rest
        let (n0, n1) = parts[0].node_range(1);
        assert_eq!(n1 - n0 + 1, 51);
        // slabs tile the block exactly
        let mut covered = 0;
        for p in &parts {
            assert_eq!(p.start[1], covered);
            covered += p.count[1];
        }
        assert_eq!(covered, 200);
    }

    #[test]
    fn every_rank_gets_a_slice_of_every_block() {
        let blocks = [block(0, [11, 7, 3], true), block(1, [9, 13, 3], true)];
        let d = decompose(&blocks, 3).unwrap();
        let mut nonempty = 0;
        for rank in 0..3 {
            for bi in 0..2 {
                if !d.part(rank, bi).is_empty() {
                    nonempty += 1;
                }
            }
        }
        assert_eq!(nonempty, 6);
    }

    #[test]
    fn balanced_ratio_within_two() {
        let b = block(0, [201, 201, 3], true);
        for nranks in [2, 3, 5, 7, 8] {
            let parts = partition_block(&b, nranks);
            let max = parts.iter().map(Partition::num_cells).max().unwrap();
            let min = parts.iter().map(Partition::num_cells).min().unwrap();
            assert!(max <= 2 * min, "nranks={nranks}: {max} vs {min}");
        }
    }

    #[test]
    fn too_many_ranks_detected() {
        let blocks = [block(0, [3, 3, 3], true)];
        // 2 cells in the split direction cannot feed 4 ranks
        let err = decompose(&blocks, 4);
        assert!(matches!(err, Err(Error::TooManyRanks { .. })));
    }

    #[test]
    fn local_index_formula() {
        let blocks = [block(0, [5, 5, 2], false)];
        let d = decompose(&blocks, 1).unwrap();
        assert_eq!(d.local_index(0, 0, [0, 0, 0]).unwrap(), 0);
        assert_eq!(d.local_index(0, 0, [1, 2, 0]).unwrap(), 1 + 4 * 2);
    }

    #[test]
    fn second_block_follows_first_in_packing() {
        let blocks = [block(0, [5, 5, 2], false), block(1, [4, 4, 2], false)];
        let d = decompose(&blocks, 1).unwrap();
        // first block owns 4x4x1 = 16 points
        assert_eq!(d.global_index(0, 1, [0, 0, 0]).unwrap(), 16);
    }

    #[test]
    fn rank_prefix_offsets() {
        let blocks = [block(0, [21, 21, 3], true)];
        let d = decompose(&blocks, 4).unwrap();
        let rank0_total: usize = d.part(0, 0).num_cells();
        assert_eq!(d.global_index(1, 0, d.part(1, 0).start).unwrap(), rank0_total);
    }

    #[test]
    fn global_index_is_a_bijection() {
        let blocks = [block(0, [7, 6, 4], false), block(1, [5, 9, 3], true)];
        for nranks in [1, 2, 3] {
            let d = decompose(&blocks, nranks).unwrap();
            let mut seen = vec![false; d.total_points()];
            for (bi, b) in blocks.iter().enumerate() {
                let cells = b.cells();
                for k in 0..cells[2] {
                    for j in 0..cells[1] {
                        for i in 0..cells[0] {
                            let g = d.global_index_of_cell(bi, [i, j, k]).unwrap();
                            assert!(!seen[g], "duplicate global index {g}");
                            seen[g] = true;
                        }
                    }
                }
            }
            assert!(seen.iter().all(|&s| s), "gaps in global index, nranks={nranks}");
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let b = block(0, [33, 17, 3], true);
        let a = partition_block(&b, 5);
        let c = partition_block(&b, 5);
        assert_eq!(a, c);
    }
}
