//! Per-rank slice of one block: extended node lattice, cell centers, metrics,
//! node classification and the donor-search acceleration structures.

use super::{compute_metrics_lattice, Block, Metrics, NodeClass, Partition};
use crate::geometry::{Aabb, ControlGrid};
use crate::math::Vec3;
use crate::Result;

/// Ghost width along the split direction; probes for immersed-boundary
/// reconstruction may reach a few cells past the owned range.
pub const GHOST_SPLIT: usize = 3;
/// Ghost width elsewhere (slabs own full planes there, so stencil depth only).
pub const GHOST_OTHER: usize = 1;

/// One rank's slice of a block, with ghost cells on all sides. Ghost geometry
/// beyond the physical block extent is linearly extrapolated.
#[derive(Debug, Clone)]
pub struct Slab {
    pub part: Partition,
    /// Ghost widths per direction.
    pub g: [usize; 3],
    /// Active cells per direction: owned counts, with a symmetric third
    /// direction collapsed to a single computed plane.
    pub nc: [usize; 3],
    /// Allocated cell dims: nc + 2 g.
    pub adims: [usize; 3],
    /// True if the block's third direction is symmetric (2D case).
    pub two_d: bool,
    /// Node lattice covering the allocated cells (adims + 1 nodes each way).
    pub nodes: Vec<Vec3>,
    /// Solution-point (cell-center) coordinates per allocated cell.
    pub centers: Vec<Vec3>,
    pub metrics: Metrics,
    /// Per-cell classification over the allocated lattice.
    pub mask: Vec<NodeClass>,
    /// Blank-surface provenance per allocated cell (u16::MAX = none).
    pub blank_src: Vec<u16>,
    /// Donor-search bucket grid over this rank's donor cells (frame coords).
    pub control: Option<ControlGrid>,
    /// All viscous cross-coefficients negligible (orthogonal grid fast path).
    pub orthogonal: bool,
    /// Per-body inside flags keyed by relative pose; bodies fixed in their
    /// home frame classify once for the whole run.
    pub body_cache: std::collections::HashMap<usize, (crate::math::Mat3, Vec3, Vec<bool>)>,
}

impl Slab {
    pub fn new(block: &Block, part: Partition) -> Result<Slab> {
        let two_d = block.symmetric_k;
        let mut nc = part.count;
        if two_d {
            nc[2] = nc[2].min(1);
        }
        let mut g = [GHOST_OTHER; 3];
        g[part.split_dir] = GHOST_SPLIT;
        if two_d {
            g[2] = 1;
        }
        let adims = [nc[0] + 2 * g[0], nc[1] + 2 * g[1], nc[2] + 2 * g[2]];

        // extended node lattice: node n of the slab corresponds to block node
        // plane start - g + n, extrapolated linearly outside the block
        let ndims = [adims[0] + 1, adims[1] + 1, adims[2] + 1];
        let dims = block.dims;
        let mut nodes = Vec::with_capacity(ndims[0] * ndims[1] * ndims[2]);
        // linear extrapolation outside the block, one direction at a time
        fn fetch(block: &Block, dims: [usize; 3], idx: [i64; 3]) -> Vec3 {
            for d in 0..3 {
                let n = dims[d] as i64 - 1;
                if idx[d] < 0 {
                    let mut base = idx;
                    base[d] = 0;
                    let mut inner = idx;
                    inner[d] = (-idx[d]).min(n);
                    return 2.0 * fetch(block, dims, base) - fetch(block, dims, inner);
                }
                if idx[d] > n {
                    let mut base = idx;
                    base[d] = n;
                    let mut inner = idx;
                    inner[d] = (2 * n - idx[d]).max(0);
                    return 2.0 * fetch(block, dims, base) - fetch(block, dims, inner);
                }
            }
            block.node(idx[0] as usize, idx[1] as usize, idx[2] as usize)
        }
        for k in 0..ndims[2] {
            for j in 0..ndims[1] {
                for i in 0..ndims[0] {
                    let bi = part.start[0] as i64 - g[0] as i64 + i as i64;
                    let bj = part.start[1] as i64 - g[1] as i64 + j as i64;
                    let bk = part.start[2] as i64 - g[2] as i64 + k as i64;
                    nodes.push(fetch(block, dims, [bi, bj, bk]));
                }
            }
        }

        let metrics = compute_metrics_lattice(&nodes, ndims, block.id)?;
        let ncells = adims[0] * adims[1] * adims[2];
        let mut centers = Vec::with_capacity(ncells);
        let nd = |i: usize, j: usize, k: usize| nodes[i + ndims[0] * (j + ndims[1] * k)];
        for k in 0..adims[2] {
            for j in 0..adims[1] {
                for i in 0..adims[0] {
                    let mut c = Vec3::zeros();
                    for dk in 0..2 {
                        for dj in 0..2 {
                            for di in 0..2 {
                                c += nd(i + di, j + dj, k + dk);
                            }
                        }
                    }
                    centers.push(c / 8.0);
                }
            }
        }

        let orthogonal = {
            let mut ortho = true;
            'outer: for dir in 0..3 {
                for gv in metrics.gv(dir) {
                    let diag = gv[dir].abs().max(1e-300);
                    for m in 0..3 {
                        if m != dir && gv[m].abs() > 1e-12 * diag {
                            ortho = false;
                            break 'outer;
                        }
                    }
                }
            }
            ortho
        };

        Ok(Slab {
            part,
            g,
            nc,
            adims,
            two_d,
            nodes,
            centers,
            metrics,
            mask: vec![NodeClass::Fluid; ncells],
            blank_src: vec![u16::MAX; ncells],
            control: None,
            orthogonal,
            body_cache: std::collections::HashMap::new(),
        })
    }

    /// Linear index into cell arrays from array coordinates.
    #[inline]
    pub fn aidx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.adims[0] * (j + self.adims[1] * k)
    }

    /// Array coordinates of a block-global cell (may land in ghosts).
    #[inline]
    pub fn array_of_block(&self, c: [i64; 3]) -> Option<[usize; 3]> {
        let mut a = [0usize; 3];
        for d in 0..3 {
            let v = c[d] - self.part.start[d] as i64 + self.g[d] as i64;
            if v < 0 || v >= self.adims[d] as i64 {
                return None;
            }
            a[d] = v as usize;
        }
        Some(a)
    }

    /// Block-global cell coordinates of an array cell.
    #[inline]
    pub fn block_of_array(&self, a: [usize; 3]) -> [i64; 3] {
        [
            a[0] as i64 + self.part.start[0] as i64 - self.g[0] as i64,
            a[1] as i64 + self.part.start[1] as i64 - self.g[1] as i64,
            a[2] as i64 + self.part.start[2] as i64 - self.g[2] as i64,
        ]
    }

    /// Owned-cell array ranges (ghosts excluded).
    pub fn owned(&self) -> [std::ops::Range<usize>; 3] {
        [
            self.g[0]..self.g[0] + self.nc[0],
            self.g[1]..self.g[1] + self.nc[1],
            self.g[2]..self.g[2] + self.nc[2],
        ]
    }

    pub fn is_empty(&self) -> bool {
        self.part.is_empty()
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.centers[self.aidx(i, j, k)]
    }

    pub fn class(&self, i: usize, j: usize, k: usize) -> NodeClass {
        self.mask[self.aidx(i, j, k)]
    }

    /// Mean cell edge length of the owned region.
    pub fn mean_edge(&self) -> f64 {
        let [ri, rj, rk] = self.owned();
        let mut sum = 0.0;
        let mut n = 0.0;
        for k in rk.clone() {
            for j in rj.clone() {
                for i in ri.clone() {
                    sum += self.metrics.vol[self.aidx(i, j, k)].cbrt();
                    n += 1.0;
                }
            }
        }
        if n > 0.0 {
            sum / n
        } else {
            1.0
        }
    }

    /// Donor-cell (hex) base cells this rank owns, as block cell coordinates:
    /// bases must have a full +1 neighborhood inside the block.
    pub fn donor_base_range(&self, block: &Block) -> [std::ops::Range<i64>; 3] {
        let cells = block.cells();
        let mut r: [std::ops::Range<i64>; 3] = [0..0, 0..0, 0..0];
        for d in 0..3 {
            let lo = self.part.start[d] as i64;
            let mut hi = lo + self.part.count[d] as i64;
            hi = hi.min(cells[d] as i64 - 1);
            r[d] = lo..hi;
        }
        if self.two_d {
            // hex spans both k cell planes; base plane 0 only
            r[2] = 0..if cells[2] >= 2 && self.part.start[2] == 0 { 1 } else { 0 };
        }
        r
    }

    /// Corner coordinates of the donor hex with base cell `c` (block coords).
    /// Corner b sits at base + (b&1, b>>1&1, b>>2&1).
    pub fn donor_hex(&self, c: [i64; 3]) -> Option<crate::geometry::HexCell> {
        let mut hex = [Vec3::zeros(); 8];
        for (b, corner) in hex.iter_mut().enumerate() {
            let off = [(b & 1) as i64, ((b >> 1) & 1) as i64, ((b >> 2) & 1) as i64];
            let cc = [c[0] + off[0], c[1] + off[1], c[2] + off[2]];
            let a = self.array_of_block(cc)?;
            *corner = self.center(a[0], a[1], a[2]);
        }
        Some(hex)
    }

    /// Build the control-cell grid over this rank's donor hexes.
    pub fn build_control(&mut self, block: &Block) {
        if self.is_empty() {
            self.control = None;
            return;
        }
        let range = self.donor_base_range(block);
        let mut boxes = Vec::new();
        let span = [
            (range[0].end - range[0].start).max(0) as usize,
            (range[1].end - range[1].start).max(0) as usize,
            (range[2].end - range[2].start).max(0) as usize,
        ];
        if span.iter().any(|&s| s == 0) {
            self.control = None;
            return;
        }
        let id_of = |c: [i64; 3]| -> u32 {
            let r = [
                (c[0] - range[0].start) as usize,
                (c[1] - range[1].start) as usize,
                (c[2] - range[2].start) as usize,
            ];
            (r[0] + span[0] * (r[1] + span[1] * r[2])) as u32
        };
        let mut all = Aabb { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) };
        for k in range[2].clone() {
            for j in range[1].clone() {
                for i in range[0].clone() {
                    if let Some(hex) = self.donor_hex([i, j, k]) {
                        let b = Aabb::of_points(hex.iter().copied());
                        for d in 0..3 {
                            all.min[d] = all.min[d].min(b.min[d]);
                            all.max[d] = all.max[d].max(b.max[d]);
                        }
                        boxes.push((id_of([i, j, k]), b));
                    }
                }
            }
        }
        self.control = Some(ControlGrid::build(all, self.mean_edge(), boxes));
    }

    /// Decode a donor hex id from [`build_control`] back to block coordinates.
    pub fn donor_base_of_id(&self, block: &Block, id: u32) -> [i64; 3] {
        let range = self.donor_base_range(block);
        let span = [
            (range[0].end - range[0].start).max(0) as usize,
            (range[1].end - range[1].start).max(0) as usize,
        ];
        let id = id as usize;
        let i = id % span[0];
        let j = (id / span[0]) % span[1];
        let k = id / (span[0] * span[1]);
        [range[0].start + i as i64, range[1].start + j as i64, range[2].start + k as i64]
    }

    /// World-coordinate boundary shell of this slab's donor extent, used for
    /// the per-rank oriented bounding boxes.
    pub fn boundary_shell_world(&self, frame: &crate::frames::FrameState) -> Vec<Vec3> {
        let ndims = [self.adims[0] + 1, self.adims[1] + 1, self.adims[2] + 1];
        let nd = |i: usize, j: usize, k: usize| self.nodes[i + ndims[0] * (j + ndims[1] * k)];
        // clip the shell to one ghost ring so it covers straddling donor hexes
        let lo = [
            self.g[0].saturating_sub(1),
            self.g[1].saturating_sub(1),
            self.g[2].saturating_sub(1),
        ];
        let hi = [
            (self.g[0] + self.nc[0] + 1).min(ndims[0] - 1),
            (self.g[1] + self.nc[1] + 1).min(ndims[1] - 1),
            (self.g[2] + self.nc[2] + 1).min(ndims[2] - 1),
        ];
        let mut pts = Vec::new();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let on_shell = i == lo[0] || i == hi[0] || j == lo[1] || j == hi[1]
                        || k == lo[2] || k == hi[2];
                    if on_shell {
                        pts.push(frame.world_from_frame(nd(i, j, k)));
                    }
                }
            }
        }
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{decompose, BcTag, BlockRole, Mapping};

    fn block(dims: [usize; 3], symmetric_k: bool) -> Block {
        Block::from_mapping(
            0,
            dims,
            &Mapping::Uniform { origin: [0.0; 3], spacing: [0.5; 3] },
            0,
            BlockRole::Background,
            [BcTag::Periodic; 6],
            symmetric_k,
        )
        .unwrap()
    }

    #[test]
    fn slab_centers_match_block() {
        let b = block([9, 9, 3], true);
        let d = decompose(std::slice::from_ref(&b), 2).unwrap();
        let s = Slab::new(&b, *d.part(1, 0)).unwrap();
        let [ri, rj, rk] = s.owned();
        for k in rk {
            for j in rj.clone() {
                for i in ri.clone() {
                    let bc = s.block_of_array([i, j, k]);
                    let want = b.cell_center(bc[0] as usize, bc[1] as usize, bc[2] as usize);
                    assert!((s.center(i, j, k) - want).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ghost_geometry_extrapolates() {
        let b = block([5, 5, 3], true);
        let d = decompose(std::slice::from_ref(&b), 1).unwrap();
        let s = Slab::new(&b, *d.part(0, 0)).unwrap();
        // ghost cell center one past i-max should continue the uniform lattice
        let a = s.array_of_block([4, 0, 0]).unwrap();
        let c = s.center(a[0], a[1], a[2]);
        assert!((c.x - (4.0 * 0.5 + 0.25)).abs() < 1e-13, "{c:?}");
    }

    #[test]
    fn two_d_slab_has_single_k_plane() {
        let b = block([9, 9, 3], true);
        let d = decompose(std::slice::from_ref(&b), 1).unwrap();
        let s = Slab::new(&b, *d.part(0, 0)).unwrap();
        assert_eq!(s.nc[2], 1);
        assert!(s.two_d);
    }

    #[test]
    fn donor_hexes_cover_interior() {
        let b = block([6, 6, 6], false);
        let d = decompose(std::slice::from_ref(&b), 2).unwrap();
        let mut total = 0;
        for rank in 0..2 {
            let s = Slab::new(&b, *d.part(rank, 0)).unwrap();
            let r = s.donor_base_range(&b);
            total +=
                (r[0].end - r[0].start) * (r[1].end - r[1].start) * (r[2].end - r[2].start);
        }
        // hex bases: (nc-1) per direction in a 5x5x5-cell block
        assert_eq!(total, 4 * 4 * 4);
    }

    #[test]
    fn orthogonality_flag() {
        let b = block([5, 5, 3], true);
        let d = decompose(std::slice::from_ref(&b), 1).unwrap();
        let s = Slab::new(&b, *d.part(0, 0)).unwrap();
        assert!(s.orthogonal);
    }
}
