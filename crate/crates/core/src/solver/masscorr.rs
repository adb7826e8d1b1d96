//! Interface mass conservation: the summed flux over each closed surface
//! (a block's interface ring, each blank region, each immersed-body region,
//! or the merged boundary of intersecting regions) is driven to zero by an
//! area-weighted correction of the surface fluxes.

use super::state::World;
use crate::comm::{route, Packet};
use crate::mesh::NodeClass;
use crate::Result;
use rayon::prelude::*;

/// One boundary face of a non-fluid component: its flux array entry, outward
/// sign (out of the fluid), and area weight.
#[derive(Debug, Clone, Copy)]
struct SurfFace {
    dir: u8,
    fidx: u32,
    sign: f64,
    area: f64,
}

/// Per-rank component data for one block.
struct LocalComponents {
    /// Component label per allocated cell (-1 none / fluid).
    labels: Vec<i32>,
    ncomp: usize,
    /// Boundary faces per component.
    faces: Vec<Vec<SurfFace>>,
    /// (plane, flux, area) partials per component, plane = split coordinate.
    partials: Vec<Vec<(u32, f64, f64)>>,
}

/// Union-find over (rank, component) pairs.
struct Uf {
    parent: Vec<usize>,
}

impl Uf {
    fn new(n: usize) -> Self {
        Uf { parent: (0..n).collect() }
    }
    fn find(&mut self, i: usize) -> usize {
        let mut i = i;
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Enforce a zero flux sum over every closed non-fluid component boundary of
/// every block, distributing each defect over the surface area.
pub fn mass_flux_correction(world: &mut World) -> Result<()> {
    let nblocks = world.nblocks();
    let nranks = world.nranks();
    let mut worst_after = 0.0f64;

    for bi in 0..nblocks {
        // local labeling on every rank
        let locals: Vec<LocalComponents> = world
            .ranks
            .par_iter()
            .map(|rd| label_components(&rd.slabs[bi], &rd.fields[bi]))
            .collect();

        // adjacency across split boundaries: exchange owned boundary-plane
        // labels and match against ghost cells
        let pairs = cross_rank_pairs(world, bi, &locals)?;

        // global union-find
        let mut offsets = Vec::with_capacity(nranks);
        let mut total = 0;
        for lc in &locals {
            offsets.push(total);
            total += lc.ncomp;
        }
        let mut uf = Uf::new(total);
        for ((ra, ca), (rb, cb)) in pairs {
            uf.union(offsets[ra] + ca, offsets[rb] + cb);
        }

        // aggregate per root in deterministic (plane, rank) order
        let mut sums: std::collections::BTreeMap<usize, Vec<(u32, f64, f64)>> =
            std::collections::BTreeMap::new();
        for (rank, lc) in locals.iter().enumerate() {
            for (c, parts) in lc.partials.iter().enumerate() {
                let root = uf.find(offsets[rank] + c);
                sums.entry(root).or_default().extend(parts.iter().copied());
            }
        }
        let mut corr: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        for (root, mut parts) in sums {
            parts.sort_by_key(|p| p.0);
            let flux: f64 = parts.iter().map(|p| p.1).sum();
            let area: f64 = parts.iter().map(|p| p.2).sum();
            if area > 0.0 {
                corr.insert(root, flux / area);
            }
        }

        // apply corrections: every face moves by -sign * lambda * |S|
        let corr_ref = &corr;
        let offsets_ref = &offsets;
        let mut uf_frozen: Vec<usize> = (0..total).map(|i| uf.find(i)).collect();
        let uf_ref = &mut uf_frozen;
        let locals_ref = &locals;
        world.ranks.par_iter_mut().for_each(|rd| {
            let rank = rd.rank;
            let fs = &mut rd.fields[bi];
            let lc = &locals_ref[rank];
            for (c, faces) in lc.faces.iter().enumerate() {
                let root = uf_ref[offsets_ref[rank] + c];
                let Some(&lambda) = corr_ref.get(&root) else { continue };
                for f in faces {
                    fs.flux[f.dir as usize][f.fidx as usize] -= f.sign * lambda * f.area;
                }
            }
        });

        // verify the post-correction sums (these are the reported surfaces)
        let verify: Vec<Vec<(usize, f64)>> = world
            .ranks
            .par_iter()
            .map(|rd| {
                let fs = &rd.fields[bi];
                let lc = &locals_ref[rd.rank];
                lc.faces
                    .iter()
                    .enumerate()
                    .map(|(c, faces)| {
                        let s: f64 = faces
                            .iter()
                            .map(|f| f.sign * fs.flux[f.dir as usize][f.fidx as usize])
                            .sum();
                        (uf_ref[offsets_ref[rd.rank] + c], s)
                    })
                    .collect()
            })
            .collect();
        let mut by_root: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for rankv in verify {
            for (root, s) in rankv {
                *by_root.entry(root).or_insert(0.0) += s;
            }
        }
        for (_, s) in by_root {
            worst_after = worst_after.max(s.abs());
        }
    }
    world.stats.max_surface_flux = world.stats.max_surface_flux.max(worst_after);
    Ok(())
}

/// Post-state flux sums over every component boundary of every block.
pub fn surface_flux_sums(world: &World) -> Vec<f64> {
    let mut out = Vec::new();
    for bi in 0..world.nblocks() {
        let locals: Vec<LocalComponents> = world
            .ranks
            .par_iter()
            .map(|rd| label_components(&rd.slabs[bi], &rd.fields[bi]))
            .collect();
        let pairs = cross_rank_pairs_ref(world, bi, &locals).unwrap_or_default();
        let mut offsets = Vec::new();
        let mut total = 0;
        for lc in &locals {
            offsets.push(total);
            total += lc.ncomp;
        }
        let mut uf = Uf::new(total);
        for ((ra, ca), (rb, cb)) in pairs {
            uf.union(offsets[ra] + ca, offsets[rb] + cb);
        }
        let mut by_root: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (rank, lc) in locals.iter().enumerate() {
            let fs = &world.ranks[rank].fields[bi];
            for (c, faces) in lc.faces.iter().enumerate() {
                let root = uf.find(offsets[rank] + c);
                let s: f64 = faces
                    .iter()
                    .map(|f| f.sign * fs.flux[f.dir as usize][f.fidx as usize])
                    .sum();
                *by_root.entry(root).or_insert(0.0) += s;
            }
        }
        out.extend(by_root.into_values());
    }
    out
}

/// Label connected non-fluid components over owned+ghost cells and collect
/// their boundary faces on owned fluid cells.
fn label_components(
    slab: &crate::mesh::Slab,
    _fs: &super::state::FieldState,
) -> LocalComponents {
    let n = slab.adims[0] * slab.adims[1] * slab.adims[2];
    let mut labels = vec![-1i32; n];
    if slab.is_empty() {
        return LocalComponents { labels, ncomp: 0, faces: Vec::new(), partials: Vec::new() };
    }
    let adims = slab.adims;
    let stride = [1usize, adims[0], adims[0] * adims[1]];
    let is_region = |a: usize| slab.mask[a] != NodeClass::Fluid;

    // flood fill over the allocated lattice (ghosts included so cross-rank
    // merging can match labels)
    let mut ncomp = 0usize;
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] >= 0 || !is_region(start) {
            continue;
        }
        let label = ncomp as i32;
        ncomp += 1;
        labels[start] = label;
        stack.push(start);
        while let Some(a) = stack.pop() {
            let i = a % adims[0];
            let j = (a / adims[0]) % adims[1];
            let k = a / (adims[0] * adims[1]);
            let idx = [i, j, k];
            for dir in 0..3 {
                for side in [-1i64, 1] {
                    let c = idx[dir] as i64 + side;
                    if c < 0 || c >= adims[dir] as i64 {
                        continue;
                    }
                    let na = (a as i64 + side * stride[dir] as i64) as usize;
                    if labels[na] < 0 && is_region(na) {
                        labels[na] = label;
                        stack.push(na);
                    }
                }
            }
        }
    }

    // boundary faces: owned fluid cell against a region cell
    let split = slab.part.split_dir;
    let mut faces = vec![Vec::new(); ncomp];
    let mut partials: Vec<std::collections::BTreeMap<u32, (f64, f64)>> =
        vec![std::collections::BTreeMap::new(); ncomp];
    let [ri, rj, rk] = slab.owned();
    for k in rk.clone() {
        for j in rj.clone() {
            for i in ri.clone() {
                let a = slab.aidx(i, j, k);
                if slab.mask[a] != NodeClass::Fluid {
                    continue;
                }
                let idx = [i, j, k];
                for dir in 0..3 {
                    for (side, fo) in [(-1i64, 0usize), (1, 1)] {
                        let na = (a as i64 + side * stride[dir] as i64) as usize;
                        if !is_region(na) {
                            continue;
                        }
                        let comp = labels[na];
                        if comp < 0 {
                            continue;
                        }
                        let mut fidx3 = idx;
                        fidx3[dir] += fo;
                        let f = slab.metrics.face(dir, fidx3[0], fidx3[1], fidx3[2]);
                        let area = slab.metrics.s(dir)[f].norm();
                        // outward from the fluid: +face when region on +side
                        let sign = side as f64;
                        let plane = slab.block_of_array(idx)[split] as u32;
                        faces[comp as usize].push(SurfFace {
                            dir: dir as u8,
                            fidx: f as u32,
                            sign,
                            area,
                        });
                        let e = partials[comp as usize].entry(plane).or_insert((0.0, 0.0));
                        e.0 += sign * _fs.flux[dir][f];
                        e.1 += area;
                    }
                }
            }
        }
    }
    let partials = partials
        .into_iter()
        .map(|m| m.into_iter().map(|(p, (fl, ar))| (p, fl, ar)).collect())
        .collect();
    LocalComponents { labels, ncomp, faces, partials }
}

/// Cross-rank component adjacency via exchanged boundary-plane labels.
fn cross_rank_pairs(
    world: &World,
    bi: usize,
    locals: &[LocalComponents],
) -> Result<Vec<((usize, usize), (usize, usize))>> {
    cross_rank_pairs_ref(world, bi, locals)
}

fn cross_rank_pairs_ref(
    world: &World,
    bi: usize,
    locals: &[LocalComponents],
) -> Result<Vec<((usize, usize), (usize, usize))>> {
    let nranks = world.nranks();
    let chain: Vec<usize> =
        (0..nranks).filter(|&r| !world.ranks[r].slabs[bi].is_empty()).collect();
    if chain.len() <= 1 && !is_periodic_split(world, bi) {
        return Ok(Vec::new());
    }
    let periodic = is_periodic_split(world, bi);

    // each rank ships the labels of its first/last owned planes
    let mut outgoing: Vec<Packet<Vec<i32>>> = Vec::new();
    for (pos, &r) in chain.iter().enumerate() {
        let slab = &world.ranks[r].slabs[bi];
        let split = slab.part.split_dir;
        let g = slab.g[split];
        let pack = |plane: usize| -> Vec<i32> {
            let others: Vec<usize> = (0..3).filter(|&d| d != split).collect();
            let (o0, o1) = (others[0], others[1]);
            let mut out = Vec::new();
            for b in 0..slab.adims[o1] {
                for a in 0..slab.adims[o0] {
                    let mut idx = [0usize; 3];
                    idx[split] = plane;
                    idx[o0] = a;
                    idx[o1] = b;
                    out.push(locals[r].labels[slab.aidx(idx[0], idx[1], idx[2])]);
                }
            }
            out
        };
        let low_nbr = if pos > 0 {
            Some(chain[pos - 1])
        } else if periodic {
            Some(*chain.last().unwrap())
        } else {
            None
        };
        let high_nbr = if pos + 1 < chain.len() {
            Some(chain[pos + 1])
        } else if periodic {
            Some(chain[0])
        } else {
            None
        };
        if let Some(dst) = low_nbr {
            outgoing.push(Packet { src: r, dst, block: 0, payload: pack(g) });
        }
        if let Some(dst) = high_nbr {
            outgoing
                .push(Packet { src: r, dst, block: 1, payload: pack(g + slab.nc[split] - 1) });
        }
    }
    let inboxes = route(nranks, outgoing)?;
    let mut pairs = Vec::new();
    for (rank, inbox) in inboxes.into_iter().enumerate() {
        let slab = &world.ranks[rank].slabs[bi];
        if slab.is_empty() {
            continue;
        }
        let split = slab.part.split_dir;
        let g = slab.g[split];
        let others: Vec<usize> = (0..3).filter(|&d| d != split).collect();
        let (o0, o1) = (others[0], others[1]);
        for p in inbox {
            // packet from the source's low plane matches my high ghost plane
            let my_plane = if p.block == 0 { g + slab.nc[split] } else { g - 1 };
            let mut at = 0;
            for b in 0..slab.adims[o1] {
                for a in 0..slab.adims[o0] {
                    let mut idx = [0usize; 3];
                    idx[split] = my_plane;
                    idx[o0] = a;
                    idx[o1] = b;
                    let mine = locals[rank].labels[slab.aidx(idx[0], idx[1], idx[2])];
                    let theirs = p.payload[at];
                    at += 1;
                    if mine >= 0 && theirs >= 0 {
                        pairs.push(((rank, mine as usize), (p.src, theirs as usize)));
                    }
                }
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    Ok(pairs)
}

fn is_periodic_split(world: &World, bi: usize) -> bool {
    let split = world.decomp.parts[0][bi].split_dir;
    matches!(world.blocks[bi].bc[2 * split], crate::mesh::BcTag::Periodic)
}
