//! Ghost-cell fills: halo exchange along the split direction, periodic wraps,
//! and physical boundary conditions. With ghosts filled, face fluxes can be
//! computed uniformly from cell averages everywhere.

use super::state::{FieldState, World};
use crate::comm::{route, Packet};
use crate::mesh::{BcTag, NodeClass, Slab};
use crate::Result;
use rayon::prelude::*;

/// Cell-array selector for generic exchanges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellField {
    U(usize),
    P,
    Phi,
}

impl CellField {
    fn get(self, fs: &FieldState) -> &Vec<f64> {
        match self {
            CellField::U(d) => &fs.u[d],
            CellField::P => &fs.p,
            CellField::Phi => &fs.phi,
        }
    }

    fn get_mut(self, fs: &mut FieldState) -> &mut Vec<f64> {
        match self {
            CellField::U(d) => &mut fs.u[d],
            CellField::P => &mut fs.p,
            CellField::Phi => &mut fs.phi,
        }
    }
}

pub const VELOCITY: [CellField; 3] = [CellField::U(0), CellField::U(1), CellField::U(2)];

/// Refresh all ghost cells of the selected fields: local fills in the
/// unsplit directions, the split-direction halo exchange (with periodic wrap
/// across ranks), then the split-direction physical ends.
pub fn refresh_ghosts(world: &mut World, fields: &[CellField]) -> Result<()> {
    // phase 1: local fills in non-split directions
    let blocks = &world.blocks;
    let frames = &world.frames;
    world.ranks.par_iter_mut().for_each(|rd| {
        for bi in 0..blocks.len() {
            let slab = &rd.slabs[bi];
            if slab.is_empty() {
                continue;
            }
            let split = slab.part.split_dir;
            for dir in 0..3 {
                if dir == split {
                    continue;
                }
                fill_direction(&blocks[bi], slab, &mut rd.fields[bi], frames, fields, dir);
            }
        }
    });

    // phase 2: split-direction halo exchange, including periodic wrap
    exchange_split(world, fields)?;

    // phase 3: physical ends of the split direction
    let blocks = &world.blocks;
    let frames = &world.frames;
    world.ranks.par_iter_mut().for_each(|rd| {
        for bi in 0..blocks.len() {
            let slab = &rd.slabs[bi];
            if slab.is_empty() {
                continue;
            }
            let split = slab.part.split_dir;
            let cells = blocks[bi].cells();
            let at_min = slab.part.start[split] == 0;
            let at_max = slab.part.start[split] + slab.part.count[split] == cells[split];
            let periodic = matches!(blocks[bi].bc[2 * split], BcTag::Periodic);
            if (at_min || at_max) && !periodic {
                fill_direction_sided(
                    &blocks[bi],
                    slab,
                    &mut rd.fields[bi],
                    frames,
                    fields,
                    split,
                    at_min,
                    at_max,
                );
            }
        }
    });
    Ok(())
}

/// Fill both ends of `dir` (used for unsplit directions where the slab owns
/// the full extent).
fn fill_direction(
    block: &crate::mesh::Block,
    slab: &Slab,
    fs: &mut FieldState,
    frames: &[crate::frames::FrameState],
    fields: &[CellField],
    dir: usize,
) {
    fill_direction_sided(block, slab, fs, frames, fields, dir, true, true)
}

#[allow(clippy::too_many_arguments)]
fn fill_direction_sided(
    block: &crate::mesh::Block,
    slab: &Slab,
    fs: &mut FieldState,
    frames: &[crate::frames::FrameState],
    fields: &[CellField],
    dir: usize,
    do_min: bool,
    do_max: bool,
) {
    let frame = &frames[block.frame_id];
    let g = slab.g[dir];
    let n = slab.nc[dir];
    let (adims, two_d) = (slab.adims, slab.two_d);
    // iteration over the full transverse extent
    let others: Vec<usize> = (0..3).filter(|&d| d != dir).collect();
    let (o0, o1) = (others[0], others[1]);

    for (side, active) in [(0usize, do_min), (1usize, do_max)] {
        if !active {
            continue;
        }
        let tag = if two_d && dir == 2 {
            BcTag::Symmetry
        } else {
            block.bc[2 * dir + side]
        };
        for f in fields {
            for m in 0..g {
                // ghost plane index and its source plane
                let (gi, src) = match (side, tag) {
                    (0, BcTag::Periodic) => (g - 1 - m, g + n - 1 - m),
                    (1, BcTag::Periodic) => (g + n + m, g + m),
                    (0, _) => (g - 1 - m, g + m),
                    (_, _) => (g + n + m, g + n - 1 - m),
                };
                for b in 0..adims[o1] {
                    for a in 0..adims[o0] {
                        let mut gidx = [0usize; 3];
                        let mut sidx = [0usize; 3];
                        gidx[dir] = gi;
                        sidx[dir] = src;
                        gidx[o0] = a;
                        gidx[o1] = b;
                        sidx[o0] = a;
                        sidx[o1] = b;
                        let ga = slab.aidx(gidx[0], gidx[1], gidx[2]);
                        let sa = slab.aidx(sidx[0], sidx[1], sidx[2]);
                        let sval = f.get(fs)[sa];
                        let v = match (tag, *f) {
                            (BcTag::Periodic, _) => sval,
                            (BcTag::Dirichlet { velocity }, CellField::U(d))
                            | (BcTag::FarField { velocity }, CellField::U(d)) => {
                                let vf = frame.vel_world_to_frame(velocity.into());
                                2.0 * vf[d] - sval
                            }
                            (BcTag::SlipWall, CellField::U(d)) | (BcTag::Symmetry, CellField::U(d)) => {
                                if d == dir {
                                    -sval
                                } else {
                                    sval
                                }
                            }
                            (BcTag::Interface, CellField::U(_)) => sval,
                            // pressure and phi: zero normal gradient
                            (_, CellField::P) | (_, CellField::Phi) => sval,
                        };
                        f.get_mut(fs)[ga] = v;
                    }
                }
            }
        }
    }
}

/// Split-direction halo exchange, with cross-rank periodic wrap.
fn exchange_split(world: &mut World, fields: &[CellField]) -> Result<()> {
    let nranks = world.nranks();
    let nblocks = world.nblocks();
    let mut outgoing: Vec<Packet<Vec<f64>>> = Vec::new();

    // adjacency over non-empty slabs, in slab order
    let mut chains: Vec<Vec<usize>> = Vec::with_capacity(nblocks);
    for bi in 0..nblocks {
        let chain: Vec<usize> = (0..nranks)
            .filter(|&r| !world.ranks[r].slabs[bi].is_empty())
            .collect();
        chains.push(chain);
    }

    for bi in 0..nblocks {
        let chain = &chains[bi];
        if chain.is_empty() {
            continue;
        }
        let split = world.ranks[chain[0]].slabs[bi].part.split_dir;
        let periodic = matches!(world.blocks[bi].bc[2 * split], BcTag::Periodic);
        for (pos, &r) in chain.iter().enumerate() {
            let slab = &world.ranks[r].slabs[bi];
            let fs = &world.ranks[r].fields[bi];
            let g = slab.g[split];
            let depth = g.min(slab.nc[split]);
            // low neighbor receives our low owned planes into its high ghosts
            let low_nbr = if pos > 0 {
                Some(chain[pos - 1])
            } else if periodic && chain.len() >= 1 {
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
                let data = pack_planes(slab, fs, fields, split, slab.g[split], depth);
                outgoing.push(Packet { src: r, dst, block: 2 * bi, payload: data });
            }
            if let Some(dst) = high_nbr {
                let data =
                    pack_planes(slab, fs, fields, split, slab.g[split] + slab.nc[split] - depth, depth);
                outgoing.push(Packet { src: r, dst, block: 2 * bi + 1, payload: data });
            }
        }
    }

    world.stats.comm.halo_messages += outgoing.iter().filter(|p| p.src != p.dst).count();
    let inboxes = route(nranks, outgoing)?;
    world.ranks.par_iter_mut().zip(inboxes).for_each(|(rd, inbox)| {
        for p in inbox {
            let bi = p.block / 2;
            // a packet from the source's low side always lands in the
            // receiver's high ghosts, and vice versa
            let into_high = p.block % 2 == 0;
            let slab = &rd.slabs[bi];
            let split = slab.part.split_dir;
            let g = slab.g[split];
            let others: Vec<usize> = (0..3).filter(|&d| d != split).collect();
            let transverse = slab.adims[others[0]] * slab.adims[others[1]];
            // the sender may own fewer planes than our ghost width
            let depth = (p.payload.len() / (fields.len() * transverse)).min(g);
            let start = if into_high { g + slab.nc[split] } else { g - depth };
            unpack_planes(&rd.slabs[bi], &mut rd.fields[bi], fields, split, start, depth, &p.payload);
        }
    });
    Ok(())
}

fn pack_planes(
    slab: &Slab,
    fs: &FieldState,
    fields: &[CellField],
    dir: usize,
    start: usize,
    depth: usize,
) -> Vec<f64> {
    let others: Vec<usize> = (0..3).filter(|&d| d != dir).collect();
    let (o0, o1) = (others[0], others[1]);
    let mut out = Vec::with_capacity(fields.len() * depth * slab.adims[o0] * slab.adims[o1]);
    for f in fields {
        let arr = f.get(fs);
        for m in 0..depth {
            for b in 0..slab.adims[o1] {
                for a in 0..slab.adims[o0] {
                    let mut idx = [0usize; 3];
                    idx[dir] = start + m;
                    idx[o0] = a;
                    idx[o1] = b;
                    out.push(arr[slab.aidx(idx[0], idx[1], idx[2])]);
                }
            }
        }
    }
    out
}

fn unpack_planes(
    slab: &Slab,
    fs: &mut FieldState,
    fields: &[CellField],
    dir: usize,
    start: usize,
    depth: usize,
    data: &[f64],
) {
    let others: Vec<usize> = (0..3).filter(|&d| d != dir).collect();
    let (o0, o1) = (others[0], others[1]);
    let mut at = 0;
    for f in fields {
        let arr = f.get_mut(fs);
        for m in 0..depth {
            for b in 0..slab.adims[o1] {
                for a in 0..slab.adims[o0] {
                    let mut idx = [0usize; 3];
                    idx[dir] = start + m;
                    idx[o0] = a;
                    idx[o1] = b;
                    arr[slab.aidx(idx[0], idx[1], idx[2])] = data[at];
                    at += 1;
                }
            }
        }
    }
}

/// Exchange node-class masks into split-direction ghost planes (classes in
/// unsplit ghost directions are computed locally from the same predicates).
pub fn exchange_masks(world: &mut World) -> Result<()> {
    let nranks = world.nranks();
    let nblocks = world.nblocks();
    let mut outgoing: Vec<Packet<Vec<u8>>> = Vec::new();
    for bi in 0..nblocks {
        let chain: Vec<usize> = (0..nranks)
            .filter(|&r| !world.ranks[r].slabs[bi].is_empty())
            .collect();
        if chain.is_empty() {
            continue;
        }
        let split = world.ranks[chain[0]].slabs[bi].part.split_dir;
        let periodic = matches!(world.blocks[bi].bc[2 * split], BcTag::Periodic);
        for (pos, &r) in chain.iter().enumerate() {
            let slab = &world.ranks[r].slabs[bi];
            let g = slab.g[split];
            let depth = g.min(slab.nc[split]);
            let pack = |start: usize| -> Vec<u8> {
                let others: Vec<usize> = (0..3).filter(|&d| d != split).collect();
                let (o0, o1) = (others[0], others[1]);
                let mut out = Vec::new();
                for m in 0..depth {
                    for b in 0..slab.adims[o1] {
                        for a in 0..slab.adims[o0] {
                            let mut idx = [0usize; 3];
                            idx[split] = start + m;
                            idx[o0] = a;
                            idx[o1] = b;
                            out.push(slab.mask[slab.aidx(idx[0], idx[1], idx[2])] as u8);
                        }
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
                outgoing.push(Packet { src: r, dst, block: 2 * bi, payload: pack(g) });
            }
            if let Some(dst) = high_nbr {
                outgoing.push(Packet {
                    src: r,
                    dst,
                    block: 2 * bi + 1,
                    payload: pack(g + slab.nc[split] - depth),
                });
            }
        }
    }
    world.stats.comm.halo_messages += outgoing.iter().filter(|p| p.src != p.dst).count();
    let inboxes = route(nranks, outgoing)?;
    world.ranks.par_iter_mut().zip(inboxes).for_each(|(rd, inbox)| {
        for p in inbox {
            let bi = p.block / 2;
            let into_high = p.block % 2 == 0;
            let slab = &rd.slabs[bi];
            let split = slab.part.split_dir;
            let g = slab.g[split];
            let others: Vec<usize> = (0..3).filter(|&d| d != split).collect();
            let (o0, o1) = (others[0], others[1]);
            let adims = slab.adims;
            let transverse = adims[o0] * adims[o1];
            let depth = (p.payload.len() / transverse).min(g);
            let start = if into_high { g + slab.nc[split] } else { g - depth };
            let slab = &mut rd.slabs[bi];
            let mut at = 0;
            for m in 0..depth {
                for b in 0..adims[o1] {
                    for a in 0..adims[o0] {
                        let mut idx = [0usize; 3];
                        idx[split] = start + m;
                        idx[o0] = a;
                        idx[o1] = b;
                        let cls = match p.payload[at] {
                            0 => NodeClass::Fluid,
                            1 => NodeClass::Blanked,
                            2 => NodeClass::Interface,
                            3 => NodeClass::BlankBuffer,
                            4 => NodeClass::NearWallBuffer,
                            5 => NodeClass::Solid,
                            _ => NodeClass::IbBoundary,
                        };
                        let ai = slab.aidx(idx[0], idx[1], idx[2]);
                        slab.mask[ai] = cls;
                        at += 1;
                    }
                }
            }
        }
    });
    Ok(())
}
