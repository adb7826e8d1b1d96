//! Hole cutting: classify solid nodes inside immersed bodies, blank nodes
//! inside user/near-wall regions, and derive the buffer and immersed-boundary
//! layers.

use super::BlankKind;
use crate::geometry::{Aabb, RayClassifier};
use crate::math::vec3;
use crate::mesh::{BcTag, NodeClass, Slab};
use crate::solver::World;
use crate::Result;
use rayon::prelude::*;

/// Classify every cell of every slab for the current frame states.
///
/// Classification runs over owned and ghost cells alike with the same global
/// predicates, so ghost classes agree across ranks without communication.
pub fn cut_holes(world: &mut World) -> Result<()> {
    let blocks = &world.blocks;
    let frames = &world.frames;
    let bodies = &world.bodies;
    let blanks = &world.blanks;

    let results: Vec<Result<()>> = world
        .ranks
        .par_iter_mut()
        .map(|rd| -> Result<()> {
            for bi in 0..blocks.len() {
                let block = &blocks[bi];
                let slab = &mut rd.slabs[bi];
                if slab.is_empty() {
                    continue;
                }
                slab.mask.fill(NodeClass::Fluid);
                slab.blank_src.fill(u16::MAX);

                // interface rings on faces tagged Interface
                let cells = block.cells();
                for a in 0..slab.mask.len() {
                    let i = a % slab.adims[0];
                    let j = (a / slab.adims[0]) % slab.adims[1];
                    let k = a / (slab.adims[0] * slab.adims[1]);
                    let c = slab.block_of_array([i, j, k]);
                    let inside_block = (0..3).all(|d| c[d] >= 0 && c[d] < cells[d] as i64);
                    if !inside_block {
                        continue;
                    }
                    for d in 0..3 {
                        if c[d] == 0 && matches!(block.bc[2 * d], BcTag::Interface) {
                            slab.mask[a] = NodeClass::Interface;
                        }
                        if c[d] == cells[d] as i64 - 1
                            && matches!(block.bc[2 * d + 1], BcTag::Interface)
                        {
                            slab.mask[a] = NodeClass::Interface;
                        }
                    }
                }

                // immersed bodies in their home block
                for (body_id, body) in bodies.iter().enumerate() {
                    if body.block != bi {
                        continue;
                    }
                    let inside = body_inside_flags(slab, body_id, body, blocks, frames)?;
                    for (a, &is_in) in inside.iter().enumerate() {
                        if is_in {
                            slab.mask[a] = NodeClass::Solid;
                        }
                    }
                }

                // blank regions targeting this block
                for (ri, region) in blanks.iter().enumerate() {
                    if !region.targets.applies_to(bi) {
                        continue;
                    }
                    let rframe = &frames[region.frame];
                    let bframe = &frames[block.frame_id];
                    let (rot, shift) = rframe.pose_in(bframe);
                    let surf = region.surface.transformed(&rot, shift);
                    let saabb = surf.aabb().inflate(1e-12);
                    // quick reject against the slab extent
                    let slab_box = Aabb::of_points(slab.centers.iter().copied());
                    if !saabb.overlaps(&slab_box) {
                        continue;
                    }
                    let rc = RayClassifier::new(&surf, vec3(1.0, 0.0, 0.0));
                    for (a, m) in slab.mask.iter_mut().enumerate() {
                        if *m == NodeClass::Solid {
                            continue;
                        }
                        let c = slab.centers[a];
                        if saabb.contains(c) && rc.is_inside(c)? {
                            *m = NodeClass::Blanked;
                            slab.blank_src[a] = ri as u16;
                        }
                    }
                }

                // derive buffer and immersed-boundary layers on block cells
                derive_layers(slab, blanks, cells);
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok(())
}

/// First fluid layer next to solids becomes IbBoundary; first fluid layer next
/// to blanks becomes the buffer, typed by the blanking region.
fn derive_layers(slab: &mut Slab, blanks: &[super::BlankRegion], cells: [usize; 3]) {
    let adims = slab.adims;
    let idx = |i: usize, j: usize, k: usize| i + adims[0] * (j + adims[1] * k);
    let mut updates: Vec<(usize, NodeClass)> = Vec::new();
    for k in 0..adims[2] {
        for j in 0..adims[1] {
            for i in 0..adims[0] {
                let a = idx(i, j, k);
                if slab.mask[a] != NodeClass::Fluid {
                    continue;
                }
                let c = slab.block_of_array([i, j, k]);
                if (0..3).any(|d| c[d] < 0 || c[d] >= cells[d] as i64) {
                    continue;
                }
                let mut near_solid = false;
                let mut blank_region = None;
                // face neighbors; the 2D collapsed direction has no lateral holes
                for d in 0..3 {
                    for s in [-1i64, 1] {
                        let mut n = [i as i64, j as i64, k as i64];
                        n[d] += s;
                        if n[d] < 0 || n[d] >= adims[d] as i64 {
                            continue;
                        }
                        let na = idx(n[0] as usize, n[1] as usize, n[2] as usize);
                        match slab.mask[na] {
                            NodeClass::Solid => near_solid = true,
                            NodeClass::Blanked => {
                                let src = slab.blank_src[na];
                                if blank_region.map_or(true, |b| src < b) {
                                    blank_region = Some(src);
                                }
                            }
                            _ => {}
                        }
                    }
                }
                if near_solid {
                    updates.push((a, NodeClass::IbBoundary));
                } else if let Some(src) = blank_region {
                    let kind = blanks
                        .get(src as usize)
                        .map(|r| r.kind)
                        .unwrap_or(BlankKind::UserBlank);
                    slab.blank_src[a] = src;
                    updates.push((
                        a,
                        match kind {
                            BlankKind::UserBlank => NodeClass::BlankBuffer,
                            BlankKind::NearWall => NodeClass::NearWallBuffer,
                        },
                    ));
                }
            }
        }
    }
    for (a, cls) in updates {
        slab.mask[a] = cls;
    }
}

/// Inside-body flags per allocated cell, cached on the slab keyed by the
/// body's pose relative to the block frame.
fn body_inside_flags(
    slab: &mut Slab,
    body_id: usize,
    body: &crate::ibm::ImmersedBody,
    blocks: &[crate::mesh::Block],
    frames: &[crate::frames::FrameState],
) -> Result<Vec<bool>> {
    let bframe = &frames[blocks[slab.part.block].frame_id];
    let sframe = &frames[body.frame];
    let (rot, shift) = sframe.pose_in(bframe);
    if let Some((crot, cshift, flags)) = slab.body_cache.get(&body_id) {
        if (crot - rot).norm() < 1e-13 && (cshift - shift).norm() < 1e-13 {
            return Ok(flags.clone());
        }
    }
    let surf = body.surface.transformed(&rot, shift);
    let aabb = surf.aabb();
    let rc = RayClassifier::new(&surf, vec3(1.0, 0.0, 0.0));
    let mut flags = vec![false; slab.centers.len()];
    for (a, &c) in slab.centers.iter().enumerate() {
        if aabb.contains(c) {
            flags[a] = rc.is_inside(c)?;
        }
    }
    slab.body_cache.insert(body_id, (rot, shift, flags.clone()));
    Ok(flags)
}
