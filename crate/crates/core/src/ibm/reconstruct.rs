//! Boundary-condition reconstruction on the fluid nodes next to immersed
//! bodies: linear interpolation along the surface normal between the body
//! velocity and the first exterior fluid value.

use crate::interp::corner_weights;
use crate::math::Vec3;
use crate::mesh::NodeClass;
use crate::solver::World;
use crate::{Error, Result};
use rayon::prelude::*;

/// One ib node's sampling stencil, built once per assembly.
#[derive(Debug, Clone)]
pub struct IbPoint {
    /// Cell array index of the ib node in its slab.
    pub aidx: u32,
    pub body: u16,
    /// Closest surface point and distance from it to the ib node.
    pub surf: Vec3,
    pub d_node: f64,
    /// Probe point distance and its interpolation stencil (cell array
    /// indices and weights in the same slab).
    pub d_probe: f64,
    pub stencil: [u32; 8],
    pub weights: [f64; 8],
    /// Probe unusable (falls outside or in solid): use the wall velocity.
    pub degenerate: bool,
}

/// Per (rank, block) reconstruction lists, rebuilt after each hole cut.
pub fn build_ib_reconstruction(world: &mut World) -> Result<Vec<Vec<Vec<IbPoint>>>> {
    let blocks = &world.blocks;
    let frames = &world.frames;
    let bodies = &world.bodies;

    let lists: Vec<Result<Vec<Vec<IbPoint>>>> = world
        .ranks
        .par_iter()
        .map(|rd| -> Result<Vec<Vec<IbPoint>>> {
            let mut per_block = Vec::with_capacity(blocks.len());
            for (bi, slab) in rd.slabs.iter().enumerate() {
                let mut list = Vec::new();
                if slab.is_empty() || !bodies.iter().any(|b| b.block == bi) {
                    per_block.push(list);
                    continue;
                }
                let bframe = &frames[blocks[bi].frame_id];
                let h = slab.mean_edge();
                let [ri, rj, rk] = slab.owned();
                for k in rk.clone() {
                    for j in rj.clone() {
                        for i in ri.clone() {
                            let a = slab.aidx(i, j, k);
                            if slab.mask[a] != NodeClass::IbBoundary {
                                continue;
                            }
                            let x = slab.centers[a];
                            // nearest body surface point over this block's bodies
                            let mut best: Option<(usize, Vec3, f64)> = None;
                            for (body_id, body) in bodies.iter().enumerate() {
                                if body.block != bi {
                                    continue;
                                }
                                let sframe = &frames[body.frame];
                                let (rot, shift) = sframe.pose_in(bframe);
                                let (sp, d) = closest_surface_point(&body.surface, &rot, shift, x);
                                if best.map_or(true, |(_, _, bd)| d < bd) {
                                    best = Some((body_id, sp, d));
                                }
                            }
                            let (body_id, surf, d_node) = best.ok_or_else(|| {
                                Error::Config("ib node without a body".into())
                            })?;
                            let n = (x - surf) / d_node.max(1e-300);
                            let d_probe = d_node + 1.5 * h;
                            let probe = surf + n * d_probe;
                            let located = locate_in_slab(slab, &blocks[bi], probe);
                            let (stencil, weights, degenerate) = match located {
                                Some((st, w)) => (st, w, false),
                                None => ([0; 8], [0.0; 8], true),
                            };
                            list.push(IbPoint {
                                aidx: a as u32,
                                body: body_id as u16,
                                surf,
                                d_node,
                                d_probe,
                                stencil,
                                weights,
                                degenerate,
                            });
                        }
                    }
                }
                per_block.push(list);
            }
            Ok(per_block)
        })
        .collect();
    lists.into_iter().collect()
}

/// Write reconstructed velocities into every ib cell: u_ib interpolates
/// linearly along the normal between the wall velocity and the probe value.
pub fn reconstruct_ib_velocities(world: &mut World, recon: &[Vec<Vec<IbPoint>>]) {
    let blocks = &world.blocks;
    let frames = &world.frames;
    let bodies = &world.bodies;
    world.ranks.par_iter_mut().for_each(|rd| {
        let rank = rd.rank;
        for bi in 0..blocks.len() {
            let list = &recon[rank][bi];
            if list.is_empty() {
                continue;
            }
            let bframe = &frames[blocks[bi].frame_id];
            let slab = &rd.slabs[bi];
            let fs = &mut rd.fields[bi];
            for pt in list {
                let body = &bodies[pt.body as usize];
                let sframe = &frames[body.frame];
                let x_world = bframe.world_from_frame(pt.surf);
                let u_wall = bframe.vel_world_to_frame(body.surface_velocity_world(sframe, x_world));
                let ratio = pt.d_node / pt.d_probe;
                let mut u_ib = [0.0; 3];
                for d in 0..3 {
                    let u_probe = if pt.degenerate {
                        u_wall[d]
                    } else {
                        let mut acc = 0.0;
                        for b in 0..8 {
                            acc += pt.weights[b] * fs.u[d][pt.stencil[b] as usize];
                        }
                        acc
                    };
                    u_ib[d] = u_wall[d] + ratio * (u_probe - u_wall[d]);
                }
                let _ = slab;
                for d in 0..3 {
                    fs.u[d][pt.aidx as usize] = u_ib[d];
                }
            }
        }
    });
}

/// Closest point on a transformed triangulated surface (brute force over
/// triangles; surfaces are small).
fn closest_surface_point(
    surface: &crate::geometry::TriSurface,
    rot: &crate::math::Mat3,
    shift: Vec3,
    x: Vec3,
) -> (Vec3, f64) {
    let mut best = (Vec3::zeros(), f64::INFINITY);
    for t in 0..surface.tris.len() {
        let [a, b, c] = surface.triangle(t);
        let (a, b, c) = (rot * a + shift, rot * b + shift, rot * c + shift);
        let p = closest_on_triangle(x, a, b, c);
        let d = (x - p).norm();
        if d < best.1 {
            best = (p, d);
        }
    }
    best
}

fn closest_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    // Ericson's barycentric clamping
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Locate a point in the slab's donor-hex lattice and return the 8-cell
/// stencil with trilinear weights. Requires all stencil cells to carry values.
pub fn locate_in_slab(
    slab: &crate::mesh::Slab,
    block: &crate::mesh::Block,
    p: Vec3,
) -> Option<([u32; 8], [f64; 8])> {
    let control = slab.control.as_ref()?;
    let cc = match crate::geometry::locate_control_cell(p, control) {
        crate::geometry::ControlLocation::Cell(c) => c,
        crate::geometry::ControlLocation::Outside => return None,
    };
    for &id in control.candidates(cc) {
        let base = slab.donor_base_of_id(block, id);
        let hex = slab.donor_hex(base)?;
        if let Ok((d, diag)) = crate::geometry::trilinear_distances(p, &hex) {
            if d.iter().all(|&v| v > -1e-10 * diag) {
                let a = crate::interp::trilinear_coefficients(&d).ok()?;
                let w = corner_weights(a);
                let mut stencil = [0u32; 8];
                let mut ok = true;
                for b in 0..8 {
                    let off = [(b & 1) as i64, ((b >> 1) & 1) as i64, ((b >> 2) & 1) as i64];
                    let cell = [base[0] + off[0], base[1] + off[1], base[2] + off[2]];
                    match slab.array_of_block(cell) {
                        Some(ai) => {
                            if !slab.class(ai[0], ai[1], ai[2]).has_value() {
                                ok = false;
                            }
                            stencil[b] = slab.aidx(ai[0], ai[1], ai[2]) as u32;
                        }
                        None => ok = false,
                    }
                }
                if ok {
                    return Some((stencil, w));
                }
                return None;
            }
        }
    }
    None
}
