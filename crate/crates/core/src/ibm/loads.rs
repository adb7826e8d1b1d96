//! Body force and torque from surface traction: one-point-per-triangle
//! quadrature with probe sampling along the surface normal.

use super::reconstruct::locate_in_slab;
use crate::math::Vec3;
use crate::solver::World;
use crate::Result;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default)]
pub struct BodyLoads {
    /// Net fluid force on the body, world components.
    pub force: Vec3,
    /// Net torque about the body frame origin, world components.
    pub torque: Vec3,
    /// Triangles successfully sampled / total.
    pub covered: usize,
    pub total: usize,
}

/// Integrate pressure and viscous traction over the body surface.
///
/// Pressure at the wall is extrapolated linearly from two probe points along
/// the outward normal; the viscous traction uses the tangential part of the
/// one-sided normal derivative. For 2D (symmetric) blocks the cap triangles
/// are skipped; they carry no in-plane load.
pub fn compute_loads(world: &World, body_id: usize) -> Result<BodyLoads> {
    let body = &world.bodies[body_id];
    let bi = body.block;
    let block = &world.blocks[bi];
    let bframe = &world.frames[block.frame_id];
    let sframe = &world.frames[body.frame];
    let (rot, shift) = sframe.pose_in(bframe);
    let re = world.params.re;

    let ntris = body.surface.tris.len();
    // per-rank contributions keyed by triangle id, then reduced in id order
    let partials: Vec<Vec<(u32, Vec3, Vec3)>> = world
        .ranks
        .par_iter()
        .map(|rd| {
            let slab = &rd.slabs[bi];
            let fs = &rd.fields[bi];
            let mut out = Vec::new();
            if slab.is_empty() || slab.control.is_none() {
                return out;
            }
            let h = slab.mean_edge();
            let (d1, d2) = (1.2 * h, 2.4 * h);
            for t in 0..ntris {
                let [a, b, c] = body.surface.triangle(t);
                let (a, b, c) = (rot * a + shift, rot * b + shift, rot * c + shift);
                let n_raw = (b - a).cross(&(c - a));
                let area2 = n_raw.norm();
                if area2 < 1e-300 {
                    continue;
                }
                let n = n_raw / area2;
                let area = 0.5 * area2;
                if slab.two_d && n.z.abs() > 0.9 {
                    continue;
                }
                let centroid = (a + b + c) / 3.0;
                let p1 = centroid + n * d1;
                // ownership: the rank whose owned donor cells contain probe 1
                let Some((st1, w1)) = locate_in_slab(slab, block, p1) else {
                    continue;
                };
                let p2 = centroid + n * d2;
                let s2 = locate_in_slab(slab, block, p2);

                let sample = |st: &[u32; 8], w: &[f64; 8]| -> (f64, Vec3) {
                    let mut pv = 0.0;
                    let mut uv = Vec3::zeros();
                    for bcorner in 0..8 {
                        let idx = st[bcorner] as usize;
                        pv += w[bcorner] * fs.p[idx];
                        for d in 0..3 {
                            uv[d] += w[bcorner] * fs.u[d][idx];
                        }
                    }
                    (pv, uv)
                };
                let (pa, ua) = sample(&st1, &w1);
                let p_wall = match &s2 {
                    Some((st2, w2)) => {
                        let (pb, _) = sample(st2, w2);
                        pa - d1 * (pb - pa) / (d2 - d1)
                    }
                    None => pa,
                };
                let x_world = bframe.world_from_frame(centroid);
                let u_wall =
                    bframe.vel_world_to_frame(body.surface_velocity_world(sframe, x_world));
                let dudn = (ua - u_wall) / d1;
                let tangential = dudn - n * dudn.dot(&n);
                let traction = -p_wall * n + tangential / re;
                let f_frame = traction * area;
                let f_world = bframe.vel_frame_to_world(f_frame);
                let arm = x_world - sframe.origin;
                out.push((t as u32, f_world, arm.cross(&f_world)));
            }
            out
        })
        .collect();

    // deterministic reduction in triangle order
    let mut merged: Vec<(u32, Vec3, Vec3)> = partials.into_iter().flatten().collect();
    merged.sort_by_key(|e| e.0);
    let mut loads = BodyLoads { total: ntris, ..Default::default() };
    let mut last = u32::MAX;
    for (t, f, tq) in merged {
        if t == last {
            continue; // boundary-duplicate probe claimed by two ranks
        }
        last = t;
        loads.covered += 1;
        loads.force += f;
        loads.torque += tq;
    }
    Ok(loads)
}
