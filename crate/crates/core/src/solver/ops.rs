//! Discrete operators: the combined convective terms C1/C2, pressure gradient
//! G, viscous term D, face-flux reconstruction, and the momentum residual.
//!
//! All operators are conservative differences of face quantities; faces use
//! the area vectors xi^r_q / J so the same code handles curvilinear blocks.
//! Orthogonal blocks skip the viscous cross terms.

use super::state::{FieldState, World};
use super::Scheme;
use crate::comm::PlaneLayout;
use crate::linalg::{DistVec, VecLayout};
use crate::mesh::{NodeClass, Slab};
use rayon::prelude::*;

/// Distributed-vector layout of the momentum unknowns: per rank, blocks one
/// after the other, components within a block, solved cells innermost.
pub struct MomentumLayout {
    /// Components solved per block (2 for symmetric 2D blocks).
    pub ncomp: Vec<usize>,
    /// Solved-cell array indices per (rank, block).
    pub solved: Vec<Vec<Vec<u32>>>,
    /// Reduction slot per solved cell per (rank, block).
    pub slots: Vec<Vec<Vec<u32>>>,
    /// Chunk offset of each (rank, block, comp) segment.
    pub seg_offset: Vec<Vec<usize>>,
    pub layout: VecLayout,
}

impl MomentumLayout {
    pub fn new(world: &World) -> MomentumLayout {
        let nblocks = world.nblocks();
        let ncomp: Vec<usize> =
            world.blocks.iter().map(|b| if b.symmetric_k { 2 } else { 3 }).collect();
        let planes_per_block: Vec<usize> = world
            .blocks
            .iter()
            .map(|b| {
                let split = world.decomp.parts[0][b.id].split_dir;
                b.cells()[split]
            })
            .collect();
        let plane_layout = PlaneLayout::new(&planes_per_block);

        let mut solved = Vec::with_capacity(world.nranks());
        let mut slots = Vec::with_capacity(world.nranks());
        let mut seg_offset = Vec::with_capacity(world.nranks());
        let mut chunk_slots: Vec<Vec<u32>> = Vec::with_capacity(world.nranks());
        for rd in &world.ranks {
            let mut rs = Vec::with_capacity(nblocks);
            let mut rp = Vec::with_capacity(nblocks);
            let mut ro = Vec::with_capacity(nblocks);
            let mut cslots = Vec::new();
            for (bi, slab) in rd.slabs.iter().enumerate() {
                ro.push(cslots.len());
                let mut cells = Vec::new();
                let mut planes = Vec::new();
                if !slab.is_empty() {
                    let split = slab.part.split_dir;
                    let [ri, rj, rk] = slab.owned();
                    for k in rk.clone() {
                        for j in rj.clone() {
                            for i in ri.clone() {
                                let a = slab.aidx(i, j, k);
                                if slab.mask[a] == NodeClass::Fluid {
                                    cells.push(a as u32);
                                    let c = slab.block_of_array([i, j, k]);
                                    planes.push(plane_layout.slot(bi, c[split] as usize) as u32);
                                }
                            }
                        }
                    }
                }
                for _ in 0..ncomp[bi] {
                    cslots.extend_from_slice(&planes);
                }
                rs.push(cells);
                rp.push(planes);
            }
            solved.push(rs);
            slots.push(rp);
            seg_offset.push(ro);
            chunk_slots.push(cslots);
        }
        MomentumLayout {
            ncomp,
            solved,
            slots,
            seg_offset,
            layout: VecLayout { slots: chunk_slots, planes: plane_layout },
        }
    }

    /// Copy grid velocity values into a chunked vector.
    pub fn gather(&self, world: &World, v: &mut DistVec) {
        v.chunks.par_iter_mut().enumerate().for_each(|(rank, chunk)| {
            let rd = &world.ranks[rank];
            let mut at = 0;
            for bi in 0..rd.slabs.len() {
                for d in 0..self.ncomp[bi] {
                    let arr = &rd.fields[bi].u[d];
                    for &a in &self.solved[rank][bi] {
                        chunk[at] = arr[a as usize];
                        at += 1;
                    }
                }
            }
        });
    }

    /// Add `eps * v` into the grid velocity arrays on solved cells.
    pub fn scatter_add(&self, world: &mut World, v: &DistVec, eps: f64) {
        let solved = &self.solved;
        let ncomp = &self.ncomp;
        world.ranks.par_iter_mut().zip(v.chunks.par_iter()).for_each(|(rd, chunk)| {
            let rank = rd.rank;
            let mut at = 0;
            for bi in 0..rd.slabs.len() {
                for d in 0..ncomp[bi] {
                    let arr = &mut rd.fields[bi].u[d];
                    for &a in &solved[rank][bi] {
                        arr[a as usize] += eps * chunk[at];
                        at += 1;
                    }
                }
            }
        });
    }

    /// Store grid velocities from a chunked vector.
    pub fn scatter(&self, world: &mut World, v: &DistVec) {
        let solved = &self.solved;
        let ncomp = &self.ncomp;
        world.ranks.par_iter_mut().zip(v.chunks.par_iter()).for_each(|(rd, chunk)| {
            let rank = rd.rank;
            let mut at = 0;
            for bi in 0..rd.slabs.len() {
                for d in 0..ncomp[bi] {
                    let arr = &mut rd.fields[bi].u[d];
                    for &a in &solved[rank][bi] {
                        arr[a as usize] = chunk[at];
                        at += 1;
                    }
                }
            }
        });
    }
}

/// Rebuild the frame-motion face quantities (V^r flux and w at faces) from the
/// current frame states.
pub fn update_frame_fluxes(world: &mut World) {
    let blocks = &world.blocks;
    let frames = &world.frames;
    world.ranks.par_iter_mut().for_each(|rd| {
        for (bi, slab) in rd.slabs.iter().enumerate() {
            let frame = &frames[blocks[bi].frame_id];
            let fs = &mut rd.fields[bi];
            let moving = frame.vel.norm() > 0.0 || frame.omega.norm() > 0.0;
            for dir in 0..3 {
                let s = slab.metrics.s(dir);
                let fc = slab.metrics.fc(dir);
                let vf = &mut fs.vflux[dir];
                let wf = &mut fs.wface[dir];
                if !moving {
                    vf.fill(0.0);
                    for w in wf.iter_mut() {
                        *w = [0.0; 3];
                    }
                    continue;
                }
                for f in 0..vf.len() {
                    let v = frame.grid_velocity_frame(fc[f]);
                    vf[f] = v.dot(&s[f]);
                    let w = frame.rotation_velocity_frame(fc[f]);
                    wf[f] = [w.x, w.y, w.z];
                }
            }
        }
    });
}

/// Momentum residual on the solved cells of one slab:
/// (c0 u + c1 u^n + c2 u^nm1)/dt + C1(u) + C2(w) + G(p) - D(u)/Re,
/// written into `out` in layout segment order.
#[allow(clippy::too_many_arguments)]
pub fn block_residual(
    slab: &Slab,
    fs: &FieldState,
    solved: &[u32],
    ncomp: usize,
    coeffs: (f64, f64, f64),
    dt: f64,
    re: f64,
    scheme: Scheme,
    out: &mut [f64],
) {
    let (c0, c1, c2) = coeffs;
    let inv_dt = 1.0 / dt;
    let inv_re = 1.0 / re;
    let adims = slab.adims;
    let stride = [1usize, adims[0], adims[0] * adims[1]];
    let ndirs = if slab.two_d { 2 } else { 3 };
    let ortho = slab.orthogonal;
    let n = solved.len();

    for (idx, &a32) in solved.iter().enumerate() {
        let a = a32 as usize;
        let i = a % adims[0];
        let j = (a / adims[0]) % adims[1];
        let k = a / (adims[0] * adims[1]);
        let jc = slab.metrics.jac[a];
        let mut acc = [0.0f64; 3];

        for dir in 0..ndirs {
            let s = slab.metrics.s(dir);
            let gv = slab.metrics.gv(dir);
            let vf = &fs.vflux[dir];
            let wf = &fs.wface[dir];
            let fm = slab.metrics.face(dir, i, j, k);
            let fp = match dir {
                0 => slab.metrics.face(dir, i + 1, j, k),
                1 => slab.metrics.face(dir, i, j + 1, k),
                _ => slab.metrics.face(dir, i, j, k + 1),
            };
            let st = stride[dir];
            let coord = [i, j, k][dir];
            // +/- face fluxes; lo_coord is the dir coordinate of nb_lo
            for (f, nb_lo, nb_hi, lo_coord, sign) in
                [(fm, a - st, a, coord - 1, -1.0f64), (fp, a, a + st, coord, 1.0)]
            {
                let sv = s[f];
                let mut ubar = [0.0f64; 3];
                for d in 0..3 {
                    ubar[d] = 0.5 * (fs.u[d][nb_lo] + fs.u[d][nb_hi]);
                }
                let uflux = ubar[0] * sv.x + ubar[1] * sv.y + ubar[2] * sv.z;
                let rel = uflux - vf[f];
                let wv = wf[f];
                // face value of the transported velocity
                let mut uface = ubar;
                if scheme == Scheme::Quick {
                    // upwind-biased 3-point reconstruction on the donor side,
                    // falling back to central where the stencil leaves the slab
                    if rel >= 0.0 && lo_coord >= 1 {
                        let up2 = nb_lo - st;
                        for d in 0..3 {
                            uface[d] = 0.375 * fs.u[d][nb_hi] + 0.75 * fs.u[d][nb_lo]
                                - 0.125 * fs.u[d][up2];
                        }
                    } else if rel < 0.0 && lo_coord + 2 < adims[dir] {
                        let up2 = nb_hi + st;
                        for d in 0..3 {
                            uface[d] = 0.375 * fs.u[d][nb_lo] + 0.75 * fs.u[d][nb_hi]
                                - 0.125 * fs.u[d][up2];
                        }
                    }
                }
                let mut visc = [0.0f64; 3];
                let gvf = gv[f];
                for d in 0..ncomp {
                    // normal derivative
                    visc[d] = gvf[dir] * (fs.u[d][nb_hi] - fs.u[d][nb_lo]);
                }
                if !ortho {
                    for m in 0..3 {
                        if m == dir || gvf[m] == 0.0 {
                            continue;
                        }
                        let stm = stride[m];
                        for d in 0..ncomp {
                            let grad_m = 0.25
                                * (fs.u[d][nb_lo + stm] - fs.u[d][nb_lo - stm]
                                    + fs.u[d][nb_hi + stm]
                                    - fs.u[d][nb_hi - stm]);
                            visc[d] += gvf[m] * grad_m;
                        }
                    }
                }
                for d in 0..ncomp {
                    let conv = rel * uface[d] + uflux * wv[d];
                    acc[d] += sign * (conv - inv_re * visc[d]);
                }
            }
        }

        for d in 0..ncomp {
            let time = (c0 * fs.u[d][a] + c1 * fs.un[d][a] + c2 * fs.unm1[d][a]) * inv_dt;
            out[d * n + idx] = time + jc * acc[d] + fs.gp[d][a];
        }
    }
}

/// Face fluxes U^r = u_q xi^r_q / J from cell-average velocities, over every
/// interior face of the allocated lattice.
pub fn compute_face_fluxes(world: &mut World) {
    world.ranks.par_iter_mut().for_each(|rd| {
        for (slab, fs) in rd.slabs.iter().zip(rd.fields.iter_mut()) {
            if slab.is_empty() {
                continue;
            }
            let adims = slab.adims;
            let stride = [1usize, adims[0], adims[0] * adims[1]];
            for dir in 0..3 {
                let s = slab.metrics.s(dir);
                let fdims = match dir {
                    0 => [adims[0] + 1, adims[1], adims[2]],
                    1 => [adims[0], adims[1] + 1, adims[2]],
                    _ => [adims[0], adims[1], adims[2] + 1],
                };
                let flux = &mut fs.flux[dir];
                for fk in 0..fdims[2] {
                    for fj in 0..fdims[1] {
                        for fi in 0..fdims[0] {
                            let f = slab.metrics.face(dir, fi, fj, fk);
                            // cells on either side of this face
                            let hi_idx = [fi, fj, fk];
                            if hi_idx[dir] == 0 || hi_idx[dir] == fdims[dir] - 1 {
                                flux[f] = 0.0;
                                continue;
                            }
                            let chi = slab.aidx(fi, fj, fk);
                            let clo = chi - stride[dir];
                            let sv = s[f];
                            let u = 0.5 * (fs.u[0][clo] + fs.u[0][chi]);
                            let v = 0.5 * (fs.u[1][clo] + fs.u[1][chi]);
                            let w = 0.5 * (fs.u[2][clo] + fs.u[2][chi]);
                            flux[f] = u * sv.x + v * sv.y + w * sv.z;
                        }
                    }
                }
            }
        }
    });
}

/// Precompute the pressure-gradient term G(p) per solved cell. Faces against
/// cells without a defined pressure mirror the cell value.
pub fn compute_pressure_gradient(world: &mut World) {
    world.ranks.par_iter_mut().for_each(|rd| {
        for (slab, fs) in rd.slabs.iter().zip(rd.fields.iter_mut()) {
            if slab.is_empty() {
                continue;
            }
            let adims = slab.adims;
            let stride = [1usize, adims[0], adims[0] * adims[1]];
            let [ri, rj, rk] = slab.owned();
            let ndirs = if slab.two_d { 2 } else { 3 };
            for k in rk.clone() {
                for j in rj.clone() {
                    for i in ri.clone() {
                        let a = slab.aidx(i, j, k);
                        if slab.mask[a] != NodeClass::Fluid {
                            continue;
                        }
                        let jc = slab.metrics.jac[a];
                        let pc = fs.p[a];
                        let mut g = [0.0f64; 3];
                        for dir in 0..ndirs {
                            let s = slab.metrics.s(dir);
                            let fm = slab.metrics.face(dir, i, j, k);
                            let fp = match dir {
                                0 => slab.metrics.face(dir, i + 1, j, k),
                                1 => slab.metrics.face(dir, i, j + 1, k),
                                _ => slab.metrics.face(dir, i, j, k + 1),
                            };
                            let st = stride[dir];
                            let p_lo = face_pressure(slab, fs, pc, a - st);
                            let p_hi = face_pressure(slab, fs, pc, a + st);
                            let pm = 0.5 * (pc + p_lo);
                            let pp = 0.5 * (pc + p_hi);
                            for d in 0..3 {
                                g[d] += s[fp][d] * pp - s[fm][d] * pm;
                            }
                        }
                        for d in 0..3 {
                            fs.gp[d][a] = jc * g[d];
                        }
                    }
                }
            }
        }
    });
}

#[inline]
fn face_pressure(slab: &Slab, fs: &FieldState, pc: f64, nbr: usize) -> f64 {
    match slab.mask[nbr] {
        NodeClass::Blanked | NodeClass::Solid => pc,
        _ => fs.p[nbr],
    }
}

/// Fill pressure at non-solved cells from their fluid neighbors so gradients
/// near interfaces and bodies stay one-sided consistent.
pub fn extend_pressure(world: &mut World) -> crate::Result<()> {
    for _pass in 0..2 {
        world.ranks.par_iter_mut().for_each(|rd| {
            for (slab, fs) in rd.slabs.iter().zip(rd.fields.iter_mut()) {
                if slab.is_empty() {
                    continue;
                }
                let adims = slab.adims;
                let stride = [1usize, adims[0], adims[0] * adims[1]];
                let [ri, rj, rk] = slab.owned();
                let mut updates: Vec<(usize, f64)> = Vec::new();
                for k in rk.clone() {
                    for j in rj.clone() {
                        for i in ri.clone() {
                            let a = slab.aidx(i, j, k);
                            if slab.mask[a] == NodeClass::Fluid {
                                continue;
                            }
                            let mut acc = 0.0;
                            let mut cnt = 0.0;
                            for dir in 0..3 {
                                for side in [-1i64, 1] {
                                    let idx = [i as i64, j as i64, k as i64];
                                    let nb = idx[dir] + side;
                                    if nb < 0 || nb >= adims[dir] as i64 {
                                        continue;
                                    }
                                    let na = (a as i64 + side * stride[dir] as i64) as usize;
                                    if slab.mask[na] == NodeClass::Fluid {
                                        acc += fs.p[na];
                                        cnt += 1.0;
                                    }
                                }
                            }
                            if cnt > 0.0 {
                                updates.push((a, acc / cnt));
                            }
                        }
                    }
                }
                for (a, v) in updates {
                    fs.p[a] = v;
                }
            }
        });
        super::bc::refresh_ghosts(world, &[super::bc::CellField::P])?;
    }
    Ok(())
}

/// Largest cell divergence J * d(U^r)/d(xi^r) over all solved cells.
pub fn divergence_inf_norm(world: &World) -> f64 {
    world
        .ranks
        .par_iter()
        .map(|rd| {
            let mut worst = 0.0f64;
            for (slab, fs) in rd.slabs.iter().zip(rd.fields.iter()) {
                if slab.is_empty() {
                    continue;
                }
                let [ri, rj, rk] = slab.owned();
                for k in rk.clone() {
                    for j in rj.clone() {
                        for i in ri.clone() {
                            let a = slab.aidx(i, j, k);
                            if slab.mask[a] != NodeClass::Fluid {
                                continue;
                            }
                            worst = worst.max(cell_divergence(slab, fs, i, j, k).abs());
                        }
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// J times the net outward flux of one cell.
#[inline]
pub fn cell_divergence(slab: &Slab, fs: &FieldState, i: usize, j: usize, k: usize) -> f64 {
    let a = slab.aidx(i, j, k);
    let net = fs.flux[0][slab.metrics.face(0, i + 1, j, k)]
        - fs.flux[0][slab.metrics.face(0, i, j, k)]
        + fs.flux[1][slab.metrics.face(1, i, j + 1, k)]
        - fs.flux[1][slab.metrics.face(1, i, j, k)]
        + fs.flux[2][slab.metrics.face(2, i, j, k + 1)]
        - fs.flux[2][slab.metrics.face(2, i, j, k)];
    slab.metrics.jac[a] * net
}
