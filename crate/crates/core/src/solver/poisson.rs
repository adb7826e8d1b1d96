//! Pressure-correction Poisson solve and the exact projection of the face
//! fluxes. The operator is, by construction, the divergence of the same face
//! gradient used to correct the fluxes, so the projected field satisfies
//! discrete continuity to the solver tolerance.

use super::bc::{refresh_ghosts, CellField};
use super::ops::extend_pressure;
use super::state::World;
use crate::comm::PlaneLayout;
use crate::linalg::{pcg, DistVec, VecLayout};
use crate::mesh::NodeClass;
use crate::Result;
use rayon::prelude::*;

/// Per-block scalar layout over solved cells.
struct BlockLayout {
    solved: Vec<Vec<u32>>, // per rank
    layout: VecLayout,
    diag: DistVec,
}

fn block_layout(world: &World, bi: usize) -> BlockLayout {
    let split = world.decomp.parts[0][bi].split_dir;
    let planes = PlaneLayout::new(&[world.blocks[bi].cells()[split]]);
    let mut solved = Vec::with_capacity(world.nranks());
    let mut slots = Vec::with_capacity(world.nranks());
    for rd in &world.ranks {
        let slab = &rd.slabs[bi];
        let mut cells = Vec::new();
        let mut cslots = Vec::new();
        if !slab.is_empty() {
            let [ri, rj, rk] = slab.owned();
            for k in rk.clone() {
                for j in rj.clone() {
                    for i in ri.clone() {
                        let a = slab.aidx(i, j, k);
                        if slab.mask[a] == NodeClass::Fluid {
                            cells.push(a as u32);
                            let c = slab.block_of_array([i, j, k]);
                            cslots.push(planes.slot(0, c[split] as usize) as u32);
                        }
                    }
                }
            }
        }
        solved.push(cells);
        slots.push(cslots);
    }
    let layout = VecLayout { slots, planes };
    let mut bl = BlockLayout { solved, layout, diag: DistVec { chunks: Vec::new() } };
    bl.diag = diagonal(world, bi, &bl);
    bl
}

/// A face conducts when both adjacent cells are fluid (ghost classes included;
/// non-periodic physical ghosts read zero-gradient phi and contribute nothing).
#[inline]
fn face_open(mask: &[NodeClass], lo: usize, hi: usize) -> bool {
    mask[lo] == NodeClass::Fluid && mask[hi] == NodeClass::Fluid
}

fn diagonal(world: &World, bi: usize, bl: &BlockLayout) -> DistVec {
    let mut diag = DistVec {
        chunks: bl.solved.iter().map(|s| vec![0.0; s.len()]).collect(),
    };
    world.ranks.par_iter().zip(diag.chunks.par_iter_mut()).for_each(|(rd, chunk)| {
        let slab = &rd.slabs[bi];
        for (at, &a32) in bl.solved[rd.rank].iter().enumerate() {
            let a = a32 as usize;
            let i = a % slab.adims[0];
            let j = (a / slab.adims[0]) % slab.adims[1];
            let k = a / (slab.adims[0] * slab.adims[1]);
            let stride = [1usize, slab.adims[0], slab.adims[0] * slab.adims[1]];
            let mut d = 0.0;
            for dir in 0..3 {
                let fm = slab.metrics.face(dir, i, j, k);
                let fp = match dir {
                    0 => slab.metrics.face(dir, i + 1, j, k),
                    1 => slab.metrics.face(dir, i, j + 1, k),
                    _ => slab.metrics.face(dir, i, j, k + 1),
                };
                let gv = slab.metrics.gv(dir);
                if face_open(&slab.mask, a - stride[dir], a) {
                    d += gv[fm][dir];
                }
                if face_open(&slab.mask, a, a + stride[dir]) {
                    d += gv[fp][dir];
                }
            }
            chunk[at] = d.max(1e-300);
        }
    });
    diag
}

/// y = -div(g grad phi) over solved cells, phi taken from the grids (which
/// must hold the current ghost state).
fn apply_operator(world: &World, bi: usize, bl: &BlockLayout, out: &mut DistVec) {
    world.ranks.par_iter().zip(out.chunks.par_iter_mut()).for_each(|(rd, chunk)| {
        let slab = &rd.slabs[bi];
        let fs = &rd.fields[bi];
        let stride = [1usize, slab.adims[0], slab.adims[0] * slab.adims[1]];
        for (at, &a32) in bl.solved[rd.rank].iter().enumerate() {
            let a = a32 as usize;
            let i = a % slab.adims[0];
            let j = (a / slab.adims[0]) % slab.adims[1];
            let k = a / (slab.adims[0] * slab.adims[1]);
            let pc = fs.phi[a];
            let mut acc = 0.0;
            for dir in 0..3 {
                let fm = slab.metrics.face(dir, i, j, k);
                let fp = match dir {
                    0 => slab.metrics.face(dir, i + 1, j, k),
                    1 => slab.metrics.face(dir, i, j + 1, k),
                    _ => slab.metrics.face(dir, i, j, k + 1),
                };
                let gv = slab.metrics.gv(dir);
                let st = stride[dir];
                if face_open(&slab.mask, a - st, a) {
                    acc += gv[fm][dir] * (pc - fs.phi[a - st]);
                }
                if face_open(&slab.mask, a, a + st) {
                    acc += gv[fp][dir] * (pc - fs.phi[a + st]);
                }
            }
            chunk[at] = acc;
        }
    });
}

fn scatter_phi(world: &mut World, bi: usize, bl: &BlockLayout, v: &DistVec) {
    world.ranks.par_iter_mut().zip(v.chunks.par_iter()).for_each(|(rd, chunk)| {
        let rank = rd.rank;
        let fs = &mut rd.fields[bi];
        for (at, &a) in bl.solved[rank].iter().enumerate() {
            fs.phi[a as usize] = chunk[at];
        }
    });
}

/// Red-black symmetric Gauss-Seidel sweeps as the CG preconditioner. Colors
/// come from block-global cell parity so the sweep is partition-invariant.
fn rbgs_precon(
    world: &mut World,
    bi: usize,
    bl: &BlockLayout,
    parity: &[Vec<u8>],
    r: &DistVec,
    z: &mut DistVec,
    sweeps: usize,
) -> Result<()> {
    z.fill(0.0);
    // start from z = 0 in the grids
    for rd in world.ranks.iter_mut() {
        rd.fields[bi].phi.fill(0.0);
    }
    let color_pass = |world: &mut World, color: u8, zv: &mut DistVec| {
        world.ranks.par_iter_mut().zip(zv.chunks.par_iter_mut()).for_each(|(rd, chunk)| {
            let rank = rd.rank;
            let slab = &rd.slabs[bi];
            let stride = [1usize, slab.adims[0], slab.adims[0] * slab.adims[1]];
            let rchunk = &r.chunks[rank];
            let dchunk = &bl.diag.chunks[rank];
            let phi_ptr: &Vec<f64> = &rd.fields[bi].phi;
            // gather neighbor sums against the current grid state, then write
            let mut updates: Vec<(usize, f64, usize)> = Vec::new();
            for (at, &a32) in bl.solved[rank].iter().enumerate() {
                if parity[rank][at] != color {
                    continue;
                }
                let a = a32 as usize;
                let i = a % slab.adims[0];
                let j = (a / slab.adims[0]) % slab.adims[1];
                let k = a / (slab.adims[0] * slab.adims[1]);
                let mut nbr = 0.0;
                for dir in 0..3 {
                    let fm = slab.metrics.face(dir, i, j, k);
                    let fp = match dir {
                        0 => slab.metrics.face(dir, i + 1, j, k),
                        1 => slab.metrics.face(dir, i, j + 1, k),
                        _ => slab.metrics.face(dir, i, j, k + 1),
                    };
                    let gv = slab.metrics.gv(dir);
                    let st = stride[dir];
                    if face_open(&slab.mask, a - st, a) {
                        nbr += gv[fm][dir] * phi_ptr[a - st];
                    }
                    if face_open(&slab.mask, a, a + st) {
                        nbr += gv[fp][dir] * phi_ptr[a + st];
                    }
                }
                updates.push((a, (rchunk[at] + nbr) / dchunk[at], at));
            }
            let phi = &mut rd.fields[bi].phi;
            for (a, v, at) in updates {
                phi[a] = v;
                chunk[at] = v;
            }
        });
    };
    for s in 0..sweeps {
        let order: [u8; 2] = if s % 2 == 0 { [0, 1] } else { [1, 0] };
        for color in order {
            color_pass(world, color, z);
            refresh_ghosts(world, &[CellField::Phi])?;
        }
    }
    Ok(())
}

/// Solve for the pressure increment, project fluxes and velocities, update p.
pub fn pressure_poisson(world: &mut World) -> Result<()> {
    let (c0, _, _) = super::bdf_coeffs(world.step);
    let dtp = world.params.dt / c0;
    let div_tol = world.params.poisson_div_tol;
    let max_iter = world.params.max_poisson;
    let nblocks = world.nblocks();

    for bi in 0..nblocks {
        let bl = block_layout(world, bi);
        let total: usize = bl.solved.iter().map(Vec::len).sum();
        if total == 0 {
            continue;
        }
        // cell parity for the preconditioner colors
        let parity: Vec<Vec<u8>> = world
            .ranks
            .iter()
            .map(|rd| {
                let slab = &rd.slabs[bi];
                bl.solved[rd.rank]
                    .iter()
                    .map(|&a32| {
                        let a = a32 as usize;
                        let i = a % slab.adims[0];
                        let j = (a / slab.adims[0]) % slab.adims[1];
                        let k = a / (slab.adims[0] * slab.adims[1]);
                        let c = slab.block_of_array([i, j, k]);
                        ((c[0] + c[1] + c[2]) & 1) as u8
                    })
                    .collect()
            })
            .collect();

        // rhs: b = -net out-flux / dtp, compatibility mean removed
        let mut b = DistVec::zeros_like(&bl.layout);
        world.ranks.par_iter().zip(b.chunks.par_iter_mut()).for_each(|(rd, chunk)| {
            let slab = &rd.slabs[bi];
            let fs = &rd.fields[bi];
            for (at, &a32) in bl.solved[rd.rank].iter().enumerate() {
                let a = a32 as usize;
                let i = a % slab.adims[0];
                let j = (a / slab.adims[0]) % slab.adims[1];
                let k = a / (slab.adims[0] * slab.adims[1]);
                let net = fs.flux[0][slab.metrics.face(0, i + 1, j, k)]
                    - fs.flux[0][slab.metrics.face(0, i, j, k)]
                    + fs.flux[1][slab.metrics.face(1, i, j + 1, k)]
                    - fs.flux[1][slab.metrics.face(1, i, j, k)]
                    + fs.flux[2][slab.metrics.face(2, i, j, k + 1)]
                    - fs.flux[2][slab.metrics.face(2, i, j, k)];
                chunk[at] = -net / dtp;
            }
        });
        let mut scratch = Vec::new();
        let ones = {
            let mut v = DistVec::zeros_like(&bl.layout);
            v.fill(1.0);
            v
        };
        let mean = bl.layout.dot(&b, &ones, &mut scratch) / total as f64;
        b.axpy(-mean, &ones);

        // the post-projection divergence is dtp * residual / V; bound it by
        // the tolerance using the smallest cell volume
        let min_vol = world
            .ranks
            .par_iter()
            .map(|rd| {
                let slab = &rd.slabs[bi];
                bl.solved[rd.rank]
                    .iter()
                    .map(|&a| slab.metrics.vol[a as usize])
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min);
        let abs_tol = div_tol * min_vol / dtp;

        let mut phi = DistVec::zeros_like(&bl.layout);
        let iters = {
            let bl_ref = &bl;
            let parity_ref = &parity;
            let world_cell = std::cell::RefCell::new(&mut *world);
            pcg(
                &bl.layout,
                |x: &DistVec, y: &mut DistVec| {
                    let mut w = world_cell.borrow_mut();
                    scatter_phi(&mut w, bi, bl_ref, x);
                    refresh_ghosts(&mut w, &[CellField::Phi]).expect("halo exchange");
                    apply_operator(&w, bi, bl_ref, y);
                },
                |r: &DistVec, z: &mut DistVec| {
                    let mut w = world_cell.borrow_mut();
                    rbgs_precon(&mut w, bi, bl_ref, parity_ref, r, z, 1).expect("halo exchange");
                },
                &b,
                &mut phi,
                abs_tol,
                1e-14,
                max_iter,
            )?
        };
        world.stats.poisson_iters += iters;

        // remove the mean so pressure levels stay pinned per block
        let pmean = bl.layout.dot(&phi, &ones, &mut scratch) / total as f64;
        phi.axpy(-pmean, &ones);

        // scatter phi and correct fluxes, velocities and pressure
        scatter_phi(world, bi, &bl, &phi);
        refresh_ghosts(world, &[CellField::Phi])?;
        project_block(world, bi, &bl, dtp);
    }

    refresh_ghosts(world, &[CellField::P])?;
    extend_pressure(world)?;
    Ok(())
}

/// Apply the projection with the same face-gradient form as the operator.
fn project_block(world: &mut World, bi: usize, bl: &BlockLayout, dtp: f64) {
    let two_d = world.blocks[bi].symmetric_k;
    world.ranks.par_iter_mut().for_each(|rd| {
        let slab = &rd.slabs[bi];
        if slab.is_empty() {
            return;
        }
        let fs = &mut rd.fields[bi];
        let stride = [1usize, slab.adims[0], slab.adims[0] * slab.adims[1]];
        let [ri, rj, rk] = slab.owned();
        // flux correction on faces of the owned region (one pass per dir so
        // shared faces are touched once)
        for dir in 0..3 {
            let (r0, r1, r2) = (ri.clone(), rj.clone(), rk.clone());
            let hi_end = [r0.end, r1.end, r2.end][dir] + 1;
            let lo = [r0.start, r1.start, r2.start];
            for k in lo[2]..if dir == 2 { hi_end } else { r2.end } {
                for j in lo[1]..if dir == 1 { hi_end } else { r1.end } {
                    for i in lo[0]..if dir == 0 { hi_end } else { r0.end } {
                        let f = slab.metrics.face(dir, i, j, k);
                        let chi = slab.aidx(i, j, k);
                        let clo = chi - stride[dir];
                        if !face_open(&slab.mask, clo, chi) {
                            continue;
                        }
                        let gv = slab.metrics.gv(dir)[f][dir];
                        fs.flux[dir][f] -= dtp * gv * (fs.phi[chi] - fs.phi[clo]);
                    }
                }
            }
        }
        // velocity correction and pressure update on solved cells
        let ndirs = if two_d { 2 } else { 3 };
        for &a32 in &bl.solved[rd.rank] {
            let a = a32 as usize;
            let i = a % slab.adims[0];
            let j = (a / slab.adims[0]) % slab.adims[1];
            let k = a / (slab.adims[0] * slab.adims[1]);
            let jc = slab.metrics.jac[a];
            let pc = fs.phi[a];
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
                let lo_open = face_open(&slab.mask, a - st, a);
                let hi_open = face_open(&slab.mask, a, a + st);
                let pm = 0.5 * (pc + if lo_open { fs.phi[a - st] } else { pc });
                let pp = 0.5 * (pc + if hi_open { fs.phi[a + st] } else { pc });
                for d in 0..3 {
                    g[d] += s[fp][d] * pp - s[fm][d] * pm;
                }
            }
            for d in 0..3 {
                fs.u[d][a] -= dtp * jc * g[d];
            }
            fs.p[a] += pc;
        }
    });
}
