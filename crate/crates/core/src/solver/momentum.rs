//! Implicit momentum solve: matrix-free Newton-Krylov on the BDF2 residual,
//! with overset interface and immersed-boundary values refreshed between
//! Newton iterations and frozen within each linear solve.

use super::bc::{refresh_ghosts, CellField, VELOCITY};
use super::ops::{block_residual, compute_pressure_gradient, extend_pressure, MomentumLayout};
use super::state::World;
use crate::linalg::{gmres, DistVec};
use crate::{Error, Result};
use rayon::prelude::*;
use std::time::Instant;

/// Interpolate interface/buffer values from the current iterate, reconstruct
/// immersed-boundary cells, and refresh all ghosts.
pub fn refresh_boundary_values(world: &mut World) -> Result<()> {
    let t = Instant::now();
    if let Some(matrix) = world.matrix.take() {
        let (vals, msgs) = matrix.apply::<3>(world, |rd, bi, a| {
            let fs = &rd.fields[bi];
            [fs.u[0][a], fs.u[1][a], fs.u[2][a]]
        })?;
        world.stats.comm.interp_messages += msgs;
        // transform donor-frame components into the receiver frame and store
        let frames = &world.frames;
        let blocks = &world.blocks;
        world.ranks.par_iter_mut().zip(&vals).for_each(|(rd, rvals)| {
            let m = &matrix.ranks[rd.rank];
            for row in 0..m.nrows {
                if !m.found[row] {
                    continue;
                }
                let (bi, aidx) = m.target[row];
                let donor = &frames[blocks[m.donor_block[row] as usize].frame_id];
                let recv = &frames[blocks[bi as usize].frame_id];
                let v = rvals[row];
                let uw = donor.q * crate::math::vec3(v[0], v[1], v[2]);
                let uf = recv.q.transpose() * uw;
                let fs = &mut rd.fields[bi as usize];
                for d in 0..3 {
                    fs.u[d][aidx as usize] = uf[d];
                }
            }
        });
        world.matrix = Some(matrix);
    }
    world.stats.timings.interpolate += t.elapsed();

    refresh_ghosts(world, &VELOCITY)?;
    if !world.bodies.is_empty() {
        let recon = std::mem::take(&mut world.ib_recon);
        crate::ibm::reconstruct_ib_velocities(world, &recon);
        world.ib_recon = recon;
        refresh_ghosts(world, &VELOCITY)?;
    }
    Ok(())
}

/// Evaluate the momentum residual on all solved cells (ghosts must be fresh).
fn eval_residual(world: &World, layout: &MomentumLayout, out: &mut DistVec) {
    let (c0, c1, c2) = super::bdf_coeffs(world.step);
    let dt = world.params.dt;
    let re = world.params.re;
    let scheme = world.params.scheme;
    world.ranks.par_iter().zip(out.chunks.par_iter_mut()).for_each(|(rd, chunk)| {
        for (bi, slab) in rd.slabs.iter().enumerate() {
            let solved = &layout.solved[rd.rank][bi];
            if solved.is_empty() {
                continue;
            }
            let seg = layout.seg_offset[rd.rank][bi];
            let len = solved.len() * layout.ncomp[bi];
            block_residual(
                slab,
                &rd.fields[bi],
                solved,
                layout.ncomp[bi],
                (c0, c1, c2),
                dt,
                re,
                scheme,
                &mut chunk[seg..seg + len],
            );
        }
    });
}

/// Diagonal preconditioner: time term plus the viscous diagonal.
fn build_diag(world: &World, layout: &MomentumLayout, c0: f64) -> DistVec {
    let dt = world.params.dt;
    let re = world.params.re;
    let mut diag = DistVec::zeros_like(&layout.layout);
    world.ranks.par_iter().zip(diag.chunks.par_iter_mut()).for_each(|(rd, chunk)| {
        let mut at = 0;
        for (bi, slab) in rd.slabs.iter().enumerate() {
            let solved = &layout.solved[rd.rank][bi];
            for _ in 0..layout.ncomp[bi] {
                for &a32 in solved {
                    let a = a32 as usize;
                    let i = a % slab.adims[0];
                    let j = (a / slab.adims[0]) % slab.adims[1];
                    let k = a / (slab.adims[0] * slab.adims[1]);
                    let jc = slab.metrics.jac[a];
                    let mut visc = 0.0;
                    for dir in 0..3 {
                        let fm = slab.metrics.face(dir, i, j, k);
                        let fp = match dir {
                            0 => slab.metrics.face(dir, i + 1, j, k),
                            1 => slab.metrics.face(dir, i, j + 1, k),
                            _ => slab.metrics.face(dir, i, j, k + 1),
                        };
                        visc += slab.metrics.gv(dir)[fm][dir] + slab.metrics.gv(dir)[fp][dir];
                    }
                    chunk[at] = c0 / dt + jc * visc / re;
                    at += 1;
                }
            }
        }
    });
    diag
}

/// Diagnostic: evaluate and report the initial momentum residual by region.
pub fn momentum_probe(world: &mut World) -> Result<()> {
    let layout = MomentumLayout::new(world);
    refresh_ghosts(world, &[CellField::P])?;
    extend_pressure(world)?;
    compute_pressure_gradient(world);
    refresh_boundary_values(world)?;
    let mut r = DistVec::zeros_like(&layout.layout);
    eval_residual(world, &layout, &mut r);
    for rd in &world.ranks {
        for (bi, slab) in rd.slabs.iter().enumerate() {
            let solved = &layout.solved[rd.rank][bi];
            if solved.is_empty() {
                continue;
            }
            let seg = layout.seg_offset[rd.rank][bi];
            let chunk = &r.chunks[rd.rank];
            let mut worst = (0.0f64, 0usize, 0usize);
            for d in 0..layout.ncomp[bi] {
                for (idx, &a) in solved.iter().enumerate() {
                    let v = chunk[seg + d * solved.len() + idx].abs();
                    if v > worst.0 {
                        worst = (v, a as usize, d);
                    }
                }
            }
            let a = worst.1;
            let i = a % slab.adims[0];
            let j = (a / slab.adims[0]) % slab.adims[1];
            let k = a / (slab.adims[0] * slab.adims[1]);
            println!(
                "block {bi} rank {}: worst |R| = {:.3e} comp {} at array ({i},{j},{k}) block cell {:?} center {:?} class-neighborhood:",
                rd.rank, worst.0, worst.2, slab.block_of_array([i, j, k]),
                slab.centers[a]
            );
            for dj in -2i64..=2 {
                let mut row = String::new();
                for di in -2i64..=2 {
                    let aa = slab.aidx((i as i64 + di) as usize, (j as i64 + dj) as usize, k);
                    row.push_str(&format!("{:?} ", slab.mask[aa]));
                }
                println!("   {row}");
            }
        }
    }
    Ok(())
}

/// Solve the nonlinear momentum system for the intermediate velocity.
pub fn momentum_step(world: &mut World) -> Result<()> {
    let layout = MomentumLayout::new(world);
    let params = world.params.clone();
    let (c0, _, _) = super::bdf_coeffs(world.step);

    // initial guess: extrapolated time history on solved cells
    if world.step >= 1 {
        let solved = &layout.solved;
        let ncomp = &layout.ncomp;
        world.ranks.par_iter_mut().for_each(|rd| {
            let rank = rd.rank;
            for bi in 0..rd.slabs.len() {
                let fs = &mut rd.fields[bi];
                for d in 0..ncomp[bi] {
                    for &a in &solved[rank][bi] {
                        let a = a as usize;
                        fs.u[d][a] = 2.0 * fs.un[d][a] - fs.unm1[d][a];
                    }
                }
            }
        });
    }

    // pressure gradient is frozen over the momentum solve
    refresh_ghosts(world, &[CellField::P])?;
    extend_pressure(world)?;
    compute_pressure_gradient(world);

    let diag = build_diag(world, &layout, c0);
    let vl = layout.layout.clone();
    let mut scratch = Vec::new();
    let mut r = DistVec::zeros_like(&vl);
    let mut r0norm = 0.0;
    let mut history = Vec::new();

    for newton in 0..=params.max_newton {
        refresh_boundary_values(world)?;
        eval_residual(world, &layout, &mut r);
        let rnorm = vl.norm2(&r, &mut scratch);
        history.push(rnorm);
        if newton == 0 {
            r0norm = rnorm;
        }
        let target = (params.nonlinear_rtol * r0norm).max(params.nonlinear_atol);
        if rnorm <= target {
            world.stats.newton_iters += newton;
            return Ok(());
        }
        if newton == params.max_newton {
            break;
        }

        // stash the iterate for finite-difference products
        let stash: Vec<[Vec<f64>; 3]> = world
            .ranks
            .iter()
            .flat_map(|rd| rd.fields.iter().map(|fs| fs.u.clone()))
            .collect();
        let restore = |world: &mut World| {
            let mut it = 0;
            for rd in world.ranks.iter_mut() {
                for fs in rd.fields.iter_mut() {
                    for d in 0..3 {
                        fs.u[d].copy_from_slice(&stash[it][d]);
                    }
                    it += 1;
                }
            }
        };

        let unorm = {
            let mut uv = DistVec::zeros_like(&vl);
            layout.gather(world, &mut uv);
            vl.norm2(&uv, &mut scratch)
        };

        let mut rhs = DistVec::zeros_like(&vl);
        rhs.copy_from(&r);
        rhs.scale(-1.0);

        let mut delta = DistVec::zeros_like(&vl);
        let mut jv_scratch = Vec::new();
        let r_base = &r;
        let layout_ref = &layout;
        let vl_ref = &vl;
        let diag_ref = &diag;

        // matrix-free J v by one-sided differencing with frozen boundaries
        let iters = gmres(
            &vl,
            |v: &DistVec, out: &mut DistVec| {
                let vnorm = vl_ref.norm2(v, &mut jv_scratch);
                if vnorm == 0.0 {
                    out.fill(0.0);
                    return;
                }
                let eps = 1.5e-8 * (1.0 + unorm) / vnorm;
                restore(world);
                layout_ref.scatter_add(world, v, eps);
                refresh_ghosts(world, &VELOCITY).expect("halo exchange");
                eval_residual(world, layout_ref, out);
                out.axpy(-1.0, r_base);
                out.scale(1.0 / eps);
            },
            |z: &DistVec, out: &mut DistVec| {
                out.chunks
                    .par_iter_mut()
                    .zip(z.chunks.par_iter().zip(diag_ref.chunks.par_iter()))
                    .for_each(|(o, (zi, di))| {
                        for ((ov, zv), dv) in o.iter_mut().zip(zi).zip(di) {
                            *ov = zv / dv;
                        }
                    });
            },
            &rhs,
            &mut delta,
            0.0,
            params.linear_rtol,
            params.gmres_restart,
            400,
        )?;
        // back to the unperturbed iterate before applying the update
        restore(world);
        world.stats.gmres_iters += iters;

        layout.scatter_add(world, &delta, 1.0);
    }
    Err(Error::NonlinearDivergence { iters: params.max_newton, history })
}
