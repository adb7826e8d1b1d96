//! Operator and step tests on small single-block worlds.

use super::bc::{refresh_ghosts, VELOCITY};
use super::ops::MomentumLayout;
use super::*;
use crate::harness::{taylor_green_pressure, taylor_green_velocity};
use crate::linalg::DistVec;
use crate::math::{vec3, Vec3};
use crate::mesh::{BcTag, BlockRole, Mapping};

fn periodic_box(n: usize, l: f64, nranks: usize) -> World {
    let h = l / (n - 1) as f64;
    let cfg = crate::harness::BlockConfig {
        name: "b".into(),
        role: BlockRole::Background,
        dims: [n, n, 3],
        mapping: Mapping::Uniform { origin: [0.0, 0.0, -h], spacing: [h, h, h] },
        bc: crate::harness::BcConfig::uniform(BcTag::Periodic),
        motion: crate::frames::Motion::Static,
        frame_origin: [0.0; 3],
        symmetric_k: true,
        blank: None,
    };
    let case = crate::harness::CaseConfig {
        title: "test".into(),
        ranks: nranks,
        solver: SolverParams { re: 10.0, dt: 0.01, end_time: 0.01, ..Default::default() },
        init: crate::harness::InitialField::Quiescent,
        output: Default::default(),
        blocks: vec![cfg],
        bodies: vec![],
    };
    crate::harness::build_world(&case, None).unwrap()
}

fn residual_norm(world: &mut World) -> (f64, DistVec) {
    crate::assembly::assemble(world).unwrap();
    update_frame_fluxes(world);
    refresh_ghosts(world, &VELOCITY).unwrap();
    refresh_ghosts(world, &[super::bc::CellField::P]).unwrap();
    extend_pressure(world).unwrap();
    compute_pressure_gradient(world);
    let layout = MomentumLayout::new(world);
    let mut r = DistVec::zeros_like(&layout.layout);
    let (c0, c1, c2) = bdf_coeffs(world.step);
    let dt = world.params.dt;
    let re = world.params.re;
    let scheme = world.params.scheme;
    for rd in &world.ranks {
        for (bi, slab) in rd.slabs.iter().enumerate() {
            let solved = &layout.solved[rd.rank][bi];
            if solved.is_empty() {
                continue;
            }
            let seg = layout.seg_offset[rd.rank][bi];
            let len = solved.len() * layout.ncomp[bi];
            super::ops::block_residual(
                slab,
                &rd.fields[bi],
                solved,
                layout.ncomp[bi],
                (c0, c1, c2),
                dt,
                re,
                scheme,
                &mut r.chunks[rd.rank][seg..seg + len],
            );
        }
    }
    let mut scratch = Vec::new();
    let n = layout.layout.norm2(&r, &mut scratch);
    (n, r)
}

#[test]
fn uniform_flow_has_zero_residual() {
    let mut world = periodic_box(9, 1.0, 1);
    world.set_velocity(|_, _| vec3(0.7, -0.3, 0.0));
    crate::solver::initialize_fluxes(&mut world).unwrap();
    let (rn, _) = residual_norm(&mut world);
    assert!(rn < 1e-12, "residual {rn}");
}

#[test]
fn taylor_green_residual_is_truncation_sized() {
    // at the analytic state the BDF1 time term vanishes and the remaining
    // spatial residual must shrink at second order
    let mut errs = Vec::new();
    for n in [17usize, 33] {
        let mut world = periodic_box(n, 2.0 * std::f64::consts::PI, 1);
        let re = world.params.re;
        world.set_velocity(move |x, t| taylor_green_velocity(x, t, re));
        world.set_pressure(move |x, t| taylor_green_pressure(x, t, re));
        crate::solver::initialize_fluxes(&mut world).unwrap();
        let (_, r) = residual_norm(&mut world);
        let maxr = r.chunks.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        errs.push(maxr);
    }
    let order = (errs[0] / errs[1]).log2();
    assert!(order > 1.7, "orders {errs:?} -> {order}");
}

#[test]
fn rigid_rotation_with_matching_frame_has_zero_convection() {
    // grid frame rotating at omega; absolute velocity = rigid rotation =
    // frame velocity, so the relative flux vanishes
    let n = 11;
    let h = 1.0 / (n - 1) as f64;
    let cfg = crate::harness::BlockConfig {
        name: "b".into(),
        role: BlockRole::Background,
        dims: [n, n, 3],
        mapping: Mapping::Uniform { origin: [-0.5, -0.5, -h], spacing: [h, h, h] },
        bc: crate::harness::BcConfig::uniform(BcTag::Dirichlet { velocity: [0.0; 3] }),
        motion: crate::frames::Motion::ConstantRotation { omega: [0.0, 0.0, 0.8] },
        frame_origin: [0.0; 3],
        symmetric_k: true,
        blank: None,
    };
    let case = crate::harness::CaseConfig {
        title: "rot".into(),
        ranks: 1,
        solver: SolverParams { re: 1e12, dt: 1.0, end_time: 1.0, ..Default::default() },
        init: crate::harness::InitialField::Quiescent,
        output: Default::default(),
        blocks: vec![cfg],
        bodies: vec![],
    };
    let mut world = crate::harness::build_world(&case, None).unwrap();
    // absolute velocity field of rigid rotation, in frame components
    world.set_velocity(|x, _| vec3(-0.8 * x.y, 0.8 * x.x, 0.0));
    crate::assembly::assemble(&mut world).unwrap();
    update_frame_fluxes(&mut world);
    refresh_ghosts(&mut world, &VELOCITY).unwrap();

    // check U - V = 0 at interior faces
    let rd = &world.ranks[0];
    let slab = &rd.slabs[0];
    let fs = &rd.fields[0];
    let mut worst = 0.0f64;
    for dir in 0..2 {
        for k in 1..slab.adims[2] - 1 {
            for j in 2..slab.adims[1] - 2 {
                for i in 2..slab.adims[0] - 2 {
                    let f = slab.metrics.face(dir, i, j, k);
                    let s = slab.metrics.s(dir)[f];
                    let stride = [1, slab.adims[0], slab.adims[0] * slab.adims[1]];
                    let chi = slab.aidx(i, j, k);
                    let clo = chi - stride[dir];
                    let mut ub = Vec3::zeros();
                    for d in 0..3 {
                        ub[d] = 0.5 * (fs.u[d][clo] + fs.u[d][chi]);
                    }
                    let rel = ub.dot(&s) - fs.vflux[dir][f];
                    worst = worst.max(rel.abs());
                }
            }
        }
    }
    assert!(worst < 1e-12, "relative flux {worst}");
}

#[test]
fn taylor_green_single_block_step_converges() {
    let mut world = periodic_box(33, 2.0 * std::f64::consts::PI, 1);
    let re = world.params.re;
    world.params.dt = 0.005;
    world.set_velocity(move |x, t| taylor_green_velocity(x, t, re));
    world.set_pressure(move |x, t| taylor_green_pressure(x, t, re));
    crate::solver::initialize_fluxes(&mut world).unwrap();
    for _ in 0..3 {
        advance_step(&mut world).unwrap();
    }
    let div = divergence_inf_norm(&world);
    assert!(div < 1e-10, "divergence {div}");
    let err = crate::harness::standard_error(&world, |x, t| taylor_green_velocity(x, t, re));
    assert!(err < 5e-3, "error {err}");
}
