//! Strong-coupling rigid-body FSI: sub-iterate frame motion, grid assembly,
//! flow solve and loads until the body velocities reach a fixed point.

use super::compute_loads;
use crate::math::{vec3, Vec3};
use crate::solver::{advance_prescribed_frames, finalize_step, flow_substep, World};
use crate::{Error, Result};

/// Translational rigid-body state (rotation is masked off for the cylinder
/// cases; frames carry any prescribed rotation separately).
#[derive(Debug, Clone, Copy)]
pub struct RigidBodyState {
    pub vel: Vec3,
    pub acc: Vec3,
}

impl RigidBodyState {
    pub fn initial(_body: &super::ImmersedBody) -> Self {
        RigidBodyState { vel: Vec3::zeros(), acc: Vec3::zeros() }
    }
}

/// Acceleration from the rigid-body equation of motion
/// M du/dt = F_f - (rho_s - rho_f) V g, gravity along -y, masked by the free
/// degrees of freedom.
pub fn body_acceleration(
    body: &super::ImmersedBody,
    force_world: Vec3,
    gravity: f64,
) -> Vec3 {
    let v = body.volume();
    let m = body.mass();
    let f = force_world + vec3(0.0, -(body.density_ratio - 1.0) * v * gravity, 0.0);
    let mut acc = f / m;
    for d in 0..3 {
        if !body.dof[d] {
            acc[d] = 0.0;
        }
    }
    acc
}

/// Advance one timestep with strong-coupling sub-iterations for the FSI
/// bodies; prescribed frames advance once up front.
pub fn fsi_step(world: &mut World) -> Result<()> {
    let dt = world.params.dt;
    let t_new = world.time + dt;
    let pre: Vec<crate::frames::FrameState> = world.frames.clone();
    advance_prescribed_frames(world, t_new);

    // FSI frames and their attached bodies
    let fsi: Vec<(usize, usize)> = world
        .bodies
        .iter()
        .enumerate()
        .filter(|(_, b)| world.motions[b.frame].is_fsi())
        .map(|(i, b)| (i, b.frame))
        .collect();
    if fsi.is_empty() {
        flow_substep(world)?;
        finalize_step(world);
        return Ok(());
    }

    let vel_n: Vec<Vec3> = fsi.iter().map(|&(b, _)| world.bodies_state[b].vel).collect();
    let acc_n: Vec<Vec3> = fsi.iter().map(|&(b, _)| world.bodies_state[b].acc).collect();
    // predictor
    let mut v_k: Vec<Vec3> = vel_n.iter().zip(&acc_n).map(|(v, a)| v + a * dt).collect();
    let mut acc_k = acc_n.clone();
    let mut relax = world.params.fsi_relax;
    let mut prev_resid: Option<Vec<Vec3>> = None;

    let max_iter = world.params.max_fsi;
    let mut converged = false;
    for _it in 0..max_iter {
        for (slot, &(_, fid)) in fsi.iter().enumerate() {
            world.frames[fid] = pre[fid].advance(v_k[slot], Vec3::zeros(), dt);
        }
        flow_substep(world)?;

        let mut resid: Vec<Vec3> = Vec::with_capacity(fsi.len());
        for (slot, &(body, _)) in fsi.iter().enumerate() {
            let loads = compute_loads(world, body)?;
            let acc = body_acceleration(&world.bodies[body], loads.force, world.params.gravity);
            acc_k[slot] = acc;
            let v_target = vel_n[slot] + 0.5 * dt * (acc_n[slot] + acc);
            resid.push(v_target - v_k[slot]);
        }

        // Aitken acceleration on the concatenated residual
        if world.params.fsi_aitken {
            if let Some(prev) = &prev_resid {
                let mut num = 0.0;
                let mut den = 0.0;
                for (r, rp) in resid.iter().zip(prev) {
                    let d = r - rp;
                    num += rp.dot(&d);
                    den += d.dot(&d);
                }
                if den > 1e-300 {
                    relax = (-relax * num / den).clamp(0.05, 1.0);
                }
            }
            prev_resid = Some(resid.clone());
        }

        let mut change = 0.0f64;
        for (slot, r) in resid.iter().enumerate() {
            let dv = relax * r;
            v_k[slot] += dv;
            change = change.max(dv.amax());
        }
        if change < world.params.fsi_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FsiDivergence(max_iter));
    }

    // the last solved state is within tolerance of the fixed point; keep it
    for (slot, &(body, _)) in fsi.iter().enumerate() {
        world.bodies_state[body].vel = v_k[slot];
        world.bodies_state[body].acc = acc_k[slot];
    }
    finalize_step(world);
    Ok(())
}
