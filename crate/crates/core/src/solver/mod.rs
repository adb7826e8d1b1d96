//! Fractional-step incompressible flow on curvilinear grids in inertial or
//! non-inertial frames, with overset interface coupling, immersed boundaries
//! and interface mass correction.

pub mod bc;
mod masscorr;
mod momentum;
mod ops;
mod poisson;
mod state;
#[cfg(test)]
mod tests;

pub use masscorr::{mass_flux_correction, surface_flux_sums};
pub use momentum::{momentum_probe, momentum_step};
pub use ops::{
    compute_face_fluxes, compute_pressure_gradient, divergence_inf_norm, extend_pressure,
    update_frame_fluxes, MomentumLayout,
};
pub use poisson::pressure_poisson;
pub use state::{
    FieldState, PhaseTimings, RankData, RunStats, Scheme, SolverParams, World,
};

use crate::Result;
use std::time::Instant;

/// Bdf coefficients (c0 u + c1 u^n + c2 u^{n-1}) / dt; first step falls back
/// to first order.
pub fn bdf_coeffs(step: usize) -> (f64, f64, f64) {
    if step == 0 {
        (1.0, -1.0, 0.0)
    } else {
        (1.5, -2.0, 0.5)
    }
}

/// Advance frames with prescribed motions to time `t_new`.
pub fn advance_prescribed_frames(world: &mut World, t_new: f64) {
    let dt = t_new - world.time;
    for (fid, motion) in world.motions.clone().iter().enumerate() {
        if let Some((vel, omega)) = motion.velocities_at(t_new) {
            let f = world.frames[fid];
            world.frames[fid] = if dt > 0.0 { f.advance(vel, omega, dt) } else { f };
        }
    }
}

/// One full flow solve at the current frame positions: grid assembly,
/// implicit momentum, interface mass correction and the pressure projection.
/// Leaves the time level counters untouched so FSI sub-iterations can repeat it.
pub fn flow_substep(world: &mut World) -> Result<()> {
    crate::assembly::assemble(world)?;
    let recon = crate::ibm::build_ib_reconstruction(world)?;
    world.ib_recon = recon;

    update_frame_fluxes(world);

    // pressure restarts from the step-start value each sub-iteration
    for rd in world.ranks.iter_mut() {
        for fs in rd.fields.iter_mut() {
            fs.p.copy_from_slice(&fs.p_n);
        }
    }

    let t = Instant::now();
    momentum_step(world)?;
    world.stats.timings.momentum += t.elapsed();

    let t = Instant::now();
    compute_face_fluxes(world);
    mass_flux_correction(world)?;
    world.stats.timings.correction += t.elapsed();

    let t = Instant::now();
    pressure_poisson(world)?;
    world.stats.timings.poisson += t.elapsed();
    Ok(())
}

/// Rotate time levels and advance the clock.
pub fn finalize_step(world: &mut World) {
    for rd in world.ranks.iter_mut() {
        for fs in rd.fields.iter_mut() {
            for d in 0..3 {
                std::mem::swap(&mut fs.unm1[d], &mut fs.un[d]);
                fs.un[d].copy_from_slice(&fs.u[d]);
                std::mem::swap(&mut fs.flux_nm1[d], &mut fs.flux_n[d]);
                fs.flux_n[d].copy_from_slice(&fs.flux[d]);
            }
            fs.p_n.copy_from_slice(&fs.p);
        }
    }
    world.step += 1;
    world.time += world.params.dt;
}

/// Advance one timestep with prescribed or static frame motions.
pub fn advance_step(world: &mut World) -> Result<()> {
    let t_new = world.time + world.params.dt;
    advance_prescribed_frames(world, t_new);
    flow_substep(world)?;
    finalize_step(world);
    Ok(())
}

/// Fill initial fluxes and histories from the initial velocity field.
pub fn initialize_fluxes(world: &mut World) -> Result<()> {
    crate::assembly::assemble(world)?;
    let recon = crate::ibm::build_ib_reconstruction(world)?;
    world.ib_recon = recon;
    update_frame_fluxes(world);
    momentum::refresh_boundary_values(world)?;
    compute_face_fluxes(world);
    for rd in world.ranks.iter_mut() {
        for fs in rd.fields.iter_mut() {
            for d in 0..3 {
                fs.un[d].copy_from_slice(&fs.u[d]);
                fs.unm1[d].copy_from_slice(&fs.u[d]);
                fs.flux_n[d].copy_from_slice(&fs.flux[d]);
                fs.flux_nm1[d].copy_from_slice(&fs.flux[d]);
            }
            fs.p_n.copy_from_slice(&fs.p);
        }
    }
    Ok(())
}
