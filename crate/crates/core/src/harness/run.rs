//! The case driver: timestep loop, per-step records, outputs.

use super::config::{build_world, CaseConfig};
use super::output;
use crate::math::Vec3;
use crate::solver::{self, World};
use crate::Result;
use std::path::PathBuf;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub ranks: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub max_steps: Option<usize>,
    pub tolerate_orphans: bool,
    /// Callback hook period for progress printing (0 = quiet).
    pub progress_every: usize,
}

/// One history row.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub max_divergence: f64,
    pub max_surface_flux: f64,
    /// Per body: velocity (world), force (world), torque z.
    pub bodies: Vec<(Vec3, Vec3, f64)>,
}

pub struct RunResult {
    pub world: World,
    pub history: Vec<StepRecord>,
}

/// Run a case to its end time (or `max_steps`), recording histories and
/// optionally writing output files.
pub fn run_case(cfg: &CaseConfig, opts: &RunOptions) -> Result<RunResult> {
    let mut world = build_world(cfg, opts.ranks)?;
    if opts.tolerate_orphans {
        world.params.tolerate_orphans = true;
    }
    let steps_from_time = (world.params.end_time / world.params.dt).round() as usize;
    let steps = opts.max_steps.map_or(steps_from_time, |m| m.min(steps_from_time));
    let has_fsi = world.motions.iter().any(|m| m.is_fsi());

    solver::initialize_fluxes(&mut world)?;

    let out_dir = opts.out_dir.clone().or_else(|| cfg.output.dir.clone().map(PathBuf::from));
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir)?;
        output::write_vtk_blocks(&world, dir, 0)?;
    }

    let mut history = Vec::with_capacity(steps + 1);
    history.push(record(&world)?);

    for s in 1..=steps {
        if has_fsi {
            crate::ibm::fsi_step(&mut world)?;
        } else {
            solver::advance_step(&mut world)?;
        }

        let every = cfg.output.history_every.max(1);
        if s % every == 0 || s == steps {
            let rec = record(&world)?;
            world.stats.max_divergence = world.stats.max_divergence.max(rec.max_divergence);
            history.push(rec);
        }
        if let Some(dir) = &out_dir {
            if cfg.output.fields_every > 0 && s % cfg.output.fields_every == 0 {
                output::write_vtk_blocks(&world, dir, s)?;
            }
        }
        if opts.progress_every > 0 && s % opts.progress_every == 0 {
            let last = history.last().unwrap();
            println!(
                "step {s}/{steps}  t = {:.4}  div = {:.2e}  flux = {:.2e}",
                world.time, last.max_divergence, last.max_surface_flux
            );
        }
    }

    if let Some(dir) = &out_dir {
        output::write_vtk_blocks(&world, dir, steps)?;
        output::write_history_csv(&world, &history, dir)?;
        std::fs::write(dir.join("timing.txt"), output::timing_report(&world))?;
    }
    Ok(RunResult { world, history })
}

fn record(world: &World) -> Result<StepRecord> {
    let mut bodies = Vec::with_capacity(world.bodies.len());
    for (id, body) in world.bodies.iter().enumerate() {
        let loads = crate::ibm::compute_loads(world, id)?;
        let vel = if world.motions[body.frame].is_fsi() {
            world.bodies_state[id].vel
        } else {
            world.frames[body.frame].vel
        };
        bodies.push((vel, loads.force, loads.torque.z));
    }
    let sums = solver::surface_flux_sums(world);
    let max_flux = sums.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    Ok(StepRecord {
        step: world.step,
        time: world.time,
        max_divergence: solver::divergence_inf_norm(world),
        max_surface_flux: max_flux,
        bodies,
    })
}
