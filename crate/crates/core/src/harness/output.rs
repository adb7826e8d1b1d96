//! Field output (legacy VTK structured grids), CSV time histories, and the
//! per-phase timing/communication report.

use super::run::StepRecord;
use crate::math::vec3;
use crate::solver::World;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Gather one block's cell-centered field onto full arrays (world components)
/// and write a legacy VTK structured grid of its solution points.
pub fn write_vtk_blocks(world: &World, dir: &Path, step: usize) -> Result<()> {
    for bi in 0..world.nblocks() {
        let block = &world.blocks[bi];
        let frame = &world.frames[block.frame_id];
        let cells = block.cells();
        let nk = if block.symmetric_k { 1 } else { cells[2] };
        let n = cells[0] * cells[1] * nk;
        let mut pos = vec![vec3(0.0, 0.0, 0.0); n];
        let mut vel = vec![vec3(0.0, 0.0, 0.0); n];
        let mut pr = vec![0.0f64; n];
        let mut cls = vec![0u8; n];
        for rd in &world.ranks {
            let slab = &rd.slabs[bi];
            if slab.is_empty() {
                continue;
            }
            let fs = &rd.fields[bi];
            let [ri, rj, rk] = slab.owned();
            for k in rk.clone() {
                for j in rj.clone() {
                    for i in ri.clone() {
                        let a = slab.aidx(i, j, k);
                        let c = slab.block_of_array([i, j, k]);
                        let g = c[0] as usize + cells[0] * (c[1] as usize + cells[1] * c[2] as usize);
                        pos[g] = frame.world_from_frame(slab.centers[a]);
                        vel[g] =
                            frame.vel_frame_to_world(vec3(fs.u[0][a], fs.u[1][a], fs.u[2][a]));
                        pr[g] = fs.p[a];
                        cls[g] = slab.mask[a] as u8;
                    }
                }
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "# vtk DataFile Version 3.0");
        let _ = writeln!(out, "{} step {step}", block.id);
        let _ = writeln!(out, "ASCII\nDATASET STRUCTURED_GRID");
        let _ = writeln!(out, "DIMENSIONS {} {} {}", cells[0], cells[1], nk);
        let _ = writeln!(out, "POINTS {n} double");
        for p in &pos {
            let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", p.x, p.y, p.z);
        }
        let _ = writeln!(out, "POINT_DATA {n}");
        let _ = writeln!(out, "VECTORS velocity double");
        for v in &vel {
            let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", v.x, v.y, v.z);
        }
        let _ = writeln!(out, "SCALARS pressure double\nLOOKUP_TABLE default");
        for p in &pr {
            let _ = writeln!(out, "{p:.9e}");
        }
        let _ = writeln!(out, "SCALARS nodeclass int\nLOOKUP_TABLE default");
        for c in &cls {
            let _ = writeln!(out, "{c}");
        }
        std::fs::write(dir.join(format!("block{}_{step:06}.vtk", block.id)), out)?;
    }
    Ok(())
}

pub fn write_history_csv(world: &World, history: &[StepRecord], dir: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = write!(out, "step,time,max_divergence,max_surface_flux");
    for body in &world.bodies {
        let n = &body.name;
        let _ = write!(out, ",{n}_u,{n}_v,{n}_w,{n}_fx,{n}_fy,{n}_fz,{n}_tz");
    }
    let _ = writeln!(out);
    for r in history {
        let _ = write!(
            out,
            "{},{:.12e},{:.3e},{:.3e}",
            r.step, r.time, r.max_divergence, r.max_surface_flux
        );
        for (v, f, tz) in &r.bodies {
            let _ = write!(
                out,
                ",{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                v.x, v.y, v.z, f.x, f.y, f.z, tz
            );
        }
        let _ = writeln!(out);
    }
    std::fs::write(dir.join("history.csv"), out)?;
    Ok(())
}

/// Per-phase wall time, message counts, and the packed-message bound.
pub fn timing_report(world: &World) -> String {
    let t = &world.stats.timings;
    let c = &world.stats.comm;
    let n = world.nblocks();
    let m = world.nranks();
    let bound_per_assembly = n * m.saturating_sub(1) * m;
    let assemblies = world.stats.assemblies.max(1);
    let mut out = String::new();
    let _ = writeln!(out, "phase wall-clock totals over {} assemblies:", world.stats.assemblies);
    let row = |name: &str, d: std::time::Duration| format!("  {name:<14} {:>10.3} s\n", d.as_secs_f64());
    out.push_str(&row("hole-cut", t.hole_cut));
    out.push_str(&row("query-id", t.query_id));
    out.push_str(&row("exchange", t.exchange));
    out.push_str(&row("donor-search", t.search));
    out.push_str(&row("donor-select", t.select));
    out.push_str(&row("matrix", t.matrix));
    out.push_str(&row("interpolate", t.interpolate));
    out.push_str(&row("momentum", t.momentum));
    out.push_str(&row("mass-correct", t.correction));
    out.push_str(&row("poisson", t.poisson));
    let assembly = t.assembly_total().as_secs_f64();
    let solver = t.solver_total().as_secs_f64();
    let _ = writeln!(out, "grid assembly : flow solver = {:.3} s : {:.3} s ({:.2}%)",
        assembly, solver, 100.0 * assembly / solver.max(1e-12));
    let _ = writeln!(out, "interpolation : flow solver = {:.3} s : {:.3} s ({:.3}%)",
        t.interpolate.as_secs_f64(), solver, 100.0 * t.interpolate.as_secs_f64() / solver.max(1e-12));
    let _ = writeln!(
        out,
        "packed query messages {} over {} assemblies (bound n*P(m,2) = {} per assembly): {}",
        c.query_messages,
        world.stats.assemblies,
        bound_per_assembly,
        if c.query_messages <= bound_per_assembly * assemblies { "within bound" } else { "BOUND EXCEEDED" },
    );
    let _ = writeln!(out, "reply messages {}", c.reply_messages);
    let _ = writeln!(out, "interpolation gather messages {}", c.interp_messages);
    let _ = writeln!(out, "halo messages {}", c.halo_messages);
    let _ = writeln!(out, "newton {} gmres {} poisson {}",
        world.stats.newton_iters, world.stats.gmres_iters, world.stats.poisson_iters);
    let _ = writeln!(out, "max divergence {:.3e}", world.stats.max_divergence);
    let _ = writeln!(out, "max surface flux {:.3e}", world.stats.max_surface_flux);
    out
}
