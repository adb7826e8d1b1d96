//! Validation metrics: the per-block standard error against an analytic field
//! and the decaying-vortex reference solution.

use crate::math::{vec3, Vec3};
use crate::mesh::NodeClass;
use crate::solver::World;

/// Analytic decaying-vortex velocity at a world point.
pub fn taylor_green_velocity(x: Vec3, t: f64, re: f64) -> Vec3 {
    let decay = (-2.0 * t / re).exp();
    vec3(
        -x.x.cos() * x.y.sin() * decay,
        x.x.sin() * x.y.cos() * decay,
        0.0,
    )
}

pub fn taylor_green_pressure(x: Vec3, t: f64, re: f64) -> f64 {
    -0.25 * ((2.0 * x.x).cos() + (2.0 * x.y).cos()) * (-4.0 * t / re).exp()
}

/// Standard error over all sub-grids:
/// sum_b 1/(Nx Ny) sqrt( sum_ij (u - u_exact)^2 + (v - v_exact)^2 ),
/// evaluated at every non-blanked solution point with velocities compared in
/// world components at world positions. Deterministic across rank counts.
pub fn standard_error(world: &World, exact: impl Fn(Vec3, f64) -> Vec3 + Sync) -> f64 {
    let t = world.time;
    let mut total = 0.0;
    for bi in 0..world.nblocks() {
        let block = &world.blocks[bi];
        let frame = &world.frames[block.frame_id];
        let cells = block.cells();
        let (nx, ny) = (cells[0] as f64, cells[1] as f64);
        // per-plane partial sums in plane order for rank-count invariance
        let split = world.decomp.parts[0][bi].split_dir;
        let mut plane_sums = vec![0.0f64; cells[split]];
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
                        if matches!(slab.mask[a], NodeClass::Blanked | NodeClass::Solid) {
                            continue;
                        }
                        let xw = frame.world_from_frame(slab.centers[a]);
                        let uw = frame
                            .vel_frame_to_world(vec3(fs.u[0][a], fs.u[1][a], fs.u[2][a]));
                        let ue = exact(xw, t);
                        let c = slab.block_of_array([i, j, k]);
                        plane_sums[c[split] as usize] +=
                            (uw.x - ue.x).powi(2) + (uw.y - ue.y).powi(2);
                    }
                }
            }
        }
        let ss: f64 = plane_sums.iter().sum();
        total += ss.sqrt() / (nx * ny);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_green_satisfies_divergence_free() {
        let h = 1e-6;
        for (x, y) in [(0.3, 1.1), (2.0, 4.0), (5.5, 0.2)] {
            let re = 10.0;
            let dudx = (taylor_green_velocity(vec3(x + h, y, 0.0), 0.5, re).x
                - taylor_green_velocity(vec3(x - h, y, 0.0), 0.5, re).x)
                / (2.0 * h);
            let dvdy = (taylor_green_velocity(vec3(x, y + h, 0.0), 0.5, re).y
                - taylor_green_velocity(vec3(x, y - h, 0.0), 0.5, re).y)
                / (2.0 * h);
            assert!((dudx + dvdy).abs() < 1e-8);
        }
    }

    #[test]
    fn taylor_green_momentum_balance() {
        // du/dt + u du/dx + v du/dy = -dp/dx + (1/Re) lap(u)
        let re = 10.0;
        let h = 1e-5;
        let (x, y, t) = (0.7, 1.9, 0.3);
        let u = |x: f64, y: f64, t: f64| taylor_green_velocity(vec3(x, y, 0.0), t, re).x;
        let v = |x: f64, y: f64, t: f64| taylor_green_velocity(vec3(x, y, 0.0), t, re).y;
        let p = |x: f64, y: f64, t: f64| taylor_green_pressure(vec3(x, y, 0.0), t, re);
        let dudt = (u(x, y, t + h) - u(x, y, t - h)) / (2.0 * h);
        let dudx = (u(x + h, y, t) - u(x - h, y, t)) / (2.0 * h);
        let dudy = (u(x, y + h, t) - u(x, y - h, t)) / (2.0 * h);
        let dpdx = (p(x + h, y, t) - p(x - h, y, t)) / (2.0 * h);
        let lap = (u(x + h, y, t) - 2.0 * u(x, y, t) + u(x - h, y, t)) / (h * h)
            + (u(x, y + h, t) - 2.0 * u(x, y, t) + u(x, y - h, t)) / (h * h);
        let lhs = dudt + u(x, y, t) * dudx + v(x, y, t) * dudy;
        let rhs = -dpdx + lap / re;
        assert!((lhs - rhs).abs() < 1e-5, "lhs {lhs} rhs {rhs}");
    }
}
