//! Field storage and the composite simulation state shared by the grid
//! assembly, the flow solver and the rigid-body coupling.

use crate::assembly::{AssemblyResult, BlankRegion};
use crate::comm::CommStats;
use crate::frames::{FrameState, Motion};
use crate::ibm::ImmersedBody;
use crate::interp::InterpMatrix;
use crate::math::Vec3;
use crate::mesh::{decompose, Block, Decomposition, Slab};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Central,
    Quick,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverParams {
    pub re: f64,
    pub dt: f64,
    pub end_time: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_nonlinear_rtol")]
    pub nonlinear_rtol: f64,
    #[serde(default = "default_nonlinear_atol")]
    pub nonlinear_atol: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton: usize,
    #[serde(default = "default_linear_rtol")]
    pub linear_rtol: f64,
    #[serde(default = "default_gmres_restart")]
    pub gmres_restart: usize,
    /// Post-projection divergence target (infinity norm).
    #[serde(default = "default_div_tol")]
    pub poisson_div_tol: f64,
    #[serde(default = "default_max_poisson")]
    pub max_poisson: usize,
    #[serde(default)]
    pub tolerate_orphans: bool,
    /// FSI under-relaxation and convergence controls.
    #[serde(default = "default_fsi_relax")]
    pub fsi_relax: f64,
    #[serde(default = "default_fsi_tol")]
    pub fsi_tol: f64,
    #[serde(default = "default_max_fsi")]
    pub max_fsi: usize,
    #[serde(default)]
    pub fsi_aitken: bool,
    /// Nondimensional gravity magnitude (points along -y), for FSI cases.
    #[serde(default)]
    pub gravity: f64,
}

fn default_scheme() -> Scheme {
    Scheme::Central
}
fn default_nonlinear_rtol() -> f64 {
    1e-8
}
fn default_nonlinear_atol() -> f64 {
    1e-12
}
fn default_max_newton() -> usize {
    25
}
fn default_linear_rtol() -> f64 {
    1e-5
}
fn default_gmres_restart() -> usize {
    30
}
fn default_div_tol() -> f64 {
    1e-10
}
fn default_max_poisson() -> usize {
    20000
}
fn default_fsi_relax() -> f64 {
    0.5
}
fn default_fsi_tol() -> f64 {
    1e-6
}
fn default_max_fsi() -> usize {
    60
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            re: 1.0,
            dt: 0.01,
            end_time: 0.01,
            scheme: default_scheme(),
            nonlinear_rtol: default_nonlinear_rtol(),
            nonlinear_atol: default_nonlinear_atol(),
            max_newton: default_max_newton(),
            linear_rtol: default_linear_rtol(),
            gmres_restart: default_gmres_restart(),
            poisson_div_tol: default_div_tol(),
            max_poisson: default_max_poisson(),
            tolerate_orphans: false,
            fsi_relax: default_fsi_relax(),
            fsi_tol: default_fsi_tol(),
            max_fsi: default_max_fsi(),
            fsi_aitken: false,
            gravity: 0.0,
        }
    }
}

/// Per-slab flow variables. Cell arrays run over the slab's allocated lattice;
/// face arrays use the same indexing as the slab metrics.
#[derive(Debug, Clone)]
pub struct FieldState {
    /// Cartesian velocity in frame components, three cell arrays.
    pub u: [Vec<f64>; 3],
    pub un: [Vec<f64>; 3],
    pub unm1: [Vec<f64>; 3],
    /// Pressure, its value at step start, and the projection increment.
    pub p: Vec<f64>,
    pub p_n: Vec<f64>,
    pub phi: Vec<f64>,
    /// Contravariant volume fluxes at faces, by face direction.
    pub flux: [Vec<f64>; 3],
    pub flux_n: [Vec<f64>; 3],
    pub flux_nm1: [Vec<f64>; 3],
    /// Frame-motion flux V^r per face, rebuilt when frames move.
    pub vflux: [Vec<f64>; 3],
    /// Frame rotation velocity w at faces, rebuilt when frames move.
    pub wface: [Vec<[f64; 3]>; 3],
    /// Precomputed pressure-gradient term per cell and component.
    pub gp: [Vec<f64>; 3],
}

impl FieldState {
    pub fn new(slab: &Slab) -> FieldState {
        let n = slab.adims[0] * slab.adims[1] * slab.adims[2];
        let flen = [
            (slab.adims[0] + 1) * slab.adims[1] * slab.adims[2],
            slab.adims[0] * (slab.adims[1] + 1) * slab.adims[2],
            slab.adims[0] * slab.adims[1] * (slab.adims[2] + 1),
        ];
        let cells = || [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let faces = || [vec![0.0; flen[0]], vec![0.0; flen[1]], vec![0.0; flen[2]]];
        FieldState {
            u: cells(),
            un: cells(),
            unm1: cells(),
            p: vec![0.0; n],
            p_n: vec![0.0; n],
            phi: vec![0.0; n],
            flux: faces(),
            flux_n: faces(),
            flux_nm1: faces(),
            vflux: faces(),
            wface: [
                vec![[0.0; 3]; flen[0]],
                vec![[0.0; 3]; flen[1]],
                vec![[0.0; 3]; flen[2]],
            ],
            gp: cells(),
        }
    }
}

/// Everything one rank owns.
#[derive(Debug)]
pub struct RankData {
    pub rank: usize,
    pub slabs: Vec<Slab>,
    pub fields: Vec<FieldState>,
}

/// Wall-clock accounting per pipeline phase.
#[derive(Debug, Default, Clone)]
pub struct PhaseTimings {
    pub hole_cut: Duration,
    pub query_id: Duration,
    pub exchange: Duration,
    pub search: Duration,
    pub select: Duration,
    pub matrix: Duration,
    pub interpolate: Duration,
    pub momentum: Duration,
    pub correction: Duration,
    pub poisson: Duration,
}

impl PhaseTimings {
    pub fn assembly_total(&self) -> Duration {
        self.hole_cut + self.query_id + self.exchange + self.search + self.select + self.matrix
    }

    pub fn solver_total(&self) -> Duration {
        self.momentum + self.correction + self.poisson
    }

    pub fn add(&mut self, o: &PhaseTimings) {
        self.hole_cut += o.hole_cut;
        self.query_id += o.query_id;
        self.exchange += o.exchange;
        self.search += o.search;
        self.select += o.select;
        self.matrix += o.matrix;
        self.interpolate += o.interpolate;
        self.momentum += o.momentum;
        self.correction += o.correction;
        self.poisson += o.poisson;
    }
}

#[derive(Debug, Default, Clone)]
pub struct RunStats {
    pub comm: CommStats,
    pub timings: PhaseTimings,
    pub assemblies: usize,
    pub newton_iters: usize,
    pub gmres_iters: usize,
    pub poisson_iters: usize,
    pub max_divergence: f64,
    pub max_surface_flux: f64,
    pub orphans_tolerated: usize,
}

/// The composite simulation: geometry, frames, bodies, decomposition and all
/// per-rank state.
pub struct World {
    pub blocks: Vec<Block>,
    pub frames: Vec<FrameState>,
    pub motions: Vec<Motion>,
    pub bodies: Vec<ImmersedBody>,
    pub blanks: Vec<BlankRegion>,
    pub decomp: Decomposition,
    pub ranks: Vec<RankData>,
    pub params: SolverParams,
    pub background: usize,
    pub step: usize,
    pub time: f64,
    pub stats: RunStats,
    pub assembly: Option<AssemblyResult>,
    pub matrix: Option<InterpMatrix>,
    /// Immersed-boundary reconstruction stencils, rebuilt per assembly.
    pub ib_recon: Vec<Vec<Vec<crate::ibm::IbPoint>>>,
    /// Rigid-body translational state for FSI frames, replicated everywhere.
    pub bodies_state: Vec<crate::ibm::RigidBodyState>,
}

impl World {
    pub fn new(
        blocks: Vec<Block>,
        frames: Vec<FrameState>,
        motions: Vec<Motion>,
        bodies: Vec<ImmersedBody>,
        blanks: Vec<BlankRegion>,
        params: SolverParams,
        nranks: usize,
    ) -> Result<World> {
        let decomp = decompose(&blocks, nranks)?;
        let background = blocks
            .iter()
            .position(|b| b.role == crate::mesh::BlockRole::Background)
            .unwrap_or(0);
        let ranks: Vec<RankData> = (0..nranks)
            .into_par_iter()
            .map(|rank| -> Result<RankData> {
                let mut slabs = Vec::with_capacity(blocks.len());
                let mut fields = Vec::with_capacity(blocks.len());
                for block in &blocks {
                    let mut slab = Slab::new(block, *decomp.part(rank, block.id))?;
                    slab.build_control(block);
                    fields.push(FieldState::new(&slab));
                    slabs.push(slab);
                }
                Ok(RankData { rank, slabs, fields })
            })
            .collect::<Result<_>>()?;
        let bodies_state = bodies
            .iter()
            .map(|b| {
                let mut st = crate::ibm::RigidBodyState::initial(b);
                if let crate::frames::Motion::Fsi { initial_velocity, .. } = &motions[b.frame] {
                    st.vel = crate::math::Vec3::from(*initial_velocity);
                }
                st
            })
            .collect();
        Ok(World {
            blocks,
            frames,
            motions,
            bodies,
            blanks,
            decomp,
            ranks,
            params,
            background,
            step: 0,
            time: 0.0,
            stats: RunStats::default(),
            assembly: None,
            matrix: None,
            ib_recon: Vec::new(),
            bodies_state,
        })
    }

    pub fn nranks(&self) -> usize {
        self.ranks.len()
    }

    pub fn nblocks(&self) -> usize {
        self.blocks.len()
    }

    /// Set the velocity field everywhere from a world-coordinate function
    /// (values returned in world components, stored in frame components).
    pub fn set_velocity(&mut self, f: impl Fn(Vec3, f64) -> Vec3 + Sync) {
        let time = self.time;
        let frames = &self.frames;
        let blocks = &self.blocks;
        self.ranks.par_iter_mut().for_each(|rd| {
            for (bi, slab) in rd.slabs.iter().enumerate() {
                let frame = &frames[blocks[bi].frame_id];
                let fs = &mut rd.fields[bi];
                for (c, ctr) in slab.centers.iter().enumerate() {
                    let uw = f(frame.world_from_frame(*ctr), time);
                    let uf = frame.vel_world_to_frame(uw);
                    for d in 0..3 {
                        fs.u[d][c] = uf[d];
                        fs.un[d][c] = uf[d];
                        fs.unm1[d][c] = uf[d];
                    }
                }
            }
        });
    }

    /// Set the pressure field from a world-coordinate function.
    pub fn set_pressure(&mut self, f: impl Fn(Vec3, f64) -> f64 + Sync) {
        let time = self.time;
        let frames = &self.frames;
        let blocks = &self.blocks;
        self.ranks.par_iter_mut().for_each(|rd| {
            for (bi, slab) in rd.slabs.iter().enumerate() {
                let frame = &frames[blocks[bi].frame_id];
                let fs = &mut rd.fields[bi];
                for (c, ctr) in slab.centers.iter().enumerate() {
                    fs.p[c] = f(frame.world_from_frame(*ctr), time);
                    fs.p_n[c] = fs.p[c];
                }
            }
        });
    }
}
