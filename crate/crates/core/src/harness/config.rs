//! Human-readable case configuration (TOML) and world construction.

use crate::assembly::{BlankKind, BlankRegion, BlankTargets};
use crate::frames::{FrameState, Motion};
use crate::geometry::TriSurface;
use crate::ibm::ImmersedBody;
use crate::math::Vec3;
use crate::mesh::{BcSpec, BcTag, Block, BlockRole, Mapping};
use crate::solver::{SolverParams, World};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseConfig {
    pub title: String,
    #[serde(default = "default_ranks")]
    pub ranks: usize,
    pub solver: SolverParams,
    #[serde(default)]
    pub init: InitialField,
    #[serde(default)]
    pub output: OutputConfig,
    pub blocks: Vec<BlockConfig>,
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
}

fn default_ranks() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialField {
    #[default]
    Quiescent,
    /// The decaying-vortex analytic field at t = 0.
    TaylorGreen,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    /// Field snapshots every N steps (0 = final only).
    #[serde(default)]
    pub fields_every: usize,
    /// History rows every N steps.
    #[serde(default = "default_history_every")]
    pub history_every: usize,
}

fn default_history_every() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockConfig {
    pub name: String,
    pub role: BlockRole,
    pub dims: [usize; 3],
    pub mapping: Mapping,
    pub bc: BcConfig,
    #[serde(default = "motion_static")]
    pub motion: Motion,
    /// World position of the block frame origin at t = 0.
    #[serde(default)]
    pub frame_origin: [f64; 3],
    #[serde(default = "default_true")]
    pub symmetric_k: bool,
    #[serde(default)]
    pub blank: Option<BlankConfig>,
}

fn motion_static() -> Motion {
    Motion::Static
}
fn default_true() -> bool {
    true
}

/// Face tags, either one tag for all faces or per-face overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BcConfig {
    #[serde(default)]
    pub all: Option<BcTag>,
    #[serde(default)]
    pub i_min: Option<BcTag>,
    #[serde(default)]
    pub i_max: Option<BcTag>,
    #[serde(default)]
    pub j_min: Option<BcTag>,
    #[serde(default)]
    pub j_max: Option<BcTag>,
    #[serde(default)]
    pub k_min: Option<BcTag>,
    #[serde(default)]
    pub k_max: Option<BcTag>,
}

impl BcConfig {
    pub fn uniform(tag: BcTag) -> Self {
        BcConfig { all: Some(tag), ..Default::default() }
    }

    fn resolve(&self, symmetric_k: bool) -> Result<BcSpec> {
        let base = self.all.unwrap_or(BcTag::Periodic);
        let mut spec = [base; 6];
        for (i, over) in [&self.i_min, &self.i_max, &self.j_min, &self.j_max, &self.k_min, &self.k_max]
            .into_iter()
            .enumerate()
        {
            if let Some(t) = over {
                spec[i] = *t;
            }
        }
        if symmetric_k {
            spec[4] = BcTag::Symmetry;
            spec[5] = BcTag::Symmetry;
        }
        if self.all.is_none()
            && [&self.i_min, &self.i_max, &self.j_min, &self.j_max]
                .iter()
                .any(|o| o.is_none())
        {
            return Err(Error::UnknownBcTag("missing face tags (set `all` or every face)".into()));
        }
        Ok(spec)
    }
}

/// Closed-surface shapes for blanks and bodies, in frame coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ShapeConfig {
    Box { center: [f64; 3], half: [f64; 3] },
    Cylinder { center: [f64; 3], radius: f64, z: [f64; 2], segments: usize },
    Sphere { center: [f64; 3], radius: f64, refinement: usize },
    File { path: String },
}

impl ShapeConfig {
    pub fn build(&self, name: &str) -> Result<TriSurface> {
        let s = match self {
            ShapeConfig::Box { center, half } => {
                TriSurface::box_surface(name, Vec3::from(*center), Vec3::from(*half))
            }
            ShapeConfig::Cylinder { center, radius, z, segments } => {
                TriSurface::cylinder_z(name, Vec3::from(*center), *radius, z[0], z[1], *segments)
            }
            ShapeConfig::Sphere { center, radius, refinement } => TriSurface::sphere(
                name,
                Vec3::from(*center),
                *radius,
                (*refinement).max(8),
                (*refinement).max(8) * 3 / 2,
            ),
            ShapeConfig::File { path } => {
                let s = TriSurface::load(path)?;
                s.check_watertight()?;
                s
            }
        };
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlankConfig {
    pub shape: ShapeConfig,
    /// Block names to cut; defaults to the background block.
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    /// Donor block for the buffer layer; defaults to the declaring block.
    #[serde(default)]
    pub donor: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyConfig {
    pub name: String,
    pub shape: ShapeConfig,
    /// Home block (the grid resolving this body).
    pub block: String,
    #[serde(default = "default_density_ratio")]
    pub density_ratio: f64,
    #[serde(default)]
    pub dof: [bool; 3],
    /// Body motion; `None` attaches the body to its home block's frame.
    #[serde(default)]
    pub motion: Option<Motion>,
    /// Near-wall blank inflation; defaults to 4 background cell widths.
    #[serde(default)]
    pub near_wall_margin: Option<f64>,
}

fn default_density_ratio() -> f64 {
    1.0
}

/// Construct the distributed world from a case configuration.
pub fn build_world(cfg: &CaseConfig, ranks_override: Option<usize>) -> Result<World> {
    let nranks = ranks_override.unwrap_or(cfg.ranks).max(1);
    let block_id = |name: &str| -> Result<usize> {
        cfg.blocks
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::Config(format!("unknown block '{name}'")))
    };

    let mut blocks = Vec::with_capacity(cfg.blocks.len());
    let mut frames = Vec::new();
    let mut motions = Vec::new();
    for (bi, bc) in cfg.blocks.iter().enumerate() {
        let spec = bc.bc.resolve(bc.symmetric_k)?;
        let block = Block::from_mapping(bi, bc.dims, &bc.mapping, bi, bc.role, spec, bc.symmetric_k)?;
        blocks.push(block);
        let mut frame = FrameState::at_rest(bi, Vec3::from(bc.frame_origin));
        if let Some((vel, omega)) = bc.motion.velocities_at(0.0) {
            frame.vel = vel;
            frame.omega = omega;
        } else if let Motion::Fsi { initial_velocity, .. } = &bc.motion {
            frame.vel = Vec3::from(*initial_velocity);
        }
        frames.push(frame);
        motions.push(bc.motion.clone());
    }

    // bodies; a body with its own motion gets a dedicated frame at the home
    // block origin
    let mut bodies = Vec::with_capacity(cfg.bodies.len());
    for bc in &cfg.bodies {
        let home = block_id(&bc.block)?;
        let frame_id = match &bc.motion {
            None => blocks[home].frame_id,
            Some(m) => {
                let fid = frames.len();
                let mut frame = FrameState::at_rest(fid, frames[blocks[home].frame_id].origin);
                if let Some((vel, omega)) = m.velocities_at(0.0) {
                    frame.vel = vel;
                    frame.omega = omega;
                } else if let Motion::Fsi { initial_velocity, .. } = m {
                    frame.vel = Vec3::from(*initial_velocity);
                }
                frames.push(frame);
                motions.push(m.clone());
                fid
            }
        };
        let surface = bc.shape.build(&bc.name)?;
        let margin = bc.near_wall_margin.unwrap_or_else(|| {
            // span four cells of the coarsest overlapping grid, estimated from
            // the background spacing
            let bg = &blocks[cfg
                .blocks
                .iter()
                .position(|b| b.role == BlockRole::Background)
                .unwrap_or(0)];
            let c = bg.cells();
            let d = (bg.node(1, 0, 0) - bg.node(0, 0, 0)).norm();
            let _ = c;
            4.0 * d
        });
        bodies.push(ImmersedBody {
            name: bc.name.clone(),
            surface,
            frame: frame_id,
            block: home,
            density_ratio: bc.density_ratio,
            dof: bc.dof,
            near_wall_margin: margin,
        });
    }

    // blank regions from block configs
    let mut blanks = Vec::new();
    for (bi, bc) in cfg.blocks.iter().enumerate() {
        let Some(blank) = &bc.blank else { continue };
        let surface = blank.shape.build(&format!("{}-blank", bc.name))?;
        let donor_block = match &blank.donor {
            Some(n) => block_id(n)?,
            None => bi,
        };
        let targets = match &blank.targets {
            Some(names) => {
                BlankTargets::Blocks(names.iter().map(|n| block_id(n)).collect::<Result<_>>()?)
            }
            None => {
                let bg = cfg
                    .blocks
                    .iter()
                    .position(|b| b.role == BlockRole::Background)
                    .ok_or_else(|| Error::Config("blank without a background target".into()))?;
                BlankTargets::Blocks(vec![bg])
            }
        };
        blanks.push(BlankRegion {
            surface,
            frame: blocks[bi].frame_id,
            donor_block,
            targets,
            kind: BlankKind::UserBlank,
        });
    }
    // automatic near-wall blanks: the inflated body in every foreign grid
    for body in &bodies {
        blanks.push(BlankRegion {
            surface: body.near_wall_surface(),
            frame: body.frame,
            donor_block: body.block,
            targets: BlankTargets::AllExcept(body.block),
            kind: BlankKind::NearWall,
        });
    }

    let mut world =
        World::new(blocks, frames, motions, bodies, blanks, cfg.solver.clone(), nranks)?;

    match cfg.init {
        InitialField::Quiescent => {}
        InitialField::TaylorGreen => {
            let re = world.params.re;
            world.set_velocity(|x, t| super::taylor_green_velocity(x, t, re));
            world.set_pressure(|x, t| super::taylor_green_pressure(x, t, re));
        }
    }
    Ok(world)
}

impl CaseConfig {
    pub fn from_toml(text: &str) -> Result<CaseConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<CaseConfig> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }
}
