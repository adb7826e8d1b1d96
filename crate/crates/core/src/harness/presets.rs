//! Named validation cases at their published resolutions, with a `scale`
//! factor that shrinks resolution (and grows the timestep at fixed CFL) for
//! desk-size runs.

use super::config::{
    BcConfig, BlankConfig, BlockConfig, BodyConfig, CaseConfig, InitialField, OutputConfig,
    ShapeConfig,
};
use crate::frames::Motion;
use crate::mesh::{AxisSpec, BcTag, BlockRole, Mapping};
use crate::solver::SolverParams;
use crate::{Error, Result};

/// Scale a node count, keeping at least a handful of cells.
fn sn(base: usize, s: f64) -> usize {
    (((base - 1) as f64 * s).round().max(8.0) as usize) + 1
}

/// Build a named preset. Known names: taylor-green-translate,
/// taylor-green-rotate, rot-cylinder, rot-cylinder-single, inline-cylinder,
/// inline-cylinder-single, falling-single, falling-single-ref, falling-multi,
/// falling-multi-ref.
pub fn preset(name: &str, scale: f64) -> Result<CaseConfig> {
    if !(scale > 0.0 && scale <= 4.0) {
        return Err(Error::Config(format!("scale {scale} out of range")));
    }
    match name {
        "taylor-green-translate" => Ok(taylor_green(false, 201, 121, 2.5e-3 / scale, scale)),
        "taylor-green-rotate" => Ok(taylor_green(true, 201, 121, 2.5e-3 / scale, scale)),
        "rot-cylinder" => Ok(rot_cylinder(scale, false)),
        "rot-cylinder-single" => Ok(rot_cylinder(scale, true)),
        "inline-cylinder" => Ok(inline_cylinder(scale, false)),
        "inline-cylinder-single" => Ok(inline_cylinder(scale, true)),
        "falling-single" => Ok(falling_single(scale, false)),
        "falling-single-ref" => Ok(falling_single(scale, true)),
        "falling-multi" => Ok(falling_multi(scale, false)),
        "falling-multi-ref" => Ok(falling_multi(scale, true)),
        _ => Err(Error::Config(format!("unknown preset '{name}'"))),
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &[
        "taylor-green-translate",
        "taylor-green-rotate",
        "rot-cylinder",
        "rot-cylinder-single",
        "inline-cylinder",
        "inline-cylinder-single",
        "falling-single",
        "falling-single-ref",
        "falling-multi",
        "falling-multi-ref",
    ]
}

/// The grid/timestep ladder for the accuracy study:
/// (background nodes, overset nodes, dt) at fixed CFL.
pub fn tg_ladder() -> Vec<(usize, usize, f64)> {
    vec![
        (51, 31, 1.0e-2),
        (81, 49, 6.29e-3),
        (101, 61, 5.0e-3),
        (161, 98, 3.16e-3),
        (201, 121, 2.5e-3),
    ]
}

/// Decaying-vortex case: periodic 2pi x 2pi background with a 2.2-wide moving
/// overset square and a 1.5-wide blank region.
pub fn taylor_green(rotate: bool, nbg: usize, nov: usize, dt: f64, scale: f64) -> CaseConfig {
    let nbg = sn(nbg, scale);
    let nov = sn(nov, scale);
    let two_pi = 2.0 * std::f64::consts::PI;
    let hz = two_pi / (nbg - 1) as f64;
    let motion = if rotate {
        Motion::ConstantRotation { omega: [0.0, 0.0, std::f64::consts::FRAC_PI_4] }
    } else {
        Motion::ConstantTranslation { velocity: [std::f64::consts::FRAC_PI_4, 0.0, 0.0] }
    };
    CaseConfig {
        title: format!("taylor-green-{}", if rotate { "rotate" } else { "translate" }),
        ranks: 1,
        solver: SolverParams { re: 10.0, dt, end_time: 1.0, ..Default::default() },
        init: InitialField::TaylorGreen,
        output: OutputConfig::default(),
        blocks: vec![
            BlockConfig {
                name: "background".into(),
                role: BlockRole::Background,
                dims: [nbg, nbg, 3],
                mapping: Mapping::Uniform {
                    origin: [0.0, 0.0, -hz],
                    spacing: [two_pi / (nbg - 1) as f64, two_pi / (nbg - 1) as f64, hz],
                },
                bc: BcConfig::uniform(BcTag::Periodic),
                motion: Motion::Static,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            },
            BlockConfig {
                name: "overset".into(),
                role: BlockRole::Overset,
                dims: [nov, nov, 3],
                mapping: Mapping::Uniform {
                    origin: [-1.1, -1.1, -hz],
                    spacing: [2.2 / (nov - 1) as f64, 2.2 / (nov - 1) as f64, hz],
                },
                bc: BcConfig::uniform(BcTag::Interface),
                motion,
                frame_origin: [std::f64::consts::PI, std::f64::consts::PI, 0.0],
                symmetric_k: true,
                blank: Some(BlankConfig {
                    shape: ShapeConfig::Box {
                        center: [0.0, 0.0, 0.0],
                        half: [0.75, 0.75, 10.0 * hz],
                    },
                    targets: None,
                    donor: None,
                }),
            },
        ],
        bodies: vec![],
    }
}

/// Rotationally oscillating cylinder at Re = 300, f = 0.1 (U_m = 1, D = 1,
/// amplitude A_m = 2). Overset 2D x 2D at h = 0.01D around the cylinder in a
/// rotating frame; stationary 100D background with a 1.6D blank square.
fn rot_cylinder(scale: f64, single: bool) -> CaseConfig {
    let h_band = 0.014 / scale;
    let hz = 0.05;
    let dt = 0.005 / scale;
    let motion = Motion::PrescribedRotation { amplitude: 2.0, frequency: 0.1, axis: [0.0, 0.0, 1.0] };
    let band_axes = |half_band: f64| Mapping::Axes {
        x: AxisSpec::Band { min: -50.0, max: 50.0, band: [-half_band, half_band], h: h_band },
        y: AxisSpec::Band { min: -50.0, max: 50.0, band: [-half_band, half_band], h: h_band },
        z: AxisSpec::Uniform { min: -hz, max: hz },
    };
    let body = |block: &str| BodyConfig {
        name: "cylinder".into(),
        shape: ShapeConfig::Cylinder {
            center: [0.0, 0.0, 0.0],
            radius: 0.5,
            z: [-3.0 * hz, 3.0 * hz],
            segments: 128,
        },
        block: block.into(),
        density_ratio: 1.0,
        dof: [false, false, false],
        motion: None,
        near_wall_margin: Some(4.0 * h_band),
    };
    let solver = SolverParams { re: 300.0, dt, end_time: 80.0, ..Default::default() };
    if single {
        // the whole domain rotates with the cylinder (non-inertial frame)
        return CaseConfig {
            title: "rot-cylinder-single".into(),
            ranks: 1,
            solver,
            init: InitialField::Quiescent,
            output: OutputConfig::default(),
            blocks: vec![BlockConfig {
                name: "grid".into(),
                role: BlockRole::Background,
                dims: [sn(401, scale), sn(401, scale), 3],
                mapping: band_axes(1.4),
                bc: BcConfig::uniform(BcTag::Dirichlet { velocity: [0.0; 3] }),
                motion,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            }],
            bodies: vec![body("grid")],
        };
    }
    CaseConfig {
        title: "rot-cylinder".into(),
        ranks: 1,
        solver,
        init: InitialField::Quiescent,
        output: OutputConfig::default(),
        blocks: vec![
            BlockConfig {
                name: "background".into(),
                role: BlockRole::Background,
                dims: [sn(401, scale), sn(401, scale), 3],
                mapping: band_axes(1.4),
                bc: BcConfig::uniform(BcTag::Dirichlet { velocity: [0.0; 3] }),
                motion: Motion::Static,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            },
            BlockConfig {
                name: "overset".into(),
                role: BlockRole::Overset,
                dims: [sn(201, scale), sn(201, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Uniform { min: -1.0, max: 1.0 },
                    y: AxisSpec::Uniform { min: -1.0, max: 1.0 },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::Interface),
                motion,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: Some(BlankConfig {
                    shape: ShapeConfig::Box { center: [0.0; 3], half: [0.8, 0.8, 10.0 * hz] },
                    targets: None,
                    donor: None,
                }),
            },
        ],
        bodies: vec![body("overset")],
    }
}

/// Inline oscillating cylinder at Re = 100, KC = 5 (f = 0.2, amplitude
/// A = 1/(2 pi f)); 100D background with a uniform 3D x 3D core, a co-moving
/// 2.4D overset and a 2.1D blank.
fn inline_cylinder(scale: f64, single: bool) -> CaseConfig {
    let f = 0.2;
    let amp = 1.0 / (2.0 * std::f64::consts::PI * f);
    let hz = 0.06;
    let dt = 0.0167 / scale;
    let motion = Motion::PrescribedTranslation { amplitude: amp, frequency: f, dir: [1.0, 0.0, 0.0] };
    let solver = SolverParams { re: 100.0, dt, end_time: 10.0, ..Default::default() };
    let body = |block: &str, margin: f64| BodyConfig {
        name: "cylinder".into(),
        shape: ShapeConfig::Cylinder {
            center: [0.0, 0.0, 0.0],
            radius: 0.5,
            z: [-3.0 * hz, 3.0 * hz],
            segments: 128,
        },
        block: block.into(),
        density_ratio: 1.0,
        dof: [false, false, false],
        motion: None,
        near_wall_margin: Some(margin),
    };
    if single {
        let h = 0.01 / scale;
        return CaseConfig {
            title: "inline-cylinder-single".into(),
            ranks: 1,
            solver,
            init: InitialField::Quiescent,
            output: OutputConfig::default(),
            blocks: vec![BlockConfig {
                name: "grid".into(),
                role: BlockRole::Background,
                dims: [sn(401, scale), sn(401, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Band { min: -50.0, max: 50.0, band: [-1.5, 1.5], h },
                    y: AxisSpec::Band { min: -50.0, max: 50.0, band: [-1.5, 1.5], h },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::FarField { velocity: [0.0; 3] }),
                motion,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            }],
            bodies: vec![body("grid", 4.0 * h)],
        };
    }
    let h_core = 0.03 / scale;
    CaseConfig {
        title: "inline-cylinder".into(),
        ranks: 1,
        solver,
        init: InitialField::Quiescent,
        output: OutputConfig::default(),
        blocks: vec![
            BlockConfig {
                name: "background".into(),
                role: BlockRole::Background,
                dims: [sn(301, scale), sn(301, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Band { min: -50.0, max: 50.0, band: [-1.5, 1.5], h: h_core },
                    y: AxisSpec::Band { min: -50.0, max: 50.0, band: [-1.5, 1.5], h: h_core },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::FarField { velocity: [0.0; 3] }),
                motion: Motion::Static,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            },
            BlockConfig {
                name: "overset".into(),
                role: BlockRole::Overset,
                dims: [sn(201, scale), sn(201, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Uniform { min: -1.2, max: 1.2 },
                    y: AxisSpec::Uniform { min: -1.2, max: 1.2 },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::Interface),
                motion,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: Some(BlankConfig {
                    shape: ShapeConfig::Box { center: [0.0; 3], half: [1.05, 1.05, 10.0 * hz] },
                    targets: None,
                    donor: None,
                }),
            },
        ],
        bodies: vec![body("overset", 4.0 * h_core)],
    }
}

/// Freely falling cylinder at Re (Galileo) = 53.61, density ratio 2.5.
/// u_c = sqrt(|rho_s/rho_f - 1| g D) = 1 fixes g = 1/1.5.
fn falling_single(scale: f64, reference: bool) -> CaseConfig {
    let hz = 0.06;
    let dt = 0.01 / scale;
    let fsi = Motion::Fsi {
        density_ratio: 2.5,
        dof: [true, true, false],
        initial_velocity: [0.0; 3],
    };
    let solver = SolverParams {
        re: 53.61,
        dt,
        end_time: 50.0,
        gravity: 1.0 / 1.5,
        fsi_aitken: true,
        ..Default::default()
    };
    let fsi_body = fsi.clone();
    let body = |block: &str, margin: f64, attach: bool| BodyConfig {
        name: "cylinder".into(),
        shape: ShapeConfig::Cylinder {
            center: [0.0, 0.0, 0.0],
            radius: 0.5,
            z: [-3.0 * hz, 3.0 * hz],
            segments: 128,
        },
        block: block.into(),
        density_ratio: 2.5,
        dof: [true, true, false],
        motion: if attach { None } else { Some(fsi_body.clone()) },
        near_wall_margin: Some(margin),
    };
    if reference {
        // co-moving non-inertial frame, 60D x 100D around the cylinder
        let h = 0.02 / scale;
        return CaseConfig {
            title: "falling-single-ref".into(),
            ranks: 1,
            solver,
            init: InitialField::Quiescent,
            output: OutputConfig::default(),
            blocks: vec![BlockConfig {
                name: "grid".into(),
                role: BlockRole::Background,
                dims: [sn(801, scale), sn(1931, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Band { min: -30.0, max: 30.0, band: [-3.0, 3.0], h },
                    y: AxisSpec::Band { min: -50.0, max: 50.0, band: [-4.0, 4.0], h },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::FarField { velocity: [0.0; 3] }),
                motion: fsi,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            }],
            bodies: vec![body("grid", 4.0 * h, true)],
        };
    }
    let h_band = 0.06 / scale;
    CaseConfig {
        title: "falling-single".into(),
        ranks: 1,
        solver,
        init: InitialField::Quiescent,
        output: OutputConfig::default(),
        blocks: vec![
            BlockConfig {
                name: "background".into(),
                role: BlockRole::Background,
                dims: [sn(301, scale), sn(801, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Band { min: -30.0, max: 30.0, band: [-3.0, 3.0], h: h_band },
                    y: AxisSpec::Band { min: -75.0, max: 25.0, band: [-52.0, 3.0], h: h_band },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::FarField { velocity: [0.0; 3] }),
                motion: Motion::Static,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            },
            BlockConfig {
                name: "overset".into(),
                role: BlockRole::Overset,
                dims: [sn(201, scale), sn(201, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Uniform { min: -2.0, max: 2.0 },
                    y: AxisSpec::Uniform { min: -2.0, max: 2.0 },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::Interface),
                motion: fsi,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: Some(BlankConfig {
                    shape: ShapeConfig::Box { center: [0.0; 3], half: [1.7, 1.7, 10.0 * hz] },
                    targets: None,
                    donor: None,
                }),
            },
        ],
        bodies: vec![body("overset", 4.0 * h_band, true)],
    }
}

/// Three falling cylinders with overlapping overset grids (blank merging and
/// near-wall blanking scenarios).
fn falling_multi(scale: f64, reference: bool) -> CaseConfig {
    let hz = 0.06;
    let dt = 0.01 / scale;
    let centers = [(0.0, 0.0), (3.0, 5.0), (-2.0, 5.0)];
    let fsi = Motion::Fsi {
        density_ratio: 2.5,
        dof: [true, true, false],
        initial_velocity: [0.0; 3],
    };
    let solver = SolverParams {
        re: 53.61,
        dt,
        end_time: 22.0,
        gravity: 1.0 / 1.5,
        fsi_aitken: true,
        ..Default::default()
    };
    let cyl = |i: usize| ShapeConfig::Cylinder {
        center: [0.0, 0.0, 0.0],
        radius: 0.5,
        z: [-3.0 * hz, 3.0 * hz],
        segments: 128 - i * 0, // identical cylinders
    };
    if reference {
        let h = 0.02 / scale;
        return CaseConfig {
            title: "falling-multi-ref".into(),
            ranks: 1,
            solver,
            init: InitialField::Quiescent,
            output: OutputConfig::default(),
            blocks: vec![BlockConfig {
                name: "grid".into(),
                role: BlockRole::Background,
                dims: [sn(801, scale), sn(1931, scale), 3],
                mapping: Mapping::Axes {
                    x: AxisSpec::Band { min: -30.0, max: 30.0, band: [-6.0, 6.0], h },
                    y: AxisSpec::Band { min: -75.0, max: 25.0, band: [-26.0, 7.0], h },
                    z: AxisSpec::Uniform { min: -hz, max: hz },
                },
                bc: BcConfig::uniform(BcTag::FarField { velocity: [0.0; 3] }),
                motion: Motion::Static,
                frame_origin: [0.0; 3],
                symmetric_k: true,
                blank: None,
            }],
            bodies: centers
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| BodyConfig {
                    name: format!("cylinder{}", i + 1),
                    shape: ShapeConfig::Cylinder {
                        center: [x, y, 0.0],
                        radius: 0.5,
                        z: [-3.0 * hz, 3.0 * hz],
                        segments: 128,
                    },
                    block: "grid".into(),
                    density_ratio: 2.5,
                    dof: [true, true, false],
                    motion: Some(fsi.clone()),
                    near_wall_margin: Some(4.0 * h),
                })
                .collect(),
        };
    }
    let h_band = 0.06 / scale;
    let mut blocks = vec![BlockConfig {
        name: "background".into(),
        role: BlockRole::Background,
        dims: [sn(301, scale), sn(801, scale), 3],
        mapping: Mapping::Axes {
            x: AxisSpec::Band { min: -30.0, max: 30.0, band: [-6.0, 6.0], h: h_band },
            y: AxisSpec::Band { min: -75.0, max: 25.0, band: [-52.0, 7.0], h: h_band },
            z: AxisSpec::Uniform { min: -hz, max: hz },
        },
        bc: BcConfig::uniform(BcTag::FarField { velocity: [0.0; 3] }),
        motion: Motion::Static,
        frame_origin: [0.0; 3],
        symmetric_k: true,
        blank: None,
    }];
    let mut bodies = Vec::new();
    for (i, &(x, y)) in centers.iter().enumerate() {
        let name = format!("overset{}", i + 1);
        blocks.push(BlockConfig {
            name: name.clone(),
            role: BlockRole::Overset,
            dims: [sn(201, scale), sn(201, scale), 3],
            mapping: Mapping::Axes {
                x: AxisSpec::Uniform { min: -2.0, max: 2.0 },
                y: AxisSpec::Uniform { min: -2.0, max: 2.0 },
                z: AxisSpec::Uniform { min: -hz, max: hz },
            },
            bc: BcConfig::uniform(BcTag::Interface),
            motion: fsi.clone(),
            frame_origin: [x, y, 0.0],
            symmetric_k: true,
            blank: Some(BlankConfig {
                shape: ShapeConfig::Box { center: [0.0; 3], half: [1.7, 1.7, 10.0 * hz] },
                targets: None,
                donor: None,
            }),
        });
        bodies.push(BodyConfig {
            name: format!("cylinder{}", i + 1),
            shape: cyl(i),
            block: name,
            density_ratio: 2.5,
            dof: [true, true, false],
            motion: None,
            near_wall_margin: Some(4.0 * h_band),
        });
    }
    CaseConfig {
        title: "falling-multi".into(),
        ranks: 1,
        solver,
        init: InitialField::Quiescent,
        output: OutputConfig::default(),
        blocks,
        bodies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parameters_match_published_setups() {
        let tg = preset("taylor-green-translate", 1.0).unwrap();
        assert_eq!(tg.blocks[0].dims, [201, 201, 3]);
        assert_eq!(tg.blocks[1].dims, [121, 121, 3]);
        assert!((tg.solver.re - 10.0).abs() < 1e-12);
        let rot = preset("rot-cylinder", 1.0).unwrap();
        assert_eq!(rot.blocks[1].dims, [201, 201, 3]);
        assert!((rot.solver.re - 300.0).abs() < 1e-12);
        let inl = preset("inline-cylinder", 1.0).unwrap();
        assert_eq!(inl.blocks[0].dims, [301, 301, 3]);
        assert!((inl.solver.dt - 0.0167).abs() < 1e-12);
        let fall = preset("falling-single", 1.0).unwrap();
        assert_eq!(fall.blocks[0].dims, [301, 801, 3]);
        assert!((fall.solver.re - 53.61).abs() < 1e-12);
        assert!((fall.solver.gravity - 1.0 / 1.5).abs() < 1e-12);
        let multi = preset("falling-multi", 1.0).unwrap();
        assert_eq!(multi.blocks.len(), 4);
        assert_eq!(multi.bodies.len(), 3);
    }

    #[test]
    fn scale_halves_resolution() {
        let tg = preset("taylor-green-translate", 0.5).unwrap();
        assert_eq!(tg.blocks[0].dims, [101, 101, 3]);
        assert!((tg.solver.dt - 5.0e-3).abs() < 1e-12);
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = preset("falling-single", 0.25).unwrap();
        let text = cfg.to_toml();
        let back = CaseConfig::from_toml(&text).unwrap();
        assert_eq!(back.blocks.len(), cfg.blocks.len());
        assert_eq!(back.bodies.len(), cfg.bodies.len());
        assert!((back.solver.dt - cfg.solver.dt).abs() < 1e-15);
    }
}
