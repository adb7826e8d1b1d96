//! Command-line driver: run presets or config files, grid-convergence
//! studies, and timing reports.

use chimera::harness::{
    convergence_study, preset, preset_names, run_case, timing_report, CaseConfig, RunOptions,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "chimera",
    about = "Dynamic overset grid assembly with a curvilinear immersed-boundary flow solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named preset or a TOML case file.
    Run {
        /// Preset name or path to a config file.
        case: String,
        /// Simulated rank count (default from config; env CHIMERA_RANKS).
        #[arg(long)]
        ranks: Option<usize>,
        /// Resolution scale factor for presets (1 = published resolution).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop after N steps regardless of end time.
        #[arg(long)]
        steps: Option<usize>,
        /// Substitute nearest donors for orphan queries (debugging).
        #[arg(long)]
        tolerate_orphans: bool,
    },
    /// Run the decaying-vortex accuracy ladder and print the fitted order.
    Convergence {
        /// "taylor-green-translate" or "taylor-green-rotate".
        preset: String,
        #[arg(long)]
        ranks: Option<usize>,
        /// Number of ladder rungs (2..=5).
        #[arg(long, default_value_t = 5)]
        rungs: usize,
    },
    /// Print the timing/communication report of a finished run directory.
    Report { dir: PathBuf },
}

fn env_ranks() -> Option<usize> {
    std::env::var("CHIMERA_RANKS").ok().and_then(|s| s.parse().ok())
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> chimera::Result<()> {
    match cli.command {
        Command::Run { case, ranks, scale, out, steps, tolerate_orphans } => {
            let cfg: CaseConfig = if std::path::Path::new(&case).exists() {
                CaseConfig::load(&case)?
            } else if preset_names().contains(&case.as_str()) {
                preset(&case, scale)?
            } else {
                return Err(chimera::Error::Config(format!(
                    "'{case}' is neither a file nor a preset; presets: {}",
                    preset_names().join(", ")
                )));
            };
            let opts = RunOptions {
                ranks: ranks.or_else(env_ranks),
                out_dir: out,
                max_steps: steps,
                tolerate_orphans,
                progress_every: 50,
            };
            let result = run_case(&cfg, &opts)?;
            println!("{}", timing_report(&result.world));
            let last = result.history.last().unwrap();
            println!(
                "finished at t = {:.4} (step {}), max divergence {:.3e}, max surface flux {:.3e}",
                last.time, last.step, last.max_divergence, last.max_surface_flux
            );
            for (b, (v, f, tz)) in result.world.bodies.iter().zip(&last.bodies) {
                println!(
                    "body {}: v = ({:.6}, {:.6}, {:.6})  F = ({:.4e}, {:.4e}, {:.4e})  Tz = {:.4e}",
                    b.name, v.x, v.y, v.z, f.x, f.y, f.z, tz
                );
            }
            Ok(())
        }
        Command::Convergence { preset: name, ranks, rungs } => {
            let rotate = match name.as_str() {
                "taylor-green-translate" => false,
                "taylor-green-rotate" => true,
                _ => {
                    return Err(chimera::Error::Config(
                        "convergence supports the taylor-green presets".into(),
                    ))
                }
            };
            let (rows, order) =
                convergence_study(rotate, rungs, ranks.or_else(env_ranks).unwrap_or(1))?;
            println!("{:>9} {:>9} {:>12} {:>10} {:>14}", "bg", "overset", "h", "dt", "error");
            for r in &rows {
                println!(
                    "{:>5}x{:<3} {:>5}x{:<3} {:>12.6e} {:>10.4e} {:>14.8e}",
                    r.nbg, r.nbg, r.nov, r.nov, r.h, r.dt, r.error
                );
            }
            println!("fitted order: {order:.3}");
            Ok(())
        }
        Command::Report { dir } => {
            let text = std::fs::read_to_string(dir.join("timing.txt"))?;
            println!("{text}");
            Ok(())
        }
    }
}
