use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use darkmass::catalog::write_catalog;
use darkmass::config::RunConfig;
use darkmass::model::UnitSystem;
use darkmass::pipeline::{run_pipeline, summarize_dir};
use darkmass::synthetic::{sample_catalog, AnalyticModel, ModelKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "darkmass", version, about = "Mass density and phase-space distribution from projected kinematics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full inference pipeline described by a key=value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Draw a mock catalog from an analytic model.
    Synth {
        #[arg(long, default_value = "plummer")]
        model: ModelKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Total mass (default 1e10 M_sun, or 1 in code units).
        #[arg(long)]
        mass: Option<f64>,
        /// Plummer scale length (default 2 kpc, or 1 in code units).
        #[arg(long)]
        scale: Option<f64>,
        /// Gaussian line-of-sight velocity error, also written as sigma_v3.
        #[arg(long)]
        sigma_v3: Option<f64>,
        /// Use G = 1 instead of kpc, km/s and M_sun.
        #[arg(long)]
        code_units: bool,
    },
    /// Recompute summary.json and plots from the chain files of a run.
    Summarize {
        #[arg(long)]
        chains: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => {
            let cfg = match RunConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("darkmass: [config] {e}");
                    return ExitCode::from(2);
                }
            };
            match run_pipeline(&cfg) {
                Ok(out) => {
                    let m = &out.summary.enclosed_mass;
                    println!("wrote artifacts to {}", out.output_dir.display());
                    println!(
                        "mass within r = {}: mode {:.4e} {}, {}% HPD [{:.4e}, {:.4e}]",
                        m.radius,
                        m.mode,
                        m.unit,
                        out.summary.hpd_mass * 100.0,
                        m.hpd_lower,
                        m.hpd_upper
                    );
                    for w in &out.summary.warnings {
                        eprintln!("warning: {w}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("darkmass: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Synth { model, n, out, seed, mass, scale, sigma_v3, code_units } => {
            let units = if code_units { UnitSystem::Code } else { UnitSystem::Physical };
            let (m0, a0) = if code_units { (1.0, 1.0) } else { (1e10, 2.0) };
            let g = units.gravitational_constant::<f64>();
            let built = match model {
                ModelKind::Plummer => AnalyticModel::plummer(mass.unwrap_or(m0), scale.unwrap_or(a0), g),
                ModelKind::UniformSphere => AnalyticModel::uniform_sphere(mass.unwrap_or(m0), scale.unwrap_or(a0), g),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let result = built
                .and_then(|m| sample_catalog(&mut rng, &m, n, sigma_v3))
                .and_then(|c| write_catalog(&out, &c.observations));
            match result {
                Ok(()) => {
                    println!("wrote {n} observations to {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("darkmass: [synth] {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Summarize { chains } => match summarize_dir(&chains) {
            Ok(s) => {
                println!("summarised {} chains, {} samples", s.n_chains, s.n_samples);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("darkmass: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
