use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamsteer::config::{Overrides, SimulationConfig};
use beamsteer::pipeline::{Pipeline, PipelineError, Summary};
use beamsteer::validate::{parse_checks, run_validation, ValidationOptions};

#[derive(Parser)]
#[command(name = "beamsteer", version, about = "Near-field beam steering for planar antenna arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the per-element phase distribution.
    Synthesize(Common),
    /// Phase distribution plus the vector field over the observation plane.
    Field(Common),
    /// Polarization and steering diagnostics.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Analyze an existing field CSV instead of computing the field.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the built-in self-check suites.
    Validate {
        /// Comma-separated subset of: rotation, gradient, gaussian, oracle, cone, linearity, determinism.
        #[arg(long, default_value = "rotation,gradient,gaussian,oracle,cone,linearity,determinism")]
        checks: String,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Offset added to solver distances before checking, meters (test hook).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, hide = true)]
        perturb_distance: f64,
    },
    /// Full pipeline: synthesize, field, analyze.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    az_deg: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    el_deg: Option<f64>,
    /// gaussian or bessel.
    #[arg(long)]
    beam: Option<String>,
    #[arg(long)]
    h_over_r: Option<f64>,
    #[arg(long)]
    freq_ghz: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    /// Directory for relative output paths.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl Common {
    fn pipeline(&self) -> Result<Pipeline, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => SimulationConfig::load(path)?,
            None => SimulationConfig::default(),
        };
        cfg.apply(&Overrides {
            azimuth_deg: self.az_deg,
            elevation_deg: self.el_deg,
            beam: self.beam.clone(),
            h_over_r: self.h_over_r,
            frequency_ghz: self.freq_ghz,
            n_x: self.nx,
            n_z: self.nz,
        })?;
        Pipeline::new(cfg, &self.out_dir)
    }
}

fn report(summary: &Summary) {
    for line in &summary.lines {
        println!("{line}");
    }
    for path in &summary.written {
        println!("wrote {}", path.display());
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Synthesize(c) => report(&c.pipeline()?.synthesize_cmd()?.1),
        Command::Field(c) => report(&c.pipeline()?.field_cmd()?.2),
        Command::Analyze { common, input } => report(&common.pipeline()?.analyze_cmd(input.as_deref())?),
        Command::Run(c) => report(&c.pipeline()?.run_cmd()?),
        Command::Validate { .. } => unreachable!("handled by main"),
    }
    Ok(())
}

fn validate(checks: &str, seed: u64, perturb_distance: f64) -> ExitCode {
    let checks = match parse_checks(checks) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = ValidationOptions {
        checks,
        seed,
        distance_perturbation: perturb_distance,
    };
    match run_validation(&opts) {
        Ok(results) => {
            for r in &results {
                println!("{}", r.line());
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Validate {
        checks,
        seed,
        perturb_distance,
    } = &cli.command
    {
        return validate(checks, *seed, *perturb_distance);
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
