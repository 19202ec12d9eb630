//! `thzbeam`: simulation and analysis tool for a wideband multi-user
//! downlink with true-time-delay analog beamforming and reflecting
//! surfaces.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thzbeam_cli::config::ExperimentFile;
use thzbeam_cli::error::Result;
use thzbeam_cli::experiments::{self, RunSettings};

#[derive(Parser)]
#[command(
    name = "thzbeam",
    version,
    about = "Wideband multi-user downlink simulator: delay-line front ends, reflecting surfaces, and rate experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML spec file.
    Run {
        /// Path to the experiment spec (TOML).
        spec: PathBuf,
        /// Override the master seed from the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory from the spec.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the trial count from the spec.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (default: all cores). Output is identical either way.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the normalized array gain of one front end at one frequency.
    Gain {
        /// Front end: ps, single, or double.
        #[arg(long, default_value = "ps")]
        scheme: String,
        /// Beam direction in radians.
        #[arg(long, default_value_t = FRAC_PI_4)]
        theta: f64,
        /// Subcarrier frequency in Hz.
        #[arg(long)]
        fm: f64,
        /// Delay lines for the single-layer front end.
        #[arg(long, default_value_t = 32)]
        subarrays: usize,
        /// Second-layer delay lines for the double-layer front end.
        #[arg(long, default_value_t = 8)]
        second_count: usize,
        /// First-layer delay lines per second-layer line.
        #[arg(long, default_value_t = 4)]
        first_per_second: usize,
    },
    /// Print the minimum delay-control bit widths and the bit ratio.
    Bits {
        /// Optional experiment spec supplying the system parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Beam direction in radians.
        #[arg(long)]
        theta: Option<f64>,
        /// Delay lines for the single-layer front end.
        #[arg(long)]
        subarrays: Option<usize>,
        /// Second-layer delay lines for the double-layer front end.
        #[arg(long)]
        second_count: Option<usize>,
        /// First-layer delay lines per second-layer line.
        #[arg(long)]
        first_per_second: Option<usize>,
    },
    /// Print the hardware budget of the standard front-end trio.
    #[command(alias = "hardware")]
    Table2,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version land here; print and succeed.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec, seed, out, trials, threads } => {
            let file = ExperimentFile::load(&spec)?;
            let settings = RunSettings { seed, out, trials, threads };
            let written = experiments::run_experiment(&file, &settings)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Gain { scheme, theta, fm, subarrays, second_count, first_per_second } => {
            let (closed, brute) =
                experiments::gain_query(&scheme, theta, fm, subarrays, second_count, first_per_second)?;
            println!("closed_form = {closed:.15}");
            println!("brute_force = {brute:.15}");
            Ok(())
        }
        Command::Bits { config, theta, subarrays, second_count, first_per_second } => {
            let (cfg, file_scheme) = match config {
                Some(path) => {
                    let file = ExperimentFile::load(&path)?;
                    (file.system.resolve()?, file.scheme)
                }
                None => (thzbeam::SystemConfig::reference(), None),
            };
            // A [scheme] block in the spec supplies layer counts unless the
            // flags override them.
            let (mut sub, mut kh, mut kl) = (32, 8, 4);
            if let Some(s) = &file_scheme {
                if let Some(u) = s.subarrays {
                    sub = u;
                }
                if let Some(k) = s.second_count {
                    kh = k;
                }
                if let Some(k) = s.first_per_second {
                    kl = k;
                }
            }
            let summary = experiments::bits_summary(
                &cfg,
                theta.unwrap_or(FRAC_PI_4),
                subarrays.unwrap_or(sub),
                second_count.unwrap_or(kh),
                first_per_second.unwrap_or(kl),
            )?;
            print!("{summary}");
            Ok(())
        }
        Command::Table2 => {
            let text = experiments::hardware_text(&thzbeam::SystemConfig::reference())?;
            print!("{text}");
            Ok(())
        }
    }
}
