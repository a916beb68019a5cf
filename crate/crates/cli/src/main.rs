//! Command-line front end of the TSA polar coding simulator.
//!
//! Exit codes: 0 on success, 2 on a config error, 3 when no grid point could be built,
//! 1 on any other failure. The worker count is read from `TSA_SIM_WORKERS`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tsa_core::regions::{region_samples, write_region_csv};
use tsa_core::sim::{run, ChannelFile, ExperimentKind, Experiments, SimConfig, SimError, SimOutput};

#[derive(Parser)]
#[command(name = "tsa-sim", version, about = "Time-shifted alternating polar coding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a config file.
    Run { config: PathBuf },
    /// Print the rate line of a channel description.
    Region {
        channel: PathBuf,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Write the reliability profile described by a config file.
    Profile { config: PathBuf },
}

enum Failure {
    Config(String),
    Infeasible,
    Other(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Parse { .. } => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Region { channel, points } => {
            let s = ChannelFile::load(&channel)?.structure()?;
            write_region_csv(&mut std::io::stdout().lock(), &region_samples(&s, points.max(2)))
                .map_err(|e| Failure::Other(e.to_string()))
        }
        Command::Run { config } => {
            let cfg = SimConfig::load(&config)?;
            let out = run(&cfg)?;
            out.write(&cfg)?;
            if let SimOutput::Sweep(report) = &out {
                for p in &report.infeasible {
                    eprintln!("{} at back-off {}: {}", p.scheme, p.backoff_bpcu, p.reason);
                }
                for r in &report.rows {
                    eprintln!("{} b={} fer={} ({}/{}) {:.1}s", r.scheme, r.backoff_bpcu, r.fer, r.errors, r.frames, r.wall_seconds);
                }
                if report.all_infeasible() {
                    return Err(Failure::Infeasible);
                }
            }
            Ok(())
        }
        Command::Profile { config } => {
            let mut cfg = SimConfig::load(&config)?;
            cfg.experiment = Experiments::One(ExperimentKind::Profile);
            let out = run(&cfg)?;
            out.write(&cfg)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible) => {
            eprintln!("error: no grid point could be built");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
