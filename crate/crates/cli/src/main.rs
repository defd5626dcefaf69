use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpt_cli::config::CommandKind;
use dpt_cli::{execute, Invocation};

/// Dynamical phase transitions in hopping chains and their mechanical replicas.
#[derive(Debug, Parser)]
#[command(name = "dpt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single quench: Loschmidt trace, critical times, geometric phase.
    Quench(Common),
    /// Bond-disorder ensemble: first critical time statistics per strength.
    Disorder(Common),
    /// Phase-diagram scan, boundary bisection and window calibration.
    Sweep(Common),
    /// Newtonian oscillator replica compared with the tight-binding run.
    Mech(Common),
    /// Lorentzian-broadened response spectrum of an initial state.
    Spectrum(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration: quench-i, quench-ii, tableV, fig6a, fig6b, beams-8, mech-quench-i.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "dpt-out")]
    out: PathBuf,
    /// Worker threads for parallel scans; overrides the configuration.
    #[arg(long, value_name = "N", env = "DPT_WORKERS", value_parser = clap::value_parser!(usize))]
    workers: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Quench(c) => (CommandKind::Quench, c),
        Command::Disorder(c) => (CommandKind::Disorder, c),
        Command::Sweep(c) => (CommandKind::Sweep, c),
        Command::Mech(c) => (CommandKind::Mech, c),
        Command::Spectrum(c) => (CommandKind::Spectrum, c),
    };
    let inv = Invocation {
        config: common.config,
        preset: common.preset,
        workers: common.workers,
        svg: common.svg,
    };
    match execute(kind, &inv, &common.out) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
