//! Command-line drivers for chain quenches, disorder ensembles, phase-diagram
//! sweeps, mechanical replicas and response spectra.

pub mod commands;
pub mod config;
pub mod presets;
pub mod svg;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use config::{CommandKind, RunConfig};

/// Where a run's configuration comes from, plus command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub workers: Option<usize>,
    pub svg: bool,
}

/// Loads the configuration, applies overrides and runs `command` into `out`.
pub fn execute(command: CommandKind, inv: &Invocation, out: &Path) -> Result<commands::RunOutput> {
    let mut config = match (&inv.config, &inv.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => presets::preset(name)?,
        (None, None) => bail!("give either --config PATH or --preset NAME"),
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
    };
    if let Some(w) = inv.workers {
        config.workers = Some(w);
    }
    if inv.svg {
        config.emit_svg = true;
    }
    commands::run(command, &config, out)
}
