//! Configurations bundled into the binary.

use anyhow::{bail, Result};

use crate::config::RunConfig;

pub const PRESETS: [(&str, &str); 7] = [
    ("quench-i", include_str!("../presets/quench-i.toml")),
    ("quench-ii", include_str!("../presets/quench-ii.toml")),
    ("tableV", include_str!("../presets/tableV.toml")),
    ("fig6a", include_str!("../presets/fig6a.toml")),
    ("fig6b", include_str!("../presets/fig6b.toml")),
    ("beams-8", include_str!("../presets/beams-8.toml")),
    ("mech-quench-i", include_str!("../presets/mech-quench-i.toml")),
];

pub fn preset_text(name: &str) -> Result<&'static str> {
    match PRESETS.iter().find(|(n, _)| *n == name) {
        Some((_, text)) => Ok(text),
        None => {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            bail!("unknown preset `{name}` (available: {})", names.join(", "))
        }
    }
}

pub fn preset(name: &str) -> Result<RunConfig> {
    RunConfig::parse(preset_text(name)?)
}
