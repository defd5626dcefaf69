//! Run configuration: TOML documents with one section per command.
//!
//! Unknown keys are rejected at parse time and every value is checked by
//! [`RunConfig::validate`] before any computation starts.

use std::fmt;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dpt_core::datasets::BEAMS_8;
use dpt_core::phasemap::{InitialKind, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Quench,
    Disorder,
    Sweep,
    Mech,
    Spectrum,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Quench => "quench",
            Self::Disorder => "disorder",
            Self::Sweep => "sweep",
            Self::Mech => "mech",
            Self::Spectrum => "spectrum",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub emit_svg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mech: Option<MechConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
}

/// How the quench's initial state is prepared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Excitation of site 1.
    #[default]
    FirstSite,
    /// Left edge state of an SSH chain of the same size.
    EdgeOf { j_intra_hz: f64, j_inter_hz: f64 },
}

fn default_step() -> f64 {
    dpt_core::quench::DEFAULT_SAMPLE_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    pub unit_cells: usize,
    pub j_intra_hz: f64,
    pub j_inter_hz: f64,
    #[serde(default)]
    pub initial: InitialConfig,
    pub window_s: f64,
    #[serde(default = "default_step")]
    pub step_s: f64,
    /// Sizes (unit cells) for the finite-size check; defaults to N, 2N, 4N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation: Option<Vec<usize>>,
    #[serde(default)]
    pub pgp_offset_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderSource {
    /// The fifteen fixed eight-site realizations.
    TableV,
    /// Uniform offsets drawn per sample from a seeded generator.
    Random,
}

fn default_cells() -> usize {
    4
}
fn default_intra() -> f64 {
    60.0
}
fn default_inter() -> f64 {
    20.0
}
fn default_window() -> f64 {
    0.04
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub source: DisorderSource,
    #[serde(default = "default_cells")]
    pub unit_cells: usize,
    #[serde(default = "default_intra")]
    pub j_intra_hz: f64,
    #[serde(default = "default_inter")]
    pub j_inter_hz: f64,
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default = "default_step")]
    pub step_s: f64,
    #[serde(default)]
    pub strengths_hz: Vec<f64>,
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A list of values or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range(AxisRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Values(v) => v.clone(),
            Self::Range(r) => dpt_core::phasemap::DiagramGrid::linspace(r.from, r.to, r.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub j_intra_hz: Axis,
    pub j_inter_hz: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub target: f64,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<f64>,
}

fn default_ladder() -> Vec<f64> {
    dpt_core::phasemap::DEFAULT_WINDOW_LADDER.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub unit_cells: usize,
    pub initial_ratio: f64,
    pub initial_kind: InitialKind,
    pub j_inter_hz: f64,
    pub window_jt: f64,
    pub grid_step_jt: f64,
    pub root_tol_jt: f64,
    pub bracket: [f64; 2],
    pub ratio_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// Bisect the boundary at the configured window.
    pub boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_ratios: Option<Vec<f64>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            unit_cells: d.unit_cells,
            initial_ratio: d.initial_ratio,
            initial_kind: d.initial_kind,
            j_inter_hz: d.j_inter,
            window_jt: d.window_jt,
            grid_step_jt: d.grid_step_jt,
            root_tol_jt: d.root_tol_jt,
            bracket: [d.bracket.0, d.bracket.1],
            ratio_tol: d.ratio_tol,
            grid: None,
            boundary: false,
            calibrate: None,
            initial_ratios: None,
        }
    }
}

impl SweepSection {
    pub fn to_core(&self, workers: usize) -> SweepConfig {
        SweepConfig {
            unit_cells: self.unit_cells,
            initial_ratio: self.initial_ratio,
            initial_kind: self.initial_kind,
            j_inter: self.j_inter_hz,
            window_jt: self.window_jt,
            grid_step_jt: self.grid_step_jt,
            root_tol_jt: self.root_tol_jt,
            bracket: (self.bracket[0], self.bracket[1]),
            ratio_tol: self.ratio_tol,
            workers,
        }
    }
}

/// An embedded bank by name, or explicit modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BankConfig {
    Named(String),
    Modes(Vec<ModeConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub frequency_khz: f64,
    pub quality: f64,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self::Named("beams-8".into())
    }
}

impl BankConfig {
    pub fn modes(&self) -> Result<Vec<dpt_core::datasets::BeamMode>> {
        match self {
            Self::Named(name) if name == "beams-8" => Ok(BEAMS_8.to_vec()),
            Self::Named(name) => bail!("unknown bank `{name}` (available: beams-8)"),
            Self::Modes(modes) => Ok(modes
                .iter()
                .map(|m| dpt_core::datasets::BeamMode {
                    frequency_khz: m.frequency_khz,
                    quality: m.quality,
                })
                .collect()),
        }
    }
}

fn default_first() -> usize {
    1
}
fn default_output_step() -> f64 {
    2e-5
}
fn default_spp() -> f64 {
    dpt_core::mech::DEFAULT_STEPS_PER_PERIOD
}
fn default_stride() -> usize {
    dpt_core::mech::DEFAULT_RECORD_STRIDE
}
fn default_cycles() -> usize {
    dpt_core::mech::DEFAULT_WINDOW_CYCLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechConfig {
    #[serde(default)]
    pub bank: BankConfig,
    /// Bank entry (1-based) driven as site 1.
    #[serde(default = "default_first")]
    pub first_beam: usize,
    pub couplings_hz: Vec<f64>,
    #[serde(default = "default_first")]
    pub initial_site: usize,
    pub window_s: f64,
    #[serde(default = "default_output_step")]
    pub output_step_s: f64,
    #[serde(default = "default_spp")]
    pub steps_per_period: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_cycles")]
    pub window_cycles: usize,
    #[serde(default)]
    pub damping: bool,
    /// Overrides every quality factor so all beams decay at this rate (1/s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_damping_per_s: Option<f64>,
    #[serde(default)]
    pub write_trajectory: bool,
}

fn default_f_min() -> f64 {
    -80.0
}
fn default_f_max() -> f64 {
    80.0
}
fn default_points() -> usize {
    321
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub unit_cells: usize,
    pub j_intra_hz: f64,
    pub j_inter_hz: f64,
    #[serde(default)]
    pub initial: InitialConfig,
    /// Lorentzian FWHM (Hz); exclusive with `linewidth_bank`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linewidth_hz: Option<f64>,
    /// Take the linewidth as the mean f/Q of a bank.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linewidth_bank: Option<BankConfig>,
    #[serde(default = "default_f_min")]
    pub f_min_hz: f64,
    #[serde(default = "default_f_max")]
    pub f_max_hz: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        bail!("`{key}` must be positive and finite, got {x}")
    }
}

fn non_negative(key: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        bail!("`{key}` must be non-negative and finite, got {x}")
    }
}

fn check_initial(key: &str, initial: &InitialConfig) -> Result<()> {
    if let InitialConfig::EdgeOf { j_intra_hz, j_inter_hz } = initial {
        non_negative(&format!("{key}.j_intra_hz"), *j_intra_hz)?;
        positive(&format!("{key}.j_inter_hz"), *j_inter_hz)?;
        if j_intra_hz >= j_inter_hz {
            bail!("`{key}` must describe a topological chain (j_intra_hz < j_inter_hz)");
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid configuration")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("cannot serialize configuration")
    }

    /// Checks the section for `command` and rejects sections of other commands.
    pub fn validate(&self, command: CommandKind) -> Result<()> {
        if let Some(c) = self.command {
            if c != command {
                bail!("`command` is `{c}` but the `{command}` subcommand was invoked");
            }
        }
        if self.workers == Some(0) {
            bail!("`workers` must be at least 1");
        }
        let present = [
            (CommandKind::Quench, self.quench.is_some()),
            (CommandKind::Disorder, self.disorder.is_some()),
            (CommandKind::Sweep, self.sweep.is_some()),
            (CommandKind::Mech, self.mech.is_some()),
            (CommandKind::Spectrum, self.spectrum.is_some()),
        ];
        for (kind, is_present) in present {
            if kind == command && !is_present {
                bail!("missing `[{kind}]` section");
            }
            if kind != command && is_present {
                bail!("section `[{kind}]` does not belong to the `{command}` command");
            }
        }
        match command {
            CommandKind::Quench => self.quench.as_ref().expect("checked").validate(),
            CommandKind::Disorder => self.disorder.as_ref().expect("checked").validate(),
            CommandKind::Sweep => self.sweep.as_ref().expect("checked").validate(),
            CommandKind::Mech => self.mech.as_ref().expect("checked").validate(),
            CommandKind::Spectrum => self.spectrum.as_ref().expect("checked").validate(),
        }
    }
}

impl QuenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unit_cells == 0 {
            bail!("`quench.unit_cells` must be at least 1");
        }
        non_negative("quench.j_intra_hz", self.j_intra_hz)?;
        non_negative("quench.j_inter_hz", self.j_inter_hz)?;
        positive("quench.window_s", self.window_s)?;
        positive("quench.step_s", self.step_s)?;
        if self.step_s > self.window_s {
            bail!("`quench.step_s` must not exceed `quench.window_s`");
        }
        if !self.pgp_offset_rad.is_finite() {
            bail!("`quench.pgp_offset_rad` must be finite");
        }
        check_initial("quench.initial", &self.initial)?;
        if let Some(sizes) = &self.escalation {
            if sizes.first() != Some(&self.unit_cells) {
                bail!("`quench.escalation` must start with `quench.unit_cells`");
            }
            if sizes.windows(2).any(|w| w[1] <= w[0]) {
                bail!("`quench.escalation` must be strictly ascending");
            }
        }
        Ok(())
    }
}

impl DisorderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unit_cells == 0 {
            bail!("`disorder.unit_cells` must be at least 1");
        }
        non_negative("disorder.j_intra_hz", self.j_intra_hz)?;
        non_negative("disorder.j_inter_hz", self.j_inter_hz)?;
        positive("disorder.window_s", self.window_s)?;
        positive("disorder.step_s", self.step_s)?;
        if self.step_s > self.window_s {
            bail!("`disorder.step_s` must not exceed `disorder.window_s`");
        }
        match self.source {
            DisorderSource::TableV => {
                if self.unit_cells != 4 {
                    bail!("`disorder.unit_cells` must be 4 for the fixed realizations");
                }
                if !self.strengths_hz.is_empty() || self.samples != 0 {
                    bail!("`disorder.strengths_hz` and `disorder.samples` apply only to `source = \"random\"`");
                }
            }
            DisorderSource::Random => {
                if self.strengths_hz.is_empty() {
                    bail!("`disorder.strengths_hz` must list at least one strength");
                }
                for &s in &self.strengths_hz {
                    non_negative("disorder.strengths_hz", s)?;
                }
                if self.samples == 0 {
                    bail!("`disorder.samples` must be at least 1");
                }
            }
        }
        Ok(())
    }
}

impl SweepSection {
    pub fn validate(&self) -> Result<()> {
        self.to_core(1)
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid `[sweep]` value: {e}"))?;
        if let Some(grid) = &self.grid {
            for (key, axis) in [("sweep.grid.j_intra_hz", &grid.j_intra_hz), ("sweep.grid.j_inter_hz", &grid.j_inter_hz)] {
                let values = axis.values();
                if values.is_empty() {
                    bail!("`{key}` must contain at least one value");
                }
                for v in values {
                    non_negative(key, v)?;
                }
            }
            for v in grid.j_inter_hz.values() {
                positive("sweep.grid.j_inter_hz", v)?;
            }
        }
        if let Some(cal) = &self.calibrate {
            positive("sweep.calibrate.target", cal.target)?;
            if cal.ladder.is_empty() {
                bail!("`sweep.calibrate.ladder` must list at least one window");
            }
            for &w in &cal.ladder {
                positive("sweep.calibrate.ladder", w)?;
            }
        }
        if let Some(ratios) = &self.initial_ratios {
            if ratios.is_empty() {
                bail!("`sweep.initial_ratios` must list at least one ratio");
            }
            for &r in ratios {
                if !(0.0..1.0).contains(&r) {
                    bail!("`sweep.initial_ratios` entries must lie in [0, 1), got {r}");
                }
            }
        }
        if self.grid.is_none() && !self.boundary && self.calibrate.is_none() && self.initial_ratios.is_none() {
            bail!("`[sweep]` requests nothing: set `grid`, `boundary`, `calibrate` or `initial_ratios`");
        }
        Ok(())
    }
}

impl MechConfig {
    pub fn validate(&self) -> Result<()> {
        let modes = self.bank.modes()?;
        if self.couplings_hz.is_empty() {
            bail!("`mech.couplings_hz` must list at least one bond");
        }
        let sites = self.couplings_hz.len() + 1;
        if self.first_beam == 0 || self.first_beam - 1 + sites > modes.len() {
            bail!(
                "`mech.first_beam` = {} leaves fewer than {sites} beams in a bank of {}",
                self.first_beam,
                modes.len()
            );
        }
        for &j in &self.couplings_hz {
            non_negative("mech.couplings_hz", j)?;
        }
        if self.initial_site == 0 || self.initial_site > sites {
            bail!("`mech.initial_site` must lie in 1..={sites}");
        }
        positive("mech.window_s", self.window_s)?;
        positive("mech.output_step_s", self.output_step_s)?;
        if self.output_step_s > self.window_s {
            bail!("`mech.output_step_s` must not exceed `mech.window_s`");
        }
        if !(self.steps_per_period >= dpt_core::mech::MIN_STEPS_PER_PERIOD) {
            bail!(
                "`mech.steps_per_period` must be at least {}",
                dpt_core::mech::MIN_STEPS_PER_PERIOD
            );
        }
        if self.record_stride == 0 {
            bail!("`mech.record_stride` must be at least 1");
        }
        if self.window_cycles < dpt_core::mech::MIN_WINDOW_CYCLES {
            bail!("`mech.window_cycles` must be at least {}", dpt_core::mech::MIN_WINDOW_CYCLES);
        }
        if let Some(g) = self.uniform_damping_per_s {
            positive("mech.uniform_damping_per_s", g)?;
        }
        Ok(())
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unit_cells == 0 {
            bail!("`spectrum.unit_cells` must be at least 1");
        }
        non_negative("spectrum.j_intra_hz", self.j_intra_hz)?;
        non_negative("spectrum.j_inter_hz", self.j_inter_hz)?;
        check_initial("spectrum.initial", &self.initial)?;
        match (&self.linewidth_hz, &self.linewidth_bank) {
            (Some(w), None) => positive("spectrum.linewidth_hz", *w)?,
            (None, Some(bank)) => {
                bank.modes()?;
            }
            _ => bail!("set exactly one of `spectrum.linewidth_hz` and `spectrum.linewidth_bank`"),
        }
        if !(self.f_min_hz.is_finite() && self.f_max_hz.is_finite() && self.f_max_hz > self.f_min_hz) {
            bail!("`spectrum.f_min_hz` must be below `spectrum.f_max_hz`");
        }
        if self.points < 2 {
            bail!("`spectrum.points` must be at least 2");
        }
        Ok(())
    }

    /// The configured linewidth, or the mean `f/Q` of the named bank.
    pub fn linewidth(&self) -> Result<f64> {
        match (&self.linewidth_hz, &self.linewidth_bank) {
            (Some(w), _) => Ok(*w),
            (None, Some(bank)) => {
                let modes = bank.modes()?;
                Ok(modes.iter().map(|m| m.frequency_khz * 1e3 / m.quality).sum::<f64>() / modes.len() as f64)
            }
            (None, None) => bail!("no linewidth configured"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse(
            "[quench]\nunit_cells = 4\nj_intra_hz = 60.0\nj_inter_hz = 20.0\nwindow_s = 0.04\nwindo_s = 1.0\n",
        )
        .unwrap_err();
        assert!(format!("{err:#}").contains("windo_s"));
    }

    #[test]
    fn validation_names_the_key() {
        let cfg = RunConfig::parse(
            "[quench]\nunit_cells = 4\nj_intra_hz = 60.0\nj_inter_hz = 20.0\nwindow_s = 0.0\n",
        )
        .unwrap();
        let err = cfg.validate(CommandKind::Quench).unwrap_err();
        assert!(err.to_string().contains("quench.window_s"), "{err}");
        assert!(cfg.validate(CommandKind::Sweep).is_err());
    }

    #[test]
    fn initial_condition_forms() {
        let cfg = RunConfig::parse(
            "[spectrum]\nunit_cells = 4\nj_intra_hz = 20.0\nj_inter_hz = 60.0\nlinewidth_hz = 9.0\n\
             initial = { kind = \"edge-of\", j_intra_hz = 0.0, j_inter_hz = 60.0 }\n",
        )
        .unwrap();
        cfg.validate(CommandKind::Spectrum).unwrap();
        assert!(RunConfig::parse(
            "[spectrum]\nunit_cells = 4\nj_intra_hz = 20.0\nj_inter_hz = 60.0\nlinewidth_hz = 9.0\n\
             initial = { kind = \"edge-of\", j_intra_hz = 0.0, j_inter_hz = 60.0, extra = 1 }\n",
        )
        .is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let text = "command = \"sweep\"\n[sweep]\nboundary = true\n[sweep.grid]\nj_intra_hz = { from = 0.0, to = 120.0, count = 5 }\nj_inter_hz = [60.0]\n";
        let cfg = RunConfig::parse(text).unwrap();
        cfg.validate(CommandKind::Sweep).unwrap();
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bank_linewidth() {
        let cfg = SpectrumConfig {
            unit_cells: 4,
            j_intra_hz: 20.0,
            j_inter_hz: 60.0,
            initial: InitialConfig::FirstSite,
            linewidth_hz: None,
            linewidth_bank: Some(BankConfig::default()),
            f_min_hz: -80.0,
            f_max_hz: 80.0,
            points: 11,
        };
        let w = cfg.linewidth().unwrap();
        assert!(w > 8.0 && w < 13.0, "{w}");
    }
}
