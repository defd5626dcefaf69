//! Experiment drivers. Each writes its tables, a JSON record and the
//! resolved configuration into the output directory.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use dpt_core::datasets::TABLE_V;
use dpt_core::lattice::{apply_disorder, build_ssh, edge_state, sample_disorder, DisorderSpec, HoppingChain};
use dpt_core::mech::{run_replica, OscillatorBank, ReplicaConfig};
use dpt_core::phasemap::{boundary, boundary_vs_initial, calibrate_window, scan_diagram, DiagramGrid};
use dpt_core::quench::{
    classify_dpt_with, critical_times, default_escalation, loschmidt, loschmidt_trace, pgp, uniform_grid,
    DptOptions, InitialCondition, PgpOptions, QuenchSpec, DEFAULT_GRID_CELLS, DEFAULT_ROOT_TOL,
};
use dpt_core::spectral::{eigendecompose, mode_detuning_hz, occupations, response_spectrum};

use crate::config::{CommandKind, DisorderSource, InitialConfig, RunConfig};
use crate::svg::{render_heatmap, render_lines, Plot, Series, Style};

/// Files written by a run and a one-line summary per result.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Sink<'a> {
    dir: &'a Path,
    out: RunOutput,
}

impl<'a> Sink<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            out: RunOutput::default(),
        })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.out.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
        self.write(name, bytes)
    }

    fn say(&mut self, line: String) {
        self.out.summary.push(line);
    }
}

fn cell(x: f64) -> String {
    x.to_string()
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

fn ms(times: &[f64]) -> String {
    let parts: Vec<String> = times.iter().map(|t| format!("{:.4}", t * 1e3)).collect();
    if parts.is_empty() { "none".into() } else { parts.join(", ") }
}

fn initial_condition(initial: &InitialConfig, unit_cells: usize) -> Result<InitialCondition> {
    Ok(match initial {
        InitialConfig::FirstSite => InitialCondition::State(edge_state(2 * unit_cells)?),
        InitialConfig::EdgeOf { j_intra_hz, j_inter_hz } => {
            InitialCondition::EdgeOf(build_ssh(unit_cells, *j_intra_hz, *j_inter_hz)?)
        }
    })
}

/// Validates `config` for `command`, runs it into `out_dir` and writes the
/// resolved configuration as `config.toml` next to the outputs.
pub fn run(command: CommandKind, config: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    config.validate(command)?;
    let mut resolved = config.clone();
    resolved.command = Some(command);
    let mut sink = Sink::new(out_dir)?;
    match command {
        CommandKind::Quench => run_quench(config, &mut sink)?,
        CommandKind::Disorder => run_disorder(config, &mut sink)?,
        CommandKind::Sweep => run_sweep(config, &mut sink)?,
        CommandKind::Mech => run_mech(config, &mut sink)?,
        CommandKind::Spectrum => run_spectrum(config, &mut sink)?,
    }
    sink.write("config.toml", resolved.to_toml()?)?;
    Ok(sink.out)
}

fn run_quench(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let q = config.quench.as_ref().expect("validated");
    let chain = build_ssh(q.unit_cells, q.j_intra_hz, q.j_inter_hz)?;
    let times = uniform_grid(q.window_s, q.step_s)?;
    let spec = QuenchSpec::new(chain, initial_condition(&q.initial, q.unit_cells)?, times)?;
    let escalation = q.escalation.clone().unwrap_or_else(|| default_escalation(q.unit_cells));
    let report = classify_dpt_with(&spec, &escalation, &DptOptions::default())?;
    let eig = eigendecompose(spec.final_chain())?;
    let trace = loschmidt_trace(
        &eig,
        spec.initial_state(),
        spec.time_grid(),
        q.unit_cells,
        &PgpOptions {
            offset: q.pgp_offset_rad,
            ..PgpOptions::default()
        },
    )?;
    sink.write("trace.csv", trace.to_delimited(','))?;
    sink.json("report.json", &report)?;
    if config.emit_svg {
        let t_ms: Vec<f64> = trace.times.iter().map(|t| t * 1e3).collect();
        let rate = render_lines(
            &Plot {
                title: "Rate function".into(),
                x_label: "t (ms)".into(),
                y_label: "lambda".into(),
                y_range: None,
            },
            &[Series::new("lambda", &t_ms, &trace.rate, Style::Line)],
        )?;
        sink.write("rate.svg", rate)?;
        let phase = render_lines(
            &Plot {
                title: "Geometric phase".into(),
                x_label: "t (ms)".into(),
                y_label: "phi_P (rad)".into(),
                y_range: Some((-PI, PI)),
            },
            &[Series::new("phi_P", &t_ms, &trace.pgp, Style::Step)],
        )?;
        sink.write("pgp.svg", phase)?;
    }
    sink.say(format!(
        "dpt_present: {}; t_c (ms): {}; finite-size: {:?}",
        report.dpt_present,
        ms(&report.critical_times),
        report.finite_size_verdict
    ));
    Ok(())
}

struct DisorderSample {
    name: String,
    strength: f64,
    seed: u64,
    critical: Vec<f64>,
    jumps: usize,
    pgp: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct StrengthStats {
    delta_hz: f64,
    samples: usize,
    with_dpt: usize,
    mean_t_c1_s: Option<f64>,
    std_t_c1_s: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DisorderSummary {
    all_jump: bool,
    samples: usize,
    stats: Vec<StrengthStats>,
}

/// Mean and sample standard deviation, taken about the first value so that
/// identical inputs give exactly zero spread.
fn mean_std(x: &[f64]) -> (Option<f64>, Option<f64>) {
    let Some(&x0) = x.first() else {
        return (None, None);
    };
    let n = x.len() as f64;
    let shift = x.iter().map(|v| v - x0).sum::<f64>() / n;
    let std = (x.len() > 1).then(|| {
        (x.iter().map(|v| (v - x0 - shift).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (Some(x0 + shift), std)
}

fn run_disorder(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let d = config.disorder.as_ref().expect("validated");
    let clean = build_ssh(d.unit_cells, d.j_intra_hz, d.j_inter_hz)?;
    let psi0 = edge_state(clean.sites())?;
    let times = uniform_grid(d.window_s, d.step_s)?;
    let grid_step = d.window_s / DEFAULT_GRID_CELLS as f64;
    let realizations: Vec<(String, DisorderSpec)> = match d.source {
        DisorderSource::TableV => TABLE_V
            .iter()
            .map(|row| (row.name.to_string(), DisorderSpec::from_row(row)))
            .collect(),
        DisorderSource::Random => {
            let mut out = Vec::new();
            for (i, &strength) in d.strengths_hz.iter().enumerate() {
                for s in 0..d.samples {
                    let seed = d.seed.wrapping_add((i * d.samples + s) as u64);
                    out.push((format!("s{}", i * d.samples + s + 1), sample_disorder(strength, clean.sites() - 1, seed)?));
                }
            }
            out
        }
    };
    let mut samples = Vec::with_capacity(realizations.len());
    for (name, spec) in realizations {
        let chain: HoppingChain = apply_disorder(&clean, &spec)
            .with_context(|| format!("sample {name} (strength {} Hz)", spec.strength))?;
        let eig = eigendecompose(&chain)?;
        let critical = critical_times(&eig, &psi0, d.window_s, grid_step, DEFAULT_ROOT_TOL)?;
        let trace = pgp(&loschmidt(&eig, &psi0, &times)?, &PgpOptions::default())?;
        samples.push(DisorderSample {
            name,
            strength: spec.strength,
            seed: spec.seed,
            critical,
            jumps: trace.jump_indices().len(),
            pgp: trace.phase,
        });
    }

    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            vec![
                s.name.clone(),
                cell(s.strength),
                s.seed.to_string(),
                opt_cell(s.critical.first().copied()),
                s.critical.len().to_string(),
                s.jumps.to_string(),
            ]
        })
        .collect();
    sink.table(
        "samples.csv",
        &["sample", "delta_Hz", "seed", "first_t_c_s", "critical_times", "pgp_jumps"],
        &rows,
    )?;

    let mut header = vec!["t_s".to_string()];
    header.extend(samples.iter().map(|s| format!("phi_P_{}_rad", s.name)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let trace_rows: Vec<Vec<String>> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut row = vec![cell(t)];
            row.extend(samples.iter().map(|s| cell(s.pgp[k])));
            row
        })
        .collect();
    sink.table("pgp_traces.csv", &header_refs, &trace_rows)?;

    let mut strengths: Vec<f64> = Vec::new();
    for s in &samples {
        if !strengths.contains(&s.strength) {
            strengths.push(s.strength);
        }
    }
    let stats: Vec<StrengthStats> = strengths
        .iter()
        .map(|&delta| {
            let group: Vec<&DisorderSample> = samples.iter().filter(|s| s.strength == delta).collect();
            let first: Vec<f64> = group.iter().filter_map(|s| s.critical.first().copied()).collect();
            let (mean, std) = mean_std(&first);
            StrengthStats {
                delta_hz: delta,
                samples: group.len(),
                with_dpt: first.len(),
                mean_t_c1_s: mean,
                std_t_c1_s: std,
            }
        })
        .collect();
    let stat_rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                cell(s.delta_hz),
                s.samples.to_string(),
                s.with_dpt.to_string(),
                opt_cell(s.mean_t_c1_s),
                opt_cell(s.std_t_c1_s),
            ]
        })
        .collect();
    sink.table(
        "stats.csv",
        &["delta_Hz", "samples", "with_dpt", "mean_t_c1_s", "std_t_c1_s"],
        &stat_rows,
    )?;
    let all_jump = samples.iter().all(|s| s.jumps > 0);
    for s in &stats {
        sink.say(format!(
            "delta {} Hz: {}/{} with DPT; t_c1 mean {} ms, std {} ms",
            s.delta_hz,
            s.with_dpt,
            s.samples,
            s.mean_t_c1_s.map_or("-".into(), |m| format!("{:.4}", m * 1e3)),
            s.std_t_c1_s.map_or("-".into(), |m| format!("{:.4}", m * 1e3)),
        ));
    }
    sink.say(format!("every sample shows a geometric-phase jump: {all_jump}"));
    sink.json(
        "summary.json",
        &DisorderSummary {
            all_jump,
            samples: samples.len(),
            stats,
        },
    )?;
    if config.emit_svg {
        let t_ms: Vec<f64> = times.iter().map(|t| t * 1e3).collect();
        let series: Vec<Series> = samples
            .iter()
            .map(|s| Series::new(s.name.clone(), &t_ms, &s.pgp, Style::Step))
            .collect();
        let svg = render_lines(
            &Plot {
                title: "Geometric phase per sample".into(),
                x_label: "t (ms)".into(),
                y_label: "phi_P (rad)".into(),
                y_range: Some((-PI, PI)),
            },
            &series,
        )?;
        sink.write("pgp.svg", svg)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    window_jt: f64,
    window_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<dpt_core::phasemap::WindowCalibration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<dpt_core::phasemap::BoundaryEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<Vec<dpt_core::phasemap::CurvePoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagram: Option<DiagramSummary>,
}

#[derive(Debug, Serialize)]
struct DiagramSummary {
    rows: usize,
    columns: usize,
    monotone: bool,
    violations: Vec<usize>,
    boundary: Option<(f64, f64)>,
    window_s: f64,
}

fn run_sweep(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let s = config.sweep.as_ref().expect("validated");
    let workers = config.workers.unwrap_or_else(dpt_core::phasemap::default_workers);
    let mut core = s.to_core(workers);
    let calibration = match &s.calibrate {
        Some(cal) => {
            let c = calibrate_window(cal.target, &cal.ladder, &core)?;
            core.window_jt = c.window_jt;
            sink.say(format!(
                "calibrated window J_B*T = {} gives r_c = {:.5} (target {})",
                c.window_jt, c.boundary.ratio, c.target
            ));
            Some(c)
        }
        None => None,
    };
    let estimate = if s.boundary {
        let b = boundary(&core)?;
        sink.say(format!(
            "r_c = {:.5} +- {:.1e} at J_B*T = {}",
            b.ratio, b.half_width, core.window_jt
        ));
        Some(b)
    } else {
        None
    };
    let curve = match &s.initial_ratios {
        Some(ratios) => {
            let points = boundary_vs_initial(ratios, &core)?;
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| vec![cell(p.initial_ratio), cell(p.boundary.ratio), cell(p.boundary.half_width)])
                .collect();
            sink.table("curve.csv", &["initial_ratio", "r_c", "half_width"], &rows)?;
            let listed: Vec<String> = points.iter().map(|p| format!("{:.5}", p.boundary.ratio)).collect();
            sink.say(format!("r_c by initial ratio: {}", listed.join(", ")));
            if config.emit_svg {
                let xs: Vec<f64> = points.iter().map(|p| p.initial_ratio).collect();
                let ys: Vec<f64> = points.iter().map(|p| p.boundary.ratio).collect();
                let svg = render_lines(
                    &Plot {
                        title: "Boundary against initial ratio".into(),
                        x_label: "initial J_A/J_B".into(),
                        y_label: "r_c".into(),
                        y_range: None,
                    },
                    &[Series::new("r_c", &xs, &ys, Style::Line)],
                )?;
                sink.write("curve.svg", svg)?;
            }
            Some(points)
        }
        None => None,
    };
    let diagram = match &s.grid {
        Some(g) => {
            let grid = DiagramGrid {
                j_intra: g.j_intra_hz.values(),
                j_inter: g.j_inter_hz.values(),
            };
            let d = scan_diagram(&grid, &core)?;
            sink.write("diagram.csv", d.to_delimited(','))?;
            if config.emit_svg {
                let values: Vec<f64> = d.cells.iter().map(|c| if c.dpt { 1.0 } else { 0.0 }).collect();
                let svg = render_heatmap(
                    &Plot {
                        title: "DPT present".into(),
                        x_label: "J_A (Hz)".into(),
                        y_label: "J_B (Hz)".into(),
                        y_range: None,
                    },
                    &grid.j_intra,
                    &grid.j_inter,
                    &values,
                )?;
                sink.write("diagram.svg", svg)?;
            }
            sink.say(format!(
                "{}x{} diagram, monotone: {}, boundary: {}",
                d.rows,
                d.columns,
                d.monotone,
                d.boundary.map_or("none".into(), |(r, w)| format!("{r:.4} +- {w:.4}"))
            ));
            Some(DiagramSummary {
                rows: d.rows,
                columns: d.columns,
                monotone: d.monotone,
                violations: d.violations,
                boundary: d.boundary,
                window_s: d.window_s,
            })
        }
        None => None,
    };
    sink.json(
        "summary.json",
        &SweepSummary {
            window_jt: core.window_jt,
            window_s: core.window_seconds(),
            calibration,
            boundary: estimate,
            curve,
            diagram,
        },
    )
}

fn run_mech(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let m = config.mech.as_ref().expect("validated");
    let sites = m.couplings_hz.len() + 1;
    let mut bank = OscillatorBank::from_modes(&m.bank.modes()?)?.subset(m.first_beam, m.first_beam + sites - 1)?;
    if let Some(gamma) = m.uniform_damping_per_s {
        bank = bank.with_uniform_damping(gamma)?;
    }
    let dt = 1.0 / (m.steps_per_period * bank.max_frequency_hz());
    let replica = ReplicaConfig {
        bank,
        couplings: m.couplings_hz.clone(),
        initial_site: m.initial_site,
        window: m.window_s,
        output_step: m.output_step_s,
        dt: Some(dt),
        record_stride: m.record_stride,
        window_cycles: m.window_cycles,
        damping: m.damping,
    };
    let run = run_replica(&replica)?;
    sink.write("envelopes.csv", run.envelopes.to_delimited(','))?;
    let mut header = vec!["t_s".to_string()];
    header.extend((1..=sites).map(|j| format!("abs_psi_{j}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = run
        .tb
        .times
        .iter()
        .zip(&run.tb.states)
        .map(|(&t, s)| {
            let mut row = vec![cell(t)];
            row.extend(s.amplitudes().iter().map(|z| cell(z.norm())));
            row
        })
        .collect();
    sink.table("tight_binding.csv", &header_refs, &rows)?;
    sink.json("metrics.json", &run.metrics)?;
    if m.write_trajectory {
        let mut bytes = Vec::new();
        run.trajectory.write_to(&mut bytes)?;
        sink.write("trajectory.bin", bytes)?;
    }
    if config.emit_svg {
        let t_ms: Vec<f64> = run.envelopes.times.iter().map(|t| t * 1e3).collect();
        let series: Vec<Series> = (0..sites)
            .map(|j| {
                let ys: Vec<f64> = run.envelopes.envelopes.iter().map(|row| row[j].norm()).collect();
                Series::new(format!("|psi_{}|", j + 1), &t_ms, &ys, Style::Line)
            })
            .collect();
        let svg = render_lines(
            &Plot {
                title: "Demodulated envelopes".into(),
                x_label: "t (ms)".into(),
                y_label: "|psi_j|".into(),
                y_range: Some((0.0, 1.0)),
            },
            &series,
        )?;
        sink.write("envelopes.svg", svg)?;
    }
    sink.say(format!(
        "mech vs tight-binding: Linf {:.4}, RMS {:.4}, edge phase Linf {:.3} rad",
        run.metrics.linf_amplitude, run.metrics.rms_amplitude, run.metrics.linf_edge_phase
    ));
    Ok(())
}

fn run_spectrum(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let s = config.spectrum.as_ref().expect("validated");
    let chain = build_ssh(s.unit_cells, s.j_intra_hz, s.j_inter_hz)?;
    let psi0 = match initial_condition(&s.initial, s.unit_cells)? {
        InitialCondition::State(v) => v,
        InitialCondition::EdgeOf(c) => dpt_core::spectral::left_edge_state(&eigendecompose(&c)?)?,
    };
    let eig = eigendecompose(&chain)?;
    let linewidth = s.linewidth()?;
    let grid = DiagramGrid::linspace(s.f_min_hz, s.f_max_hz, s.points);
    let spectrum = response_spectrum(&eig, &psi0, linewidth, &grid)?;
    let rows: Vec<Vec<String>> = grid.iter().zip(&spectrum).map(|(f, v)| vec![cell(*f), cell(*v)]).collect();
    sink.table("spectrum.csv", &["f_Hz", "S"], &rows)?;
    let weights = occupations(&eig, &psi0)?.weights;
    let mode_rows: Vec<Vec<String>> = eig
        .eigenvalues()
        .iter()
        .zip(&weights)
        .map(|(&e, &w)| vec![cell(e), cell(mode_detuning_hz(e)), cell(w)])
        .collect();
    sink.table("modes.csv", &["E_Hz", "detuning_Hz", "weight"], &mode_rows)?;
    if config.emit_svg {
        let svg = render_lines(
            &Plot {
                title: "Response spectrum".into(),
                x_label: "detuning (Hz)".into(),
                y_label: "S".into(),
                y_range: None,
            },
            &[Series::new("S", &grid, &spectrum, Style::Line)],
        )?;
        sink.write("spectrum.svg", svg)?;
    }
    let peak = grid[spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least two points")];
    sink.say(format!("linewidth {linewidth:.3} Hz; strongest response at {peak:.2} Hz"));
    Ok(())
}
