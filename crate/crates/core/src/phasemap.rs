//! Dynamical phase boundary search and parameter scans.
//!
//! Every quench here starts from the left edge state of an SSH chain with
//! ratio `initial_ratio` and evolves under a chain with intercell coupling
//! `J_B` (60 Hz by default) and intracell coupling `ratio · J_B`. Windows and
//! grid steps are dimensionless (`J_B · t`), so results do not depend on the
//! coupling scale, and grids for different windows share their points.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_ssh, edge_state, StateVector};
use crate::quench::critical_times;
use crate::spectral::{eigendecompose, left_edge_state};

/// How the initial state is prepared from the initial chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Left edge eigenstate of the initial chain.
    #[default]
    EdgeState,
    /// The first-site excitation, whatever the initial ratio.
    FirstSite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub unit_cells: usize,
    pub initial_ratio: f64,
    pub initial_kind: InitialKind,
    /// Intercell coupling of the final chain (Hz).
    pub j_inter: f64,
    /// Observation window in units of `1/J_B`.
    pub window_jt: f64,
    /// Bracketing grid step in units of `1/J_B`.
    pub grid_step_jt: f64,
    /// Critical-time bisection tolerance in units of `1/J_B`.
    pub root_tol_jt: f64,
    /// Bisection bracket on `J_A / J_B`.
    pub bracket: (f64, f64),
    /// Half-width at which the boundary bisection stops.
    pub ratio_tol: f64,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            unit_cells: 40,
            initial_ratio: 0.0,
            initial_kind: InitialKind::EdgeState,
            j_inter: 60.0,
            window_jt: 10.0,
            grid_step_jt: 0.0025,
            root_tol_jt: 1e-6,
            bracket: (0.5, 1.5),
            ratio_tol: 1e-4,
            workers: default_workers(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{x} must be positive and finite")))
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unit_cells == 0 {
            return Err(invalid("unit_cells", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.initial_ratio) {
            return Err(invalid(
                "initial_ratio",
                format!("{} must lie in [0, 1) so the initial chain is topological", self.initial_ratio),
            ));
        }
        positive("j_inter", self.j_inter)?;
        positive("window_jt", self.window_jt)?;
        positive("grid_step_jt", self.grid_step_jt)?;
        if self.grid_step_jt > self.window_jt {
            return Err(invalid("grid_step_jt", "must not exceed the window"));
        }
        positive("root_tol_jt", self.root_tol_jt)?;
        let (lo, hi) = self.bracket;
        positive("bracket", lo)?;
        if !(hi > lo && hi.is_finite()) {
            return Err(invalid("bracket", format!("({lo}, {hi}) must satisfy 0 < lo < hi")));
        }
        positive("ratio_tol", self.ratio_tol)?;
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    pub fn window_seconds(&self) -> f64 {
        self.window_jt / self.j_inter
    }

    fn pool(&self) -> Result<ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))
    }
}

/// The initial state and time discretization shared by every probe of a config.
struct Prepared {
    psi0: StateVector,
    window: f64,
    step: f64,
    root_tol: f64,
}

impl Prepared {
    fn new(config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let psi0 = match config.initial_kind {
            InitialKind::FirstSite => edge_state(2 * config.unit_cells)?,
            InitialKind::EdgeState => {
                let chain = build_ssh(config.unit_cells, config.initial_ratio * config.j_inter, config.j_inter)?;
                left_edge_state(&eigendecompose(&chain)?)?
            }
        };
        Ok(Self {
            psi0,
            window: config.window_seconds(),
            step: config.grid_step_jt / config.j_inter,
            root_tol: config.root_tol_jt / config.j_inter,
        })
    }

    fn first_zero(&self, unit_cells: usize, j_intra: f64, j_inter: f64) -> Result<Option<f64>> {
        let eig = eigendecompose(&build_ssh(unit_cells, j_intra, j_inter)?)?;
        Ok(critical_times(&eig, &self.psi0, self.window, self.step, self.root_tol)?
            .first()
            .copied())
    }

    fn probe(&self, ratio: f64, config: &SweepConfig) -> Result<Option<f64>> {
        positive("ratio", ratio)?;
        self.first_zero(config.unit_cells, ratio * config.j_inter, config.j_inter)
    }
}

/// First critical time (s) of the quench to `J_A / J_B = ratio`, if any.
pub fn probe(ratio: f64, config: &SweepConfig) -> Result<Option<f64>> {
    Prepared::new(config)?.probe(ratio, config)
}

/// Whether the quench to `J_A / J_B = ratio` has a critical time in the window.
pub fn dpt_at(ratio: f64, config: &SweepConfig) -> Result<bool> {
    Ok(probe(ratio, config)?.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    pub ratio: f64,
    pub half_width: f64,
    pub iterations: usize,
}

/// Bisects the DPT boundary in `J_A / J_B` inside the configured bracket.
pub fn boundary(config: &SweepConfig) -> Result<BoundaryEstimate> {
    let prepared = Prepared::new(config)?;
    let (mut lo, mut hi) = config.bracket;
    let dpt_lo = prepared.probe(lo, config)?.is_some();
    let dpt_hi = prepared.probe(hi, config)?.is_some();
    if dpt_lo || !dpt_hi {
        return Err(Error::BadBracket { lo, hi, dpt_lo, dpt_hi });
    }
    let mut iterations = 0;
    while 0.5 * (hi - lo) > config.ratio_tol {
        let mid = 0.5 * (lo + hi);
        if prepared.probe(mid, config)?.is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence { iterations });
        }
    }
    Ok(BoundaryEstimate {
        ratio: 0.5 * (lo + hi),
        half_width: 0.5 * (hi - lo),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub initial_ratio: f64,
    pub boundary: BoundaryEstimate,
}

/// The boundary for each initial ratio, computed in parallel.
pub fn boundary_vs_initial(initial_ratios: &[f64], config: &SweepConfig) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let configs = initial_ratios
        .iter()
        .map(|&r| {
            let c = SweepConfig {
                initial_ratio: r,
                ..config.clone()
            };
            c.validate().map(|_| c)
        })
        .collect::<Result<Vec<_>>>()?;
    config.pool()?.install(|| {
        configs
            .par_iter()
            .map(|c| {
                boundary(c).map(|b| CurvePoint {
                    initial_ratio: c.initial_ratio,
                    boundary: b,
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCalibration {
    pub target: f64,
    pub window_jt: f64,
    pub boundary: BoundaryEstimate,
    /// `(window_jt, boundary)` for every window tried, in ladder order.
    pub ladder: Vec<(f64, f64)>,
}

/// Windows tried by default when calibrating against a target boundary.
pub const DEFAULT_WINDOW_LADDER: [f64; 7] = [2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0];

/// Runs the boundary search at every window of `ladder` and keeps the one
/// whose boundary is closest to `target`. On ties the configured window
/// wins, then the earliest.
pub fn calibrate_window(target: f64, ladder: &[f64], config: &SweepConfig) -> Result<WindowCalibration> {
    if ladder.is_empty() {
        return Err(invalid("ladder", "must list at least one window"));
    }
    let configs = ladder
        .iter()
        .map(|&w| {
            let c = SweepConfig {
                window_jt: w,
                ..config.clone()
            };
            c.validate().map(|_| c)
        })
        .collect::<Result<Vec<_>>>()?;
    let found: Vec<BoundaryEstimate> = config
        .pool()?
        .install(|| configs.par_iter().map(boundary).collect::<Result<Vec<_>>>())?;
    let distance = |i: usize| (found[i].ratio - target).abs();
    let closest = (0..found.len())
        .min_by(|&a, &b| distance(a).total_cmp(&distance(b)).then(a.cmp(&b)))
        .expect("ladder is non-empty");
    let best = ladder
        .iter()
        .position(|&w| w == config.window_jt)
        .filter(|&i| distance(i) <= distance(closest))
        .unwrap_or(closest);
    Ok(WindowCalibration {
        target,
        window_jt: ladder[best],
        boundary: found[best],
        ladder: ladder.iter().copied().zip(found.iter().map(|b| b.ratio)).collect(),
    })
}

/// Axes of a `(J_A, J_B)` scan (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramGrid {
    pub j_intra: Vec<f64>,
    pub j_inter: Vec<f64>,
}

impl DiagramGrid {
    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramCell {
    pub j_intra: f64,
    pub j_inter: f64,
    pub dpt: bool,
    pub first_t_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    /// Row-major: one row per `J_B` value, `J_A` varying along the row.
    pub cells: Vec<DiagramCell>,
    pub rows: usize,
    pub columns: usize,
    /// False when some row has a DPT at a ratio below one without.
    pub monotone: bool,
    pub violations: Vec<usize>,
    /// Midpoint between the largest DPT-free ratio and the smallest DPT ratio.
    pub boundary: Option<(f64, f64)>,
    pub window_s: f64,
}

impl PhaseDiagram {
    pub const HEADER: [&'static str; 4] = ["J_A_Hz", "J_B_Hz", "dpt", "first_t_c_s"];

    pub fn to_delimited(&self, sep: char) -> String {
        let sep = sep.to_string();
        let mut out = Self::HEADER.join(&sep);
        out.push('\n');
        for c in &self.cells {
            let t = c.first_t_c.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&[c.j_intra.to_string(), c.j_inter.to_string(), c.dpt.to_string(), t].join(&sep));
            out.push('\n');
        }
        out
    }
}

/// Evaluates every cell of the grid over the window `window_jt / config.j_inter`.
/// Cells run on a pool of `config.workers` threads; results are ordered by
/// cell index, so the diagram does not depend on the worker count.
pub fn scan_diagram(grid: &DiagramGrid, config: &SweepConfig) -> Result<PhaseDiagram> {
    if grid.j_intra.is_empty() || grid.j_inter.is_empty() {
        return Err(invalid("grid", "needs at least one J_A and one J_B value"));
    }
    for &j in &grid.j_intra {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(invalid("grid.j_intra", format!("{j} must be non-negative")));
        }
    }
    for &j in &grid.j_inter {
        positive("grid.j_inter", j)?;
    }
    let prepared = Prepared::new(config)?;
    let pairs: Vec<(f64, f64)> = grid
        .j_inter
        .iter()
        .flat_map(|&b| grid.j_intra.iter().map(move |&a| (a, b)))
        .collect();
    let cells: Vec<DiagramCell> = config.pool()?.install(|| {
        pairs
            .par_iter()
            .map(|&(a, b)| {
                prepared.first_zero(config.unit_cells, a, b).map(|t| DiagramCell {
                    j_intra: a,
                    j_inter: b,
                    dpt: t.is_some(),
                    first_t_c: t,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let columns = grid.j_intra.len();
    let mut violations = Vec::new();
    for row in 0..grid.j_inter.len() {
        let mut order: Vec<usize> = (row * columns..(row + 1) * columns).collect();
        order.sort_by(|&x, &y| cells[x].j_intra.total_cmp(&cells[y].j_intra).then(x.cmp(&y)));
        let mut seen_dpt = false;
        for i in order {
            if cells[i].dpt {
                seen_dpt = true;
            } else if seen_dpt {
                violations.push(i);
            }
        }
    }
    violations.sort_unstable();

    let ratio = |c: &DiagramCell| c.j_intra / c.j_inter;
    let below = cells.iter().filter(|c| !c.dpt).map(ratio).fold(f64::NEG_INFINITY, f64::max);
    let above = cells.iter().filter(|c| c.dpt).map(ratio).fold(f64::INFINITY, f64::min);
    let boundary = (below.is_finite() && above.is_finite() && below < above)
        .then(|| (0.5 * (below + above), 0.5 * (above - below)));

    Ok(PhaseDiagram {
        cells,
        rows: grid.j_inter.len(),
        columns,
        monotone: violations.is_empty(),
        violations,
        boundary,
        window_s: config.window_seconds(),
    })
}
