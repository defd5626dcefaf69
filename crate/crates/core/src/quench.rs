//! Quench dynamics: evolution of a prepared state under a final chain, the
//! Loschmidt amplitude `G(t) = ⟨ψ(0)|ψ(t)⟩`, the rate function, the dynamical
//! and geometric (Pancharatnam) phases, critical times and a finite-size-aware
//! classifier for dynamical phase transitions.
//!
//! Times are in seconds, couplings and eigenvalues in Hz; an eigenvalue `E`
//! evolves as `exp(−i·RATE_PER_HZ·E·t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_ssh, edge_state, wrap_angle, ChiralOperator, HoppingChain, StateVector, RATE_PER_HZ};
use crate::spectral::{eigendecompose, left_edge_state, occupations, EigenSystem};

/// `|⟨Γ⟩|` must be at least `1 − POLARIZATION_TOL` for the merged (real) form.
pub const POLARIZATION_TOL: f64 = 1e-9;

/// Largest `|Im G|` tolerated when the amplitude is asserted to be real.
pub const CHIRAL_IMAG_TOL: f64 = 1e-8;

/// Default bisection tolerance for critical times (s).
pub const DEFAULT_ROOT_TOL: f64 = 1e-7;

/// Default number of grid cells per window when bracketing zeros.
pub const DEFAULT_GRID_CELLS: usize = 4000;

/// Default sampling step of exported traces (s).
pub const DEFAULT_SAMPLE_STEP: f64 = 5e-5;

/// Times `0, step, 2·step, …` up to and including `end`.
pub fn uniform_grid(end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("{step} must be positive")));
    }
    if !(end >= 0.0 && end.is_finite()) {
        return Err(invalid("window", format!("{end} must be non-negative")));
    }
    let count = (end / step * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}

/// How the quench's initial state is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    State(StateVector),
    /// The left edge state of this (topological) chain.
    EdgeOf(HoppingChain),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchSpec {
    final_chain: HoppingChain,
    initial: InitialCondition,
    initial_state: StateVector,
    time_grid: Vec<f64>,
}

impl QuenchSpec {
    pub fn new(final_chain: HoppingChain, initial: InitialCondition, time_grid: Vec<f64>) -> Result<Self> {
        match time_grid.first() {
            Some(&t0) if t0 == 0.0 => {}
            _ => return Err(invalid("time_grid", "must start at 0")),
        }
        if time_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("time_grid", "must be strictly increasing"));
        }
        let initial_state = match &initial {
            InitialCondition::State(s) => s.clone(),
            InitialCondition::EdgeOf(chain) => left_edge_state(&eigendecompose(chain)?)?,
        };
        if initial_state.len() != final_chain.sites() {
            return Err(Error::DimensionMismatch {
                expected: final_chain.sites(),
                actual: initial_state.len(),
            });
        }
        Ok(Self {
            final_chain,
            initial,
            initial_state,
            time_grid,
        })
    }

    pub fn final_chain(&self) -> &HoppingChain {
        &self.final_chain
    }

    pub fn initial(&self) -> &InitialCondition {
        &self.initial
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn window(&self) -> f64 {
        *self.time_grid.last().expect("grid is non-empty")
    }

    /// The same quench at another size, when the final chain is a clean SSH
    /// chain and the initial state can be rebuilt (first-site excitation or
    /// the edge state of a clean SSH chain).
    fn resized(&self, unit_cells: usize) -> Option<Result<(HoppingChain, StateVector)>> {
        if self.final_chain.is_disordered() {
            return None;
        }
        let (a, b) = self.final_chain.ssh_pattern()?;
        let initial = match &self.initial {
            InitialCondition::State(s) if *s == edge_state(s.len()).ok()? => {
                edge_state(2 * unit_cells)
            }
            InitialCondition::State(_) => return None,
            InitialCondition::EdgeOf(chain) => {
                if chain.is_disordered() {
                    return None;
                }
                let (ia, ib) = chain.ssh_pattern()?;
                build_ssh(unit_cells, ia, ib)
                    .and_then(|c| eigendecompose(&c))
                    .and_then(|e| left_edge_state(&e))
            }
        };
        Some(build_ssh(unit_cells, a, b).and_then(|chain| initial.map(|s| (chain, s))))
    }
}

fn check_dim(eig: &EigenSystem, psi0: &StateVector) -> Result<()> {
    if eig.dim() != psi0.len() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            actual: psi0.len(),
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} must be a finite non-negative time")));
    }
    Ok(())
}

/// Spectral propagation: `ψ(t) = Σ_n exp(−i·rate·E_n·t) ⟨ψ_n|ψ₀⟩ |ψ_n⟩`.
pub fn evolve(eig: &EigenSystem, psi0: &StateVector, t: f64) -> Result<StateVector> {
    check_time(t)?;
    let overlaps = eig.overlaps(psi0)?;
    Ok(propagate(eig, &overlaps, t))
}

/// [`evolve`] over a series of times.
pub fn evolve_series(eig: &EigenSystem, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    times.iter().try_for_each(|&t| check_time(t))?;
    let overlaps = eig.overlaps(psi0)?;
    Ok(times.iter().map(|&t| propagate(eig, &overlaps, t)).collect())
}

fn propagate(eig: &EigenSystem, overlaps: &[Complex64], t: f64) -> StateVector {
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); eig.dim()];
    for ((e, v), c) in eig.eigenvalues().iter().zip(eig.eigenvectors()).zip(overlaps) {
        let coeff = c * Complex64::from_polar(1.0, -RATE_PER_HZ * e * t);
        amplitudes.iter_mut().zip(v).for_each(|(a, &x)| *a += coeff * x);
    }
    // Unitary up to rounding; renormalizing keeps the norm invariant tight.
    StateVector::normalized(amplitudes).expect("propagated state is non-zero")
}

/// `G(t) = Σ_n |⟨ψ_n|ψ₀⟩|² exp(−i·rate·E_n·t)`.
pub fn loschmidt(eig: &EigenSystem, psi0: &StateVector, times: &[f64]) -> Result<Vec<Complex64>> {
    let weights = occupations(eig, psi0)?.weights;
    Ok(times
        .iter()
        .map(|&t| {
            weights
                .iter()
                .zip(eig.eigenvalues())
                .map(|(w, e)| w * Complex64::from_polar(1.0, -RATE_PER_HZ * e * t))
                .sum()
        })
        .collect())
}

/// The real Loschmidt amplitude of a sublattice-polarized state, with every
/// `±E` pair merged into one cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedAmplitude {
    constant: f64,
    /// `(w₊ + w₋, angular rate)` per mirror pair.
    terms: Vec<(f64, f64)>,
}

impl MergedAmplitude {
    pub fn new(eig: &EigenSystem, psi0: &StateVector) -> Result<Self> {
        check_dim(eig, psi0)?;
        let chirality = ChiralOperator::new(psi0.len()).expectation_complex(psi0.amplitudes());
        if chirality.abs() < 1.0 - POLARIZATION_TOL {
            return Err(Error::NotPolarized { chirality });
        }
        let w = occupations(eig, psi0)?.weights;
        let e = eig.eigenvalues();
        let mut terms: Vec<(f64, f64)> = eig
            .pairing()
            .iter()
            .map(|&(p, m)| (w[p] + w[m], RATE_PER_HZ * 0.5 * (e[p] - e[m])))
            .collect();
        // Zero modes come in ±ε pairs too; a leftover unpaired one is static.
        let mut zeros: Vec<usize> = eig.zero_modes().to_vec();
        zeros.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
        let mut constant = 0.0;
        while zeros.len() >= 2 {
            let lo = zeros.remove(0);
            let hi = zeros.pop().expect("len >= 2");
            terms.push((w[lo] + w[hi], RATE_PER_HZ * 0.5 * (e[hi] - e[lo])));
        }
        for i in zeros {
            constant += w[i];
        }
        Ok(Self { constant, terms })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(w, rate)| w * (rate * t).cos())
                .sum::<f64>()
    }

    /// Total occupation of the zero modes (`c₀`), counting near-zero pairs.
    pub fn zero_mode_weight(&self, eig: &EigenSystem, psi0: &StateVector) -> Result<f64> {
        let w = occupations(eig, psi0)?.weights;
        Ok(eig.zero_modes().iter().map(|&i| w[i]).sum())
    }
}

/// `G(t) = c₀ + Σ_pairs (w₊ + w₋) cos(rate·E·t)`; requires a
/// sublattice-polarized initial state.
pub fn merged_loschmidt(eig: &EigenSystem, psi0: &StateVector, times: &[f64]) -> Result<Vec<f64>> {
    let merged = MergedAmplitude::new(eig, psi0)?;
    Ok(times.iter().map(|&t| merged.eval(t)).collect())
}

/// `λ(t) = −(1/N) ln r(t)²`; `+∞` where `r = 0`.
pub fn rate_function(moduli: &[f64], unit_cells: usize) -> Result<Vec<f64>> {
    if unit_cells == 0 {
        return Err(invalid("unit_cells", "must be at least 1"));
    }
    let n = unit_cells as f64;
    Ok(moduli
        .iter()
        .map(|&r| {
            if r == 0.0 {
                f64::INFINITY
            } else {
                // r exceeds 1 only by rounding.
                (-(r * r).ln() / n).max(0.0)
            }
        })
        .collect())
}

/// `φ_dyn(t) = −Σ_n |⟨ψ_n|ψ₀⟩|² (rate·E_n) t`.
pub fn dynamical_phase(eig: &EigenSystem, psi0: &StateVector, t: f64) -> Result<f64> {
    check_time(t)?;
    let w = occupations(eig, psi0)?.weights;
    let mean_energy: f64 = w.iter().zip(eig.eigenvalues()).map(|(w, e)| w * e).sum();
    Ok(-RATE_PER_HZ * mean_energy * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgpOptions {
    /// Reject amplitudes with `|Im G|` above [`CHIRAL_IMAG_TOL`].
    pub chiral: bool,
    /// Samples with `|G|` below this are flagged and carry the previous phase.
    pub zero_tol: f64,
    /// Constant phase removed before classification (measurement offset).
    pub offset: f64,
}

impl Default for PgpOptions {
    fn default() -> Self {
        Self {
            chiral: true,
            zero_tol: 1e-9,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgpTrace {
    pub phase: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl PgpTrace {
    /// Indices `k` where the phase differs between samples `k − 1` and `k`.
    pub fn jump_indices(&self) -> Vec<usize> {
        (1..self.phase.len())
            .filter(|&k| self.phase[k] != self.phase[k - 1])
            .collect()
    }
}

fn classify_phase(g: Complex64) -> f64 {
    if g.re < 0.0 {
        PI
    } else {
        0.0
    }
}

/// Geometric phase of a real Loschmidt amplitude: `0` where `Re G > 0`, `π`
/// where `Re G < 0`. Near-zero samples keep the previous value and are flagged.
pub fn pgp(g: &[Complex64], opts: &PgpOptions) -> Result<PgpTrace> {
    let rotation = Complex64::from_polar(1.0, -opts.offset);
    let mut phase = Vec::with_capacity(g.len());
    let mut flagged = Vec::with_capacity(g.len());
    let mut last = 0.0;
    for (k, &raw) in g.iter().enumerate() {
        let z = raw * rotation;
        if opts.chiral && z.im.abs() > CHIRAL_IMAG_TOL {
            return Err(Error::SymmetryViolation(format!(
                "Im G = {:e} at sample {k} exceeds {CHIRAL_IMAG_TOL:e}",
                z.im
            )));
        }
        if z.norm() < opts.zero_tol {
            phase.push(last);
            flagged.push(true);
        } else {
            last = classify_phase(z);
            phase.push(last);
            flagged.push(false);
        }
    }
    Ok(PgpTrace { phase, flagged })
}

/// Geometric phase read from measured phases: each phase, less `offset`,
/// snaps to whichever of `0` and `π` is closer.
pub fn pgp_from_phases(phases: &[f64], offset: f64) -> Vec<f64> {
    phases
        .iter()
        .map(|&p| {
            if wrap_angle(p - offset).abs() > PI / 2.0 {
                PI
            } else {
                0.0
            }
        })
        .collect()
}

fn bracket_grid(window: f64, grid_step: f64) -> Result<Vec<f64>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(invalid("window", format!("{window} must be positive")));
    }
    uniform_grid(window, grid_step)
}

fn check_root_tol(root_tol: f64) -> Result<()> {
    if !(root_tol > 0.0 && root_tol.is_finite()) {
        return Err(invalid("root_tol", format!("{root_tol} must be positive")));
    }
    Ok(())
}

/// Zeros of a scalar function bracketed by sign changes on a uniform grid
/// and refined by bisection to `root_tol`.
fn grid_roots(f: impl Fn(f64) -> f64, grid: &[f64], root_tol: f64) -> Vec<f64> {
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut roots = Vec::new();
    for k in 0..grid.len() {
        if values[k] == 0.0 {
            roots.push(grid[k]);
            continue;
        }
        if k + 1 < grid.len() && values[k + 1] != 0.0 && values[k].signum() != values[k + 1].signum() {
            let (mut lo, mut hi) = (grid[k], grid[k + 1]);
            let lo_sign = values[k].signum();
            while hi - lo > root_tol {
                let mid = 0.5 * (lo + hi);
                let v = f(mid);
                if v == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if v.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

/// Zeros of the merged real amplitude on `[0, window]`, ascending.
pub fn critical_times(
    eig: &EigenSystem,
    psi0: &StateVector,
    window: f64,
    grid_step: f64,
    root_tol: f64,
) -> Result<Vec<f64>> {
    check_root_tol(root_tol)?;
    let grid = bracket_grid(window, grid_step)?;
    let merged = MergedAmplitude::new(eig, psi0)?;
    Ok(grid_roots(|t| merged.eval(t), &grid, root_tol))
}

/// Times where the geometric phase of the full complex amplitude switches,
/// located on the same grid and refined by bisection on the phase itself.
pub fn pgp_jump_times(
    eig: &EigenSystem,
    psi0: &StateVector,
    window: f64,
    grid_step: f64,
    root_tol: f64,
) -> Result<Vec<f64>> {
    check_root_tol(root_tol)?;
    let grid = bracket_grid(window, grid_step)?;
    let g_at = |t: f64| -> Complex64 { loschmidt(eig, psi0, &[t]).expect("dimensions checked")[0] };
    check_dim(eig, psi0)?;
    let signed = |t: f64| {
        let g = g_at(t);
        if g.re == 0.0 {
            0.0
        } else if classify_phase(g) == 0.0 {
            1.0
        } else {
            -1.0
        }
    };
    Ok(grid_roots(signed, &grid, root_tol))
}

/// Sampled quench observables.
#[derive(Debug, Clone, PartialEq)]
pub struct LoschmidtTrace {
    pub times: Vec<f64>,
    pub g: Vec<Complex64>,
    pub r: Vec<f64>,
    pub rate: Vec<f64>,
    pub phase: Vec<f64>,
    pub dynamical_phase: Vec<f64>,
    pub pgp: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl LoschmidtTrace {
    pub const HEADER: [&'static str; 7] = ["t_s", "re_G", "im_G", "r", "lambda", "phi_dyn_rad", "phi_P_rad"];

    /// Delimiter-separated table with a header row.
    pub fn to_delimited(&self, sep: char) -> String {
        let mut out = Self::HEADER.join(&sep.to_string());
        out.push('\n');
        for k in 0..self.times.len() {
            let row = [
                self.times[k],
                self.g[k].re,
                self.g[k].im,
                self.r[k],
                self.rate[k],
                self.dynamical_phase[k],
                self.pgp[k],
            ];
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(&sep.to_string()));
            out.push('\n');
        }
        out
    }
}

/// Evaluates every observable on `times`. For a sublattice-polarized initial
/// state the geometric phase comes from the sign of `G`; otherwise it is the
/// total phase less the dynamical phase.
pub fn loschmidt_trace(
    eig: &EigenSystem,
    psi0: &StateVector,
    times: &[f64],
    unit_cells: usize,
    opts: &PgpOptions,
) -> Result<LoschmidtTrace> {
    times.iter().try_for_each(|&t| check_time(t))?;
    let g = loschmidt(eig, psi0, times)?;
    let r: Vec<f64> = g.iter().map(|z| z.norm().min(1.0)).collect();
    let rate = rate_function(&r, unit_cells)?;
    let phase: Vec<f64> = g.iter().map(|z| z.arg()).collect();
    let dynamical_phase = times
        .iter()
        .map(|&t| dynamical_phase(eig, psi0, t))
        .collect::<Result<Vec<_>>>()?;
    let chirality = ChiralOperator::new(psi0.len()).expectation_complex(psi0.amplitudes());
    let (pgp_values, flagged) = if chirality.abs() >= 1.0 - POLARIZATION_TOL {
        let trace = pgp(&g, opts)?;
        (trace.phase, trace.flagged)
    } else {
        let flagged: Vec<bool> = g.iter().map(|z| z.norm() < opts.zero_tol).collect();
        let mut last = 0.0;
        let values = phase
            .iter()
            .zip(&dynamical_phase)
            .zip(&flagged)
            .map(|((p, d), &f)| {
                if !f {
                    last = wrap_angle(p - d - opts.offset);
                }
                last
            })
            .collect();
        (values, flagged)
    };
    Ok(LoschmidtTrace {
        times: times.to_vec(),
        g,
        r,
        rate,
        phase,
        dynamical_phase,
        pgp: pgp_values,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiniteSizeVerdict {
    Robust,
    SizeArtifact,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DptReport {
    pub dpt_present: bool,
    pub critical_times: Vec<f64>,
    pub pgp_jump_times: Vec<f64>,
    pub min_abs_g: f64,
    pub finite_size_verdict: FiniteSizeVerdict,
    /// Critical times found at each escalated size, `(unit_cells, times)`.
    pub escalation: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DptOptions {
    /// Grid cells per window, used when `grid_step` is unset.
    pub grid_cells: usize,
    /// Absolute bracketing step (s); overrides `grid_cells`.
    pub grid_step: Option<f64>,
    pub root_tol: f64,
    /// Also locate jumps of the geometric phase from the complex amplitude.
    pub pgp_jumps: bool,
}

impl Default for DptOptions {
    fn default() -> Self {
        Self {
            grid_cells: DEFAULT_GRID_CELLS,
            grid_step: None,
            root_tol: DEFAULT_ROOT_TOL,
            pgp_jumps: true,
        }
    }
}

/// `[N, 2N, 4N]`.
pub fn default_escalation(unit_cells: usize) -> Vec<usize> {
    vec![unit_cells, 2 * unit_cells, 4 * unit_cells]
}

pub fn classify_dpt(spec: &QuenchSpec, escalation_sizes: &[usize]) -> Result<DptReport> {
    classify_dpt_with(spec, escalation_sizes, &DptOptions::default())
}

/// Finds the critical times of a quench over its time grid's window and
/// checks whether they survive at larger system sizes.
pub fn classify_dpt_with(spec: &QuenchSpec, escalation_sizes: &[usize], opts: &DptOptions) -> Result<DptReport> {
    let base = spec.final_chain.unit_cells();
    if escalation_sizes.first() != Some(&base) {
        return Err(invalid(
            "escalation_sizes",
            format!("must start with the quench size {base}"),
        ));
    }
    if escalation_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("escalation_sizes", "must be strictly ascending"));
    }
    if opts.grid_cells == 0 {
        return Err(invalid("grid_cells", "must be positive"));
    }
    let window = spec.window();
    if !(window > 0.0) {
        return Err(invalid("time_grid", "window must be longer than zero"));
    }
    let step = opts.grid_step.unwrap_or(window / opts.grid_cells as f64);
    let eig = eigendecompose(&spec.final_chain)?;
    let psi0 = &spec.initial_state;
    let critical = critical_times(&eig, psi0, window, step, opts.root_tol)?;
    let jumps = if opts.pgp_jumps {
        pgp_jump_times(&eig, psi0, window, step, opts.root_tol)?
    } else {
        Vec::new()
    };
    let min_abs_g = loschmidt(&eig, psi0, &uniform_grid(window, step)?)?
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);

    let larger = &escalation_sizes[1..];
    let mut escalation = vec![(base, critical.clone())];
    let resized: Option<Vec<(HoppingChain, StateVector)>> = larger
        .iter()
        .map(|&n| spec.resized(n))
        .collect::<Option<Vec<_>>>()
        .map(|v| v.into_iter().collect::<Result<Vec<_>>>())
        .transpose()?;
    let verdict = match resized {
        _ if critical.is_empty() || larger.is_empty() => FiniteSizeVerdict::NotApplicable,
        None => FiniteSizeVerdict::NotApplicable,
        Some(runs) => {
            let found = runs
                .par_iter()
                .map(|(chain, state)| {
                    let eig = eigendecompose(chain)?;
                    critical_times(&eig, state, window, step, opts.root_tol).map(|t| (chain.unit_cells(), t))
                })
                .collect::<Result<Vec<_>>>()?;
            let persists = found.iter().all(|(_, t)| !t.is_empty());
            escalation.extend(found);
            if persists {
                FiniteSizeVerdict::Robust
            } else {
                FiniteSizeVerdict::SizeArtifact
            }
        }
    };
    Ok(DptReport {
        dpt_present: !critical.is_empty(),
        critical_times: critical,
        pgp_jump_times: jumps,
        min_abs_g,
        finite_size_verdict: verdict,
        escalation,
    })
}
