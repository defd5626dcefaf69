//! Carrier-level integration of parametrically coupled beams.
//!
//! Each beam is a linear oscillator `m z̈ + m γ ż + k z = F`. Neighbouring
//! beams are coupled through a spring whose stiffness is pumped at their
//! frequency difference, `L_j(t) = η_j cos(ω_p^j t)`. In the rotating frame
//! `z_j = A_j Re(ψ_j e^{iω_j t})` the slow envelopes obey the tight-binding
//! equation with hopping `η_j / (4 √(m_j m_{j+1} ω_j ω_{j+1}))` (rad/s).
//!
//! Units are SI with `ħ = 1`, so `A_j = √(1 / (2 m_j ω_j))` only fixes the
//! envelope scale.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::datasets::{BeamMode, VoltagePreset, BEAMS_8, BIAS_DC_VOLTS};
use crate::error::{invalid, Error, Result};
use crate::lattice::{wrap_angle, HoppingChain, StateVector, RATE_PER_HZ};
use crate::quench::evolve_series;
use crate::spectral::eigendecompose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    /// Natural angular frequency (rad/s).
    pub omega: f64,
    /// Effective mass (kg).
    pub mass: f64,
    /// Quality factor.
    pub quality: f64,
}

impl Oscillator {
    pub fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }

    /// Energy damping rate `ω/Q` (1/s); amplitudes decay at half this rate.
    pub fn gamma(&self) -> f64 {
        self.omega / self.quality
    }

    /// `√(ħω / 2k)` with `ħ = 1`.
    pub fn amplitude_scale(&self) -> f64 {
        (self.omega / (2.0 * self.stiffness())).sqrt()
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBank {
    oscillators: Vec<Oscillator>,
}

impl OscillatorBank {
    pub fn new(oscillators: Vec<Oscillator>) -> Result<Self> {
        if oscillators.is_empty() {
            return Err(invalid("oscillators", "bank is empty"));
        }
        for (j, o) in oscillators.iter().enumerate() {
            for (name, x) in [("omega", o.omega), ("mass", o.mass), ("quality", o.quality)] {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(invalid(name, format!("oscillator {}: {x} must be positive", j + 1)));
                }
            }
        }
        Ok(Self { oscillators })
    }

    /// Unit-mass oscillators from frequencies (kHz) and quality factors.
    pub fn from_modes(modes: &[BeamMode]) -> Result<Self> {
        Self::new(
            modes
                .iter()
                .map(|m| Oscillator {
                    omega: 2.0 * PI * m.frequency_khz * 1e3,
                    mass: 1.0,
                    quality: m.quality,
                })
                .collect(),
        )
    }

    /// The eight-beam device.
    pub fn beams_8() -> Self {
        Self::from_modes(&BEAMS_8).expect("embedded table is valid")
    }

    /// Consecutive beams `first ..= last` (1-based) of a bank.
    pub fn subset(&self, first: usize, last: usize) -> Result<Self> {
        if first == 0 || last < first || last > self.len() {
            return Err(invalid("subset", format!("{first}..={last} outside 1..={}", self.len())));
        }
        Self::new(self.oscillators[first - 1..last].to_vec())
    }

    /// The same bank with every oscillator damped at rate `gamma` (1/s).
    pub fn with_uniform_damping(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("{gamma} must be positive")));
        }
        Self::new(
            self.oscillators
                .iter()
                .map(|o| Oscillator {
                    quality: o.omega / gamma,
                    ..*o
                })
                .collect(),
        )
    }

    pub fn oscillators(&self) -> &[Oscillator] {
        &self.oscillators
    }

    pub fn len(&self) -> usize {
        self.oscillators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oscillators.is_empty()
    }

    pub fn max_frequency_hz(&self) -> f64 {
        self.oscillators.iter().map(Oscillator::frequency_hz).fold(0.0, f64::max)
    }

    pub fn min_frequency_hz(&self) -> f64 {
        self.oscillators
            .iter()
            .map(Oscillator::frequency_hz)
            .fold(f64::INFINITY, f64::min)
    }

    fn check_bond(&self, bond: usize) -> Result<()> {
        if bond + 1 >= self.len() {
            return Err(invalid("bond", format!("{bond} has no partner in a bank of {}", self.len())));
        }
        Ok(())
    }

    fn bond_scale(&self, bond: usize) -> f64 {
        let (a, b) = (&self.oscillators[bond], &self.oscillators[bond + 1]);
        4.0 * RATE_PER_HZ * (a.mass * b.mass * a.omega * b.omega).sqrt()
    }
}

/// Pump amplitude (N/m) giving coupling `j_hz` on bond `bond` (0-based,
/// between oscillators `bond` and `bond + 1`).
pub fn eta_for_coupling(j_hz: f64, bank: &OscillatorBank, bond: usize) -> Result<f64> {
    bank.check_bond(bond)?;
    if !(j_hz >= 0.0 && j_hz.is_finite()) {
        return Err(invalid("coupling", format!("{j_hz} must be non-negative")));
    }
    Ok(j_hz * bank.bond_scale(bond))
}

/// Inverse of [`eta_for_coupling`].
pub fn coupling_from_eta(eta: f64, bank: &OscillatorBank, bond: usize) -> Result<f64> {
    bank.check_bond(bond)?;
    Ok(eta / bank.bond_scale(bond))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Pump amplitude (N/m).
    pub eta: f64,
    /// Pump angular frequency (rad/s).
    pub omega_p: f64,
    /// The pump is applied for `on ≤ t < off` (s).
    pub on: f64,
    pub off: f64,
}

impl Drive {
    fn stiffness_at(&self, t: f64) -> f64 {
        if t >= self.on && t < self.off {
            self.eta * (self.omega_p * t).cos()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    drives: Vec<Drive>,
}

/// Pump-to-carrier ratio above which the rotating-wave mapping is doubtful.
pub const PUMP_RATIO_WARN: f64 = 0.2;

impl DriveSchedule {
    pub fn new(bank: &OscillatorBank, drives: Vec<Drive>) -> Result<Self> {
        if drives.len() + 1 != bank.len() {
            return Err(Error::DimensionMismatch {
                expected: bank.len() - 1,
                actual: drives.len(),
            });
        }
        for (j, d) in drives.iter().enumerate() {
            if !(d.eta.is_finite() && d.omega_p.is_finite()) || d.on.is_nan() || d.off.is_nan() {
                return Err(invalid("drive", format!("bond {}: non-finite parameters", j + 1)));
            }
            let ratio = d.omega_p.abs() / bank.oscillators[j].omega;
            if ratio > PUMP_RATIO_WARN {
                log::warn!("bond {}: pump at {ratio:.3} of the carrier frequency", j + 1);
            }
        }
        Ok(Self { drives })
    }

    /// Drives realizing `chain` on `bank`, pumped at the frequency
    /// differences and switched on during `[on, off)`.
    pub fn for_chain(bank: &OscillatorBank, chain: &HoppingChain, on: f64, off: f64) -> Result<Self> {
        if chain.sites() != bank.len() {
            return Err(Error::DimensionMismatch {
                expected: bank.len(),
                actual: chain.sites(),
            });
        }
        let o = bank.oscillators();
        let drives = chain
            .couplings()
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                Ok(Drive {
                    eta: eta_for_coupling(c, bank, j)?,
                    omega_p: o[j].omega - o[j + 1].omega,
                    on,
                    off,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bank, drives)
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    /// Largest coupling (Hz) realized by the schedule.
    pub fn max_coupling_hz(&self, bank: &OscillatorBank) -> f64 {
        self.drives
            .iter()
            .enumerate()
            .map(|(j, d)| d.eta.abs() / bank.bond_scale(j))
            .fold(0.0, f64::max)
    }
}

/// Positions (m) and velocities (m/s) at the start of integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialMotion {
    pub displacements: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl InitialMotion {
    /// Oscillator `site` (1-based) ringing with unit envelope, `ψ = e_site`,
    /// evaluated at time `t`.
    pub fn ringing(bank: &OscillatorBank, site: usize, t: f64) -> Result<Self> {
        if site == 0 || site > bank.len() {
            return Err(invalid("site", format!("{site} outside 1..={}", bank.len())));
        }
        let mut displacements = vec![0.0; bank.len()];
        let mut velocities = vec![0.0; bank.len()];
        let o = bank.oscillators()[site - 1];
        let a = o.amplitude_scale();
        displacements[site - 1] = a * (o.omega * t).cos();
        velocities[site - 1] = -a * o.omega * (o.omega * t).sin();
        Ok(Self {
            displacements,
            velocities,
        })
    }
}

/// Steps per period of the fastest oscillator used by default.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 250.0;

/// Coarsest step accepted, in periods of the fastest oscillator.
pub const MIN_STEPS_PER_PERIOD: f64 = 50.0;

pub const DEFAULT_RECORD_STRIDE: usize = 10;

/// Cap on stored displacement values per run (2 GiB of samples).
pub const MAX_STORED_VALUES: usize = 1 << 28;

pub fn default_dt(bank: &OscillatorBank) -> f64 {
    1.0 / (DEFAULT_STEPS_PER_PERIOD * bank.max_frequency_hz())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub damping: bool,
    /// Every `record_stride`-th step is stored.
    pub record_stride: usize,
}

/// Sampled displacements of every oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Interval between stored samples (s).
    pub sample_dt: f64,
    /// Time of the first sample (s).
    pub t0: f64,
    /// Largest coupling driven during the run (Hz), 0 if none.
    pub max_coupling_hz: f64,
    pub oscillators: usize,
    /// Row-major: sample `i`, oscillator `j` at `i · oscillators + j`.
    pub samples: Vec<f64>,
}

const TRAJECTORY_MAGIC: &[u8; 8] = b"SSHTRAJ1";

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len() / self.oscillators.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.sample_dt
    }

    pub fn displacement(&self, i: usize, j: usize) -> f64 {
        self.samples[i * self.oscillators + j]
    }

    /// Binary layout, little-endian: magic `SSHTRAJ1`, `sample_dt` f64,
    /// `t0` f64, `max_coupling_hz` f64, oscillator count u32, sample count
    /// u64, then the row-major f64 samples.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(TRAJECTORY_MAGIC)?;
        w.write_all(&self.sample_dt.to_le_bytes())?;
        w.write_all(&self.t0.to_le_bytes())?;
        w.write_all(&self.max_coupling_hz.to_le_bytes())?;
        w.write_all(&(self.oscillators as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for x in &self.samples {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != TRAJECTORY_MAGIC {
            return Err(Error::Format("not a trajectory file".into()));
        }
        let mut f = [0u8; 8];
        let mut read_f64 = |r: &mut dyn Read| -> Result<f64> {
            r.read_exact(&mut f).map_err(io)?;
            Ok(f64::from_le_bytes(f))
        };
        let sample_dt = read_f64(&mut r)?;
        let t0 = read_f64(&mut r)?;
        let max_coupling_hz = read_f64(&mut r)?;
        let mut u32b = [0u8; 4];
        r.read_exact(&mut u32b).map_err(io)?;
        let oscillators = u32::from_le_bytes(u32b) as usize;
        let mut u64b = [0u8; 8];
        r.read_exact(&mut u64b).map_err(io)?;
        let count = u64::from_le_bytes(u64b) as usize;
        let total = count
            .checked_mul(oscillators)
            .ok_or_else(|| Error::Format("sample count overflows".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io)?;
        if bytes.len() != total * 8 {
            return Err(Error::Format(format!(
                "expected {} sample bytes, found {}",
                total * 8,
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self {
            sample_dt,
            t0,
            max_coupling_hz,
            oscillators,
            samples,
        })
    }
}

/// Integrates from `t = 0` to `duration` with the default record stride.
pub fn integrate(
    bank: &OscillatorBank,
    schedule: &DriveSchedule,
    initial: &InitialMotion,
    dt: f64,
    duration: f64,
    damping: bool,
) -> Result<Trajectory> {
    integrate_with(
        bank,
        schedule,
        initial,
        &IntegrateOptions {
            dt,
            t_start: 0.0,
            t_end: duration,
            damping,
            record_stride: DEFAULT_RECORD_STRIDE,
        },
    )
}

/// Fixed-step classical Runge-Kutta integration of the coupled beams.
pub fn integrate_with(
    bank: &OscillatorBank,
    schedule: &DriveSchedule,
    initial: &InitialMotion,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let n = bank.len();
    if schedule.drives.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            actual: schedule.drives.len(),
        });
    }
    if initial.displacements.len() != n || initial.velocities.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: initial.displacements.len().min(initial.velocities.len()),
        });
    }
    let max_dt = 1.0 / (MIN_STEPS_PER_PERIOD * bank.max_frequency_hz());
    if !(opts.dt > 0.0) || opts.dt > max_dt {
        return Err(Error::StepTooCoarse { dt: opts.dt, max: max_dt });
    }
    if !(opts.t_end > opts.t_start && opts.t_start.is_finite() && opts.t_end.is_finite()) {
        return Err(invalid(
            "duration",
            format!("integration interval [{}, {}] is empty", opts.t_start, opts.t_end),
        ));
    }
    if opts.record_stride == 0 {
        return Err(invalid("record_stride", "must be at least 1"));
    }

    let steps = ((opts.t_end - opts.t_start) / opts.dt).round() as usize;
    let stride = opts.record_stride;
    if (steps / stride + 1).saturating_mul(n) > MAX_STORED_VALUES {
        return Err(invalid(
            "duration",
            format!("{steps} steps at stride {stride} would store more than {MAX_STORED_VALUES} values"),
        ));
    }
    let osc = bank.oscillators();
    let k_over_m: Vec<f64> = osc.iter().map(|o| o.omega * o.omega).collect();
    let gamma: Vec<f64> = osc
        .iter()
        .map(|o| if opts.damping { o.gamma() } else { 0.0 })
        .collect();
    let inv_m: Vec<f64> = osc.iter().map(|o| 1.0 / o.mass).collect();
    let drives = &schedule.drives;

    let accel = |z: &[f64], v: &[f64], l: &[f64], out: &mut [f64]| {
        for j in 0..n {
            let mut f = 0.0;
            if j + 1 < n {
                f += l[j] * (z[j + 1] - z[j]);
            }
            if j > 0 {
                f += l[j - 1] * (z[j - 1] - z[j]);
            }
            out[j] = -k_over_m[j] * z[j] - gamma[j] * v[j] + f * inv_m[j];
        }
    };
    let stiffness = |t: f64, out: &mut [f64]| {
        for (o, d) in out.iter_mut().zip(drives) {
            *o = d.stiffness_at(t);
        }
    };

    let mut z = initial.displacements.clone();
    let mut v = initial.velocities.clone();
    let mut samples = Vec::with_capacity((steps / stride + 1) * n);
    samples.extend_from_slice(&z);

    let bonds = n - 1;
    let (mut l0, mut lh, mut l1) = (vec![0.0; bonds], vec![0.0; bonds], vec![0.0; bonds]);
    let (mut a1, mut a2, mut a3, mut a4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut zt, mut vt) = (vec![0.0; n], vec![0.0; n]);
    let (mut v2, mut v3, mut v4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let dt = opts.dt;
    stiffness(opts.t_start, &mut l0);

    for step in 0..steps {
        let t = opts.t_start + step as f64 * dt;
        stiffness(t + 0.5 * dt, &mut lh);
        stiffness(opts.t_start + (step + 1) as f64 * dt, &mut l1);

        accel(&z, &v, &l0, &mut a1);
        for j in 0..n {
            zt[j] = z[j] + 0.5 * dt * v[j];
            v2[j] = v[j] + 0.5 * dt * a1[j];
            vt[j] = v2[j];
        }
        accel(&zt, &vt, &lh, &mut a2);
        for j in 0..n {
            zt[j] = z[j] + 0.5 * dt * v2[j];
            v3[j] = v[j] + 0.5 * dt * a2[j];
            vt[j] = v3[j];
        }
        accel(&zt, &vt, &lh, &mut a3);
        for j in 0..n {
            zt[j] = z[j] + dt * v3[j];
            v4[j] = v[j] + dt * a3[j];
            vt[j] = v4[j];
        }
        accel(&zt, &vt, &l1, &mut a4);
        for j in 0..n {
            z[j] += dt / 6.0 * (v[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j]);
            v[j] += dt / 6.0 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j]);
        }
        std::mem::swap(&mut l0, &mut l1);
        if (step + 1) % stride == 0 {
            samples.extend_from_slice(&z);
        }
    }

    Ok(Trajectory {
        sample_dt: dt * stride as f64,
        t0: opts.t_start,
        max_coupling_hz: schedule.max_coupling_hz(bank),
        oscillators: n,
        samples,
    })
}

/// Total mechanical energy `Σ ½ m ż² + ½ k z²` (J).
pub fn energy(bank: &OscillatorBank, z: &[f64], v: &[f64]) -> f64 {
    bank.oscillators
        .iter()
        .zip(z.iter().zip(v))
        .map(|(o, (z, v))| 0.5 * o.mass * v * v + 0.5 * o.stiffness() * z * z)
        .sum()
}

/// Slowly varying complex envelopes, one row per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrace {
    pub times: Vec<f64>,
    pub envelopes: Vec<Vec<Complex64>>,
    pub normalized: bool,
    /// Per-sample norm removed by [`normalize_instant`] (1 before).
    pub norms: Vec<f64>,
}

impl EnvelopeTrace {
    pub fn oscillators(&self) -> usize {
        self.envelopes.first().map_or(0, Vec::len)
    }

    /// Header `t_s, abs_psi_1, arg_psi_1_rad, …, L`.
    pub fn to_delimited(&self, sep: char) -> String {
        let sep = sep.to_string();
        let mut header = vec!["t_s".to_string()];
        for j in 1..=self.oscillators() {
            header.push(format!("abs_psi_{j}"));
            header.push(format!("arg_psi_{j}_rad"));
        }
        header.push("L".to_string());
        let mut out = header.join(&sep);
        out.push('\n');
        for (k, row) in self.envelopes.iter().enumerate() {
            let mut cells = vec![self.times[k].to_string()];
            for z in row {
                cells.push(z.norm().to_string());
                cells.push(z.arg().to_string());
            }
            cells.push(self.norms[k].to_string());
            out.push_str(&cells.join(&sep));
            out.push('\n');
        }
        out
    }
}

pub const DEFAULT_WINDOW_CYCLES: usize = 50;
pub const MIN_WINDOW_CYCLES: usize = 10;

/// Envelopes at the stored sample nearest each requested time:
/// `ψ_j = (2/A_j) · mean(z_j e^{−iω_j t})` over `window_cycles` carrier
/// periods centred on the sample.
pub fn demodulate_at(
    traj: &Trajectory,
    bank: &OscillatorBank,
    window_cycles: usize,
    times: &[f64],
) -> Result<EnvelopeTrace> {
    if traj.oscillators != bank.len() {
        return Err(Error::DimensionMismatch {
            expected: bank.len(),
            actual: traj.oscillators,
        });
    }
    if window_cycles < MIN_WINDOW_CYCLES {
        return Err(invalid(
            "window_cycles",
            format!("{window_cycles} is below the minimum of {MIN_WINDOW_CYCLES}"),
        ));
    }
    if times.is_empty() {
        return Err(invalid("times", "no sample times requested"));
    }
    let longest = window_cycles as f64 / bank.min_frequency_hz();
    if traj.max_coupling_hz > 0.0 {
        let limit = 0.1 / traj.max_coupling_hz;
        if longest > limit {
            return Err(Error::WindowTooLong { window: longest, limit });
        }
    }
    let halves: Vec<usize> = bank
        .oscillators()
        .iter()
        .map(|o| (0.5 * window_cycles as f64 / o.frequency_hz() / traj.sample_dt).round() as usize)
        .collect();
    let len = traj.len();
    let mut envelopes = Vec::with_capacity(times.len());
    for &t in times {
        let pos = (t - traj.t0) / traj.sample_dt;
        let centre = pos.round();
        if !(centre >= 0.0 && (centre as usize) < len) {
            return Err(invalid("times", format!("{t} s is outside the trajectory")));
        }
        let centre = centre as usize;
        let row = bank
            .oscillators()
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let h = halves[j];
                if centre < h || centre + h >= len {
                    return Err(invalid(
                        "times",
                        format!("{t} s is closer than half a filter window to the trajectory ends"),
                    ));
                }
                let sum: Complex64 = (centre - h..=centre + h)
                    .map(|i| traj.displacement(i, j) * Complex64::from_polar(1.0, -o.omega * traj.time(i)))
                    .sum();
                Ok(sum * (2.0 / (o.amplitude_scale() * (2 * h + 1) as f64)))
            })
            .collect::<Result<Vec<_>>>()?;
        envelopes.push(row);
    }
    Ok(EnvelopeTrace {
        times: times.to_vec(),
        envelopes,
        normalized: false,
        norms: vec![1.0; times.len()],
    })
}

/// Envelopes on every `decimation`-th stored sample whose filter window fits
/// inside the trajectory.
pub fn demodulate(
    traj: &Trajectory,
    bank: &OscillatorBank,
    window_cycles: usize,
    decimation: usize,
) -> Result<EnvelopeTrace> {
    if decimation == 0 {
        return Err(invalid("decimation", "must be at least 1"));
    }
    let h = (0.5 * window_cycles as f64 / bank.min_frequency_hz() / traj.sample_dt).round() as usize + 1;
    if traj.len() <= 2 * h {
        return Err(invalid("trajectory", "shorter than one filter window"));
    }
    let times: Vec<f64> = (h..traj.len() - h).step_by(decimation).map(|i| traj.time(i)).collect();
    demodulate_at(traj, bank, window_cycles, &times)
}

/// Divides every sample by its 2-norm across oscillators.
pub fn normalize_instant(trace: &EnvelopeTrace) -> Result<EnvelopeTrace> {
    let mut envelopes = Vec::with_capacity(trace.envelopes.len());
    let mut norms = Vec::with_capacity(trace.envelopes.len());
    for (k, row) in trace.envelopes.iter().enumerate() {
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroSample { index: k });
        }
        envelopes.push(row.iter().map(|z| z / norm).collect());
        norms.push(trace.norms[k] * norm);
    }
    Ok(EnvelopeTrace {
        times: trace.times.clone(),
        envelopes,
        normalized: true,
        norms,
    })
}

/// Tight-binding states sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TbRun {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

pub fn tb_run(chain: &HoppingChain, psi0: &StateVector, times: &[f64]) -> Result<TbRun> {
    let eig = eigendecompose(chain)?;
    Ok(TbRun {
        times: times.to_vec(),
        states: evolve_series(&eig, psi0, times)?,
    })
}

/// Edge amplitudes below this are excluded from phase comparisons.
pub const PHASE_AMPLITUDE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    /// Largest `| |ψ_j^mech| − |ψ_j^tb| |` over sites and samples.
    pub linf_amplitude: f64,
    pub rms_amplitude: f64,
    /// Edge-site phase difference, reduced modulo π.
    pub linf_edge_phase: f64,
    pub rms_edge_phase: f64,
    /// Samples where both edge amplitudes exceed [`PHASE_AMPLITUDE_FLOOR`].
    pub phase_samples: usize,
}

pub fn mech_vs_tb(trace: &EnvelopeTrace, tb: &TbRun) -> Result<ComparisonMetrics> {
    if !trace.normalized {
        return Err(invalid("trace", "must be normalized"));
    }
    if trace.times.len() != tb.times.len() {
        return Err(Error::DimensionMismatch {
            expected: tb.times.len(),
            actual: trace.times.len(),
        });
    }
    let sites = tb.states.first().map_or(0, StateVector::len);
    if trace.oscillators() != sites {
        return Err(Error::DimensionMismatch {
            expected: sites,
            actual: trace.oscillators(),
        });
    }
    for (a, b) in trace.times.iter().zip(&tb.times) {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(invalid("times", format!("sample grids differ at {a} s vs {b} s")));
        }
    }
    let (mut linf, mut sq, mut count) = (0.0f64, 0.0, 0usize);
    let (mut plinf, mut psq, mut pcount) = (0.0f64, 0.0, 0usize);
    for (row, state) in trace.envelopes.iter().zip(&tb.states) {
        for (m, q) in row.iter().zip(state.amplitudes()) {
            let d = (m.norm() - q.norm()).abs();
            linf = linf.max(d);
            sq += d * d;
            count += 1;
        }
        let (m, q) = (row[0], state.amplitudes()[0]);
        if m.norm() > PHASE_AMPLITUDE_FLOOR && q.norm() > PHASE_AMPLITUDE_FLOOR {
            let d = wrap_angle(2.0 * (m.arg() - q.arg())).abs() / 2.0;
            plinf = plinf.max(d);
            psq += d * d;
            pcount += 1;
        }
    }
    Ok(ComparisonMetrics {
        linf_amplitude: linf,
        rms_amplitude: (sq / count.max(1) as f64).sqrt(),
        linf_edge_phase: plinf,
        rms_edge_phase: if pcount > 0 { (psq / pcount as f64).sqrt() } else { 0.0 },
        phase_samples: pcount,
    })
}

/// Linear coupling-versus-voltage model of one electrode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    /// Capacitance curvature `∂²C/∂z²` (F/m²), when known.
    pub curvature: Option<f64>,
    /// DC bias (V).
    pub v_dc: f64,
    /// Coupling per AC volt (Hz/V).
    pub slope: f64,
}

impl CalibrationModel {
    pub fn new(slope: f64, v_dc: f64) -> Result<Self> {
        if !(slope >= 0.0 && slope.is_finite()) {
            return Err(invalid("slope", format!("{slope} must be non-negative")));
        }
        if !(v_dc > 0.0 && v_dc.is_finite()) {
            return Err(invalid("v_dc", format!("{v_dc} must be positive")));
        }
        Ok(Self {
            curvature: None,
            v_dc,
            slope,
        })
    }

    /// The electrostatic pump `η = (∂²C/∂z²) V_DC V_AC` on `bond`, expressed as
    /// a coupling slope.
    pub fn from_curvature(curvature: f64, v_dc: f64, bank: &OscillatorBank, bond: usize) -> Result<Self> {
        let slope = coupling_from_eta(curvature * v_dc, bank, bond)?;
        Ok(Self {
            curvature: Some(curvature),
            ..Self::new(slope, v_dc)?
        })
    }

    /// Pump amplitude (N/m) at `v_ac`, when the curvature is known.
    pub fn eta(&self, v_ac: f64) -> Option<f64> {
        self.curvature.map(|c| c * self.v_dc * v_ac)
    }
}

/// `J = slope · V_AC`.
pub fn coupling_from_voltage(cal: &CalibrationModel, v_ac: f64) -> Result<f64> {
    if !(v_ac >= 0.0 && v_ac.is_finite()) {
        return Err(invalid("v_ac", format!("{v_ac} must be non-negative")));
    }
    if v_ac > 0.1 * cal.v_dc {
        log::warn!("V_AC = {v_ac} V is not small against V_DC = {} V", cal.v_dc);
    }
    Ok(cal.slope * v_ac)
}

/// Least-squares slope through the origin of `couplings` against `voltages`.
pub fn fit_slope(voltages: &[f64], couplings: &[f64]) -> Result<f64> {
    if voltages.len() != couplings.len() || voltages.is_empty() {
        return Err(invalid("voltages", "needs equally many voltages and couplings"));
    }
    let vv: f64 = voltages.iter().map(|v| v * v).sum();
    if !(vv > 0.0) {
        return Err(invalid("voltages", "all zero"));
    }
    Ok(voltages.iter().zip(couplings).map(|(v, j)| v * j).sum::<f64>() / vv)
}

/// Which half of the measurement a voltage column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Circuit {
    Odd,
    Even,
}

/// Per-bond calibration fitted through the origin to the target couplings
/// of the given voltage presets.
pub fn calibrate_bonds(presets: &[&VoltagePreset], circuit: Circuit) -> Result<Vec<CalibrationModel>> {
    if presets.is_empty() {
        return Err(invalid("presets", "needs at least one voltage preset"));
    }
    (0..7)
        .map(|bond| {
            let volts: Vec<f64> = presets
                .iter()
                .map(|p| match circuit {
                    Circuit::Odd => p.odd_circuit[bond],
                    Circuit::Even => p.even_circuit[bond],
                })
                .collect();
            let hz: Vec<f64> = presets.iter().map(|p| p.target_hz[bond]).collect();
            CalibrationModel::new(fit_slope(&volts, &hz)?, BIAS_DC_VOLTS)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransductionParams {
    /// Mode shape factor.
    pub xi: f64,
    /// Magnetic field (T).
    pub field: f64,
    /// Beam length (m).
    pub beam_length: f64,
}

pub const DEFAULT_SHAPE_FACTOR: f64 = 0.83;

impl TransductionParams {
    pub fn new(field: f64, beam_length: f64) -> Result<Self> {
        let p = Self {
            xi: DEFAULT_SHAPE_FACTOR,
            field,
            beam_length,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(invalid("xi", format!("{} must lie in (0, 1]", self.xi)));
        }
        for (name, x) in [("field", self.field), ("beam_length", self.beam_length)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(name, format!("{x} must be positive")));
            }
        }
        Ok(())
    }
}

/// Magnetomotive readout: `|z| = |V| / (ξ B L ω)`.
pub fn displacement_from_voltage(v: f64, params: &TransductionParams, omega: f64) -> Result<f64> {
    params.validate()?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("omega", format!("{omega} must be positive")));
    }
    Ok(v.abs() / (params.xi * params.field * params.beam_length * omega))
}

/// A full mechanical replica of a tight-binding quench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaConfig {
    pub bank: OscillatorBank,
    /// Coupling per bond (Hz).
    pub couplings: Vec<f64>,
    /// Excited oscillator before the quench (1-based).
    pub initial_site: usize,
    /// Compared window `[0, window]` (s).
    pub window: f64,
    /// Envelope output step (s).
    pub output_step: f64,
    pub dt: Option<f64>,
    pub record_stride: usize,
    pub window_cycles: usize,
    pub damping: bool,
}

impl ReplicaConfig {
    /// Beams 1-8 driven as the 8-site 60/20 Hz trivial chain for 40 ms.
    pub fn quench_i() -> Self {
        Self {
            bank: OscillatorBank::beams_8(),
            couplings: vec![60.0, 20.0, 60.0, 20.0, 60.0, 20.0, 60.0],
            initial_site: 1,
            window: 0.04,
            output_step: 2e-5,
            dt: None,
            record_stride: DEFAULT_RECORD_STRIDE,
            window_cycles: DEFAULT_WINDOW_CYCLES,
            damping: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRun {
    pub trajectory: Trajectory,
    pub envelopes: EnvelopeTrace,
    pub tb: TbRun,
    pub metrics: ComparisonMetrics,
}

/// Rings the initial oscillator from before `t = 0`, switches every pump on
/// at `t = 0`, integrates past the window by half a filter length,
/// demodulates on the output grid and compares with the tight-binding run.
pub fn run_replica(config: &ReplicaConfig) -> Result<ReplicaRun> {
    let bank = &config.bank;
    if !(config.window > 0.0 && config.window.is_finite()) {
        return Err(invalid("window", format!("{} must be positive", config.window)));
    }
    if !(config.output_step > 0.0 && config.output_step <= config.window) {
        return Err(invalid("output_step", format!("{} must lie in (0, window]", config.output_step)));
    }
    let chain = HoppingChain::new(config.couplings.clone())?;
    let schedule = DriveSchedule::for_chain(bank, &chain, 0.0, f64::INFINITY)?;
    let pad = 0.6 * config.window_cycles as f64 / bank.min_frequency_hz() + 1e-6;
    let initial = InitialMotion::ringing(bank, config.initial_site, -pad)?;
    let traj = integrate_with(
        bank,
        &schedule,
        &initial,
        &IntegrateOptions {
            dt: config.dt.unwrap_or_else(|| default_dt(bank)),
            t_start: -pad,
            t_end: config.window + pad,
            damping: config.damping,
            record_stride: config.record_stride,
        },
    )?;
    let times = crate::quench::uniform_grid(config.window, config.output_step)?;
    let envelopes = normalize_instant(&demodulate_at(&traj, bank, config.window_cycles, &times)?)?;
    let psi0 = StateVector::basis(bank.len(), config.initial_site)?;
    let tb = tb_run(&chain, &psi0, &times)?;
    let metrics = mech_vs_tb(&envelopes, &tb)?;
    Ok(ReplicaRun {
        trajectory: traj,
        envelopes,
        tb,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{TOPOLOGICAL_VOLTAGES, TRIVIAL_VOLTAGES};
    use crate::quench::{pgp_from_phases, uniform_grid};

    fn single(q: f64) -> OscillatorBank {
        OscillatorBank::from_modes(&[BeamMode {
            frequency_khz: 907.184,
            quality: q,
        }])
        .unwrap()
    }

    fn undriven(bank: &OscillatorBank) -> DriveSchedule {
        let drives = (1..bank.len())
            .map(|_| Drive {
                eta: 0.0,
                omega_p: 0.0,
                on: 0.0,
                off: f64::INFINITY,
            })
            .collect();
        DriveSchedule::new(bank, drives).unwrap()
    }

    #[test]
    fn bank_quantities() {
        let bank = OscillatorBank::beams_8();
        assert_eq!(bank.len(), 8);
        for o in bank.oscillators() {
            assert!((o.stiffness() - o.mass * o.omega * o.omega).abs() <= 1e-12 * o.stiffness());
            assert!((o.amplitude_scale() - (1.0 / (2.0 * o.mass * o.omega)).sqrt()).abs() < 1e-18);
        }
        assert!((bank.oscillators()[0].gamma() - 2.0 * PI * 907_184.0 / 106_300.0).abs() < 1e-9);
        assert!(OscillatorBank::from_modes(&[BeamMode {
            frequency_khz: 0.0,
            quality: 1.0
        }])
        .is_err());
        assert!(bank.subset(0, 2).is_err());
        assert_eq!(bank.subset(2, 3).unwrap().len(), 2);
    }

    #[test]
    fn eta_round_trip() {
        let bank = OscillatorBank::beams_8();
        assert_eq!(eta_for_coupling(0.0, &bank, 0).unwrap(), 0.0);
        for bond in 0..7 {
            for j in [0.5, 20.0, 60.0, 1234.5] {
                let eta = eta_for_coupling(j, &bank, bond).unwrap();
                let back = coupling_from_eta(eta, &bank, bond).unwrap();
                assert!((back - j).abs() <= 1e-12 * j);
            }
        }
        assert!(eta_for_coupling(-1.0, &bank, 0).is_err());
        assert!(eta_for_coupling(1.0, &bank, 7).is_err());
    }

    #[test]
    fn schedule_derives_pump_frequencies() {
        let bank = OscillatorBank::beams_8();
        let chain = HoppingChain::new(vec![60.0, 20.0, 60.0, 20.0, 60.0, 20.0, 60.0]).unwrap();
        let s = DriveSchedule::for_chain(&bank, &chain, 0.0, 1.0).unwrap();
        let o = bank.oscillators();
        for (j, d) in s.drives().iter().enumerate() {
            let expected = o[j].omega - o[j + 1].omega;
            assert!((d.omega_p - expected).abs() <= 1e-9 * expected.abs());
        }
        assert!((s.drives()[0].omega_p / (2.0 * PI) - 1204.0).abs() < 1e-6);
        assert!((s.max_coupling_hz(&bank) - 60.0).abs() < 1e-9);
        let short = HoppingChain::new(vec![60.0]).unwrap();
        assert!(DriveSchedule::for_chain(&bank, &short, 0.0, 1.0).is_err());
    }

    #[test]
    fn rejects_coarse_step_and_empty_window() {
        let bank = single(1e5);
        let init = InitialMotion::ringing(&bank, 1, 0.0).unwrap();
        let max = 1.0 / (50.0 * bank.max_frequency_hz());
        assert!(matches!(
            integrate(&bank, &undriven(&bank), &init, 1.01 * max, 1e-4, false),
            Err(Error::StepTooCoarse { .. })
        ));
        assert!(integrate(&bank, &undriven(&bank), &init, default_dt(&bank), 0.0, false).is_err());
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let bank = single(1e5);
        let o = bank.oscillators()[0];
        let z0 = 1e-6;
        let init = InitialMotion {
            displacements: vec![z0],
            velocities: vec![0.0],
        };
        let traj = integrate_with(
            &bank,
            &undriven(&bank),
            &init,
            &IntegrateOptions {
                dt: default_dt(&bank),
                t_start: 0.0,
                t_end: 1e-3,
                damping: false,
                record_stride: 1,
            },
        )
        .unwrap();
        let e0 = energy(&bank, &[z0], &[0.0]);
        let last = traj.len() - 1;
        let exact = z0 * (o.omega * traj.time(last)).cos();
        // RK4 phase error is about (ω dt)^5 / 120 per step.
        assert!((traj.displacement(last, 0) - exact).abs() < 1e-4 * z0);
        let e_end = end_energy(&bank, &traj, default_dt(&bank));
        assert!(((e_end - e0) / e0).abs() < 1e-6);
    }

    /// Energy at the second-to-last sample of a stride-1 free run, with the
    /// velocity recovered through the exact free-oscillator map.
    fn end_energy(bank: &OscillatorBank, traj: &Trajectory, dt: f64) -> f64 {
        let n = traj.len();
        bank.oscillators()
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let (z0, z1) = (traj.displacement(n - 2, j), traj.displacement(n - 1, j));
                let (s, c) = (o.omega * dt).sin_cos();
                let v0 = o.omega * (z1 - z0 * c) / s;
                0.5 * o.mass * v0 * v0 + 0.5 * o.stiffness() * z0 * z0
            })
            .sum()
    }

    #[test]
    fn bank_energy_drift_over_forty_ms() {
        let bank = OscillatorBank::beams_8();
        let init = InitialMotion {
            displacements: (0..8).map(|j| 1e-6 * (j as f64 + 1.0)).collect(),
            velocities: (0..8).map(|j| if j % 2 == 0 { 1.0 } else { -0.5 }).collect(),
        };
        let e0 = energy(&bank, &init.displacements, &init.velocities);
        let dt = default_dt(&bank);
        let traj = integrate_with(
            &bank,
            &undriven(&bank),
            &init,
            &IntegrateOptions {
                dt,
                t_start: 0.0,
                t_end: 0.04,
                damping: false,
                record_stride: 1,
            },
        )
        .unwrap();
        let e_end = end_energy(&bank, &traj, dt);
        assert!(((e_end - e0) / e0).abs() < 1e-4, "drift {}", (e_end - e0) / e0);
    }

    #[test]
    fn damped_envelope_decay() {
        let bank = single(106_300.0);
        let o = bank.oscillators()[0];
        let init = InitialMotion::ringing(&bank, 1, 0.0).unwrap();
        let traj = integrate(&bank, &undriven(&bank), &init, default_dt(&bank), 0.02, true).unwrap();
        let times = uniform_grid(0.019, 1e-3).unwrap();
        let times = &times[1..];
        let env = demodulate_at(&traj, &bank, DEFAULT_WINDOW_CYCLES, times).unwrap();
        for (t, row) in times.iter().zip(&env.envelopes) {
            let expected = (-o.gamma() * t / 2.0).exp();
            assert!((row[0].norm() / expected - 1.0).abs() < 0.01, "t={t}");
        }
    }

    fn synthetic(bank: &OscillatorBank, f: impl Fn(usize, f64) -> f64, duration: f64) -> Trajectory {
        let sample_dt = 1.0 / (25.0 * bank.max_frequency_hz());
        let count = (duration / sample_dt) as usize;
        let mut samples = Vec::with_capacity(count * bank.len());
        for i in 0..count {
            for j in 0..bank.len() {
                samples.push(f(j, i as f64 * sample_dt));
            }
        }
        Trajectory {
            sample_dt,
            t0: 0.0,
            max_coupling_hz: 60.0,
            oscillators: bank.len(),
            samples,
        }
    }

    #[test]
    fn pure_tones_demodulate_to_constant_envelopes() {
        let bank = single(1e5);
        let o = bank.oscillators()[0];
        let a = 3.0 * o.amplitude_scale();
        let times = [2e-4, 5e-4, 8e-4];
        let t1 = synthetic(&bank, |_, t| a * (o.omega * t).cos(), 1e-3);
        for z in demodulate_at(&t1, &bank, 50, &times).unwrap().envelopes {
            assert!((z[0].norm() - 3.0).abs() < 0.01);
            assert!(z[0].arg().abs() < 0.01);
        }
        let t2 = synthetic(&bank, |_, t| a * (o.omega * t + PI).cos(), 1e-3);
        for z in demodulate_at(&t2, &bank, 50, &times).unwrap().envelopes {
            assert!((z[0].arg().abs() - PI).abs() < 0.01);
        }
        let full = demodulate(&t1, &bank, 50, 100).unwrap();
        assert!(full.envelopes.len() > 5);
        assert!(demodulate_at(&t1, &bank, 5, &times).is_err());
        assert!(demodulate_at(&t1, &bank, 50, &[0.0]).is_err());
    }

    #[test]
    fn demodulation_is_linear() {
        let bank = OscillatorBank::beams_8().subset(1, 2).unwrap();
        let w: Vec<f64> = bank.oscillators().iter().map(|o| o.omega).collect();
        let z1 = |j: usize, t: f64| 1e-4 * (w[j] * t + 0.3).cos() * (1.0 + 200.0 * t);
        let z2 = |j: usize, t: f64| 2e-4 * (w[j] * t - 1.1).sin();
        let (a, b) = (0.7, -2.5);
        let times = [3e-4, 6e-4];
        let d1 = demodulate_at(&synthetic(&bank, z1, 1e-3), &bank, 50, &times).unwrap();
        let d2 = demodulate_at(&synthetic(&bank, z2, 1e-3), &bank, 50, &times).unwrap();
        let mix = synthetic(&bank, |j, t| a * z1(j, t) + b * z2(j, t), 1e-3);
        let d = demodulate_at(&mix, &bank, 50, &times).unwrap();
        for k in 0..times.len() {
            for j in 0..2 {
                let expected = d1.envelopes[k][j] * a + d2.envelopes[k][j] * b;
                assert!((d.envelopes[k][j] - expected).norm() < 1e-9 * expected.norm().max(1.0));
            }
        }
    }

    #[test]
    fn long_window_is_rejected() {
        let bank = single(1e5);
        let mut traj = synthetic(&bank, |_, t| t, 2e-3);
        traj.max_coupling_hz = 20_000.0;
        assert!(matches!(
            demodulate_at(&traj, &bank, 50, &[1e-3]),
            Err(Error::WindowTooLong { .. })
        ));
    }

    #[test]
    fn normalization() {
        let trace = EnvelopeTrace {
            times: vec![0.0, 1.0],
            envelopes: vec![
                vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)],
                vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            ],
            normalized: false,
            norms: vec![1.0, 1.0],
        };
        let n = normalize_instant(&trace).unwrap();
        for row in &n.envelopes {
            let s: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(n.norms, vec![5.0, 1.0]);
        let again = normalize_instant(&n).unwrap();
        for (a, b) in again.envelopes.iter().flatten().zip(n.envelopes.iter().flatten()) {
            assert!((a - b).norm() < 1e-15);
        }
        let zero = EnvelopeTrace {
            envelopes: vec![vec![Complex64::new(0.0, 0.0); 2]],
            times: vec![0.0],
            normalized: false,
            norms: vec![1.0],
        };
        assert!(matches!(normalize_instant(&zero), Err(Error::ZeroSample { index: 0 })));
        let table = n.to_delimited(',');
        assert!(table.starts_with("t_s,abs_psi_1,arg_psi_1_rad,abs_psi_2,arg_psi_2_rad,L\n"));
    }

    #[test]
    fn identical_inputs_compare_to_zero() {
        let chain = HoppingChain::new(vec![60.0, 20.0, 60.0]).unwrap();
        let times = uniform_grid(0.01, 1e-3).unwrap();
        let tb = tb_run(&chain, &StateVector::basis(4, 1).unwrap(), &times).unwrap();
        let trace = EnvelopeTrace {
            times: times.clone(),
            envelopes: tb.states.iter().map(|s| s.amplitudes().to_vec()).collect(),
            normalized: true,
            norms: vec![1.0; times.len()],
        };
        let m = mech_vs_tb(&trace, &tb).unwrap();
        assert_eq!(m.linf_amplitude, 0.0);
        assert_eq!(m.rms_amplitude, 0.0);
        assert_eq!(m.linf_edge_phase, 0.0);
        let mut short = trace.clone();
        short.envelopes.iter_mut().for_each(|r| r.truncate(3));
        assert!(mech_vs_tb(&short, &tb).is_err());
    }

    fn dimer_config(j: f64, window: f64) -> ReplicaConfig {
        ReplicaConfig {
            bank: OscillatorBank::beams_8().subset(2, 3).unwrap(),
            couplings: vec![j],
            window,
            output_step: window / 200.0,
            ..ReplicaConfig::quench_i()
        }
    }

    #[test]
    fn dimer_rabi_oscillation() {
        let run = run_replica(&dimer_config(60.0, 0.02)).unwrap();
        for (t, row) in run.envelopes.times.iter().zip(&run.envelopes.envelopes) {
            let expected = (RATE_PER_HZ * 60.0 * t).cos().powi(2);
            assert!((row[0].norm_sqr() - expected).abs() < 0.02, "t={t}");
            assert!((row[0].norm() - expected.sqrt()).abs() < 0.02, "t={t}");
        }
    }

    #[test]
    fn rwa_error_shrinks_with_coupling() {
        // Beams 1 and 2 have the smallest pump frequency; compare over one
        // full exchange so every run covers the same dimensionless time.
        let errors: Vec<f64> = [60.0, 20.0, 5.0]
            .iter()
            .map(|&j| {
                let config = ReplicaConfig {
                    bank: OscillatorBank::beams_8().subset(1, 2).unwrap(),
                    ..dimer_config(j, 1.0 / j)
                };
                run_replica(&config).unwrap().metrics.linf_amplitude
            })
            .collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    }

    #[test]
    fn uniform_damping_cancels_after_normalization() {
        let base = ReplicaConfig {
            window: 0.01,
            output_step: 1e-4,
            ..ReplicaConfig::quench_i()
        };
        let damped = ReplicaConfig {
            bank: base.bank.with_uniform_damping(60.0).unwrap(),
            damping: true,
            ..base.clone()
        };
        let a = run_replica(&base).unwrap().envelopes;
        let b = run_replica(&damped).unwrap().envelopes;
        assert!(b.norms.last().unwrap() < &0.8);
        for (x, y) in a.envelopes.iter().flatten().zip(b.envelopes.iter().flatten()) {
            assert!((x - y).norm() < 1e-3);
        }
    }

    #[test]
    fn quench_i_replica_edge_phase_jump() {
        let run = run_replica(&ReplicaConfig {
            window: 0.012,
            output_step: 5e-5,
            ..ReplicaConfig::quench_i()
        })
        .unwrap();
        assert!(run.metrics.linf_amplitude <= 0.05, "{:?}", run.metrics);
        let phases: Vec<f64> = run.envelopes.envelopes.iter().map(|r| r[0].arg()).collect();
        let pgp = pgp_from_phases(&phases, 0.0);
        let jump = (1..pgp.len()).find(|&k| pgp[k] != pgp[k - 1]).unwrap();
        let t = run.envelopes.times[jump];
        assert!((t - 8.45e-3).abs() < 2e-4, "jump at {t}");
    }

    #[test]
    fn slope_fit_recovers_configured_slope() {
        let bank = OscillatorBank::beams_8().subset(2, 3).unwrap();
        // About 250 Hz per volt.
        let curvature = eta_for_coupling(250.0, &bank, 0).unwrap() / BIAS_DC_VOLTS;
        let cal = CalibrationModel::from_curvature(curvature, BIAS_DC_VOLTS, &bank, 0).unwrap();
        let voltages = [0.08, 0.16, 0.24];
        let measured: Vec<f64> = voltages
            .iter()
            .map(|&v| {
                let j = coupling_from_eta(cal.eta(v).unwrap(), &bank, 0).unwrap();
                // First sign change of Re ψ₁ = cos(π J t) sits at 1/(2J).
                let window = 0.8 / j;
                let run = run_replica(&ReplicaConfig {
                    bank: bank.clone(),
                    couplings: vec![j],
                    window,
                    output_step: window / 400.0,
                    ..ReplicaConfig::quench_i()
                })
                .unwrap();
                let re: Vec<f64> = run.envelopes.envelopes.iter().map(|r| r[0].re).collect();
                let k = (1..re.len()).find(|&k| re[k] <= 0.0).unwrap();
                let (t0, t1) = (run.envelopes.times[k - 1], run.envelopes.times[k]);
                let t = t0 + (t1 - t0) * re[k - 1] / (re[k - 1] - re[k]);
                1.0 / (2.0 * t)
            })
            .collect();
        let slope = fit_slope(&voltages, &measured).unwrap();
        assert!((slope / cal.slope - 1.0).abs() < 0.01, "{slope} vs {}", cal.slope);
    }

    #[test]
    fn voltage_calibration() {
        let cal = CalibrationModel::new(250.0, BIAS_DC_VOLTS).unwrap();
        assert_eq!(coupling_from_voltage(&cal, 0.0).unwrap(), 0.0);
        let a = coupling_from_voltage(&cal, 0.1).unwrap();
        let b = coupling_from_voltage(&cal, 0.2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!(coupling_from_voltage(&cal, -0.1).is_err());
        let bonds = calibrate_bonds(&[&TOPOLOGICAL_VOLTAGES, &TRIVIAL_VOLTAGES], Circuit::Odd).unwrap();
        assert_eq!(bonds.len(), 7);
        for (j, c) in bonds.iter().enumerate() {
            for p in [&TOPOLOGICAL_VOLTAGES, &TRIVIAL_VOLTAGES] {
                let predicted = coupling_from_voltage(c, p.odd_circuit[j]).unwrap();
                assert!((predicted / p.target_hz[j] - 1.0).abs() < 0.3, "bond {j}");
            }
        }
    }

    #[test]
    fn transduction() {
        let p = TransductionParams::new(1.0, 1e-5).unwrap();
        assert_eq!(p.xi, 0.83);
        assert_eq!(displacement_from_voltage(0.0, &p, 1e6).unwrap(), 0.0);
        let a = displacement_from_voltage(1e-6, &p, 2e6).unwrap();
        let b = displacement_from_voltage(1e-6, &p, 1e6).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-18);
        assert!(TransductionParams { xi: 1.2, ..p }.validate().is_err());
        assert!(displacement_from_voltage(1.0, &p, 0.0).is_err());
    }

    #[test]
    fn trajectory_file_round_trip() {
        let bank = OscillatorBank::beams_8().subset(1, 3).unwrap();
        let traj = synthetic(&bank, |j, t| j as f64 + t, 1e-5);
        let mut bytes = Vec::new();
        traj.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"SSHTRAJ1");
        assert_eq!(bytes.len(), 8 + 24 + 4 + 8 + traj.samples.len() * 8);
        assert_eq!(Trajectory::read_from(bytes.as_slice()).unwrap(), traj);
        assert!(Trajectory::read_from(&bytes[..bytes.len() - 1]).is_err());
        assert!(Trajectory::read_from(&b"NOTATRAJ"[..]).is_err());
    }
}
