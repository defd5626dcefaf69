//! Open-boundary SSH hopping chains, bond disorder, the chiral operator,
//! single-particle states and the bulk winding number.
//!
//! Sites are 1-indexed in every public signature that takes a site number;
//! slices and vectors are 0-indexed as usual.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::DisorderRow;
use crate::error::{invalid, Error, Result};

/// Angular rate (rad/s) contributed by one hertz of quoted coupling.
///
/// Couplings are quoted the way they are measured on the device: as the
/// splitting of the two normal-mode peaks of a driven pair. A pair with
/// coupling `J` therefore has normal modes at `±J/2` Hz around the carrier
/// and exchanges energy as `cos(πJt)`.
pub const RATE_PER_HZ: f64 = PI;

/// An open-boundary chain of `2N` sites with nearest-neighbour couplings (Hz)
/// and zero on-site energy.
///
/// The clean couplings and any bond offsets are stored separately so that a
/// disorder realization can be removed again without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingChain {
    clean: Vec<f64>,
    deltas: Vec<f64>,
    couplings: Vec<f64>,
    seed: Option<u64>,
}

impl HoppingChain {
    /// Builds a chain from explicit bond couplings. The number of sites is
    /// `couplings.len() + 1` and must be even.
    pub fn new(couplings: Vec<f64>) -> Result<Self> {
        let sites = couplings.len() + 1;
        if sites % 2 != 0 {
            return Err(invalid(
                "couplings",
                format!("{} bonds give an odd site count {sites}", couplings.len()),
            ));
        }
        check_bonds(&couplings)?;
        let deltas = vec![0.0; couplings.len()];
        Ok(Self {
            clean: couplings.clone(),
            deltas,
            couplings,
            seed: None,
        })
    }

    pub fn sites(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn unit_cells(&self) -> usize {
        self.sites() / 2
    }

    /// Effective bond couplings (clean plus disorder), Hz.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Couplings before any disorder was applied, Hz.
    pub fn clean_couplings(&self) -> &[f64] {
        &self.clean
    }

    /// Accumulated bond offsets, Hz (all zero for a clean chain).
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_disordered(&self) -> bool {
        self.deltas.iter().any(|&d| d != 0.0)
    }

    /// Intracell and intercell couplings of the clean chain, when it has the
    /// alternating SSH pattern. A one-cell chain reports its single bond as
    /// both.
    pub fn ssh_pattern(&self) -> Option<(f64, f64)> {
        let j_intra = self.clean[0];
        let j_inter = self.clean.get(1).copied().unwrap_or(j_intra);
        let alternating = self.clean.iter().enumerate().all(|(i, &c)| {
            let expected = if i % 2 == 0 { j_intra } else { j_inter };
            c == expected
        });
        alternating.then_some((j_intra, j_inter))
    }

    /// Dense real-symmetric matrix, row-major rows.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.sites();
        let mut h = vec![vec![0.0; n]; n];
        for (i, &c) in self.couplings.iter().enumerate() {
            h[i][i + 1] = c;
            h[i + 1][i] = c;
        }
        h
    }

    /// `H·v` for a real vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.sites();
        let mut out = vec![0.0; n];
        for (i, &c) in self.couplings.iter().enumerate() {
            out[i] += c * v[i + 1];
            out[i + 1] += c * v[i];
        }
        out
    }

    pub fn max_coupling(&self) -> f64 {
        self.couplings.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> ChainRecord {
        let disordered = self.is_disordered();
        ChainRecord {
            sites: self.sites(),
            couplings: self.couplings.clone(),
            seed: self.seed,
            deltas: disordered.then(|| self.deltas.clone()),
        }
    }

    /// Rebuilds a chain from its record. When deltas are present the stored
    /// couplings are taken as the disordered values.
    pub fn from_record(record: &ChainRecord) -> Result<Self> {
        if record.couplings.len() + 1 != record.sites {
            return Err(Error::DimensionMismatch {
                expected: record.sites.saturating_sub(1),
                actual: record.couplings.len(),
            });
        }
        match &record.deltas {
            None => HoppingChain::new(record.couplings.clone()),
            Some(deltas) => {
                if deltas.len() != record.couplings.len() {
                    return Err(Error::DimensionMismatch {
                        expected: record.couplings.len(),
                        actual: deltas.len(),
                    });
                }
                let clean = record
                    .couplings
                    .iter()
                    .zip(deltas)
                    .map(|(c, d)| c - d)
                    .collect();
                let chain = HoppingChain::new(clean)?;
                let spec = DisorderSpec {
                    strength: deltas.iter().fold(0.0, |m, d| f64::max(m, d.abs())),
                    deltas: deltas.clone(),
                    seed: record.seed.unwrap_or(0),
                };
                let mut out = apply_disorder(&chain, &spec)?;
                out.couplings = record.couplings.clone();
                out.seed = record.seed;
                Ok(out)
            }
        }
    }
}

fn check_bonds(couplings: &[f64]) -> Result<()> {
    for (bond, &value) in couplings.iter().enumerate() {
        if !value.is_finite() {
            return Err(invalid("couplings", format!("bond {} is {value}", bond + 1)));
        }
        if value < 0.0 {
            return Err(Error::NegativeCoupling {
                bond: bond + 1,
                value,
            });
        }
    }
    Ok(())
}

/// Serialized form of a chain: `{sites, couplings[], seed?, deltas[]?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainRecord {
    pub sites: usize,
    pub couplings: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
}

/// SSH chain of `unit_cells` cells: bonds alternate `j_intra`, `j_inter`,
/// starting and ending with `j_intra`.
pub fn build_ssh(unit_cells: usize, j_intra: f64, j_inter: f64) -> Result<HoppingChain> {
    if unit_cells == 0 {
        return Err(invalid("unit_cells", "must be at least 1"));
    }
    let couplings = (0..2 * unit_cells - 1)
        .map(|i| if i % 2 == 0 { j_intra } else { j_inter })
        .collect();
    HoppingChain::new(couplings)
}

/// Bond offsets drawn uniformly from `[-strength, strength]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub strength: f64,
    pub deltas: Vec<f64>,
    pub seed: u64,
}

impl DisorderSpec {
    /// Wraps a fixed realization. Its strength is the label it was drawn with.
    pub fn from_row(row: &DisorderRow) -> Self {
        Self {
            strength: row.strength,
            deltas: row.deltas.to_vec(),
            seed: 0,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            strength: self.strength,
            deltas: self.deltas.iter().map(|d| -d).collect(),
            seed: self.seed,
        }
    }
}

pub fn sample_disorder(strength: f64, bond_count: usize, seed: u64) -> Result<DisorderSpec> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(invalid("strength", format!("{strength} is not a finite non-negative value")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas = (0..bond_count)
        .map(|_| {
            let u: f64 = rng.gen();
            // u in [0, 1): clamp keeps the closed-interval bound exact.
            (strength * (2.0 * u - 1.0)).clamp(-strength, strength)
        })
        .collect();
    Ok(DisorderSpec {
        strength,
        deltas,
        seed,
    })
}

/// Adds the disorder offsets to the chain's bonds. On-site terms stay zero.
pub fn apply_disorder(chain: &HoppingChain, spec: &DisorderSpec) -> Result<HoppingChain> {
    if spec.deltas.len() != chain.couplings.len() {
        return Err(Error::DimensionMismatch {
            expected: chain.couplings.len(),
            actual: spec.deltas.len(),
        });
    }
    let deltas: Vec<f64> = chain
        .deltas
        .iter()
        .zip(&spec.deltas)
        .map(|(a, b)| a + b)
        .collect();
    let couplings: Vec<f64> = chain
        .clean
        .iter()
        .zip(&deltas)
        .map(|(c, d)| c + d)
        .collect();
    check_bonds(&couplings)?;
    let disordered = deltas.iter().any(|&d| d != 0.0);
    Ok(HoppingChain {
        clean: chain.clean.clone(),
        deltas,
        couplings,
        seed: disordered.then_some(spec.seed),
    })
}

/// The chiral (sublattice) operator `Γ = P_O − P_E`: `+1` on odd sites,
/// `−1` on even sites (1-indexed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiralOperator {
    diagonal: Vec<i8>,
}

impl ChiralOperator {
    pub fn new(sites: usize) -> Self {
        let diagonal = (0..sites).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        Self { diagonal }
    }

    pub fn diagonal(&self) -> &[i8] {
        &self.diagonal
    }

    pub fn sites(&self) -> usize {
        self.diagonal.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.diagonal)
            .map(|(x, &s)| f64::from(s) * x)
            .collect()
    }

    /// `Γ H Γ` for a dense matrix.
    pub fn conjugate(&self, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
        h.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| f64::from(self.diagonal[i] * self.diagonal[j]) * x)
                    .collect()
            })
            .collect()
    }

    /// `⟨ψ|Γ|ψ⟩ = ⟨ψ|P_O|ψ⟩ − ⟨ψ|P_E|ψ⟩` for a real vector.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.diagonal)
            .map(|(x, &s)| f64::from(s) * x * x)
            .sum()
    }

    pub fn expectation_complex(&self, v: &[Complex64]) -> f64 {
        v.iter()
            .zip(&self.diagonal)
            .map(|(x, &s)| f64::from(s) * x.norm_sqr())
            .sum()
    }

    /// `P_O v = (I + Γ) v / 2`.
    pub fn project_odd(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.diagonal)
            .map(|(&x, &s)| if s > 0 { x } else { 0.0 })
            .collect()
    }

    /// `P_E v = (I − Γ) v / 2`.
    pub fn project_even(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.diagonal)
            .map(|(&x, &s)| if s < 0 { x } else { 0.0 })
            .collect()
    }
}

/// Tolerance on the 2-norm of a [`StateVector`].
pub const NORM_TOL: f64 = 1e-12;

/// A normalized single-particle state over the chain sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes whose 2-norm is already 1 within [`NORM_TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = norm2(&amplitudes);
        if amplitudes.is_empty() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = norm2(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::normalized(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Basis state `|site⟩`, 1-indexed.
    pub fn basis(sites: usize, site: usize) -> Result<Self> {
        if site == 0 || site > sites {
            return Err(invalid("site", format!("{site} outside 1..={sites}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); sites];
        amplitudes[site - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.amplitudes)
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// The excitation of the first site, `(1, 0, …, 0)`.
pub fn edge_state(sites: usize) -> Result<StateVector> {
    if sites == 0 {
        return Err(invalid("sites", "must be at least 1"));
    }
    StateVector::basis(sites, 1)
}

/// `d(k)` of the bulk Bloch Hamiltonian `H(k) = d(k)·σ`; `dz = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub k: f64,
    pub dx: f64,
    pub dy: f64,
}

impl BlochVector {
    pub fn new(j_intra: f64, j_inter: f64, k: f64) -> Self {
        let k = k.rem_euclid(2.0 * PI);
        Self {
            k,
            dx: j_intra + j_inter * k.cos(),
            dy: j_inter * k.sin(),
        }
    }

    pub fn angle(&self) -> f64 {
        self.dy.atan2(self.dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winding {
    Number(i32),
    Boundary,
}

pub const DEFAULT_K_SAMPLES: usize = 1024;

/// Counts how often `d(k)` encircles the origin as `k` sweeps the Brillouin
/// zone, by accumulating wrapped angle increments between samples.
pub fn winding_number(j_intra: f64, j_inter: f64, k_samples: usize) -> Result<Winding> {
    if k_samples < 8 {
        return Err(invalid("k_samples", format!("{k_samples} < 8")));
    }
    if !(j_intra >= 0.0 && j_inter >= 0.0) {
        return Err(invalid("couplings", "must be non-negative"));
    }
    let scale = j_intra.max(j_inter);
    if scale == 0.0 {
        return Err(invalid("couplings", "both zero: d(k) vanishes identically"));
    }
    if (j_intra - j_inter).abs() < 1e-9 * scale {
        return Ok(Winding::Boundary);
    }
    let step = 2.0 * PI / k_samples as f64;
    let angle_at = |i: usize| BlochVector::new(j_intra, j_inter, i as f64 * step).angle();
    let mut total = 0.0;
    let mut previous = angle_at(0);
    for i in 1..=k_samples {
        let current = angle_at(i % k_samples);
        total += wrap_angle(current - previous);
        previous = current;
    }
    Ok(Winding::Number((total / (2.0 * PI)).round() as i32))
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{disorder_row, TABLE_V};
    use proptest::prelude::*;

    #[test]
    fn ssh_couplings_alternate() {
        let c = build_ssh(4, 60.0, 20.0).unwrap();
        assert_eq!(c.sites(), 8);
        assert_eq!(c.couplings(), &[60.0, 20.0, 60.0, 20.0, 60.0, 20.0, 60.0]);
        let c = build_ssh(4, 20.0, 60.0).unwrap();
        assert_eq!(c.couplings(), &[20.0, 60.0, 20.0, 60.0, 20.0, 60.0, 20.0]);
        let c = build_ssh(1, 5.0, 123.0).unwrap();
        assert_eq!(c.sites(), 2);
        assert_eq!(c.couplings(), &[5.0]);
        assert_eq!(c.ssh_pattern(), Some((5.0, 5.0)));
    }

    #[test]
    fn negative_or_empty_chains_rejected() {
        assert!(matches!(
            build_ssh(3, -1.0, 2.0),
            Err(Error::NegativeCoupling { bond: 1, .. })
        ));
        assert!(build_ssh(0, 1.0, 1.0).is_err());
        assert!(HoppingChain::new(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn disorder_sampling() {
        let zero = sample_disorder(0.0, 7, 3).unwrap();
        assert!(zero.deltas.iter().all(|&d| d == 0.0));
        let five = sample_disorder(5.0, 7, 3).unwrap();
        assert_eq!(five.deltas.len(), 7);
        assert!(five.deltas.iter().all(|d| d.abs() <= 5.0));
        let a = sample_disorder(15.0, 7, 1).unwrap();
        let b = sample_disorder(15.0, 7, 2).unwrap();
        assert_ne!(a.deltas, b.deltas);
        assert_eq!(a, sample_disorder(15.0, 7, 1).unwrap());
        assert!(sample_disorder(-1.0, 7, 0).is_err());
    }

    #[test]
    fn table_rows_applied() {
        let chain = build_ssh(4, 60.0, 20.0).unwrap();
        let d1 = DisorderSpec::from_row(disorder_row("d1").unwrap());
        let out = apply_disorder(&chain, &d1).unwrap();
        assert_eq!(out.couplings(), &[55.0, 21.0, 61.0, 25.0, 63.0, 18.0, 60.0]);
        let d11 = DisorderSpec::from_row(disorder_row("d11").unwrap());
        let out = apply_disorder(&chain, &d11).unwrap();
        assert_eq!(out.couplings(), &[50.0, 16.0, 64.0, 29.0, 47.0, 33.0, 69.0]);
        for row in &TABLE_V {
            assert!(row.deltas.iter().all(|d| d.abs() <= row.strength));
        }
    }

    #[test]
    fn zero_disorder_is_identity() {
        let chain = build_ssh(4, 60.0, 20.0).unwrap();
        let out = apply_disorder(&chain, &sample_disorder(0.0, 7, 9).unwrap()).unwrap();
        assert_eq!(out, chain);
    }

    #[test]
    fn disorder_driving_bond_negative_is_rejected() {
        let chain = build_ssh(2, 3.0, 20.0).unwrap();
        let spec = DisorderSpec {
            strength: 5.0,
            deltas: vec![-4.0, 0.0, 0.0],
            seed: 0,
        };
        assert!(matches!(
            apply_disorder(&chain, &spec),
            Err(Error::NegativeCoupling { bond: 1, .. })
        ));
        let short = DisorderSpec {
            strength: 1.0,
            deltas: vec![0.0],
            seed: 0,
        };
        assert!(matches!(
            apply_disorder(&chain, &short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn edge_states() {
        let e = edge_state(8).unwrap();
        assert_eq!(e.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(e.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
        assert_eq!(e.norm(), 1.0);
        assert_eq!(edge_state(2).unwrap().len(), 2);
        assert!(edge_state(0).is_err());
    }

    #[test]
    fn state_vector_norm_is_checked() {
        assert!(StateVector::new(vec![Complex64::new(0.5, 0.0)]).is_err());
        let s = StateVector::from_real(&[3.0, 4.0]).unwrap();
        assert!((s.norm() - 1.0).abs() < NORM_TOL);
        assert!(StateVector::from_real(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn winding_labels() {
        assert_eq!(winding_number(60.0, 20.0, 1024).unwrap(), Winding::Number(0));
        assert_eq!(winding_number(20.0, 60.0, 1024).unwrap(), Winding::Number(1));
        assert_eq!(winding_number(40.0, 40.0, 1024).unwrap(), Winding::Boundary);
        assert_eq!(winding_number(0.0, 1.0, 8).unwrap(), Winding::Number(1));
        assert!(winding_number(0.0, 0.0, 1024).is_err());
        assert!(winding_number(1.0, 2.0, 4).is_err());
    }

    #[test]
    fn bloch_vector_components() {
        let d = BlochVector::new(60.0, 20.0, PI / 2.0);
        assert!((d.dx - 60.0).abs() < 1e-12);
        assert!((d.dy - 20.0).abs() < 1e-12);
    }

    #[test]
    fn chiral_operator_anticommutes() {
        let gamma = ChiralOperator::new(8);
        assert_eq!(gamma.diagonal(), &[1, -1, 1, -1, 1, -1, 1, -1]);
        let chain = apply_disorder(
            &build_ssh(4, 60.0, 20.0).unwrap(),
            &sample_disorder(15.0, 7, 4).unwrap(),
        )
        .unwrap();
        let h = chain.dense();
        let conj = gamma.conjugate(&h);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(conj[i][j], -h[i][j]);
            }
        }
        let v = [0.3, -0.1, 0.7, 0.2, 0.0, 0.1, 0.5, -0.4];
        let twice = gamma.apply(&gamma.apply(&v));
        assert_eq!(twice, v.to_vec());
        let odd = gamma.project_odd(&v);
        let even = gamma.project_even(&v);
        for i in 0..8 {
            assert_eq!(odd[i] + even[i], v[i]);
        }
    }

    #[test]
    fn record_round_trip_keeps_disorder() {
        let chain = apply_disorder(
            &build_ssh(4, 60.0, 20.0).unwrap(),
            &sample_disorder(10.0, 7, 11).unwrap(),
        )
        .unwrap();
        let record = chain.to_record();
        assert_eq!(record.seed, Some(11));
        let back = HoppingChain::from_record(&record).unwrap();
        assert_eq!(back.couplings(), chain.couplings());
        assert_eq!(back.seed(), Some(11));
        let clean = build_ssh(2, 1.0, 2.0).unwrap().to_record();
        assert!(clean.deltas.is_none());
    }

    proptest! {
        #[test]
        fn winding_is_scale_invariant(a in 0.0f64..100.0, b in 0.0f64..100.0, c in 1e-3f64..1e3) {
            prop_assume!(a.max(b) > 1e-6);
            let w = winding_number(a, b, DEFAULT_K_SAMPLES).unwrap();
            prop_assert_eq!(w, winding_number(c * a, c * b, DEFAULT_K_SAMPLES).unwrap());
            let expected = if (a - b).abs() < 1e-9 * a.max(b) {
                Winding::Boundary
            } else if a > b {
                Winding::Number(0)
            } else {
                Winding::Number(1)
            };
            prop_assert_eq!(w, expected);
        }

        #[test]
        fn disorder_then_negated_restores_chain(
            cells in 1usize..20,
            a in 20.0f64..80.0,
            b in 20.0f64..80.0,
            strength in 0.0f64..15.0,
            seed in any::<u64>(),
        ) {
            let chain = build_ssh(cells, a, b).unwrap();
            let spec = sample_disorder(strength, chain.sites() - 1, seed).unwrap();
            let there = apply_disorder(&chain, &spec).unwrap();
            let back = apply_disorder(&there, &spec.negated()).unwrap();
            prop_assert_eq!(back.couplings(), chain.couplings());
            prop_assert!(!back.is_disordered());
        }

        #[test]
        fn every_chain_is_chiral(cells in 1usize..12, strength in 0.0f64..15.0, seed in any::<u64>()) {
            let chain = build_ssh(cells, 60.0, 20.0).unwrap();
            let chain = apply_disorder(&chain, &sample_disorder(strength, chain.sites() - 1, seed).unwrap()).unwrap();
            let h = chain.dense();
            let gamma = ChiralOperator::new(chain.sites());
            let conj = gamma.conjugate(&h);
            for i in 0..chain.sites() {
                prop_assert_eq!(h[i][i], 0.0);
                for j in 0..chain.sites() {
                    prop_assert_eq!(conj[i][j], -h[i][j]);
                }
            }
        }
    }
}
