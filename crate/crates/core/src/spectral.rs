//! Eigendecomposition of hopping chains, chiral pairing of the spectrum,
//! occupations of a prepared state and broadened response spectra.
//!
//! The chain matrix is already real-symmetric tridiagonal with a zero
//! diagonal, so it is diagonalized directly with implicit-shift QL; no
//! Householder reduction is needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{ChiralOperator, HoppingChain, StateVector, RATE_PER_HZ};

/// Zero-mode threshold relative to `max|E|`.
pub const DEFAULT_ZERO_TOL_REL: f64 = 1e-2;

/// Relative spread below which eigenvalues are treated as one degenerate cluster.
const DEGENERACY_TOL_REL: f64 = 1e-9;

/// Allowed `|E₊ + E₋|` relative to `max|E|` when pairing mirror eigenvalues.
const MIRROR_TOL_REL: f64 = 1e-9;

const MAX_QL_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    pairing: Vec<(usize, usize)>,
    zero_modes: Vec<usize>,
}

impl EigenSystem {
    /// Ascending, Hz.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `eigenvectors()[n]` belongs to `eigenvalues()[n]`.
    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    /// `(index of +E, index of −E)` for every non-zero mirror pair.
    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    pub fn zero_modes(&self) -> &[usize] {
        &self.zero_modes
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| f64::max(m, e.abs()))
    }

    /// `⟨ψ_n|ψ⟩` for every eigenstate.
    pub fn overlaps(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: psi.len(),
            });
        }
        Ok(self
            .eigenvectors
            .iter()
            .map(|v| {
                v.iter()
                    .zip(psi.amplitudes())
                    .map(|(&x, a)| a * x)
                    .sum::<Complex64>()
            })
            .collect())
    }

    pub fn to_record(&self, with_vectors: bool) -> EigenRecord {
        EigenRecord {
            eigenvalues: self.eigenvalues.clone(),
            zero_mode_indices: self.zero_modes.clone(),
            eigenvectors: with_vectors.then(|| self.eigenvectors.clone()),
        }
    }
}

/// Serialized form of an [`EigenSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub eigenvalues: Vec<f64>,
    pub zero_mode_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

/// Full spectrum of a chain, eigenvalues ascending.
///
/// Within an exactly degenerate cluster the basis is re-orthogonalized and
/// rotated onto eigenvectors of the chiral operator, ordered by chirality
/// descending; every eigenvector's first significant component is positive.
pub fn eigendecompose(chain: &HoppingChain) -> Result<EigenSystem> {
    let n = chain.sites();
    let mut diag = vec![0.0; n];
    let mut off = chain.couplings().to_vec();
    off.push(0.0);
    let mut vectors: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        })
        .collect();
    tridiagonal_ql(&mut diag, &mut off, &mut vectors)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let mut eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].clone()).collect();
    for v in &mut eigenvectors {
        normalize(v);
    }

    let gamma = ChiralOperator::new(n);
    settle_degenerate_clusters(&mut eigenvalues, &mut eigenvectors, &gamma);
    for v in &mut eigenvectors {
        fix_sign(v);
    }

    let (pairing, zero_modes, _) = pair_spectrum(&eigenvalues, DEFAULT_ZERO_TOL_REL);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        pairing,
        zero_modes,
    })
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `diag` holds the
/// diagonal, `off[i]` couples `i` and `i + 1` (`off[n-1]` is scratch).
/// Rotations are accumulated into `vectors`, where `vectors[i]` ends up as the
/// eigenvector of `diag[i]`.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], vectors: &mut [Vec<f64>]) -> Result<()> {
    let n = diag.len();
    if n < 2 {
        return Ok(());
    }
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let scale = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence { iterations: sweeps });
            }
            // Wilkinson-type shift from the leading 2x2 block.
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = vectors.split_at_mut(i + 1);
                let (vi, vj) = (&mut lo[i], &mut hi[0]);
                for (a, b) in vi.iter_mut().zip(vj.iter_mut()) {
                    let f = *b;
                    *b = s * *a + c * f;
                    *a = c * *a - s * f;
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fix_sign(v: &mut [f64]) {
    if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-8) {
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn settle_degenerate_clusters(values: &mut [f64], vectors: &mut [Vec<f64>], gamma: &ChiralOperator) {
    let n = values.len();
    let scale = values.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
    let tol = DEGENERACY_TOL_REL * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            rotate_cluster(&mut vectors[start..end], gamma);
            let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
            values[start..end].iter_mut().for_each(|e| *e = mean);
        }
        start = end;
    }
}

/// Re-orthogonalizes a degenerate block and diagonalizes the chiral operator
/// inside it.
fn rotate_cluster(block: &mut [Vec<f64>], gamma: &ChiralOperator) {
    for _ in 0..2 {
        for i in 0..block.len() {
            for j in 0..i {
                let proj = dot(&block[i], &block[j]);
                let (lo, hi) = block.split_at_mut(i);
                hi[0].iter_mut().zip(&lo[j]).for_each(|(x, y)| *x -= proj * y);
            }
            normalize(&mut block[i]);
        }
    }
    let k = block.len();
    let gv: Vec<Vec<f64>> = block.iter().map(|v| gamma.apply(v)).collect();
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| dot(&block[a], &gv[b])).collect())
        .collect();
    let (chirality, rotation) = jacobi_eigen(&mut m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| chirality[b].total_cmp(&chirality[a]));
    let rotated: Vec<Vec<f64>> = order
        .iter()
        .map(|&c| {
            let mut v = vec![0.0; block[0].len()];
            for (a, basis) in block.iter().enumerate() {
                let w = rotation[a][c];
                v.iter_mut().zip(basis).for_each(|(x, y)| *x += w * y);
            }
            normalize(&mut v);
            v
        })
        .collect();
    block.clone_from_slice(&rotated);
}

/// Cyclic Jacobi for a small symmetric matrix. Returns eigenvalues and the
/// rotation whose columns are the eigenvectors.
fn jacobi_eigen(m: &mut [Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = m.len();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (a, b) = (m[r][p], m[r][q]);
                    m[r][p] = c * a - s * b;
                    m[r][q] = s * a + c * b;
                }
                for r in 0..k {
                    let (a, b) = (m[p][r], m[q][r]);
                    m[p][r] = c * a - s * b;
                    m[q][r] = s * a + c * b;
                }
                for row in v.iter_mut() {
                    let (a, b) = (row[p], row[q]);
                    row[p] = c * a - s * b;
                    row[q] = s * a + c * b;
                }
            }
        }
    }
    ((0..k).map(|i| m[i][i]).collect(), v)
}

/// Splits an ascending spectrum into zero modes and mirror pairs. Returns the
/// pairs, the zero-mode indices and the worst `|E₊ + E₋|` (infinite when the
/// two halves have different sizes).
fn pair_spectrum(values: &[f64], zero_tol_rel: f64) -> (Vec<(usize, usize)>, Vec<usize>, f64) {
    let scale = values.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
    let threshold = zero_tol_rel * scale;
    let is_zero = |e: f64| scale == 0.0 || e.abs() < threshold;
    let zero_modes: Vec<usize> = (0..values.len()).filter(|&i| is_zero(values[i])).collect();
    let positives: Vec<usize> = (0..values.len())
        .filter(|&i| !is_zero(values[i]) && values[i] > 0.0)
        .collect();
    let negatives: Vec<usize> = (0..values.len())
        .rev()
        .filter(|&i| !is_zero(values[i]) && values[i] < 0.0)
        .collect();
    if positives.len() != negatives.len() {
        return (Vec::new(), zero_modes, f64::INFINITY);
    }
    let pairs: Vec<(usize, usize)> = positives.into_iter().zip(negatives).collect();
    let mismatch = pairs
        .iter()
        .map(|&(p, m)| (values[p] + values[m]).abs())
        .fold(0.0, f64::max);
    (pairs, zero_modes, mismatch)
}

/// Mirror pairs and zero modes of a spectrum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiralClassification {
    pub pairing: Vec<(usize, usize)>,
    pub zero_modes: Vec<usize>,
}

/// Pairs every `+E` with its `−E` partner by magnitude, flagging `|E|` below
/// `zero_tol_rel · max|E|` as zero modes.
pub fn classify_chiral(eig: &EigenSystem, zero_tol_rel: f64) -> Result<ChiralClassification> {
    if !(zero_tol_rel > 0.0 && zero_tol_rel < 1.0) {
        return Err(invalid("zero_tol_rel", format!("{zero_tol_rel} not in (0, 1)")));
    }
    let (pairing, zero_modes, mismatch) = pair_spectrum(&eig.eigenvalues, zero_tol_rel);
    let allowed = MIRROR_TOL_REL * eig.max_abs_eigenvalue();
    if mismatch > allowed {
        return Err(Error::SymmetryViolation(format!(
            "unpaired eigenvalue: worst mirror mismatch {mismatch:e} Hz exceeds {allowed:e} Hz"
        )));
    }
    Ok(ChiralClassification {
        pairing,
        zero_modes,
    })
}

/// `⟨ψ_index|Γ|ψ_index⟩`.
pub fn sublattice_support(eig: &EigenSystem, gamma: &ChiralOperator, index: usize) -> Result<f64> {
    let v = eig.eigenvectors.get(index).ok_or_else(|| {
        invalid("index", format!("{index} outside 0..{}", eig.dim()))
    })?;
    if gamma.sites() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            actual: gamma.sites(),
        });
    }
    Ok(gamma.expectation(v))
}

/// The zero-mode state living on the odd sublattice, starting at site 1.
///
/// For a topological chain this is the left edge state; for a fully
/// dimerized chain (`J_A = 0`) it is exactly the first-site excitation.
pub fn left_edge_state(eig: &EigenSystem) -> Result<StateVector> {
    let gamma = ChiralOperator::new(eig.dim());
    let best = eig
        .zero_modes
        .iter()
        .map(|&i| gamma.project_odd(&eig.eigenvectors[i]))
        .max_by(|a, b| a[0].abs().total_cmp(&b[0].abs()))
        .ok_or_else(|| invalid("chain", "has no zero modes, so no edge state"))?;
    let sign = if best[0] < 0.0 { -1.0 } else { 1.0 };
    let values: Vec<f64> = best.iter().map(|x| sign * x).collect();
    StateVector::from_real(&values)
}

/// `|⟨ψ_n|ψ₀⟩|²` per eigenstate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationProfile {
    pub weights: Vec<f64>,
}

impl OccupationProfile {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn occupations(eig: &EigenSystem, psi0: &StateVector) -> Result<OccupationProfile> {
    let weights = eig.overlaps(psi0)?.into_iter().map(|a| a.norm_sqr()).collect();
    Ok(OccupationProfile { weights })
}

/// Physical detuning (Hz) from the carrier of the normal mode with chain
/// eigenvalue `e`.
pub fn mode_detuning_hz(e: f64) -> f64 {
    e * RATE_PER_HZ / (2.0 * std::f64::consts::PI)
}

/// Unit-peak Lorentzian with full width at half maximum `linewidth`.
pub fn lorentzian(x: f64, linewidth: f64) -> f64 {
    let half = 0.5 * linewidth;
    half * half / (x * x + half * half)
}

/// `S(f) = Σ_n w_n L(f − f_n)` over a grid of detunings (Hz), where `f_n` is
/// the normal-mode detuning of eigenstate `n`.
pub fn response_spectrum(
    eig: &EigenSystem,
    psi0: &StateVector,
    linewidth: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if !(linewidth > 0.0 && linewidth.is_finite()) {
        return Err(invalid("linewidth", format!("{linewidth} must be positive")));
    }
    let weights = occupations(eig, psi0)?.weights;
    let centers: Vec<f64> = eig.eigenvalues.iter().map(|&e| mode_detuning_hz(e)).collect();
    Ok(grid
        .iter()
        .map(|&f| {
            weights
                .iter()
                .zip(&centers)
                .map(|(w, c)| w * lorentzian(f - c, linewidth))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{apply_disorder, build_ssh, edge_state, sample_disorder};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dense_oracle(chain: &HoppingChain) -> Vec<f64> {
        let n = chain.sites();
        let h = chain.dense();
        let m = DMatrix::from_fn(n, n, |i, j| h[i][j]);
        let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn check_residuals(chain: &HoppingChain, eig: &EigenSystem) {
        let scale = eig.max_abs_eigenvalue().max(1.0);
        for (e, v) in eig.eigenvalues().iter().zip(eig.eigenvectors()) {
            let hv = chain.apply(v);
            let res: f64 = hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-9 * scale, "residual {res}");
        }
        for (i, a) in eig.eigenvectors().iter().enumerate() {
            for (j, b) in eig.eigenvectors().iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dimer_spectrum() {
        let chain = HoppingChain::new(vec![60.0]).unwrap();
        let eig = eigendecompose(&chain).unwrap();
        assert!((eig.eigenvalues()[0] + 60.0).abs() < 1e-12);
        assert!((eig.eigenvalues()[1] - 60.0).abs() < 1e-12);
        let c = classify_chiral(&eig, DEFAULT_ZERO_TOL_REL).unwrap();
        assert_eq!(c.pairing, vec![(1, 0)]);
        assert!(c.zero_modes.is_empty());
        check_residuals(&chain, &eig);
    }

    #[test]
    fn uniform_chain_matches_toeplitz_closed_form() {
        let chain = HoppingChain::new(vec![40.0; 7]).unwrap();
        let eig = eigendecompose(&chain).unwrap();
        let mut expected: Vec<f64> = (1..=8).map(|m| 80.0 * (m as f64 * PI / 9.0).cos()).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12 * 80.0);
        }
        check_residuals(&chain, &eig);
    }

    #[test]
    fn zero_chain_has_zero_spectrum() {
        let chain = HoppingChain::new(vec![0.0; 5]).unwrap();
        let eig = eigendecompose(&chain).unwrap();
        assert!(eig.eigenvalues().iter().all(|&e| e == 0.0));
        assert_eq!(eig.zero_modes().len(), 6);
        check_residuals(&chain, &eig);
    }

    #[test]
    fn ssh_chains_agree_with_dense_oracle() {
        for (a, b) in [(60.0, 20.0), (20.0, 60.0), (40.0, 40.0), (0.0, 60.0)] {
            let chain = build_ssh(4, a, b).unwrap();
            let eig = eigendecompose(&chain).unwrap();
            for (x, y) in eig.eigenvalues().iter().zip(dense_oracle(&chain)) {
                assert!((x - y).abs() < 1e-10, "{a}/{b}: {x} vs {y}");
            }
            check_residuals(&chain, &eig);
        }
    }

    #[test]
    fn zero_modes_by_phase() {
        let trivial = eigendecompose(&build_ssh(4, 60.0, 20.0).unwrap()).unwrap();
        assert!(trivial.zero_modes().is_empty());
        let topo = eigendecompose(&build_ssh(4, 20.0, 60.0).unwrap()).unwrap();
        let c = classify_chiral(&topo, DEFAULT_ZERO_TOL_REL).unwrap();
        assert_eq!(c.zero_modes.len(), 2);
        for &i in &c.zero_modes {
            assert!(topo.eigenvalues()[i].abs() < 2.0);
        }
        // Oracle: the same two near-zero values from dense diagonalization.
        let dense = dense_oracle(&build_ssh(4, 20.0, 60.0).unwrap());
        assert!((dense[3].abs() - topo.eigenvalues()[3].abs()).abs() < 1e-10);
    }

    #[test]
    fn classify_rejects_bad_tolerance() {
        let eig = eigendecompose(&build_ssh(2, 1.0, 2.0).unwrap()).unwrap();
        assert!(classify_chiral(&eig, 0.0).is_err());
        assert!(classify_chiral(&eig, 1.0).is_err());
    }

    #[test]
    fn classify_detects_broken_mirror_symmetry() {
        let mut eig = eigendecompose(&build_ssh(2, 1.0, 2.0).unwrap()).unwrap();
        eig.eigenvalues[3] += 0.1;
        assert!(matches!(
            classify_chiral(&eig, DEFAULT_ZERO_TOL_REL),
            Err(Error::SymmetryViolation(_))
        ));
    }

    #[test]
    fn sublattice_support_values() {
        let chain = build_ssh(4, 60.0, 20.0).unwrap();
        let eig = eigendecompose(&chain).unwrap();
        let gamma = ChiralOperator::new(8);
        for n in 0..8 {
            assert!(sublattice_support(&eig, &gamma, n).unwrap().abs() < 1e-8);
        }
        // Exactly dimerized: the degenerate zero pair is rotated onto the two sublattices.
        let dimerized = eigendecompose(&build_ssh(4, 0.0, 60.0).unwrap()).unwrap();
        assert_eq!(dimerized.zero_modes().len(), 2);
        let support: Vec<f64> = dimerized
            .zero_modes()
            .iter()
            .map(|&i| sublattice_support(&dimerized, &gamma, i).unwrap())
            .collect();
        assert!((support[0] - 1.0).abs() < 1e-12);
        assert!((support[1] + 1.0).abs() < 1e-12);
        let dimer = eigendecompose(&HoppingChain::new(vec![60.0]).unwrap()).unwrap();
        let g2 = ChiralOperator::new(2);
        for n in 0..2 {
            let v = &dimer.eigenvectors()[n];
            assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
            assert!(sublattice_support(&dimer, &g2, n).unwrap().abs() < 1e-12);
        }
        assert!(sublattice_support(&dimer, &g2, 2).is_err());
    }

    #[test]
    fn edge_state_of_dimerized_chain_is_first_site() {
        let eig = eigendecompose(&build_ssh(40, 0.0, 60.0).unwrap()).unwrap();
        let edge = left_edge_state(&eig).unwrap();
        assert!((edge.amplitudes()[0].re - 1.0).abs() < 1e-14);
        let eig = eigendecompose(&build_ssh(40, 30.0, 60.0).unwrap()).unwrap();
        let edge = left_edge_state(&eig).unwrap();
        let gamma = ChiralOperator::new(80);
        assert!((gamma.expectation_complex(edge.amplitudes()) - 1.0).abs() < 1e-12);
        // Closed form of the semi-infinite edge state: amplitude ratio −J_A/J_B per cell.
        let a = edge.amplitudes();
        assert!((a[2].re / a[0].re + 0.5).abs() < 1e-9);
        assert!(left_edge_state(&eigendecompose(&build_ssh(4, 60.0, 20.0).unwrap()).unwrap()).is_err());
    }

    #[test]
    fn occupations_basic() {
        let chain = build_ssh(4, 60.0, 20.0).unwrap();
        let eig = eigendecompose(&chain).unwrap();
        let eigenstate = StateVector::from_real(&eig.eigenvectors()[5]).unwrap();
        let w = occupations(&eig, &eigenstate).unwrap().weights;
        for (i, x) in w.iter().enumerate() {
            let expected = if i == 5 { 1.0 } else { 0.0 };
            assert!((x - expected).abs() < 1e-12);
        }
        let edge = edge_state(8).unwrap();
        let occ = occupations(&eig, &edge).unwrap();
        assert!((occ.total() - 1.0).abs() < 1e-12);
        for &(p, m) in eig.pairing() {
            assert!((occ.weights[p] - occ.weights[m]).abs() < 1e-10);
        }
        // Oracle: weights are squared first components of the dense eigenvectors.
        let h = chain.dense();
        let dense = DMatrix::from_fn(8, 8, |i, j| h[i][j]).symmetric_eigen();
        let mut oracle: Vec<(f64, f64)> = (0..8)
            .map(|k| (dense.eigenvalues[k], dense.eigenvectors[(0, k)].powi(2)))
            .collect();
        oracle.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, (_, y)) in occ.weights.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(occupations(&eig, &edge_state(4).unwrap()).is_err());
    }

    #[test]
    fn topological_edge_occupation_sits_on_zero_modes() {
        let eig = eigendecompose(&build_ssh(4, 20.0, 60.0).unwrap()).unwrap();
        let occ = occupations(&eig, &edge_state(8).unwrap()).unwrap();
        let zero: f64 = eig.zero_modes().iter().map(|&i| occ.weights[i]).sum();
        assert!(zero > 0.8, "zero-mode weight {zero}");
    }

    #[test]
    fn response_spectrum_shapes() {
        let grid: Vec<f64> = (-80..=80).map(|i| i as f64).collect();
        let at_zero = |s: &[f64]| s[80];
        let peak = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);

        let topo = eigendecompose(&build_ssh(4, 20.0, 60.0).unwrap()).unwrap();
        let s = response_spectrum(&topo, &edge_state(8).unwrap(), 9.0, &grid).unwrap();
        assert_eq!(at_zero(&s), peak(&s));

        let trivial = eigendecompose(&build_ssh(4, 60.0, 20.0).unwrap()).unwrap();
        let s = response_spectrum(&trivial, &edge_state(8).unwrap(), 9.0, &grid).unwrap();
        assert!(at_zero(&s) < 0.25 * peak(&s));

        let dimer = eigendecompose(&HoppingChain::new(vec![60.0]).unwrap()).unwrap();
        let upper = StateVector::from_real(&dimer.eigenvectors()[1]).unwrap();
        let s = response_spectrum(&dimer, &upper, 4.0, &grid).unwrap();
        let argmax = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((grid[argmax] - mode_detuning_hz(60.0)).abs() < 1e-9);
        assert!((peak(&s) - 1.0).abs() < 1e-12);

        assert!(response_spectrum(&dimer, &upper, 0.0, &grid).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn disordered_chains_match_oracle_and_mirror(
            cells in 1usize..30,
            strength in 0.0f64..15.0,
            seed in any::<u64>(),
        ) {
            let chain = build_ssh(cells, 60.0, 20.0).unwrap();
            let chain = apply_disorder(&chain, &sample_disorder(strength, chain.sites() - 1, seed).unwrap()).unwrap();
            let eig = eigendecompose(&chain).unwrap();
            let e = eig.eigenvalues();
            let scale = eig.max_abs_eigenvalue();
            for k in 0..e.len() {
                prop_assert!((e[k] + e[e.len() - 1 - k]).abs() < 1e-9 * scale);
            }
            for (x, y) in e.iter().zip(dense_oracle(&chain)) {
                prop_assert!((x - y).abs() < 1e-9 * scale);
            }
            prop_assert!(classify_chiral(&eig, DEFAULT_ZERO_TOL_REL).is_ok());
            let occ = occupations(&eig, &edge_state(chain.sites()).unwrap()).unwrap();
            prop_assert!((occ.total() - 1.0).abs() < 1e-12);
            for &(p, m) in eig.pairing() {
                prop_assert!((occ.weights[p] - occ.weights[m]).abs() < 1e-10);
            }
        }
    }
}
