//! Truncated multimode Fock space: basis, coherent states, ladder operators and
//! random number-conserving or vacuum-fixing unitaries.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;
use num_traits::{Float, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION_CAP: usize = 2_000_000;
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

/// Mode register size and total photon cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub mode_count: usize,
    pub photon_cutoff: usize,
}

impl BasisSpec {
    pub fn new(mode_count: usize, photon_cutoff: usize) -> Result<Self> {
        if mode_count == 0 || photon_cutoff == 0 {
            return Err(Error::InvalidBasis { mode_count, photon_cutoff });
        }
        Ok(Self { mode_count, photon_cutoff })
    }

    /// Number of occupation vectors with total photon number at most the cutoff.
    pub fn dimension(&self) -> u128 {
        (0..=self.photon_cutoff)
            .map(|n| binomial(n + self.mode_count - 1, self.mode_count - 1))
            .fold(0u128, u128::saturating_add)
    }

    /// Smallest cutoff (at least `order + 2`) at which a coherent input of total power
    /// `power` loses less than `tol` probability and keeps less than `tol / power` in the top sector.
    pub fn default_cutoff(power: f64, order: usize, tol: f64) -> usize {
        let mut n = order + 2;
        while n < 10_000 {
            let top = poisson_pmf(power, n);
            if poisson_tail(power, n) < tol && power * top < tol {
                return n;
            }
            n += 1;
        }
        n
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn poisson_pmf(lambda: f64, n: usize) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * lambda.ln() - lambda - libm::lgamma(n as f64 + 1.0)).exp()
}

/// P(N > n) for N ~ Poisson(lambda), summed directly to avoid cancellation.
pub fn poisson_tail(lambda: f64, n: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut k = n + 1;
    let mut term = poisson_pmf(lambda, k);
    let mut sum = 0.0;
    while term > 0.0 && k < n + 100_000 {
        sum += term;
        if term < 1e-18 * sum && k as f64 > lambda {
            break;
        }
        k += 1;
        term *= lambda / k as f64;
    }
    if term == 0.0 && sum == 0.0 && lambda > n as f64 {
        return 1.0;
    }
    sum.min(1.0)
}

/// Enumerate the occupation vectors of `spec` in sector order.
pub fn enumerate_basis(spec: BasisSpec) -> Result<Vec<Vec<u16>>> {
    let space = FockSpace::new(spec)?;
    Ok((0..space.dim()).map(|i| space.state(i).to_vec()).collect())
}

/// Enumerated basis with lookup tables for the ladder operators.
///
/// Ordering: by total photon number, and within a sector the first mode's
/// occupation runs from high to low (recursively for the remaining modes).
#[derive(Debug, Clone)]
pub struct FockSpace {
    spec: BasisSpec,
    occupations: Vec<u16>,
    sector_offsets: Vec<usize>,
    lowered: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl FockSpace {
    pub fn new(spec: BasisSpec) -> Result<Arc<Self>> {
        Self::with_cap(spec, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(spec: BasisSpec, cap: usize) -> Result<Arc<Self>> {
        let spec = BasisSpec::new(spec.mode_count, spec.photon_cutoff)?;
        let dimension = spec.dimension();
        if dimension > cap as u128 || spec.photon_cutoff > u16::MAX as usize {
            return Err(Error::DimensionTooLarge { dimension, cap });
        }
        let m = spec.mode_count;
        let dim = dimension as usize;
        let mut occupations = Vec::with_capacity(dim * m);
        let mut sector_offsets = Vec::with_capacity(spec.photon_cutoff + 2);
        let mut scratch = vec![0u16; m];
        for n in 0..=spec.photon_cutoff {
            sector_offsets.push(occupations.len() / m);
            push_sector(&mut occupations, &mut scratch, 0, n);
        }
        sector_offsets.push(dim);

        let index: BTreeMap<&[u16], u32> =
            occupations.chunks(m).enumerate().map(|(i, occ)| (occ, i as u32)).collect();
        let mut lowered = vec![NONE; dim * m];
        let mut key = vec![0u16; m];
        for (i, occ) in occupations.chunks(m).enumerate() {
            for j in 0..m {
                if occ[j] > 0 {
                    key.copy_from_slice(occ);
                    key[j] -= 1;
                    lowered[i * m + j] = index[key.as_slice()];
                }
            }
        }
        drop(index);
        Ok(Arc::new(Self { spec, occupations, sector_offsets, lowered }))
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.spec.mode_count
    }

    pub fn mode_count(&self) -> usize {
        self.spec.mode_count
    }

    pub fn cutoff(&self) -> usize {
        self.spec.photon_cutoff
    }

    pub fn state(&self, i: usize) -> &[u16] {
        let m = self.spec.mode_count;
        &self.occupations[i * m..(i + 1) * m]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u16]> {
        self.occupations.chunks(self.spec.mode_count)
    }

    /// Index range of the states with exactly `n` photons.
    pub fn sector(&self, n: usize) -> Range<usize> {
        self.sector_offsets[n]..self.sector_offsets[n + 1]
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        if occupation.len() != self.spec.mode_count {
            return None;
        }
        let n: usize = occupation.iter().map(|&k| k as usize).sum();
        if n > self.spec.photon_cutoff {
            return None;
        }
        self.sector(n).find(|&i| self.state(i) == occupation)
    }

    fn lowered_index(&self, i: usize, mode: usize) -> Option<usize> {
        let v = self.lowered[i * self.spec.mode_count + mode];
        (v != NONE).then_some(v as usize)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.spec.mode_count {
            return Err(Error::InvalidMode { mode, mode_count: self.spec.mode_count });
        }
        Ok(())
    }
}

fn push_sector(out: &mut Vec<u16>, scratch: &mut [u16], mode: usize, remaining: usize) {
    if mode + 1 == scratch.len() {
        scratch[mode] = remaining as u16;
        out.extend_from_slice(scratch);
        return;
    }
    for k in (0..=remaining).rev() {
        scratch[mode] = k as u16;
        push_sector(out, scratch, mode + 1, remaining - k);
    }
}

/// Complex amplitudes over a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct StateVector {
    space: Arc<FockSpace>,
    amplitudes: Vec<Complex64>,
    tail_weight: f64,
}

impl StateVector {
    pub fn from_amplitudes(space: Arc<FockSpace>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::AmplitudeCount { expected: space.dim(), got: amplitudes.len() });
        }
        Ok(Self { space, amplitudes, tail_weight: 0.0 })
    }

    pub fn vacuum(space: Arc<FockSpace>) -> Self {
        let mut amplitudes = vec![Complex64::zero(); space.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { space, amplitudes, tail_weight: 0.0 }
    }

    /// Fock state with the given occupations.
    pub fn number_state(space: Arc<FockSpace>, occupation: &[u16]) -> Result<Self> {
        let n: usize = occupation.iter().map(|&k| k as usize).sum();
        let i = space.index_of(occupation).ok_or(Error::CutoffViolation {
            photons: n,
            cutoff: space.cutoff(),
        })?;
        let mut amplitudes = vec![Complex64::zero(); space.dim()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amplitudes, tail_weight: 0.0 })
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Probability discarded by truncation when the state was built.
    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub fn amplitude(&self, occupation: &[u16]) -> Option<Complex64> {
        self.space.index_of(occupation).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
        self
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        let amplitudes = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a - b).collect();
        Self { space: self.space.clone(), amplitudes, tail_weight: self.tail_weight }
    }

    /// Annihilation on `mode`. Never leaves the truncated space.
    pub fn annihilate(&self, mode: usize) -> Result<StateVector> {
        self.space.check_mode(mode)?;
        let mut out = vec![Complex64::zero(); self.amplitudes.len()];
        for (i, amp) in self.amplitudes.iter().enumerate() {
            if let Some(t) = self.space.lowered_index(i, mode) {
                let n = self.space.state(i)[mode] as f64;
                out[t] += amp * n.sqrt();
            }
        }
        Ok(Self { space: self.space.clone(), amplitudes: out, tail_weight: self.tail_weight })
    }

    /// Creation on `mode`; components pushed above the cutoff are dropped.
    pub fn create(&self, mode: usize) -> Result<StateVector> {
        self.space.check_mode(mode)?;
        let mut out = vec![Complex64::zero(); self.amplitudes.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            if let Some(s) = self.space.lowered_index(i, mode) {
                let n = self.space.state(i)[mode] as f64;
                *slot = self.amplitudes[s] * n.sqrt();
            }
        }
        Ok(Self { space: self.space.clone(), amplitudes: out, tail_weight: self.tail_weight })
    }

    /// Product of annihilators over `modes`.
    pub fn annihilate_all(&self, modes: &[usize]) -> Result<StateVector> {
        modes.iter().try_fold(self.clone(), |s, &m| s.annihilate(m))
    }
}

pub fn apply_annihilation(state: &StateVector, mode: usize) -> Result<StateVector> {
    state.annihilate(mode)
}

/// Truncated multimode coherent state, renormalised after truncation.
pub fn coherent_state(space: &Arc<FockSpace>, alphas: &[Complex64]) -> Result<StateVector> {
    coherent_state_with_tol(space, alphas, DEFAULT_TRUNCATION_TOL)
}

pub fn coherent_state_with_tol(
    space: &Arc<FockSpace>,
    alphas: &[Complex64],
    tol: f64,
) -> Result<StateVector> {
    let m = space.mode_count();
    if alphas.len() != m {
        return Err(Error::AmplitudeCount { expected: m, got: alphas.len() });
    }
    let cutoff = space.cutoff();
    let power: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
    let tail = poisson_tail(power, cutoff);
    if tail > tol {
        return Err(Error::TruncationExceeded {
            tail,
            tol,
            required_cutoff: BasisSpec::default_cutoff(power, 0, tol).max(cutoff + 1),
        });
    }
    let table: Vec<Vec<Complex64>> = alphas
        .iter()
        .map(|&a| {
            let mut row = Vec::with_capacity(cutoff + 1);
            let mut c = Complex64::new(1.0, 0.0);
            row.push(c);
            for n in 1..=cutoff {
                c = c * a / (n as f64).sqrt();
                row.push(c);
            }
            row
        })
        .collect();
    let envelope = (-power / 2.0).exp();
    let mut amplitudes: Vec<Complex64> = space
        .states()
        .map(|occ| {
            occ.iter().enumerate().fold(Complex64::new(envelope, 0.0), |acc, (j, &n)| {
                acc * table[j][n as usize]
            })
        })
        .collect();
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= norm);
    Ok(StateVector { space: space.clone(), amplitudes, tail_weight: tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryKind {
    Elastic,
    GeneralVacuumFixing,
    Identity,
}

/// Dense square block acting on a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
struct Block {
    offset: usize,
    size: usize,
    /// Row-major, `None` for identity.
    data: Option<Vec<Complex64>>,
}

/// Block-diagonal unitary on a [`FockSpace`] fixing the vacuum.
#[derive(Debug, Clone)]
pub struct TruncatedUnitary {
    space: Arc<FockSpace>,
    kind: UnitaryKind,
    blocks: Vec<Block>,
}

impl TruncatedUnitary {
    pub fn identity(space: Arc<FockSpace>) -> Self {
        let blocks = vec![Block { offset: 0, size: space.dim(), data: None }];
        Self { space, kind: UnitaryKind::Identity, blocks }
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn kind(&self) -> UnitaryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Matrix element ⟨row|U|col⟩.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        for b in &self.blocks {
            let r = b.offset..b.offset + b.size;
            if r.contains(&row) {
                if !r.contains(&col) {
                    return Complex64::zero();
                }
                return match &b.data {
                    None if row == col => Complex64::new(1.0, 0.0),
                    None => Complex64::zero(),
                    Some(d) => d[(row - b.offset) * b.size + (col - b.offset)],
                };
            }
        }
        Complex64::zero()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut out = vec![Complex64::zero(); d * d];
        for b in &self.blocks {
            for r in 0..b.size {
                for c in 0..b.size {
                    out[(b.offset + r) * d + b.offset + c] = match &b.data {
                        None => Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0),
                        Some(m) => m[r * b.size + c],
                    };
                }
            }
        }
        out
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        let src = &state.amplitudes;
        let mut out = vec![Complex64::zero(); src.len()];
        for b in &self.blocks {
            let x = &src[b.offset..b.offset + b.size];
            let y = &mut out[b.offset..b.offset + b.size];
            match &b.data {
                None => y.copy_from_slice(x),
                Some(m) => {
                    for (yr, row) in y.iter_mut().zip(m.chunks(b.size)) {
                        *yr = row.iter().zip(x).map(|(u, v)| u * v).sum();
                    }
                }
            }
        }
        StateVector { space: state.space.clone(), amplitudes: out, tail_weight: state.tail_weight }
    }

    /// max |(U†U − I)_{ij}|.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let Some(m) = &b.data else { continue };
            let n = b.size;
            for i in 0..n {
                for j in 0..n {
                    let s: Complex64 = (0..n).map(|k| m[k * n + i].conj() * m[k * n + j]).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((s - target).norm());
                }
            }
        }
        worst
    }
}

/// Seeded Haar-random oracle of the requested kind.
pub fn random_unitary(space: &Arc<FockSpace>, kind: UnitaryKind, seed: u64) -> TruncatedUnitary {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let blocks = match kind {
        UnitaryKind::Identity => return TruncatedUnitary::identity(space.clone()),
        UnitaryKind::Elastic => (0..=space.cutoff())
            .map(|n| {
                let r = space.sector(n);
                let size = r.len();
                let data = if n == 0 { None } else { Some(haar_unitary(size, &mut rng)) };
                Block { offset: r.start, size, data }
            })
            .collect(),
        UnitaryKind::GeneralVacuumFixing => {
            let rest = space.dim() - 1;
            vec![
                Block { offset: 0, size: 1, data: None },
                Block { offset: 1, size: rest, data: Some(haar_unitary(rest, &mut rng)) },
            ]
        }
    };
    TruncatedUnitary { space: space.clone(), kind, blocks }
}

/// Haar-distributed `n × n` unitary (row-major): Gram–Schmidt, applied twice, on a complex Ginibre matrix.
pub fn haar_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let scale = core::f64::consts::FRAC_1_SQRT_2;
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re * scale, im * scale)
                })
                .collect()
        })
        .collect();
    for c in 0..n {
        for _ in 0..2 {
            for p in 0..c {
                let (done, rest) = cols.split_at_mut(c);
                let q = &done[p];
                let proj: Complex64 = q.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
                rest[0].iter_mut().zip(q).for_each(|(v, a)| *v -= proj * a);
            }
        }
        let norm = cols[c].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        cols[c].iter_mut().for_each(|a| *a /= norm);
    }
    let mut out = vec![Complex64::zero(); n * n];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            out[r * n + c] = *v;
        }
    }
    out
}

/// ⟨ψ| A_{p1} … A_{pn} |ψ⟩ with ψ = U|input⟩.
pub fn correlation(u: &TruncatedUnitary, input: &StateVector, output_modes: &[usize]) -> Result<Complex64> {
    let psi = u.apply(input);
    let lowered = psi.annihilate_all(output_modes)?;
    Ok(psi.inner(&lowered))
}

/// ⟨0| A_{p1} … A_{pn} U A†_{k1} … A†_{km} |0⟩.
pub fn exact_s_element(u: &TruncatedUnitary, out_modes: &[usize], in_modes: &[usize]) -> Result<Complex64> {
    let space = u.space();
    let photons = out_modes.len().max(in_modes.len());
    if photons > space.cutoff() {
        return Err(Error::CutoffViolation { photons, cutoff: space.cutoff() });
    }
    let raise = |modes: &[usize]| {
        modes.iter().try_fold(StateVector::vacuum(space.clone()), |s, &m| s.create(m))
    };
    let ket = u.apply(&raise(in_modes)?);
    let bra = raise(out_modes)?;
    Ok(bra.inner(&ket))
}
