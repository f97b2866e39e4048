//! Coherent-state input plans, correlation records and the first-order reconstruction rules.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Float, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{coherent_state, StateVector, TruncatedUnitary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    General,
    Elastic,
}

/// One coherent-state configuration of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// Global phase index `l` (general plans only).
    pub phase_index: Option<u32>,
    /// Nominal relative signs, first one always `+1`.
    pub signs: Vec<i8>,
    /// Signs actually applied, equal to `signs` unless perturbed.
    pub sign_values: Vec<f64>,
    /// Global phase actually applied.
    pub phase: f64,
    /// Prepared amplitudes per input mode.
    pub amplitudes: Vec<Complex64>,
}

impl PlanEntry {
    pub fn label(&self) -> String {
        let s: String = self.signs.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect();
        match self.phase_index {
            Some(l) => format!("(l={l}, s={s})"),
            None => format!("(s={s})"),
        }
    }
}

/// All input configurations one protocol run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPlan {
    pub kind: PlanKind,
    /// Nominal magnitudes |α_k| per input mode.
    pub magnitudes: Vec<f64>,
    /// Magnitudes actually prepared.
    pub prepared_magnitudes: Vec<f64>,
    pub entries: Vec<PlanEntry>,
    pub perturbed: bool,
}

impl InputPlan {
    pub fn mode_count(&self) -> usize {
        self.magnitudes.len()
    }

    /// Nominal total power Σ|α_k|².
    pub fn power(&self) -> f64 {
        self.magnitudes.iter().map(|m| m * m).sum()
    }

    pub fn nominal_phase(&self, entry: &PlanEntry) -> f64 {
        entry.phase_index.map_or(0.0, |l| PI * l as f64 / self.mode_count() as f64)
    }

    /// Amplitudes the reconstruction assumes were prepared.
    pub fn nominal_amplitudes(&self, entry: &PlanEntry) -> Vec<Complex64> {
        let rot = Complex64::from_polar(1.0, self.nominal_phase(entry));
        entry.signs.iter().zip(&self.magnitudes).map(|(&s, &m)| rot * (s as f64 * m)).collect()
    }

    /// Recompute prepared amplitudes from signs, phase and magnitudes.
    pub(crate) fn refresh_amplitudes(&mut self) {
        for e in &mut self.entries {
            let rot = Complex64::from_polar(1.0, e.phase);
            e.amplitudes = e
                .sign_values
                .iter()
                .zip(&self.prepared_magnitudes)
                .map(|(&s, &m)| rot * (s * m))
                .collect();
        }
    }
}

/// Magnitudes |α|/√M for each of `mode_count` modes.
pub fn equal_magnitudes(mode_count: usize, power: f64) -> Vec<f64> {
    vec![(power / mode_count as f64).sqrt(); mode_count]
}

fn sign_vectors(mode_count: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..1usize << (mode_count - 1)).map(move |bits| {
        (0..mode_count)
            .map(|j| if j > 0 && bits >> (j - 1) & 1 == 1 { -1 } else { 1 })
            .collect()
    })
}

fn check_magnitudes(mode_count: usize, magnitudes: &[f64]) -> Result<()> {
    if mode_count == 0 || mode_count > 20 {
        return Err(Error::InvalidPlan(format!("mode count {mode_count} outside 1..=20")));
    }
    if magnitudes.len() != mode_count {
        return Err(Error::InvalidPlan(format!(
            "{} magnitudes given for {mode_count} modes",
            magnitudes.len()
        )));
    }
    match magnitudes.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
        Some(mode) => Err(Error::ZeroMagnitude { mode }),
        None => Ok(()),
    }
}

fn build(kind: PlanKind, magnitudes: &[f64], phases: Vec<Option<u32>>) -> InputPlan {
    let m = magnitudes.len();
    let entries = phases
        .into_iter()
        .flat_map(|l| {
            sign_vectors(m).map(move |signs| {
                let phase = l.map_or(0.0, |l| PI * l as f64 / m as f64);
                PlanEntry {
                    phase_index: l,
                    sign_values: signs.iter().map(|&s| s as f64).collect(),
                    signs,
                    phase,
                    amplitudes: Vec::new(),
                }
            })
        })
        .collect();
    let mut plan = InputPlan {
        kind,
        magnitudes: magnitudes.to_vec(),
        prepared_magnitudes: magnitudes.to_vec(),
        entries,
        perturbed: false,
    };
    plan.refresh_amplitudes();
    plan
}

/// Phases φ_l = πl/M for l = 1..2M, every sign vector per phase.
pub fn build_input_plan_general(mode_count: usize, magnitudes: &[f64]) -> Result<InputPlan> {
    check_magnitudes(mode_count, magnitudes)?;
    let phases = (1..=2 * mode_count as u32).map(Some).collect();
    Ok(build(PlanKind::General, magnitudes, phases))
}

/// One entry per sign vector, no phase sweep.
pub fn build_input_plan_elastic(mode_count: usize, magnitudes: &[f64]) -> Result<InputPlan> {
    check_magnitudes(mode_count, magnitudes)?;
    Ok(build(PlanKind::Elastic, magnitudes, vec![None]))
}

/// Shot count and detector noise applied when simulating records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// `None` means exact, noise-free records.
    pub shots: Option<u64>,
    pub detector_noise_std: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn exact() -> Self {
        Self { shots: None, detector_noise_std: 0.0, seed: 0 }
    }

    pub fn shots(shots: u64, detector_noise_std: f64, seed: u64) -> Self {
        Self { shots: Some(shots), detector_noise_std, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == Some(0) {
            return Err(Error::InvalidNoise("shot count must be at least 1".into()));
        }
        if !(self.detector_noise_std.is_finite() && self.detector_noise_std >= 0.0) {
            return Err(Error::InvalidNoise("detector noise std must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Measured product of filtered outputs for one plan entry and one set of ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub phase_index: Option<u32>,
    pub signs: Vec<i8>,
    pub ports: Vec<usize>,
    pub p_modes: Vec<usize>,
    pub value: Complex64,
    pub shots: Option<u64>,
}

/// Records from one protocol run together with the plan that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub plan: InputPlan,
    pub port_count: usize,
    /// Output mode filtered at each port.
    pub output_modes: Vec<usize>,
    pub noise: NoiseConfig,
    pub records: Vec<CorrelationRecord>,
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn entry_seed(seed: u64, entry: &PlanEntry, mask: usize) -> u64 {
    let sign_bits = entry.signs.iter().enumerate().fold(0u64, |acc, (j, &s)| acc | (((s < 0) as u64) << j));
    let parts = [entry.phase_index.map_or(0, |l| l as u64 + 1), sign_bits, mask as u64];
    parts.iter().fold(splitmix64(seed), |h, &p| splitmix64(h ^ p))
}

/// Exact (or noisy) correlation records for every plan entry and every non-empty subset of the ports.
pub fn simulate_records(
    oracle: &TruncatedUnitary,
    plan: &InputPlan,
    output_modes: &[usize],
    port_count: usize,
    noise: &NoiseConfig,
) -> Result<RecordSet> {
    noise.validate()?;
    let n = output_modes.len();
    if n > port_count {
        return Err(Error::NotEnoughPorts { requested: n, ports: port_count });
    }
    if n == 0 || n > 16 {
        return Err(Error::InvalidPlan(format!("{n} filtered outputs; expected 1..=16")));
    }
    let space = oracle.space();
    let modes = space.mode_count();
    if plan.mode_count() > modes {
        return Err(Error::InvalidPlan(format!(
            "plan drives {} modes but the oracle register has {modes}",
            plan.mode_count()
        )));
    }
    if let Some(&mode) = output_modes.iter().find(|&&p| p >= modes) {
        return Err(Error::InvalidMode { mode, mode_count: modes });
    }
    let nf = port_count as f64;
    let mut records = Vec::with_capacity(plan.entries.len() * ((1 << n) - 1));
    for entry in &plan.entries {
        let mut alphas = vec![Complex64::zero(); modes];
        alphas[..entry.amplitudes.len()].copy_from_slice(&entry.amplitudes);
        let psi = oracle.apply(&coherent_state(space, &alphas)?);
        // lowered[mask] = Π_{r ∈ mask} A_{p_r} ψ
        let mut lowered: Vec<StateVector> = Vec::with_capacity(1 << n);
        lowered.push(psi.clone());
        for mask in 1usize..1 << n {
            let top = usize::BITS - 1 - mask.leading_zeros();
            let rest = mask & !(1 << top);
            let next = lowered[rest].annihilate(output_modes[top as usize])?;
            lowered.push(next);
        }
        let moment: Vec<f64> = lowered.iter().map(StateVector::norm_sqr).collect();
        for mask in 1usize..1 << n {
            let ports: Vec<usize> = (0..n).filter(|r| mask >> r & 1 == 1).collect();
            let size = ports.len() as i32;
            let exact = psi.inner(&lowered[mask]) * nf.powi(-size).sqrt();
            let value = match noise.shots {
                None => exact,
                Some(shots) => {
                    let quantum = (nf.powi(-size) * moment[mask] - exact.norm_sqr()).max(0.0);
                    let sd2 = noise.detector_noise_std * noise.detector_noise_std;
                    let detector: f64 = subsets(mask)
                        .filter(|&s| s != 0)
                        .map(|s| {
                            let rest = mask & !s;
                            sd2.powi(s.count_ones() as i32) * nf.powi(-(rest.count_ones() as i32)) * moment[rest]
                        })
                        .sum();
                    let spread = ((quantum + detector) / 2.0 / shots as f64).sqrt();
                    let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(noise.seed, entry, mask));
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    exact + Complex64::new(re, im) * spread
                }
            };
            records.push(CorrelationRecord {
                phase_index: entry.phase_index,
                signs: entry.signs.clone(),
                p_modes: ports.iter().map(|&r| output_modes[r]).collect(),
                ports,
                value,
                shots: noise.shots,
            });
        }
    }
    Ok(RecordSet {
        plan: plan.clone(),
        port_count,
        output_modes: output_modes.to_vec(),
        noise: *noise,
        records,
    })
}

/// All sub-masks of `mask`, including 0 and `mask` itself.
fn subsets(mask: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(mask);
    core::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

/// Scattering-matrix element ⟨0|A_{p…} U A†_{k…}|0⟩ to reconstruct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    /// Output modes p_1…p_n.
    pub out_modes: Vec<usize>,
    /// Input plan modes k_1…k_m.
    pub in_modes: Vec<usize>,
}

impl Target {
    pub fn new(out_modes: &[usize], in_modes: &[usize]) -> Self {
        Self { out_modes: out_modes.to_vec(), in_modes: in_modes.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Strict,
    Heuristic,
}

/// First-order reconstruction of one element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub target: Target,
    pub value: Complex64,
    pub power: f64,
    pub port_count: usize,
    pub first_order_bound: f64,
    pub bound_kind: BoundKind,
}

/// M^{3m/2} (e^{|α|²} − 1).
pub fn first_order_bound(mode_count: usize, order: usize, power: f64) -> f64 {
    (mode_count as f64).powf(1.5 * order as f64) * power.exp_m1()
}

/// (1/R) Σ_{l=1}^{R} e^{2πil(d−m)/R}.
pub fn phase_delta_check(r: u32, d: i64, m: i64) -> Complex64 {
    let r = r.max(1);
    let k = (d - m).rem_euclid(r as i64) as f64;
    let sum: Complex64 = (1..=r)
        .map(|l| Complex64::from_polar(1.0, 2.0 * PI * ((l as f64 * k) % r as f64) / r as f64))
        .sum();
    sum / r as f64
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

fn check_target(records: &RecordSet, target: &Target) -> Result<()> {
    let m = target.in_modes.len();
    let n = target.out_modes.len();
    let modes = records.plan.mode_count();
    if m == 0 || m > modes {
        return Err(Error::InvalidTarget(format!("{m} input modes for a plan with {modes}")));
    }
    if let Some(k) = target.in_modes.iter().find(|&&k| k >= modes) {
        return Err(Error::InvalidTarget(format!("input mode {k} is not driven by the plan")));
    }
    if sorted(&target.in_modes).windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidTarget("input modes must be distinct".into()));
    }
    if n == 0 {
        return Err(Error::InvalidTarget("at least one output mode is required".into()));
    }
    if n > records.port_count {
        return Err(Error::NotEnoughPorts { requested: n, ports: records.port_count });
    }
    Ok(())
}

/// Σ over plan entries of F(entry) / Π_j α_{k_j}(entry), with nominal amplitudes.
fn weighted_sum(records: &RecordSet, target: &Target) -> Result<Complex64> {
    let want = sorted(&target.out_modes);
    let mut missing = Vec::new();
    let mut sum = Complex64::zero();
    for entry in &records.plan.entries {
        let found = records.records.iter().find(|r| {
            r.phase_index == entry.phase_index && r.signs == entry.signs && sorted(&r.p_modes) == want
        });
        match found {
            None => missing.push(entry.label()),
            Some(rec) => {
                let nominal = records.plan.nominal_amplitudes(entry);
                let denom: Complex64 = target.in_modes.iter().map(|&k| nominal[k]).product();
                sum += rec.value / denom;
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingRecords(missing));
    }
    Ok(sum)
}

/// Phase-and-sign averaged reconstruction valid for any vacuum-fixing scatterer.
pub fn reconstruct_general(records: &RecordSet, target: &Target) -> Result<Estimate> {
    if records.plan.kind != PlanKind::General {
        return Err(Error::InvalidPlan("general reconstruction needs a general plan".into()));
    }
    check_target(records, target)?;
    let big_m = records.plan.mode_count();
    let x = records.plan.power();
    let n = target.out_modes.len() as i32;
    let prefactor = (records.port_count as f64).powi(n).sqrt() * x.exp()
        / ((1u64 << big_m) as f64 * big_m as f64);
    Ok(Estimate {
        target: target.clone(),
        value: weighted_sum(records, target)? * prefactor,
        power: x,
        port_count: records.port_count,
        first_order_bound: first_order_bound(big_m, target.in_modes.len(), x),
        bound_kind: BoundKind::Heuristic,
    })
}

/// Sign-only reconstruction for number-conserving scatterers.
pub fn reconstruct_elastic(records: &RecordSet, target: &Target) -> Result<Estimate> {
    if records.plan.kind != PlanKind::Elastic {
        return Err(Error::InvalidPlan("elastic reconstruction needs an elastic plan".into()));
    }
    check_target(records, target)?;
    let m = target.in_modes.len();
    if target.out_modes.len() != m {
        return Err(Error::InvalidTarget(format!(
            "elastic reconstruction needs equal photon numbers, got {} out and {m} in",
            target.out_modes.len()
        )));
    }
    let big_m = records.plan.mode_count();
    let x = records.plan.power();
    let prefactor =
        (records.port_count as f64).powi(m as i32).sqrt() * x.exp() / (1u64 << (big_m - 1)) as f64;
    Ok(Estimate {
        target: target.clone(),
        value: weighted_sum(records, target)? * prefactor,
        power: x,
        port_count: records.port_count,
        first_order_bound: first_order_bound(big_m, m, x),
        bound_kind: BoundKind::Strict,
    })
}

/// Dispatch on the plan kind.
pub fn reconstruct(records: &RecordSet, target: &Target) -> Result<Estimate> {
    match records.plan.kind {
        PlanKind::General => reconstruct_general(records, target),
        PlanKind::Elastic => reconstruct_elastic(records, target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{exact_s_element, random_unitary, BasisSpec, FockSpace, UnitaryKind};
    use alloc::sync::Arc;

    fn space(m: usize, n: usize) -> Arc<FockSpace> {
        FockSpace::new(BasisSpec::new(m, n).unwrap()).unwrap()
    }

    #[test]
    fn plan_shapes() {
        let p1 = build_input_plan_general(1, &[0.1]).unwrap();
        assert_eq!(p1.entries.len(), 2);
        let phases: Vec<f64> = p1.entries.iter().map(|e| e.phase).collect();
        assert!((phases[0] - PI).abs() < 1e-15 && (phases[1] - 2.0 * PI).abs() < 1e-15);
        let p2 = build_input_plan_general(2, &[0.1, 0.1]).unwrap();
        assert_eq!(p2.entries.len(), 8);
        assert!(p2.entries.iter().all(|e| e.signs[0] == 1));
        let e2 = build_input_plan_elastic(2, &[0.1, 0.2]).unwrap();
        assert_eq!(e2.entries.iter().map(|e| e.signs.clone()).collect::<Vec<_>>(), vec![vec![1, 1], vec![1, -1]]);
        assert_eq!(build_input_plan_elastic(1, &[0.1]).unwrap().entries.len(), 1);
        assert_eq!(build_input_plan_elastic(3, &[0.1; 3]).unwrap().entries.len(), 4);
        assert!(matches!(build_input_plan_general(2, &[0.1, 0.0]), Err(Error::ZeroMagnitude { mode: 1 })));
        for p in [&p2, &e2] {
            for e in &p.entries {
                let nominal = p.nominal_amplitudes(e);
                assert!(nominal.iter().zip(&e.amplitudes).all(|(a, b)| (a - b).norm() < 1e-15));
            }
        }
    }

    #[test]
    fn bound_values() {
        assert_eq!(first_order_bound(2, 2, 0.0), 0.0);
        assert!((first_order_bound(2, 2, 0.01) - 8.0 * 0.01f64.exp_m1()).abs() < 1e-15);
        assert!((first_order_bound(2, 2, 0.01) - 0.08040).abs() < 1e-4);
        assert!((first_order_bound(1, 1, 1.0) - 1.718_281_828).abs() < 1e-8);
    }

    #[test]
    fn phase_delta_values() {
        assert!((phase_delta_check(4, 3, 3) - 1.0).norm() < 1e-15);
        assert!(phase_delta_check(4, 4, 3).norm() < 1e-12);
        assert!((phase_delta_check(4, 7, 3) - 1.0).norm() < 1e-15);
        assert!(phase_delta_check(6, -1, 3).norm() < 1e-12);
    }

    #[test]
    fn identity_single_record_value() {
        let s = space(1, 6);
        let u = random_unitary(&s, UnitaryKind::Identity, 0);
        let plan = build_input_plan_elastic(1, &[0.1]).unwrap();
        let rs = simulate_records(&u, &plan, &[0], 4, &NoiseConfig::exact()).unwrap();
        assert!((rs.records[0].value - 0.05).norm() < 1e-12);
        let err = simulate_records(&u, &plan, &[0, 0, 0], 2, &NoiseConfig::exact()).unwrap_err();
        assert!(matches!(err, Error::NotEnoughPorts { requested: 3, ports: 2 }));
    }

    #[test]
    fn identity_reconstruction_within_bound() {
        let s = space(1, 6);
        let u = random_unitary(&s, UnitaryKind::Identity, 0);
        for plan in [build_input_plan_general(1, &[0.1]).unwrap(), build_input_plan_elastic(1, &[0.1]).unwrap()] {
            let rs = simulate_records(&u, &plan, &[0], 1, &NoiseConfig::exact()).unwrap();
            let est = reconstruct(&rs, &Target::new(&[0], &[0])).unwrap();
            assert!((est.value - 1.0).norm() <= 0.01f64.exp_m1());
        }
    }

    #[test]
    fn two_photon_elastic_matches_explicit_form() {
        let s = space(2, 6);
        let u = random_unitary(&s, UnitaryKind::Elastic, 7);
        let mags = [0.06, 0.08];
        let plan = build_input_plan_elastic(2, &mags).unwrap();
        let rs = simulate_records(&u, &plan, &[0, 1], 2, &NoiseConfig::exact()).unwrap();
        let f = |signs: [i8; 2]| {
            rs.records.iter().find(|r| r.signs == signs && r.p_modes == [0, 1]).unwrap().value
        };
        let x: f64 = mags.iter().map(|m| m * m).sum();
        let explicit = x.exp() * (f([1, 1]) - f([1, -1])) / (mags[0] * mags[1]);
        let est = reconstruct_elastic(&rs, &Target::new(&[0, 1], &[0, 1])).unwrap();
        assert!((est.value - explicit).norm() < 1e-12);
        let exact = exact_s_element(&u, &[0, 1], &[0, 1]).unwrap();
        assert!((est.value - exact).norm() <= est.first_order_bound);
    }

    #[test]
    fn general_and_elastic_agree_and_share_records() {
        let s = space(2, 6);
        let u = random_unitary(&s, UnitaryKind::Elastic, 7);
        let mags = equal_magnitudes(2, 0.01);
        let general = simulate_records(&u, &build_input_plan_general(2, &mags).unwrap(), &[0, 1], 2, &NoiseConfig::exact()).unwrap();
        let elastic = simulate_records(&u, &build_input_plan_elastic(2, &mags).unwrap(), &[0, 1], 2, &NoiseConfig::exact()).unwrap();
        for t in [Target::new(&[0, 1], &[0, 1]), Target::new(&[0], &[0]), Target::new(&[1], &[0]), Target::new(&[0], &[1])] {
            let g = reconstruct_general(&general, &t).unwrap();
            let e = reconstruct_elastic(&elastic, &t).unwrap();
            let exact = exact_s_element(&u, &t.out_modes, &t.in_modes).unwrap();
            assert!((g.value - exact).norm() <= g.first_order_bound);
            assert!((g.value - e.value).norm() <= g.first_order_bound + e.first_order_bound);
            assert_eq!(g.bound_kind, BoundKind::Heuristic);
        }
    }

    #[test]
    fn general_protocol_handles_inelastic_oracles() {
        let s = space(2, 8);
        let u = random_unitary(&s, UnitaryKind::GeneralVacuumFixing, 3);
        let mags = equal_magnitudes(2, 0.002);
        let rs = simulate_records(&u, &build_input_plan_general(2, &mags).unwrap(), &[0, 1], 2, &NoiseConfig::exact()).unwrap();
        for t in [Target::new(&[0, 1], &[0]), Target::new(&[1], &[0, 1]), Target::new(&[0, 1], &[0, 1])] {
            let est = reconstruct_general(&rs, &t).unwrap();
            let exact = exact_s_element(&u, &t.out_modes, &t.in_modes).unwrap();
            assert!((est.value - exact).norm() <= est.first_order_bound, "{t:?}");
        }
    }

    #[test]
    fn missing_records_are_listed() {
        let s = space(2, 6);
        let u = random_unitary(&s, UnitaryKind::Elastic, 1);
        let plan = build_input_plan_elastic(2, &[0.05, 0.05]).unwrap();
        let mut rs = simulate_records(&u, &plan, &[0, 1], 2, &NoiseConfig::exact()).unwrap();
        rs.records.retain(|r| r.signs != [1, -1]);
        match reconstruct(&rs, &Target::new(&[0, 1], &[0, 1])) {
            Err(Error::MissingRecords(list)) => assert_eq!(list, vec![String::from("(s=+-)")]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noisy_records_are_deterministic_and_centred() {
        let s = space(2, 6);
        let u = random_unitary(&s, UnitaryKind::Elastic, 7);
        let plan = build_input_plan_elastic(2, &equal_magnitudes(2, 0.01)).unwrap();
        let noise = NoiseConfig::shots(1_000_000, 1.0, 11);
        let a = simulate_records(&u, &plan, &[0, 1], 2, &noise).unwrap();
        let b = simulate_records(&u, &plan, &[0, 1], 2, &noise).unwrap();
        assert_eq!(a, b);
        let exact = simulate_records(&u, &plan, &[0, 1], 2, &NoiseConfig::exact()).unwrap();
        let reps = 400;
        let mut mean = Complex64::zero();
        let mut var = 0.0;
        let rec = 2;
        for k in 0..reps {
            let rs = simulate_records(&u, &plan, &[0, 1], 2, &NoiseConfig::shots(1_000_000, 1.0, k)).unwrap();
            let d = rs.records[rec].value - exact.records[rec].value;
            mean += d;
            var += d.norm_sqr();
        }
        mean /= reps as f64;
        let se = (var / reps as f64 / reps as f64).sqrt();
        assert!(mean.norm() < 3.0 * se * 2f64.sqrt());
    }
}
