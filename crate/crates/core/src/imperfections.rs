//! Preparation imperfections injected into input plans, and empirical checks of how they
//! propagate into the reconstructed scattering element.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::TruncatedUnitary;
use crate::protocol::{reconstruct, simulate_records, InputPlan, NoiseConfig, Target};
use crate::stats::loglog_slope;

/// Excess errors below this are treated as numerically zero.
pub const EXCESS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    /// s_j → s_j + δs on the relative signs.
    Sign,
    /// |α|² → |α|² + δn with the relative weights kept.
    Power,
    /// φ_l → φ_l + δφ.
    Phase,
}

impl PerturbationKind {
    pub const ALL: [Self; 3] = [Self::Sign, Self::Power, Self::Phase];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sign => "sign",
            Self::Power => "power",
            Self::Phase => "phase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    All,
    /// Zero-based mode whose sign is perturbed; mode 0 is the reference and cannot be chosen.
    Mode(usize),
    /// Phase index l.
    Phase(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub magnitude: f64,
    pub selector: Selector,
    /// Random ±1 direction per perturbed quantity; `None` shifts everything upwards.
    pub seed: Option<u64>,
}

impl Perturbation {
    pub fn new(kind: PerturbationKind, magnitude: f64) -> Self {
        Self { kind, magnitude, selector: Selector::All, seed: None }
    }

    fn validate(&self, plan: &InputPlan) -> Result<()> {
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::InvalidStudy(format!("perturbation magnitude {} must be ≥ 0", self.magnitude)));
        }
        let ok = match (self.kind, self.selector) {
            (_, Selector::All) => true,
            (PerturbationKind::Sign, Selector::Mode(j)) => j >= 1 && j < plan.mode_count(),
            (PerturbationKind::Phase, Selector::Phase(_)) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidStudy(format!("selector {:?} does not apply to {} perturbations", self.selector, self.kind.name())));
        }
        Ok(())
    }
}

fn direction(rng: &mut Option<ChaCha8Rng>) -> f64 {
    match rng.as_mut().map(|r| r.random::<bool>()) {
        Some(true) => -1.0,
        _ => 1.0,
    }
}

/// Apply perturbations in order and recompute every entry's amplitudes.
pub fn perturb_plan(plan: &InputPlan, perturbations: &[Perturbation]) -> Result<InputPlan> {
    let mut out = plan.clone();
    if perturbations.is_empty() {
        return Ok(out);
    }
    for p in perturbations {
        p.validate(&out)?;
        let mut rng = p.seed.map(ChaCha8Rng::seed_from_u64);
        match p.kind {
            PerturbationKind::Sign => {
                let modes = match p.selector {
                    Selector::Mode(j) => j..j + 1,
                    _ => 1..out.mode_count(),
                };
                for entry in &mut out.entries {
                    for j in modes.clone() {
                        entry.sign_values[j] += direction(&mut rng) * p.magnitude;
                    }
                }
            }
            PerturbationKind::Power => {
                let power: f64 = out.prepared_magnitudes.iter().map(|m| m * m).sum();
                let shifted = power + direction(&mut rng) * p.magnitude;
                if shifted.is_nan() || shifted <= 0.0 {
                    return Err(Error::NonPositivePower { power: shifted });
                }
                let scale = (shifted / power).sqrt();
                out.prepared_magnitudes.iter_mut().for_each(|m| *m *= scale);
            }
            PerturbationKind::Phase => {
                let mut shifts: Vec<(Option<u32>, f64)> = Vec::new();
                for entry in &mut out.entries {
                    let hit = match p.selector {
                        Selector::Phase(l) => entry.phase_index == Some(l),
                        _ => true,
                    };
                    if !hit {
                        continue;
                    }
                    let shift = match shifts.iter().find(|(l, _)| *l == entry.phase_index) {
                        Some(&(_, s)) => s,
                        None => {
                            let s = direction(&mut rng) * p.magnitude;
                            shifts.push((entry.phase_index, s));
                            s
                        }
                    };
                    entry.phase += shift;
                }
            }
        }
    }
    out.perturbed = true;
    out.refresh_amplitudes();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: PerturbationKind,
    pub selector: Selector,
    pub deltas: Vec<f64>,
    /// Base seed for random directions; oracle i uses `seed + i`.
    pub direction_seed: Option<u64>,
    pub port_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub kind: PerturbationKind,
    pub delta: f64,
    pub base_power: f64,
    pub excess_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub kind: PerturbationKind,
    pub base_power: f64,
    pub rows: Vec<StudyRow>,
    pub fitted_exponent: Option<f64>,
    /// Every excess error fell below [`EXCESS_FLOOR`].
    pub inconclusive: bool,
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    let positive: Vec<f64> = deltas.iter().copied().filter(|d| *d > 0.0).collect();
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidStudy("perturbation magnitudes must be finite and ≥ 0".into()));
    }
    let (lo, hi) = positive.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if positive.len() < 4 || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InvalidStudy(format!(
            "need ≥ 4 positive magnitudes spanning a decade, got {}",
            positive.len()
        )));
    }
    Ok(())
}

/// Noise-free excess error |E_δ − E_0| per δ, averaged over the given oracles, with a log-log fit.
pub fn scaling_study(
    oracles: &[TruncatedUnitary],
    target: &Target,
    plan: &InputPlan,
    config: &StudyConfig,
) -> Result<ScalingStudy> {
    check_deltas(&config.deltas)?;
    if oracles.is_empty() {
        return Err(Error::InvalidStudy("no oracles given".into()));
    }
    let estimate = |oracle: &TruncatedUnitary, plan: &InputPlan| -> Result<Complex64> {
        let records = simulate_records(oracle, plan, &target.out_modes, config.port_count, &NoiseConfig::exact())?;
        Ok(reconstruct(&records, target)?.value)
    };
    let baselines = oracles.iter().map(|o| estimate(o, plan)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(config.deltas.len());
    for &delta in &config.deltas {
        let mut total = 0.0;
        for (i, (oracle, base)) in oracles.iter().zip(&baselines).enumerate() {
            let p = Perturbation {
                kind: config.kind,
                magnitude: delta,
                selector: config.selector,
                seed: config.direction_seed.map(|s| s.wrapping_add(i as u64)),
            };
            total += (estimate(oracle, &perturb_plan(plan, &[p])?)? - base).norm();
        }
        rows.push(StudyRow { kind: config.kind, delta, base_power: plan.power(), excess_error: total / oracles.len() as f64 });
    }
    let fit_points = rows.iter().filter(|r| r.delta > 0.0 && r.excess_error >= EXCESS_FLOOR).map(|r| (r.delta, r.excess_error));
    let fitted_exponent = loglog_slope(fit_points);
    let inconclusive = rows.iter().all(|r| r.excess_error < EXCESS_FLOOR);
    Ok(ScalingStudy { kind: config.kind, base_power: plan.power(), rows, fitted_exponent, inconclusive })
}

/// How the phase-induced excess error changes between two base powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRatio {
    pub low: ScalingStudy,
    pub high: ScalingStudy,
    /// Mean over δ of excess(low power) / excess(high power).
    pub observed: f64,
    /// (high/low)^{(m−1)/2}.
    pub expected: f64,
}

impl PowerRatio {
    pub fn within(&self, rel_tol: f64) -> bool {
        (self.observed / self.expected - 1.0).abs() <= rel_tol
    }
}

/// Run the same study on plans built at two base powers and compare against |α|^{−(m−1)}.
pub fn power_ratio_study<F>(
    oracles: &[TruncatedUnitary],
    target: &Target,
    build_plan: F,
    powers: (f64, f64),
    config: &StudyConfig,
) -> Result<PowerRatio>
where
    F: Fn(f64) -> Result<InputPlan>,
{
    let (lo, hi) = powers;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidStudy(format!("base powers must satisfy 0 < low < high, got {lo}, {hi}")));
    }
    let low = scaling_study(oracles, target, &build_plan(lo)?, config)?;
    let high = scaling_study(oracles, target, &build_plan(hi)?, config)?;
    let ratios: Vec<f64> = low
        .rows
        .iter()
        .zip(&high.rows)
        .filter(|(a, b)| a.excess_error >= EXCESS_FLOOR && b.excess_error >= EXCESS_FLOOR)
        .map(|(a, b)| a.excess_error / b.excess_error)
        .collect();
    if ratios.is_empty() {
        return Err(Error::InvalidStudy("phase excess error vanished at every δ".into()));
    }
    let observed = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let m = target.in_modes.len() as f64;
    Ok(PowerRatio { low, high, observed, expected: (hi / lo).powf(0.5 * (m - 1.0)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{random_unitary, BasisSpec, FockSpace, UnitaryKind, DEFAULT_TRUNCATION_TOL};
    use crate::protocol::{build_input_plan_elastic, build_input_plan_general, equal_magnitudes};
    use alloc::sync::Arc;
    use alloc::vec;
    use proptest::prelude::*;

    fn oracle(power: f64, seed: u64) -> TruncatedUnitary {
        let cutoff = BasisSpec::default_cutoff(power, 2, DEFAULT_TRUNCATION_TOL);
        let space = Arc::new(FockSpace::new(BasisSpec::new(2, cutoff).unwrap()).unwrap());
        random_unitary(&space, UnitaryKind::Elastic, seed)
    }

    fn deltas() -> Vec<f64> {
        vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
    }

    #[test]
    fn empty_list_is_identity() {
        let plan = build_input_plan_general(3, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(perturb_plan(&plan, &[]).unwrap(), plan);
    }

    #[test]
    fn zero_magnitude_keeps_amplitudes() {
        let plan = build_input_plan_general(2, &equal_magnitudes(2, 0.3)).unwrap();
        let all: Vec<Perturbation> = PerturbationKind::ALL.iter().map(|&k| Perturbation::new(k, 0.0)).collect();
        let out = perturb_plan(&plan, &all).unwrap();
        assert!(out.perturbed);
        for (a, b) in plan.entries.iter().zip(&out.entries) {
            assert_eq!(a.amplitudes, b.amplitudes);
        }
    }

    #[test]
    fn sign_shift_scales_selected_mode() {
        let plan = build_input_plan_elastic(3, &[0.1, 0.2, 0.3]).unwrap();
        let p = Perturbation { selector: Selector::Mode(1), ..Perturbation::new(PerturbationKind::Sign, 0.01) };
        let out = perturb_plan(&plan, &[p]).unwrap();
        for (a, b) in plan.entries.iter().zip(&out.entries) {
            let s = a.signs[1] as f64;
            assert!((b.amplitudes[1] - a.amplitudes[1] * ((s + 0.01) / s)).norm() < 1e-15);
            assert_eq!(a.amplitudes[0], b.amplitudes[0]);
            assert_eq!(a.amplitudes[2], b.amplitudes[2]);
        }
        let bad = Perturbation { selector: Selector::Mode(0), ..p };
        assert!(matches!(perturb_plan(&plan, &[bad]), Err(Error::InvalidStudy(_))));
    }

    #[test]
    fn phase_shift_is_exact() {
        let plan = build_input_plan_general(2, &equal_magnitudes(2, 0.2)).unwrap();
        let p = Perturbation { selector: Selector::Phase(3), ..Perturbation::new(PerturbationKind::Phase, 0.02) };
        let out = perturb_plan(&plan, &[p]).unwrap();
        for e in &out.entries {
            let shift = if e.phase_index == Some(3) { 0.02 } else { 0.0 };
            assert_eq!(e.phase, plan.nominal_phase(e) + shift);
        }
    }

    #[test]
    fn power_shift_preserves_weights_and_rejects_depletion() {
        let plan = build_input_plan_general(2, &[0.3, 0.4]).unwrap();
        let out = perturb_plan(&plan, &[Perturbation::new(PerturbationKind::Power, 0.05)]).unwrap();
        let power: f64 = out.prepared_magnitudes.iter().map(|m| m * m).sum();
        assert!((power - 0.3).abs() < 1e-15);
        assert!((out.prepared_magnitudes[0] / out.prepared_magnitudes[1] - 0.75).abs() < 1e-15);
        assert_eq!(out.magnitudes, plan.magnitudes);
        let drain = (0..64u64)
            .map(|seed| Perturbation { seed: Some(seed), ..Perturbation::new(PerturbationKind::Power, 0.5) })
            .find_map(|p| perturb_plan(&plan, &[p]).err());
        assert!(matches!(drain, Some(Error::NonPositivePower { .. })));
    }

    #[test]
    fn study_requires_decade() {
        let o = [oracle(0.1, 1)];
        let plan = build_input_plan_elastic(2, &equal_magnitudes(2, 0.1)).unwrap();
        let cfg = StudyConfig { kind: PerturbationKind::Sign, selector: Selector::All, deltas: vec![1e-3, 2e-3, 3e-3, 4e-3], direction_seed: None, port_count: 2 };
        assert!(matches!(scaling_study(&o, &Target::new(&[0], &[0]), &plan, &cfg), Err(Error::InvalidStudy(_))));
    }

    #[test]
    fn linear_exponents_on_elastic_oracle() {
        let oracles: Vec<_> = (0..3).map(|s| oracle(0.1, s)).collect();
        let target = Target::new(&[0, 1], &[0, 1]);
        let general = build_input_plan_general(2, &equal_magnitudes(2, 0.1)).unwrap();
        for kind in PerturbationKind::ALL {
            let cfg = StudyConfig { kind, selector: Selector::All, deltas: deltas(), direction_seed: Some(7), port_count: 2 };
            let study = scaling_study(&oracles, &target, &general, &cfg).unwrap();
            let slope = study.fitted_exponent.unwrap();
            assert!((slope - 1.0).abs() < 0.2, "{kind:?} {slope}");
            assert!(!study.inconclusive);
        }
    }

    #[test]
    fn zero_delta_has_zero_excess() {
        let oracles = [oracle(0.1, 4)];
        let target = Target::new(&[0], &[1]);
        let plan = build_input_plan_elastic(2, &equal_magnitudes(2, 0.1)).unwrap();
        let mut ds = deltas();
        ds.insert(0, 0.0);
        let cfg = StudyConfig { kind: PerturbationKind::Power, selector: Selector::All, deltas: ds, direction_seed: None, port_count: 2 };
        let study = scaling_study(&oracles, &target, &plan, &cfg).unwrap();
        assert_eq!(study.rows[0].excess_error, 0.0);
        let slope = study.fitted_exponent.unwrap();
        assert!((slope - 1.0).abs() < 0.2, "{slope}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn perturbation_only_touches_its_target(delta in 0.0f64..0.1, seed in any::<u64>(), kind in 0usize..3) {
            let plan = build_input_plan_general(2, &[0.2, 0.25]).unwrap();
            let kind = PerturbationKind::ALL[kind];
            let out = perturb_plan(&plan, &[Perturbation { seed: Some(seed), ..Perturbation::new(kind, delta) }]).unwrap();
            for (a, b) in plan.entries.iter().zip(&out.entries) {
                prop_assert_eq!(a.sign_values[0], b.sign_values[0]);
                prop_assert_eq!(kind == PerturbationKind::Phase || a.phase == b.phase, true);
                prop_assert_eq!(&a.signs, &b.signs);
                prop_assert!((b.sign_values[1] - a.sign_values[1]).abs() <= delta * (1.0 + 1e-12));
                prop_assert!((b.phase - a.phase).abs() <= delta * (1.0 + 1e-12));
            }
        }
    }
}
