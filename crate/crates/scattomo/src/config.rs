//! Experiment configuration. Every section is optional; missing fields take the defaults below.

use std::path::{Path, PathBuf};

use scattomo_core::deconvolution::KernelConfig;
use scattomo_core::hilbert::UnitaryKind;
use scattomo_core::protocol::{PlanKind, Target};
use scattomo_core::waveguide::{QuadratureConfig, QubitParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::schema::{self, SchemaKind};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub reconstruct: ReconstructConfig,
    pub figure3: Figure3Config,
    pub scaling: ScalingConfig,
    pub noise_demo: NoiseDemoConfig,
    pub imperfections: ImperfectionsConfig,
}

impl ExperimentConfig {
    /// Parse and schema-check a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("not valid JSON: {e}")))?;
        schema::validate(SchemaKind::Config, &value)?;
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub modes: usize,
    pub kind: UnitaryKind,
    /// Photon cutoff; chosen from the largest power in use when absent.
    pub cutoff: Option<usize>,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { modes: 2, kind: UnitaryKind::Elastic, cutoff: None, seed: None }
    }
}

impl OracleConfig {
    pub fn plan_kind(&self) -> PlanKind {
        match self.kind {
            UnitaryKind::GeneralVacuumFixing => PlanKind::General,
            _ => PlanKind::Elastic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub out: Vec<usize>,
    #[serde(rename = "in")]
    pub input: Vec<usize>,
}

impl SectorConfig {
    pub fn target(&self) -> Target {
        Target::new(&self.out, &self.input)
    }
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self { out: vec![0, 1], input: vec![0, 1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    pub detector_noise_std: f64,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self { shots: None, detector_noise_std: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtrapolationSettings {
    pub factor: f64,
    /// 1 disables extrapolation.
    pub order: usize,
}

impl Default for ExtrapolationSettings {
    fn default() -> Self {
        Self { factor: 1.05, order: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub oracle: OracleConfig,
    /// Follows the oracle kind when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanKind>,
    pub power: f64,
    /// Per-mode magnitudes; overrides `power` when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitudes: Option<Vec<f64>>,
    pub ports: usize,
    /// Empty means every sector with up to two photons that the plan supports.
    pub sectors: Vec<SectorConfig>,
    pub noise: NoiseSettings,
    pub extrapolation: ExtrapolationSettings,
    /// Reconstruct from a records document instead of simulating the oracle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records_in: Option<PathBuf>,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            oracle: OracleConfig::default(),
            plan: None,
            power: 0.01,
            magnitudes: None,
            ports: 2,
            sectors: Vec::new(),
            noise: NoiseSettings::default(),
            extrapolation: ExtrapolationSettings::default(),
            records_in: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitSettings {
    pub omega0: f64,
    pub gamma: f64,
}

impl Default for QubitSettings {
    fn default() -> Self {
        let p = QubitParams::default();
        Self { omega0: p.omega0, gamma: p.gamma }
    }
}

impl QubitSettings {
    pub fn params(&self) -> Result<QubitParams, CliError> {
        Ok(QubitParams::new(self.omega0, self.gamma)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    pub nodes: usize,
    pub check_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self { nodes: q.nodes, check_nodes: q.check_nodes, rel_tol: q.rel_tol }
    }
}

impl QuadratureSettings {
    pub fn config(&self) -> QuadratureConfig {
        QuadratureConfig { nodes: self.nodes, check_nodes: self.check_nodes, rel_tol: self.rel_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSettings {
    pub q_max: usize,
    pub series_tol: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        let k = KernelConfig::new(1.0);
        Self { q_max: k.q_max, series_tol: k.series_tol }
    }
}

impl KernelSettings {
    pub fn config(&self, sigma: f64) -> KernelConfig {
        KernelConfig { sigma, q_max: self.q_max, series_tol: self.series_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundPanel {
    pub modes: usize,
    pub order: usize,
    pub factor: f64,
    pub max_order: usize,
    pub powers: Vec<f64>,
}

impl Default for BoundPanel {
    fn default() -> Self {
        Self { modes: 2, order: 2, factor: 1.05, max_order: 12, powers: (1..=24).map(|i| 0.05 * i as f64).collect() }
    }
}

/// A (Δ_p, Δ_k) surface at k̂ = ω₀ + offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfacePanel {
    pub sigma: f64,
    pub khat_offset: f64,
    pub half_width: f64,
    pub step: f64,
}

impl Default for SurfacePanel {
    fn default() -> Self {
        Self { sigma: 0.8, khat_offset: 1.5, half_width: 3.0, step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossSectionPanel {
    pub sigmas: Vec<f64>,
    pub delta_p: f64,
    pub khat_offset: f64,
    pub half_width: f64,
    pub step: f64,
}

impl Default for CrossSectionPanel {
    fn default() -> Self {
        Self { sigmas: vec![0.4, 0.8], delta_p: 1.5, khat_offset: 1.5, half_width: 3.0, step: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure3Config {
    pub qubit: QubitSettings,
    pub quadrature: QuadratureSettings,
    pub kernel: KernelSettings,
    pub a: BoundPanel,
    pub b: SurfacePanel,
    pub c: CrossSectionPanel,
    pub d: SurfacePanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub qubit: QubitSettings,
    pub quadrature: QuadratureSettings,
    pub sigmas: Vec<f64>,
    pub khat_half_width: f64,
    pub delta_half_width: f64,
    pub step: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            qubit: QubitSettings::default(),
            quadrature: QuadratureSettings::default(),
            sigmas: (0..6).map(|i| 0.01 * 10f64.powf(i as f64 / 5.0)).collect(),
            khat_half_width: 2.0,
            delta_half_width: 2.0,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseDemoConfig {
    pub oracle: OracleConfig,
    pub power: f64,
    pub ports: usize,
    pub sector: SectorConfig,
    pub shots: Vec<u64>,
    pub repetitions: usize,
    pub detector_noise_std: f64,
}

impl Default for NoiseDemoConfig {
    fn default() -> Self {
        Self {
            oracle: OracleConfig::default(),
            power: 0.1,
            ports: 2,
            sector: SectorConfig::default(),
            shots: vec![10_000, 100_000, 1_000_000],
            repetitions: 400,
            detector_noise_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImperfectionsConfig {
    pub oracle: OracleConfig,
    /// Oracles with seeds seed, seed+1, … are averaged.
    pub oracle_count: usize,
    pub plan: PlanKind,
    pub power: f64,
    pub ports: usize,
    pub sector: SectorConfig,
    pub deltas: Vec<f64>,
    pub phase_powers: Vec<f64>,
    /// Scatterer kind for the two-power phase study; global phases drop out for elastic ones.
    pub phase_oracle: UnitaryKind,
    /// Draw an independent sign for each perturbed quantity.
    pub random_directions: bool,
}

impl Default for ImperfectionsConfig {
    fn default() -> Self {
        Self {
            oracle: OracleConfig::default(),
            oracle_count: 10,
            plan: PlanKind::General,
            power: 0.1,
            ports: 2,
            sector: SectorConfig::default(),
            deltas: (0..5).map(|i| 1e-4 * 10f64.powf(i as f64 / 2.0)).collect(),
            phase_powers: vec![0.5, 1.0],
            phase_oracle: UnitaryKind::GeneralVacuumFixing,
            random_directions: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn defaults_validate_against_schema() {
        let value = serde_json::to_value(ExperimentConfig::default()).unwrap();
        schema::validate(SchemaKind::Config, &value).unwrap();
    }

    #[test]
    fn rejects_unknown_and_mistyped_fields() {
        for text in [r#"{"bogus": 1}"#, r#"{"reconstruct": {"power": -1}}"#, r#"{"figure3": {"a": {"factor": 1.0}}}"#, "[1"] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(CliError::Config(_) | CliError::Schema(_))), "{text}");
        }
    }

    #[test]
    fn sector_uses_in_keyword() {
        let cfg = ExperimentConfig::from_json(r#"{"reconstruct": {"sectors": [{"out": [1], "in": [0]}]}}"#).unwrap();
        assert_eq!(cfg.reconstruct.sectors[0].target(), Target::new(&[1], &[0]));
    }
}
