use scattomo_core::imperfections::{power_ratio_study, scaling_study, PerturbationKind, ScalingStudy, Selector, StudyConfig};
use serde::{Deserialize, Serialize};

use super::{build_oracle, equal_plan, file_name, Check, RunContext};
use crate::config::{ImperfectionsConfig, OracleConfig};
use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionRow {
    pub kind: PerturbationKind,
    pub delta: f64,
    pub base_power: f64,
    pub excess_error: f64,
    pub fitted_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub kind: PerturbationKind,
    pub base_power: f64,
    pub exponent: Option<f64>,
    pub inconclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionsReport {
    pub command: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub oracle_seeds: Vec<u64>,
    pub exponents: Vec<ExponentSummary>,
    pub phase_ratio_observed: f64,
    pub phase_ratio_expected: f64,
    pub checks: Vec<Check>,
}

fn rows(study: &ScalingStudy) -> impl Iterator<Item = ImperfectionRow> + '_ {
    study.rows.iter().map(|r| ImperfectionRow {
        kind: r.kind,
        delta: r.delta,
        base_power: r.base_power,
        excess_error: r.excess_error,
        fitted_exponent: study.fitted_exponent,
    })
}

fn summary(study: &ScalingStudy) -> ExponentSummary {
    ExponentSummary {
        kind: study.kind,
        base_power: study.base_power,
        exponent: study.fitted_exponent,
        inconclusive: study.inconclusive,
    }
}

/// Linear-scaling studies for each imperfection kind, averaged over several oracles.
pub fn imperfections(cfg: &ImperfectionsConfig, ctx: &RunContext) -> Result<ImperfectionsReport, CliError> {
    let &[low, high] = cfg.phase_powers.as_slice() else {
        return Err(CliError::Config("phase_powers needs exactly two values".into()));
    };
    let target = cfg.sector.target();
    let order = target.out_modes.len().max(target.in_modes.len());
    let top = cfg.power.max(high).max(low);
    let base_seed = cfg.oracle.seed.unwrap_or(ctx.seed);
    let oracle_seeds: Vec<u64> = (0..cfg.oracle_count as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let build = |kind| {
        oracle_seeds
            .iter()
            .map(|&s| build_oracle(&OracleConfig { seed: Some(s), kind, ..cfg.oracle }, top, order, s))
            .collect::<Result<Vec<_>, _>>()
    };
    let oracles = build(cfg.oracle.kind)?;
    let phase_oracles = if cfg.phase_oracle == cfg.oracle.kind { oracles.clone() } else { build(cfg.phase_oracle)? };
    let plan = equal_plan(cfg.plan, cfg.oracle.modes, cfg.power)?;
    let study_config = |kind| StudyConfig {
        kind,
        selector: Selector::All,
        deltas: cfg.deltas.clone(),
        direction_seed: cfg.random_directions.then_some(ctx.seed),
        port_count: cfg.ports,
    };
    let mut table = Vec::new();
    let mut exponents = Vec::new();
    let mut checks = Vec::new();
    for kind in PerturbationKind::ALL {
        let study = scaling_study(&oracles, &target, &plan, &study_config(kind))?;
        table.extend(rows(&study));
        exponents.push(summary(&study));
        let value = study.fitted_exponent.unwrap_or(f64::NAN);
        checks.push(Check::within(&format!("{} exponent", kind.name()), value, 0.8, 1.2));
    }
    let ratio = power_ratio_study(
        &phase_oracles,
        &target,
        |x| equal_plan(cfg.plan, cfg.oracle.modes, x),
        (low, high),
        &study_config(PerturbationKind::Phase),
    )?;
    for study in [&ratio.low, &ratio.high] {
        table.extend(rows(study));
        exponents.push(summary(study));
    }
    checks.push(Check::within(
        "phase excess ratio / expected power law",
        ratio.observed / ratio.expected,
        0.7,
        1.3,
    ));
    let path = ctx.path("imperfections.csv");
    io::write_csv(&path, table)?;
    let report = ImperfectionsReport {
        command: "imperfections".into(),
        seed: ctx.seed,
        files: vec![file_name(&path)],
        oracle_seeds,
        exponents,
        phase_ratio_observed: ratio.observed,
        phase_ratio_expected: ratio.expected,
        checks,
    };
    ctx.finish("imperfections", report)
}
