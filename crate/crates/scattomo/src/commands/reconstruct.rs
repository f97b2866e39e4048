use std::collections::BTreeMap;

use scattomo_core::extrapolation::{combine, z_order_bound, PowerLadder};
use scattomo_core::hilbert::{exact_s_element, UnitaryKind};
use scattomo_core::protocol::{
    reconstruct as estimate, simulate_records, splitmix64, BoundKind, NoiseConfig, PlanKind, RecordSet, Target,
};
use scattomo_core::Error as EngineError;
use serde::{Deserialize, Serialize};

use super::{build_oracle, build_plan, file_name, Check, RunContext};
use crate::config::{NoiseSettings, ReconstructConfig};
use crate::error::CliError;
use crate::io::{self, RecordsDocument};
use crate::schema::SchemaKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub modes: usize,
    pub kind: UnitaryKind,
    pub cutoff: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub order: usize,
    pub factor: f64,
    pub re: f64,
    pub im: f64,
    pub error: Option<f64>,
    pub bound: f64,
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorEstimate {
    pub out: Vec<usize>,
    #[serde(rename = "in")]
    pub input: Vec<usize>,
    pub re: f64,
    pub im: f64,
    pub exact_re: Option<f64>,
    pub exact_im: Option<f64>,
    pub error: Option<f64>,
    pub bound: f64,
    pub bound_kind: BoundKind,
    pub within_bound: Option<bool>,
    pub extrapolated: Option<Extrapolated>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub command: String,
    pub seed: u64,
    pub plan: PlanKind,
    pub power: f64,
    pub ports: usize,
    pub oracle: Option<OracleSummary>,
    pub noise: NoiseSettings,
    pub records: String,
    pub estimates: Vec<SectorEstimate>,
    pub checks: Vec<Check>,
}

/// Distinct-mode sectors with up to two photons on each side, outputs on the first `ports` modes.
fn default_sectors(modes: usize, ports: usize, kind: PlanKind) -> Vec<Target> {
    let subsets = |limit: usize| -> Vec<Vec<usize>> {
        let single = (0..limit).map(|a| vec![a]);
        let pairs = (0..limit).flat_map(|a| (a + 1..limit).map(move |b| vec![a, b]));
        single.chain(pairs).collect()
    };
    let outs = subsets(modes.min(ports));
    let ins = subsets(modes);
    outs.iter()
        .flat_map(|o| ins.iter().map(move |i| Target::new(o, i)))
        .filter(|t| kind == PlanKind::General || t.out_modes.len() == t.in_modes.len())
        .collect()
}

/// Smallest multiset of output modes containing every sector's outputs.
fn output_union(targets: &[Target]) -> Vec<usize> {
    let mut need: BTreeMap<usize, usize> = BTreeMap::new();
    for t in targets {
        let mut own: BTreeMap<usize, usize> = BTreeMap::new();
        t.out_modes.iter().for_each(|&p| *own.entry(p).or_default() += 1);
        for (p, c) in own {
            let slot = need.entry(p).or_default();
            *slot = (*slot).max(c);
        }
    }
    need.into_iter().flat_map(|(p, c)| std::iter::repeat_n(p, c)).collect()
}

fn scaled(magnitudes: &[f64], from: f64, to: f64) -> Vec<f64> {
    let s = (to / from).sqrt();
    magnitudes.iter().map(|m| m * s).collect()
}

pub fn reconstruct(cfg: &ReconstructConfig, ctx: &RunContext) -> Result<ReconstructReport, CliError> {
    if let Some(path) = &cfg.records_in {
        return from_records(cfg, ctx, RecordsDocument::load(path)?);
    }
    let modes = cfg.oracle.modes;
    let kind = cfg.plan.unwrap_or(cfg.oracle.plan_kind());
    let magnitudes = match &cfg.magnitudes {
        Some(m) => m.clone(),
        None => scattomo_core::protocol::equal_magnitudes(modes, cfg.power),
    };
    if magnitudes.len() > modes {
        return Err(CliError::Config(format!("{} magnitudes for an oracle with {modes} modes", magnitudes.len())));
    }
    let power: f64 = magnitudes.iter().map(|m| m * m).sum();
    let targets = sector_targets(cfg, magnitudes.len(), kind)?;
    let outputs = output_union(&targets);
    if outputs.len() > cfg.ports {
        return Err(EngineError::NotEnoughPorts { requested: outputs.len(), ports: cfg.ports }.into());
    }
    let z = cfg.extrapolation.order;
    let ladder = (z > 1).then(|| PowerLadder::new(power, cfg.extrapolation.factor, z)).transpose()?;
    let top_power = ladder.map_or(power, |l| l.power(z - 1));
    let order = targets.iter().map(|t| t.out_modes.len().max(t.in_modes.len())).max().unwrap_or(1);
    let oracle = build_oracle(&cfg.oracle, top_power, order, ctx.seed)?;
    let noise_for = |q: u64| NoiseConfig {
        shots: cfg.noise.shots,
        detector_noise_std: cfg.noise.detector_noise_std,
        seed: splitmix64(ctx.seed ^ splitmix64(q + 1)),
    };
    let simulate = |q: usize, p: f64| -> Result<RecordSet, CliError> {
        let plan = build_plan(kind, &scaled(&magnitudes, power, p))?;
        Ok(simulate_records(&oracle, &plan, &outputs, cfg.ports, &noise_for(q as u64))?)
    };
    let base_plan = build_plan(kind, &magnitudes)?;
    let records = simulate_records(&oracle, &base_plan, &outputs, cfg.ports, &noise_for(0))?;
    let records_path = ctx.path("records.json");
    io::write_json(&records_path, &RecordsDocument::from_set(&records), SchemaKind::Records)?;
    let ladder_sets = match ladder {
        Some(l) => {
            let mut sets = vec![records.clone()];
            for q in 1..z {
                sets.push(simulate(q, l.power(q))?);
            }
            sets
        }
        None => Vec::new(),
    };
    let mut estimates = Vec::with_capacity(targets.len());
    for target in &targets {
        let est = estimate(&records, target)?;
        let exact = exact_s_element(&oracle, &target.out_modes, &target.in_modes)?;
        let error = (est.value - exact).norm();
        let extrapolated = match ladder {
            Some(l) => {
                let pairs = ladder_sets
                    .iter()
                    .zip(l.powers())
                    .map(|(set, p)| Ok((p, estimate(set, target)?.value)))
                    .collect::<Result<Vec<_>, EngineError>>()?;
                let combined = combine(&pairs, &l)?;
                Some(Extrapolated {
                    order: z,
                    factor: l.factor,
                    re: combined.value.re,
                    im: combined.value.im,
                    error: Some((combined.value - exact).norm()),
                    bound: z_order_bound(records.plan.mode_count(), target.in_modes.len(), power, l.factor, z)?,
                    condition_number: combined.condition_number,
                })
            }
            None => None,
        };
        estimates.push(SectorEstimate {
            out: target.out_modes.clone(),
            input: target.in_modes.clone(),
            re: est.value.re,
            im: est.value.im,
            exact_re: Some(exact.re),
            exact_im: Some(exact.im),
            error: Some(error),
            bound: est.first_order_bound,
            bound_kind: est.bound_kind,
            within_bound: Some(error <= est.first_order_bound),
            extrapolated,
        });
    }
    let mut checks = Vec::new();
    if cfg.noise.shots.is_none() {
        let worst = estimates
            .iter()
            .filter(|e| e.bound_kind == BoundKind::Strict)
            .map(|e| e.error.unwrap_or(0.0) / e.bound)
            .fold(0.0, f64::max);
        checks.push(Check::at_most("first-order error / bound", worst, 1.0));
    }
    let report = ReconstructReport {
        command: "reconstruct".into(),
        seed: ctx.seed,
        plan: kind,
        power,
        ports: cfg.ports,
        oracle: Some(OracleSummary {
            modes,
            kind: oracle.kind(),
            cutoff: oracle.space().cutoff(),
            seed: cfg.oracle.seed.unwrap_or(ctx.seed),
        }),
        noise: cfg.noise,
        records: file_name(&records_path),
        estimates,
        checks,
    };
    ctx.finish("reconstruct", report)
}

fn sector_targets(cfg: &ReconstructConfig, plan_modes: usize, kind: PlanKind) -> Result<Vec<Target>, CliError> {
    let targets: Vec<Target> = if cfg.sectors.is_empty() {
        default_sectors(plan_modes, cfg.ports, kind)
    } else {
        cfg.sectors.iter().map(|s| s.target()).collect()
    };
    if let Some(t) = targets.iter().find(|t| t.out_modes.len() > cfg.ports) {
        return Err(EngineError::NotEnoughPorts { requested: t.out_modes.len(), ports: cfg.ports }.into());
    }
    Ok(targets)
}

fn from_records(cfg: &ReconstructConfig, ctx: &RunContext, records: RecordSet) -> Result<ReconstructReport, CliError> {
    if cfg.extrapolation.order > 1 {
        return Err(CliError::Config("extrapolation needs simulated records at every ladder power".into()));
    }
    let kind = records.plan.kind;
    let lookup = ReconstructConfig { ports: records.port_count, ..cfg.clone() };
    let targets = sector_targets(&lookup, records.plan.mode_count(), kind)?;
    let estimates = targets
        .iter()
        .map(|t| {
            let est = estimate(&records, t)?;
            Ok(SectorEstimate {
                out: t.out_modes.clone(),
                input: t.in_modes.clone(),
                re: est.value.re,
                im: est.value.im,
                exact_re: None,
                exact_im: None,
                error: None,
                bound: est.first_order_bound,
                bound_kind: est.bound_kind,
                within_bound: None,
                extrapolated: None,
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    let report = ReconstructReport {
        command: "reconstruct".into(),
        seed: ctx.seed,
        plan: kind,
        power: records.plan.power(),
        ports: records.port_count,
        oracle: None,
        noise: NoiseSettings { shots: records.noise.shots, detector_noise_std: 0.0 },
        records: cfg.records_in.as_deref().map(file_name).unwrap_or_default(),
        estimates,
        checks: Vec::new(),
    };
    ctx.finish("reconstruct", report)
}
