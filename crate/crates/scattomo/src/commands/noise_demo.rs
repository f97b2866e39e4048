use scattomo_core::protocol::{reconstruct, simulate_records, splitmix64, NoiseConfig};
use scattomo_core::stats::loglog_slope;
use scattomo_core::Complex64;
use serde::{Deserialize, Serialize};

use super::{build_oracle, equal_plan, file_name, Check, RunContext};
use crate::config::NoiseDemoConfig;
use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub shots: u64,
    pub repetitions: usize,
    pub mean_re: f64,
    pub mean_im: f64,
    pub baseline_re: f64,
    pub baseline_im: f64,
    pub bias: f64,
    pub std: f64,
    pub standard_error: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub command: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub rows: Vec<NoiseRow>,
    pub std_slope: Option<f64>,
    pub checks: Vec<Check>,
}

/// Repeated noisy reconstructions per shot count; bias is measured against the noise-free estimate.
pub fn noise_demo(cfg: &NoiseDemoConfig, ctx: &RunContext) -> Result<NoiseReport, CliError> {
    let target = cfg.sector.target();
    let order = target.out_modes.len().max(target.in_modes.len());
    let oracle = build_oracle(&cfg.oracle, cfg.power, order, ctx.seed)?;
    let plan = equal_plan(cfg.oracle.plan_kind(), cfg.oracle.modes, cfg.power)?;
    let outputs = &target.out_modes;
    let baseline = reconstruct(&simulate_records(&oracle, &plan, outputs, cfg.ports, &NoiseConfig::exact())?, &target)?.value;
    let mut rows = Vec::with_capacity(cfg.shots.len());
    for &shots in &cfg.shots {
        let values = (0..cfg.repetitions)
            .map(|r| {
                let seed = splitmix64(ctx.seed ^ splitmix64(shots ^ splitmix64(r as u64)));
                let noise = NoiseConfig::shots(shots, cfg.detector_noise_std, seed);
                Ok(reconstruct(&simulate_records(&oracle, &plan, outputs, cfg.ports, &noise)?, &target)?.value)
            })
            .collect::<Result<Vec<Complex64>, CliError>>()?;
        let n = values.len() as f64;
        let mean = values.iter().sum::<Complex64>() / n;
        let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        let standard_error = std / n.sqrt();
        let bias = (mean - baseline).norm();
        rows.push(NoiseRow {
            shots,
            repetitions: cfg.repetitions,
            mean_re: mean.re,
            mean_im: mean.im,
            baseline_re: baseline.re,
            baseline_im: baseline.im,
            bias,
            std,
            standard_error,
            z_score: bias / standard_error,
        });
    }
    let path = ctx.path("noise_demo.csv");
    io::write_csv(&path, rows.iter().copied())?;
    let std_slope = loglog_slope(rows.iter().map(|r| (r.shots as f64, r.std)));
    let mut checks: Vec<Check> =
        rows.iter().map(|r| Check::at_most(&format!("bias / SE at {} shots", r.shots), r.z_score, 3.0)).collect();
    checks.extend(std_slope.map(|s| Check::within("log-log slope of std against shots", s, -0.6, -0.4)));
    let report = NoiseReport { command: "noise-demo".into(), seed: ctx.seed, files: vec![file_name(&path)], rows, std_slope, checks };
    ctx.finish("noise_demo", report)
}
