use scattomo_core::grid::Axis;
use scattomo_core::stats::loglog_slope;
use scattomo_core::waveguide::WavePacketSpec;
use serde::{Deserialize, Serialize};

use super::{file_name, Check, RunContext};
use crate::config::ScalingConfig;
use crate::error::CliError;
use crate::io;
use crate::parallel::t_surface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub sigma: f64,
    pub max_abs_t: f64,
    pub khat: f64,
    pub delta_k: f64,
    pub delta_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub command: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub rows: Vec<ScalingRow>,
    pub exponent: Option<f64>,
    pub checks: Vec<Check>,
}

/// Peak |measured T| over an on-shell grid around resonance, per σ, with a log-log fit.
pub fn scaling(cfg: &ScalingConfig, ctx: &RunContext) -> Result<ScalingReport, CliError> {
    let params = cfg.qubit.params()?;
    let khat = Axis::centred(params.omega0, cfg.khat_half_width, cfg.step);
    let delta = Axis::centred(0.0, cfg.delta_half_width, cfg.step);
    let mut rows = Vec::with_capacity(cfg.sigmas.len());
    for &sigma in &cfg.sigmas {
        let spec = WavePacketSpec::new(sigma)?;
        let surface = t_surface(&khat, &delta, &delta, &spec, &params, &cfg.quadrature.config())?;
        let (k, dk, dp, v) = surface
            .samples()
            .max_by(|a, b| a.3.norm().total_cmp(&b.3.norm()))
            .expect("grid has at least one sample");
        rows.push(ScalingRow { sigma, max_abs_t: v.norm(), khat: k, delta_k: dk, delta_p: dp });
    }
    let path = ctx.path("scaling.csv");
    io::write_csv(&path, rows.iter().copied())?;
    let exponent = loglog_slope(rows.iter().map(|r| (r.sigma, r.max_abs_t)));
    let checks = exponent.map(|e| Check::within("σ-exponent of max|T|", e, 0.9, 1.1)).into_iter().collect();
    let report = ScalingReport { command: "scaling".into(), seed: ctx.seed, files: vec![file_name(&path)], rows, exponent, checks };
    ctx.finish("scaling", report)
}
