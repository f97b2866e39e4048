use std::f64::consts::SQRT_2;

use scattomo_core::deconvolution::{deconvolve_t_3d, AxisSeries, DeconvolutionReport, EvalGrid, StopReason, COVERAGE_SIGMAS};
use scattomo_core::extrapolation::bound_grid;
use scattomo_core::grid::Axis;
use scattomo_core::waveguide::{QuadratureConfig, QubitParams, SampledSurface, WavePacketSpec};
use serde::{Deserialize, Serialize};

use super::{file_name, Check, RunContext};
use crate::config::{Figure3Config, KernelSettings};
use crate::error::CliError;
use crate::io;
use crate::parallel::t_surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    /// Z-order error bounds against |α|².
    A,
    /// Measured |T|² over (Δ_k, Δ_p).
    B,
    /// Cross sections at fixed Δ_p for several σ, with their deconvolutions.
    C,
    /// Recovered |γT̄|² surface.
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCsvRow {
    pub alpha2: f64,
    #[serde(rename = "Z")]
    pub z: usize,
    pub b: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub alpha2: f64,
    pub order: usize,
    pub bound: f64,
    /// The bound decreases strictly in Z up to the optimum.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub sigma: f64,
    pub axis: String,
    pub orders_used: usize,
    pub stop_reason: StopReason,
    pub last_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure3Report {
    pub command: String,
    pub seed: u64,
    pub panel: Panel,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optima: Vec<Optimum>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionRow {
    pub sigma: f64,
    pub khat: f64,
    pub delta_p: f64,
    pub delta_k: f64,
    pub measured_re: f64,
    pub measured_im: f64,
    pub measured_abs2: f64,
    pub recovered_re: f64,
    pub recovered_im: f64,
    pub recovered_abs2: f64,
    pub exact_abs2: f64,
}

pub fn figure3(panel: Panel, cfg: &Figure3Config, ctx: &RunContext) -> Result<Figure3Report, CliError> {
    let mut report = Figure3Report {
        command: "figure3".into(),
        seed: ctx.seed,
        panel,
        files: Vec::new(),
        optima: Vec::new(),
        series: Vec::new(),
        warnings: Vec::new(),
        checks: Vec::new(),
    };
    match panel {
        Panel::A => panel_a(cfg, ctx, &mut report)?,
        Panel::B => panel_b(cfg, ctx, &mut report)?,
        Panel::C => panel_c(cfg, ctx, &mut report)?,
        Panel::D => panel_d(cfg, ctx, &mut report)?,
    }
    let name = format!("figure3{}_report", panel_letter(panel));
    ctx.finish(&name, report)
}

fn panel_letter(panel: Panel) -> char {
    match panel {
        Panel::A => 'a',
        Panel::B => 'b',
        Panel::C => 'c',
        Panel::D => 'd',
    }
}

fn panel_a(cfg: &Figure3Config, ctx: &RunContext, report: &mut Figure3Report) -> Result<(), CliError> {
    let a = &cfg.a;
    let rows = bound_grid(a.modes, a.order, &a.powers, a.factor, a.max_order)?;
    let path = ctx.path("figure3a.csv");
    io::write_csv(&path, rows.iter().map(|r| BoundCsvRow { alpha2: r.alpha2, z: r.order, b: r.factor, bound: r.bound }))?;
    report.files.push(file_name(&path));
    for curve in rows.chunks(a.max_order) {
        let best = curve.iter().enumerate().min_by(|x, y| x.1.bound.total_cmp(&y.1.bound)).map_or(0, |(i, _)| i);
        let monotone = curve[..=best].windows(2).all(|w| w[1].bound < w[0].bound);
        report.optima.push(Optimum { alpha2: curve[0].alpha2, order: curve[best].order, bound: curve[best].bound, monotone });
    }
    let broken = report.optima.iter().filter(|o| !o.monotone).count();
    report.checks.push(Check::at_most("curves not decreasing up to their optimum", broken as f64, 0.0));
    if let Some(r) = rows.iter().find(|r| (r.alpha2 - 1.0).abs() < 1e-12 && r.order == 10) {
        report.checks.push(Check::within("bound at |α|²=1, Z=10", r.bound, 3e-5, 3e-4));
    }
    Ok(())
}

fn panel_b(cfg: &Figure3Config, ctx: &RunContext, report: &mut Figure3Report) -> Result<(), CliError> {
    let params = cfg.qubit.params()?;
    let b = &cfg.b;
    let spec = WavePacketSpec::new(b.sigma)?;
    let grid = Axis::centred(0.0, b.half_width, b.step);
    let khat = Axis::single(params.omega0 + b.khat_offset);
    let surface = t_surface(&khat, &grid, &grid, &spec, &params, &cfg.quadrature.config())?;
    let header = io::write_surface(&ctx.out_dir, "figure3b", &surface, "measured_t", 1.0)?;
    report.files.extend([file_name(&header.with_extension("csv")), file_name(&header)]);
    Ok(())
}

/// Extend an evaluation axis by `margin` on both sides with the given step.
fn widen(axis: &Axis, margin: f64, step: f64) -> Axis {
    let n = (margin / step - 1e-9).ceil() as usize + 1;
    let inner = if axis.count > 1 { axis.count } else { 1 };
    let step = if axis.count > 1 { axis.step } else { step };
    Axis { origin: axis.first() - n as f64 * step, step, count: inner + 2 * n }
}

/// Sample the measured T around `eval` and deconvolve it.
pub fn recover(
    params: &QubitParams,
    sigma: f64,
    eval: &EvalGrid,
    step: f64,
    quad: &QuadratureConfig,
    kernel: &KernelSettings,
) -> Result<(SampledSurface, DeconvolutionReport<SampledSurface>), CliError> {
    let spec = WavePacketSpec::new(sigma)?;
    let margin = COVERAGE_SIGMAS * sigma;
    let khat = widen(&eval.khat, margin / SQRT_2, step);
    let delta_p = widen(&eval.delta_p, margin, step);
    let delta_k = widen(&eval.delta_k, margin, step);
    let measured = t_surface(&khat, &delta_p, &delta_k, &spec, params, quad)?;
    let recovered = deconvolve_t_3d(&measured, eval, &kernel.config(sigma))?;
    Ok((measured, recovered))
}

fn summarize(sigma: f64, series: &[AxisSeries]) -> impl Iterator<Item = SeriesSummary> + '_ {
    series.iter().map(move |s| SeriesSummary {
        sigma,
        axis: s.axis.clone(),
        orders_used: s.orders_used,
        stop_reason: s.stop_reason,
        last_increment: s.increments.get(s.orders_used).copied().unwrap_or(f64::NAN),
    })
}

fn exact_tbar(params: &QubitParams, khat: f64, dp: f64, dk: f64) -> scattomo_core::Complex64 {
    params.tmono(khat - dp, khat + dp, khat - dk, khat + dk)
}

fn panel_c(cfg: &Figure3Config, ctx: &RunContext, report: &mut Figure3Report) -> Result<(), CliError> {
    let params = cfg.qubit.params()?;
    let c = &cfg.c;
    let khat = params.omega0 + c.khat_offset;
    let eval = EvalGrid {
        khat: Axis::single(khat),
        delta_p: Axis::single(c.delta_p),
        delta_k: Axis::centred(0.0, c.half_width, c.step),
    };
    let exact: Vec<f64> = eval.delta_k.points().map(|dk| exact_tbar(&params, khat, c.delta_p, dk).norm_sqr()).collect();
    let peak = exact.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut rows = Vec::new();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for &sigma in &c.sigmas {
        let (measured, rec) = recover(&params, sigma, &eval, c.step, &cfg.quadrature.config(), &cfg.kernel)?;
        report.series.extend(summarize(sigma, &rec.series));
        report.warnings.extend(rec.warnings.iter().map(|w| format!("σ={sigma}: {w}")));
        let on_grid = |axis: &Axis, x: f64| axis.nearest(x).expect("evaluation point lies inside the measured grid");
        let (mk, mp) = (on_grid(&measured.khat, khat), on_grid(&measured.delta_p, c.delta_p));
        let mut curve = Vec::with_capacity(eval.delta_k.count);
        for (id, dk) in eval.delta_k.points().enumerate() {
            let m = measured.get(mk, mp, on_grid(&measured.delta_k, dk));
            let r = rec.result.get(0, 0, id);
            curve.push(r.norm_sqr());
            rows.push(CrossSectionRow {
                sigma,
                khat,
                delta_p: c.delta_p,
                delta_k: dk,
                measured_re: m.re,
                measured_im: m.im,
                measured_abs2: m.norm_sqr(),
                recovered_re: r.re,
                recovered_im: r.im,
                recovered_abs2: r.norm_sqr(),
                exact_abs2: exact[id],
            });
        }
        let residual = curve.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak;
        report.checks.push(Check::at_most(&format!("σ={sigma} recovery vs exact"), residual, 0.02));
        curves.push(curve);
    }
    let spread = curves
        .iter()
        .flat_map(|a| curves.iter().map(move |b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)))
        .fold(0.0, f64::max)
        / peak;
    if curves.len() > 1 {
        report.checks.push(Check::at_most("recoveries agree across σ", spread, 0.01));
    }
    let path = ctx.path("figure3c.csv");
    io::write_csv(&path, rows)?;
    report.files.push(file_name(&path));
    Ok(())
}

fn panel_d(cfg: &Figure3Config, ctx: &RunContext, report: &mut Figure3Report) -> Result<(), CliError> {
    let params = cfg.qubit.params()?;
    let d = &cfg.d;
    let khat = params.omega0 + d.khat_offset;
    let grid = Axis::centred(0.0, d.half_width, d.step);
    let eval = EvalGrid { khat: Axis::single(khat), delta_p: grid, delta_k: grid };
    let (_, rec) = recover(&params, d.sigma, &eval, d.step, &cfg.quadrature.config(), &cfg.kernel)?;
    report.series.extend(summarize(d.sigma, &rec.series));
    report.warnings.extend(rec.warnings.iter().cloned());
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for (_, dk, dp, v) in rec.result.samples() {
        let exact = exact_tbar(&params, khat, dp, dk).norm_sqr();
        worst = worst.max((v.norm_sqr() - exact).abs());
        peak = peak.max(exact);
    }
    report.checks.push(Check::at_most("recovered |γT̄|² vs exact (relative sup)", worst / peak, 0.02));
    let header = io::write_surface(&ctx.out_dir, "figure3d", &rec.result, "gamma_tbar", params.gamma)?;
    report.files.extend([file_name(&header.with_extension("csv")), file_name(&header)]);
    Ok(())
}
