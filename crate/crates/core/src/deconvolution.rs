//! Inverse Gaussian blur by a Hermite series applied under the integral.
//!
//! Order q contributes (−1)^q/(2^q q!) ∫ G_σ(s(x'−x)) H_{2q}(s(x'−x)/σ) f(x') dx'.
//! Each order is integrated separately (composite trapezoid on the sample grid plus
//! closed-form tails for a constant continuation beyond the edges), because the
//! pointwise kernel series itself diverges.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::waveguide::{SampledSurface, SurfaceMeta, WavePacketSpec};

/// Highest Hermite degree accepted by [`hermite`].
pub const MAX_HERMITE_ORDER: usize = 200;

/// Required grid margin around evaluation points, in units of σ (divided by √2 on the k̂ axis).
pub const COVERAGE_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub sigma: f64,
    pub q_max: usize,
    pub series_tol: f64,
}

impl KernelConfig {
    pub fn new(sigma: f64) -> Self {
        Self { sigma, q_max: 40, series_tol: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidKernel(format!("σ must be positive, got {}", self.sigma)));
        }
        if 2 * self.q_max > MAX_HERMITE_ORDER {
            return Err(Error::HermiteOrder(2 * self.q_max));
        }
        if self.series_tol.is_nan() || self.series_tol < 0.0 {
            return Err(Error::InvalidKernel(format!("series tolerance must be non-negative, got {}", self.series_tol)));
        }
        Ok(())
    }
}

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_ORDER {
        return Err(Error::HermiteOrder(n));
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    if !cur.is_finite() {
        return Err(Error::HermiteOverflow { order: n, x });
    }
    Ok(cur)
}

/// e^{−y²} H_n(y) / √(2ⁿ n!) for n = 0..out.len().
fn scaled_hermite(y: f64, out: &mut [f64]) {
    let g = (-y * y).exp();
    for n in 0..out.len() {
        out[n] = match n {
            0 => g,
            1 => SQRT_2 * y * g,
            _ => {
                let nf = (n - 1) as f64;
                y * (2.0 / (nf + 1.0)).sqrt() * out[n - 1] - (nf / (nf + 1.0)).sqrt() * out[n - 2]
            }
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    /// Relative increment fell below the tolerance.
    Tolerance,
    /// Increments started growing; the growing term was discarded.
    Divergence,
    /// Reached `q_max`.
    MaxOrder,
}

/// Series diagnostics of one axis pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSeries {
    pub axis: String,
    /// Highest order included in the result.
    pub orders_used: usize,
    /// sup|term_q| / sup|partial sum| per computed order, including a discarded last term.
    pub increments: Vec<f64>,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeconvolutionReport<T> {
    pub result: T,
    pub series: Vec<AxisSeries>,
    pub warnings: Vec<String>,
}

impl<T> DeconvolutionReport<T> {
    pub fn converged(&self) -> bool {
        self.series.iter().all(|s| s.stop_reason == StopReason::Tolerance)
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    outer: usize,
    len: usize,
    inner: usize,
}

/// Per-order quadrature weights: interior `[q][out][i]` and edge tails `[q][out]`.
struct KernelTable {
    interior: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    n_out: usize,
    len: usize,
}

impl KernelTable {
    fn new(grid: &Axis, eval: &Axis, sigma: f64, scale: f64, q_max: usize) -> Self {
        let (n_out, len) = (eval.count, grid.count);
        let orders = q_max + 1;
        let mut interior = vec![0.0; orders * n_out * len];
        let mut left = vec![0.0; orders * n_out];
        let mut right = vec![0.0; orders * n_out];
        let even: Vec<f64> = (0..orders)
            .map(|q| (0.5 * libm::lgamma(2.0 * q as f64 + 1.0) - libm::lgamma(q as f64 + 1.0)).exp())
            .collect();
        let odd: Vec<f64> = (0..orders)
            .map(|q| match q {
                0 => 0.0,
                _ => (0.5 * (libm::lgamma(2.0 * q as f64) - 2f64.ln()) - libm::lgamma(q as f64 + 1.0)).exp(),
            })
            .collect();
        let sign = |q: usize| if q.is_multiple_of(2) { 1.0 } else { -1.0 };
        let norm = 1.0 / (PI.sqrt() * sigma);
        let mut phi = vec![0.0; 2 * q_max + 1];
        for o in 0..n_out {
            let x = eval.at(o);
            for i in 0..len {
                let y = scale * (grid.at(i) - x) / sigma;
                scaled_hermite(y, &mut phi);
                let trap = if len == 1 || i == 0 || i == len - 1 { 0.5 } else { 1.0 };
                let h = if len == 1 { 0.0 } else { grid.step };
                for q in 0..orders {
                    interior[(q * n_out + o) * len + i] = sign(q) * phi[2 * q] * even[q] * norm * h * trap;
                }
            }
            let tail_norm = 1.0 / (scale * PI.sqrt());
            for (edge, table, dir) in [(grid.first(), &mut left, -1.0), (grid.last(), &mut right, 1.0)] {
                let y = scale * (edge - x) / sigma;
                scaled_hermite(y, &mut phi);
                for q in 0..orders {
                    table[q * n_out + o] = if q == 0 {
                        libm::erfc(dir * y) / (2.0 * scale)
                    } else {
                        dir * sign(q) * phi[2 * q - 1] * odd[q] * tail_norm
                    };
                }
            }
        }
        Self { interior, left, right, n_out, len }
    }

    fn term(&self, q: usize, data: &[Complex64], layout: Layout, out: &mut [Complex64]) {
        let Layout { outer, len, inner } = layout;
        out.iter_mut().for_each(|v| *v = Complex64::zero());
        for ob in 0..outer {
            let src = &data[ob * len * inner..(ob + 1) * len * inner];
            let first = &src[..inner];
            let last = &src[(len - 1) * inner..];
            for o in 0..self.n_out {
                let dst = &mut out[(ob * self.n_out + o) * inner..(ob * self.n_out + o + 1) * inner];
                let weights = &self.interior[(q * self.n_out + o) * self.len..(q * self.n_out + o + 1) * self.len];
                for (row, &w) in src.chunks(inner).zip(weights) {
                    if w != 0.0 {
                        dst.iter_mut().zip(row).for_each(|(d, v)| *d += v * w);
                    }
                }
                let (wl, wr) = (self.left[q * self.n_out + o], self.right[q * self.n_out + o]);
                dst.iter_mut().zip(first.iter().zip(last)).for_each(|(d, (a, b))| *d += a * wl + b * wr);
            }
        }
    }
}

fn sup(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Hermite-series deconvolution along one axis; returns data with that axis replaced by `eval`.
fn axis_pass(
    name: &str,
    data: &[Complex64],
    layout: Layout,
    grid: &Axis,
    eval: &Axis,
    scale: f64,
    cfg: &KernelConfig,
) -> (Vec<Complex64>, AxisSeries) {
    let table = KernelTable::new(grid, eval, cfg.sigma, scale, cfg.q_max);
    let size = layout.outer * eval.count * layout.inner;
    let mut partial = vec![Complex64::zero(); size];
    let mut term = vec![Complex64::zero(); size];
    let mut increments = Vec::new();
    let mut last_abs = f64::INFINITY;
    let mut orders_used = 0;
    let mut stop_reason = StopReason::MaxOrder;
    for q in 0..=cfg.q_max {
        table.term(q, data, layout, &mut term);
        let inc = sup(&term);
        if q >= 2 && inc > last_abs {
            increments.push(inc / sup(&partial).max(f64::MIN_POSITIVE));
            stop_reason = StopReason::Divergence;
            break;
        }
        partial.iter_mut().zip(&term).for_each(|(p, t)| *p += t);
        let total = sup(&partial);
        increments.push(inc / total.max(f64::MIN_POSITIVE));
        orders_used = q;
        last_abs = inc;
        if q >= 1 && inc <= cfg.series_tol * total {
            stop_reason = StopReason::Tolerance;
            break;
        }
    }
    let series = AxisSeries { axis: name.into(), orders_used, increments, stop_reason };
    (partial, series)
}

fn covers(grid: &Axis, eval: &Axis, margin: f64) -> bool {
    let slack = 1e-9 * (1.0 + margin);
    grid.first() <= eval.first() - margin + slack && grid.last() >= eval.last() + margin - slack
}

fn coverage_message(name: &str, grid: &Axis, eval: &Axis, margin: f64) -> String {
    format!(
        "{name} needs [{:.4}, {:.4}] but the grid spans [{:.4}, {:.4}]",
        eval.first() - margin,
        eval.last() + margin,
        grid.first(),
        grid.last()
    )
}

/// RMS width of |f − baseline| where the baseline interpolates the edge values.
fn feature_width(samples: &[Complex64], grid: &Axis) -> f64 {
    let n = samples.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let (a, b) = (samples[0], samples[n - 1]);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, v) in samples.iter().enumerate() {
        let t = i as f64 / (n - 1) as f64;
        let w = (v - (a * (1.0 - t) + b * t)).norm();
        let x = grid.at(i);
        m0 += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    if m0 == 0.0 {
        return f64::INFINITY;
    }
    let mean = m1 / m0;
    (m2 / m0 - mean * mean).max(0.0).sqrt()
}

/// Recover f from σ-blurred samples on `grid`, evaluated at the points of `eval`.
pub fn deconvolve_1d(
    samples: &[Complex64],
    grid: &Axis,
    eval: &Axis,
    cfg: &KernelConfig,
) -> Result<DeconvolutionReport<Vec<Complex64>>> {
    cfg.validate()?;
    if samples.len() != grid.count || grid.count == 0 || grid.step.is_nan() || grid.step <= 0.0 {
        return Err(Error::InvalidKernel(format!(
            "{} samples on a grid of {} points with step {}",
            samples.len(),
            grid.count,
            grid.step
        )));
    }
    let mut warnings = Vec::new();
    let margin = COVERAGE_SIGMAS * cfg.sigma;
    if !covers(grid, eval, margin) {
        warnings.push(coverage_message("axis", grid, eval, margin));
    }
    let peak = sup(samples);
    let edge = samples[0].norm().max(samples[samples.len() - 1].norm());
    if edge > 1e-3 * peak {
        warnings.push(format!("input does not decay at the grid edges ({:.3e} of peak); continued as constant", edge / peak));
    }
    let width = feature_width(samples, grid);
    if width < 0.95 * cfg.sigma {
        warnings.push(format!("feature width {width:.3e} is below σ = {:.3e}; narrow features are amplified", cfg.sigma));
    }
    let layout = Layout { outer: 1, len: grid.count, inner: 1 };
    let (result, series) = axis_pass("x", samples, layout, grid, eval, 1.0, cfg);
    Ok(DeconvolutionReport { result, series: vec![series], warnings })
}

/// Target grid for [`deconvolve_t_3d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub khat: Axis,
    pub delta_p: Axis,
    pub delta_k: Axis,
}

/// Recover the monochromatic T̄ from a measured T surface by three separable axis passes.
pub fn deconvolve_t_3d(
    surface: &SampledSurface,
    eval: &EvalGrid,
    cfg: &KernelConfig,
) -> Result<DeconvolutionReport<SampledSurface>> {
    cfg.validate()?;
    if !surface.is_consistent() {
        return Err(Error::InvalidKernel("surface shape does not match its axes".into()));
    }
    let s = cfg.sigma;
    let margins = [COVERAGE_SIGMAS * s / SQRT_2, COVERAGE_SIGMAS * s, COVERAGE_SIGMAS * s];
    let pairs = [
        ("khat", &surface.khat, &eval.khat),
        ("delta_p", &surface.delta_p, &eval.delta_p),
        ("delta_k", &surface.delta_k, &eval.delta_k),
    ];
    let problems: Vec<String> = pairs
        .iter()
        .zip(margins)
        .filter(|((_, g, e), m)| !covers(g, e, *m))
        .map(|((name, g, e), m)| coverage_message(name, g, e, m))
        .collect();
    if !problems.is_empty() {
        return Err(Error::GridCoverage(problems.join("; ")));
    }
    let [nk, np, nd] = surface.shape();
    let (a, s1) = axis_pass(
        "khat",
        &surface.values,
        Layout { outer: 1, len: nk, inner: np * nd },
        &surface.khat,
        &eval.khat,
        SQRT_2,
        cfg,
    );
    let ek = eval.khat.count;
    let (b, s2) = axis_pass("delta_p", &a, Layout { outer: ek, len: np, inner: nd }, &surface.delta_p, &eval.delta_p, 1.0, cfg);
    let ep = eval.delta_p.count;
    let (mut c, s3) =
        axis_pass("delta_k", &b, Layout { outer: ek * ep, len: nd, inner: 1 }, &surface.delta_k, &eval.delta_k, 1.0, cfg);
    let pre = 1.0 / (PI.sqrt() * s);
    c.iter_mut().for_each(|v| *v *= pre);
    let result = SampledSurface { khat: eval.khat, delta_p: eval.delta_p, delta_k: eval.delta_k, values: c, meta: surface.meta };
    Ok(DeconvolutionReport { result, series: vec![s1, s2, s3], warnings: Vec::new() })
}

/// Gaussian smoothing ∫ G_σ(s(x'−x)) f(x') dx' along one axis (trapezoid, no continuation).
fn smooth_axis(data: &[Complex64], layout: Layout, grid: &Axis, out: &Axis, sigma: f64, scale: f64) -> Vec<Complex64> {
    let Layout { outer, len, inner } = layout;
    let norm = grid.step / (PI.sqrt() * sigma);
    let weights: Vec<f64> = (0..out.count)
        .flat_map(|o| {
            (0..len).map(move |i| {
                let y = scale * (grid.at(i) - out.at(o)) / sigma;
                let trap = if i == 0 || i == len - 1 { 0.5 } else { 1.0 };
                (-y * y).exp() * norm * trap
            })
        })
        .collect();
    let mut res = vec![Complex64::zero(); outer * out.count * inner];
    for ob in 0..outer {
        let src = &data[ob * len * inner..(ob + 1) * len * inner];
        for o in 0..out.count {
            let dst = &mut res[(ob * out.count + o) * inner..(ob * out.count + o + 1) * inner];
            for (row, &w) in src.chunks(inner).zip(&weights[o * len..(o + 1) * len]) {
                if w > 1e-300 {
                    dst.iter_mut().zip(row).for_each(|(d, v)| *d += v * w);
                }
            }
        }
    }
    res
}

/// Settings of [`convolution_forward_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardCheckConfig {
    pub khat: f64,
    /// Residuals are reported for |Δ_k|, |Δ_p| ≤ this.
    pub half_width: f64,
    pub step: f64,
    /// Extent of the monochromatic samples beyond the measured grid, in units of σ.
    pub coverage: f64,
    pub kernel: KernelConfig,
}

impl ForwardCheckConfig {
    pub fn new(khat: f64, sigma: f64) -> Self {
        Self { khat, half_width: 3.0, step: 0.1, coverage: COVERAGE_SIGMAS, kernel: KernelConfig::new(sigma) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub khat: f64,
    pub delta_k: f64,
    pub delta_p: f64,
    pub exact: Complex64,
    pub recovered: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardCheckReport {
    /// sup | |recovered|² − |exact|² | / sup |exact|².
    pub residual: f64,
    pub rows: Vec<ResidualRow>,
    /// Grid margin below 4σ: truncated-support artefacts expected.
    pub flagged: bool,
    pub series: Vec<AxisSeries>,
}

/// Blur a monochromatic nonlinearity `f(p1, p2, k1, k2)` with the wave-packet kernel on a grid,
/// deconvolve it again and report the roundtrip residual at k̂.
pub fn convolution_forward_check<F>(f: F, spec: &WavePacketSpec, cfg: &ForwardCheckConfig) -> Result<ForwardCheckReport>
where
    F: Fn(f64, f64, f64, f64) -> Complex64,
{
    let kernel = KernelConfig { sigma: spec.sigma, ..cfg.kernel };
    kernel.validate()?;
    if !(cfg.step > 0.0 && cfg.half_width >= 0.0 && cfg.coverage > 0.0) {
        return Err(Error::InvalidKernel("forward check needs positive step and coverage".into()));
    }
    let s = spec.sigma;
    let (mk, md) = (COVERAGE_SIGMAS * s / SQRT_2, COVERAGE_SIGMAS * s);
    let src_k = Axis::centred(cfg.khat, mk + cfg.coverage * s / SQRT_2, cfg.step);
    let src_d = Axis::centred(0.0, cfg.half_width + md + cfg.coverage * s, cfg.step);
    let mid_k = Axis::centred(cfg.khat, mk + cfg.step, cfg.step);
    let mid_d = Axis::centred(0.0, cfg.half_width + md + cfg.step, cfg.step);
    let eval = EvalGrid {
        khat: Axis::single(cfg.khat),
        delta_p: Axis::centred(0.0, cfg.half_width, cfg.step),
        delta_k: Axis::centred(0.0, cfg.half_width, cfg.step),
    };
    let (nk, nd) = (src_k.count, src_d.count);
    let mut raw = Vec::with_capacity(nk * nd * nd);
    for k in src_k.points() {
        for dp in src_d.points() {
            for dk in src_d.points() {
                raw.push(f(k - dp, k + dp, k - dk, k + dk));
            }
        }
    }
    let a = smooth_axis(&raw, Layout { outer: 1, len: nk, inner: nd * nd }, &src_k, &mid_k, s, SQRT_2);
    drop(raw);
    let b = smooth_axis(&a, Layout { outer: mid_k.count, len: nd, inner: nd }, &src_d, &mid_d, s, 1.0);
    drop(a);
    let mut c = smooth_axis(&b, Layout { outer: mid_k.count * mid_d.count, len: nd, inner: 1 }, &src_d, &mid_d, s, 1.0);
    drop(b);
    let pre = 2.0 * s * PI.sqrt();
    c.iter_mut().for_each(|v| *v *= pre);
    let meta = SurfaceMeta { sigma: s, gamma: f64::NAN, omega0: f64::NAN };
    let measured = SampledSurface { khat: mid_k, delta_p: mid_d, delta_k: mid_d, values: c, meta };
    let report = deconvolve_t_3d(&measured, &eval, &kernel)?;
    let rec = &report.result;
    let mut rows = Vec::with_capacity(rec.values.len());
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for ip in 0..eval.delta_p.count {
        for id in 0..eval.delta_k.count {
            let (dp, dk) = (eval.delta_p.at(ip), eval.delta_k.at(id));
            let k = cfg.khat;
            let exact = f(k - dp, k + dp, k - dk, k + dk);
            let recovered = rec.get(0, ip, id);
            worst = worst.max((recovered.norm_sqr() - exact.norm_sqr()).abs());
            peak = peak.max(exact.norm_sqr());
            rows.push(ResidualRow { khat: k, delta_k: dk, delta_p: dp, exact, recovered });
        }
    }
    Ok(ForwardCheckReport {
        residual: worst / peak.max(f64::MIN_POSITIVE),
        rows,
        flagged: cfg.coverage < 4.0,
        series: report.series,
    })
}
