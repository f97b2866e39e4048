use std::f64::consts::PI;
use std::time::{Duration, Instant};

use scattomo::commands::figure3::recover;
use scattomo::commands::{imperfections, noise_demo, scaling, Check, RunContext};
use scattomo::config::{BoundPanel, ImperfectionsConfig, KernelSettings, NoiseDemoConfig, ScalingConfig};
use scattomo_core::deconvolution::EvalGrid;
use scattomo_core::extrapolation::{empirical_order_study, weights, z_order_bound, OrderStudyConfig};
use scattomo_core::grid::Axis;
use scattomo_core::hilbert::{
    exact_s_element, random_unitary, BasisSpec, FockSpace, TruncatedUnitary, UnitaryKind, DEFAULT_TRUNCATION_TOL,
};
use scattomo_core::protocol::{
    build_input_plan_elastic, equal_magnitudes, first_order_bound, reconstruct, simulate_records, NoiseConfig, Target,
};
use scattomo_core::waveguide::{measured_single, QuadratureConfig, QubitParams, SampledSurface, WavePacketSpec};
use scattomo_core::Complex64;
use tempfile::TempDir;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn elastic_oracle(modes: usize, cutoff: usize, seed: u64) -> TruncatedUnitary {
    let space = FockSpace::new(BasisSpec::new(modes, cutoff).unwrap()).unwrap();
    random_unitary(&space, UnitaryKind::Elastic, seed)
}

fn two_mode_sectors() -> Vec<Target> {
    let mut sectors: Vec<Target> =
        (0..2).flat_map(|p| (0..2).map(move |k| Target::new(&[p], &[k]))).collect();
    sectors.push(Target::new(&[0, 1], &[0, 1]));
    sectors
}

fn elastic_error(oracle: &TruncatedUnitary, target: &Target, power: f64) -> Result<f64, String> {
    let plan = build_input_plan_elastic(2, &equal_magnitudes(2, power)).map_err(|e| e.to_string())?;
    let records =
        simulate_records(oracle, &plan, &target.out_modes, 2, &NoiseConfig::exact()).map_err(|e| e.to_string())?;
    let estimate = reconstruct(&records, target).map_err(|e| e.to_string())?;
    let exact = exact_s_element(oracle, &target.out_modes, &target.in_modes).map_err(|e| e.to_string())?;
    Ok((estimate.value - exact).norm())
}

fn protocol_correctness() -> Outcome {
    let power = 0.01;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 1..=24 {
        let oracle = elastic_oracle(2, 6, seed);
        for target in two_mode_sectors() {
            let bound = first_order_bound(2, target.in_modes.len(), power);
            worst = worst.max(elastic_error(&oracle, &target, power)? / bound);
            checked += 1;
        }
    }
    Ok((worst <= 1.0, format!("{checked} sector checks over 24 oracles, worst error/bound = {worst:.3e}")))
}

fn first_order_scaling() -> Outcome {
    let (mut low, mut high) = (0.0, 0.0);
    for seed in 1..=24 {
        let oracle = elastic_oracle(2, 6, seed);
        for target in two_mode_sectors() {
            low += elastic_error(&oracle, &target, 0.01)?;
            high += elastic_error(&oracle, &target, 0.02)?;
        }
    }
    let ratio = high / low;
    Ok(((1.6..=2.4).contains(&ratio), format!("summed error ratio E(0.02)/E(0.01) = {ratio:.4}")))
}

fn extrapolation_identities() -> Outcome {
    let mut worst = 0.0f64;
    for b in [1.05, 1.2, 2.0] {
        for order in 1..=12 {
            let w = weights(order, b).map_err(|e| e.to_string())?;
            worst = worst.max((w.sum() - 1.0).abs());
            for v in 1..order {
                worst = worst.max(w.moment(v).abs());
            }
        }
    }
    let oracle = elastic_oracle(2, BasisSpec::default_cutoff(0.1, 2, DEFAULT_TRUNCATION_TOL), 1);
    let config = OrderStudyConfig {
        factor: 1.2,
        orders: vec![1, 2, 3],
        base_powers: (0..5).map(|i| 0.005 * 2f64.powi(i)).collect(),
        port_count: 2,
        plan_modes: 2,
    };
    let fits = empirical_order_study(&oracle, &Target::new(&[0, 1], &[0, 1]), &config).map_err(|e| e.to_string())?;
    let exponents: Vec<(usize, f64)> = fits.iter().map(|f| (f.order, 2.0 * f.slope)).collect();
    let fits_ok = exponents.iter().all(|&(z, e)| (e / (2 * z) as f64 - 1.0).abs() <= 0.2);
    let listed: Vec<String> = exponents.iter().map(|(z, e)| format!("Z={z}: {e:.3}")).collect();
    Ok((
        worst <= 1e-9 && fits_ok,
        format!("max identity residual {worst:.2e}; |α|-exponents {}", listed.join(", ")),
    ))
}

fn curve_monotone_to_optimum(power: f64, factor: f64, max_order: usize) -> Result<bool, String> {
    let curve = (1..=max_order)
        .map(|z| z_order_bound(2, 2, power, factor, z))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let optimum = curve.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
    Ok(curve[..=optimum].windows(2).all(|w| w[1] < w[0]))
}

fn bound_reproduction() -> Outcome {
    let bound = z_order_bound(2, 2, 1.0, 1.05, 10).map_err(|e| e.to_string())?;
    let panel = BoundPanel::default();
    let mut bad = Vec::new();
    for &x in &panel.powers {
        if !curve_monotone_to_optimum(x, panel.factor, panel.max_order)? {
            bad.push(x);
        }
    }
    let mut first_hump = None;
    for i in 1..=60 {
        let x = 0.05 * i as f64;
        if !curve_monotone_to_optimum(x, panel.factor, panel.max_order)? {
            first_hump = Some(x);
            break;
        }
    }
    let hump = first_hump.map_or("none up to |α|²=3".to_string(), |x| format!("|α|²={x:.2}"));
    Ok((
        (3e-5..=3e-4).contains(&bound) && bad.is_empty(),
        format!(
            "bound(1, Z=10) = {bound:.3e}; non-monotone curves on |α|² ∈ [{:.2}, {:.2}]: {}; first non-monotone curve at {hump}",
            panel.powers[0],
            panel.powers[panel.powers.len() - 1],
            bad.len()
        ),
    ))
}

fn single_photon_limit() -> Outcome {
    let params = QubitParams::default();
    let spec = WavePacketSpec::new(1e-3).map_err(|e| e.to_string())?;
    let quad = QuadratureConfig::default();
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for i in 0..=800 {
        let k = params.omega0 - 4.0 + 0.01 * i as f64;
        let s = measured_single(k, k, &spec, &params, &quad).map_err(|e| e.to_string())?;
        let t = params.transmission(k);
        worst = worst.max((s - t).norm());
        peak = peak.max(t.norm());
    }
    let rel = worst / peak;
    Ok((rel <= 1e-4, format!("sup|S_kk − t_k| / sup|t_k| = {rel:.3e} over 801 points")))
}

fn check_line(checks: &[Check]) -> (bool, String) {
    let passed = checks.iter().all(|c| c.passed);
    let text: Vec<String> =
        checks.iter().map(|c| format!("{} = {:.4} ({})", c.name, c.value, if c.passed { "ok" } else { "miss" })).collect();
    (passed, text.join("; "))
}

fn nonlinearity_scaling() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let ctx = RunContext::new(1, dir.path()).map_err(|e| e.to_string())?;
    let report = scaling(&ScalingConfig::default(), &ctx).map_err(|e| e.to_string())?;
    let sigmas = report.rows.iter().map(|r| r.sigma);
    let range = (sigmas.clone().fold(f64::INFINITY, f64::min), sigmas.fold(0.0, f64::max));
    let (ok, text) = check_line(&report.checks);
    Ok((ok && !report.checks.is_empty(), format!("{text} over σ ∈ [{:.2}, {:.2}]", range.0, range.1)))
}

fn relative_sup(a: &SampledSurface, b: impl Fn(usize, f64, f64) -> Complex64, scale: f64) -> f64 {
    a.samples()
        .enumerate()
        .map(|(i, (_, dk, dp, v))| (v - b(i, dp, dk)).norm())
        .fold(0.0, f64::max)
        / scale
}

fn deconvolution_roundtrip() -> Outcome {
    let params = QubitParams::default();
    let step = 0.05;
    let khat = params.omega0 + 1.5;
    let grid = Axis::centred(0.0, 3.0, step);
    let eval = EvalGrid { khat: Axis::single(khat), delta_p: grid, delta_k: grid };
    let quad = QuadratureConfig::default();
    let kernel = KernelSettings::default();
    let exact = |_: usize, dp: f64, dk: f64| params.tmono(khat - dp, khat + dp, khat - dk, khat + dk);
    let peak = grid
        .points()
        .flat_map(|dp| grid.points().map(move |dk| exact(0, dp, dk).norm()))
        .fold(0.0, f64::max);
    let (_, wide) = recover(&params, 0.8, &eval, step, &quad, &kernel).map_err(|e| e.to_string())?;
    let (_, narrow) = recover(&params, 0.4, &eval, step, &quad, &kernel).map_err(|e| e.to_string())?;
    let err_wide = relative_sup(&wide.result, exact, peak);
    let err_narrow = relative_sup(&narrow.result, exact, peak);
    let agreement = relative_sup(&narrow.result, |i, _, _| wide.result.values[i], peak);
    Ok((
        err_wide <= 0.02 && agreement <= 0.01,
        format!(
            "σ=0.8 recovery vs exact T̄ = {err_wide:.3e}; σ=0.4 vs exact = {err_narrow:.3e}; σ=0.4 vs σ=0.8 = {agreement:.3e} \
             (relative sup of complex T̄, {} points)",
            grid.count * grid.count
        ),
    ))
}

fn detector_noise() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let ctx = RunContext::new(1, dir.path()).map_err(|e| e.to_string())?;
    let config = NoiseDemoConfig::default();
    let report = noise_demo(&config, &ctx).map_err(|e| e.to_string())?;
    let top = report.rows.iter().find(|r| r.shots == 1_000_000).ok_or("no 10^6-shot row")?;
    let slope = report.std_slope.ok_or("std slope not fitted")?;
    let ok = top.z_score <= 3.0 && (-0.6..=-0.4).contains(&slope) && config.detector_noise_std == 1.0;
    Ok((
        ok,
        format!(
            "bias/SE at 10^6 shots = {:.2} ({} repetitions); std slope = {slope:.4}",
            top.z_score, top.repetitions
        ),
    ))
}

fn imperfection_scaling() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let ctx = RunContext::new(1, dir.path()).map_err(|e| e.to_string())?;
    let config = ImperfectionsConfig::default();
    let report = imperfections(&config, &ctx).map_err(|e| e.to_string())?;
    let (ok, text) = check_line(&report.checks);
    Ok((
        ok && config.oracle_count >= 10,
        format!(
            "{text}; phase excess ratio {:.3} vs (|α|²_hi/|α|²_lo)^((m−1)/2) = {:.3}",
            report.phase_ratio_observed, report.phase_ratio_expected
        ),
    ))
}

fn resonance_values() -> Outcome {
    let params = QubitParams::default();
    let w = params.omega0;
    let t = params.transmission(w).norm();
    let tbar = params.tmono(w, w, w, w).norm();
    let expected = 2.0 / (PI * params.gamma);
    let dev = (tbar - expected).abs();
    Ok((t <= 1e-12 && dev <= 1e-12, format!("|t(ω₀)| = {t:.1e}; ||T̄(ω₀…)| − 2/(πγ)| = {dev:.1e}")))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "protocol correctness", limit: Duration::from_secs(30), run: protocol_correctness },
        Criterion { id: 2, name: "first-order error scaling", limit: Duration::from_secs(10), run: first_order_scaling },
        Criterion { id: 3, name: "extrapolation identities", limit: Duration::from_secs(60), run: extrapolation_identities },
        Criterion { id: 4, name: "bound figure reproduction", limit: Duration::from_secs(5), run: bound_reproduction },
        Criterion { id: 5, name: "single-photon monochromatic limit", limit: Duration::from_secs(10), run: single_photon_limit },
        Criterion { id: 6, name: "nonlinearity σ-scaling", limit: Duration::from_secs(120), run: nonlinearity_scaling },
        Criterion { id: 7, name: "deconvolution roundtrip", limit: Duration::from_secs(600), run: deconvolution_roundtrip },
        Criterion { id: 8, name: "detector-noise resilience", limit: Duration::from_secs(300), run: detector_noise },
        Criterion { id: 9, name: "imperfection scaling", limit: Duration::from_secs(300), run: imperfection_scaling },
        Criterion { id: 10, name: "resonance values", limit: Duration::from_secs(1), run: resonance_values },
    ];
    let mut passed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= c.limit, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!(
            "{} {:>2} {}: {} [{:.2} s, limit {} s]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    println!("{passed}/{} criteria passed", criteria.len());
}
