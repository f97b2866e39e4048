//! Geometric power ladders, Z-order combination weights and the Z-order error bound.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::hilbert::{exact_s_element, TruncatedUnitary, UnitaryKind};
use crate::protocol::{
    build_input_plan_elastic, equal_magnitudes, reconstruct_elastic, simulate_records, NoiseConfig, Target,
};
use crate::stats::loglog_slope;

/// Σ|w_q| above which the combination is flagged as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e8;

/// Powers x_q = b^{q−1} x for q = 1..Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLadder {
    pub base_power: f64,
    pub factor: f64,
    pub order: usize,
}

impl PowerLadder {
    pub fn new(base_power: f64, factor: f64, order: usize) -> Result<Self> {
        check_factor(factor, order)?;
        if !(base_power.is_finite() && base_power > 0.0) {
            return Err(Error::InvalidLadder(format!("base power must be positive, got {base_power}")));
        }
        Ok(Self { base_power, factor, order })
    }

    pub fn power(&self, q: usize) -> f64 {
        self.base_power * self.factor.powi(q as i32)
    }

    pub fn powers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.order).map(|q| self.power(q))
    }
}

fn check_factor(factor: f64, order: usize) -> Result<()> {
    if !(factor.is_finite() && factor > 1.0) {
        return Err(Error::InvalidFactor(factor));
    }
    if order == 0 {
        return Err(Error::InvalidLadder("order must be at least 1".into()));
    }
    if !factor.powi(order as i32 - 1).is_finite() {
        return Err(Error::InvalidLadder(format!("{factor}^{} overflows", order - 1)));
    }
    Ok(())
}

fn dd_abs(x: TwoFloat) -> TwoFloat {
    if x.hi() < 0.0 {
        -x
    } else {
        x
    }
}

fn dd_powi(b: f64, n: usize) -> TwoFloat {
    (0..n).fold(TwoFloat::from(1.0), |acc, _| acc * b)
}

/// Combination weights w_q^{(Z)}, kept in double-double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub order: usize,
    pub factor: f64,
    weights: Vec<TwoFloat>,
}

impl WeightVector {
    pub fn values(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.hi() + w.lo()).collect()
    }

    pub fn extended(&self) -> &[TwoFloat] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        let s = self.weights.iter().fold(TwoFloat::from(0.0), |acc, &w| acc + w);
        s.hi() + s.lo()
    }

    /// Σ_q w_q b^{(q−1)v}.
    pub fn moment(&self, v: usize) -> f64 {
        let s = self
            .weights
            .iter()
            .enumerate()
            .fold(TwoFloat::from(0.0), |acc, (q, &w)| acc + w * dd_powi(self.factor, q * v));
        s.hi() + s.lo()
    }

    /// Σ|w_q|.
    pub fn condition_number(&self) -> f64 {
        self.weights.iter().map(|w| w.hi().abs()).sum()
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition_number() > CONDITION_WARNING
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().map(|w| w.hi().abs()).fold(0.0, f64::max)
    }
}

/// Weights from the two-estimate recursion
/// E^{(μ)}(x) = (b^{μ−1} E^{(μ−1)}(x) − E^{(μ−1)}(bx)) / (b^{μ−1} − 1), expanded to first-order estimates.
pub fn weights(order: usize, factor: f64) -> Result<WeightVector> {
    check_factor(factor, order)?;
    let mut w = vec![TwoFloat::from(1.0)];
    for mu in 2..=order {
        let scale = dd_powi(factor, mu - 1);
        let denom = scale - 1.0;
        let mut next = vec![TwoFloat::from(0.0); mu];
        for (q, slot) in next.iter_mut().enumerate() {
            let keep = if q < mu - 1 { w[q] * scale } else { TwoFloat::from(0.0) };
            let shifted = if q > 0 { w[q - 1] } else { TwoFloat::from(0.0) };
            *slot = (keep - shifted) / denom;
        }
        w = next;
    }
    Ok(WeightVector { order, factor, weights: w })
}

/// Z-order combination of first-order estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Combined {
    pub value: Complex64,
    pub condition_number: f64,
    /// Σ|w_q| above [`CONDITION_WARNING`].
    pub ill_conditioned: bool,
    /// |Σ w_q E_q| < 10⁻³ Σ|w_q E_q|.
    pub cancellation: bool,
}

/// Σ_q w_q E(x_q) for estimates given as `(power, value)` pairs in ladder order.
pub fn combine(estimates: &[(f64, Complex64)], ladder: &PowerLadder) -> Result<Combined> {
    if estimates.len() != ladder.order {
        return Err(Error::InvalidLadder(format!(
            "{} estimates for a ladder of order {}",
            estimates.len(),
            ladder.order
        )));
    }
    for (index, (&(got, _), expected)) in estimates.iter().zip(ladder.powers()).enumerate() {
        if (got - expected).abs() > 1e-9 * expected.abs() {
            return Err(Error::PowerMismatch { index, expected, got });
        }
    }
    let w = weights(ladder.order, ladder.factor)?;
    let zero = TwoFloat::from(0.0);
    let (mut re, mut im, mut gross) = (zero, zero, 0.0);
    for (&wq, &(_, e)) in w.extended().iter().zip(estimates) {
        re += wq * e.re;
        im += wq * e.im;
        gross += dd_abs(wq).hi() * e.norm();
    }
    let value = Complex64::new(re.hi() + re.lo(), im.hi() + im.lo());
    Ok(Combined {
        value,
        condition_number: w.condition_number(),
        ill_conditioned: w.ill_conditioned(),
        cancellation: value.norm() < 1e-3 * gross,
    })
}

/// Maximum number of series terms in [`z_order_bound`].
pub const BOUND_MAX_TERMS: usize = 500;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// M^{3m/2} Σ_{v≥Z} x^v/v! |Π_{j=1}^{Z−1} (b^{Z−j} − b^v)/(b^{Z−j} − 1)|, summed in log space.
pub fn z_order_bound(mode_count: usize, order_m: usize, power: f64, factor: f64, order: usize) -> Result<f64> {
    check_factor(factor, order)?;
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::InvalidLadder(format!("power must be non-negative, got {power}")));
    }
    if power == 0.0 {
        return Ok(0.0);
    }
    let lb = factor.ln();
    let z = order as f64;
    let log_denoms: f64 = (1..order).map(|j| ((z - j as f64) * lb).exp_m1().ln()).sum();
    let growth = 2.0 * power * factor.powi(order as i32 - 1);
    let mut total = f64::NEG_INFINITY;
    for (count, v) in (order..).enumerate() {
        if count >= BOUND_MAX_TERMS {
            return Err(Error::BoundNotConverged { terms: BOUND_MAX_TERMS });
        }
        let vf = v as f64;
        let log_prod: f64 = (1..order)
            .map(|j| {
                let e = z - j as f64;
                e * lb + ((vf - e) * lb).exp_m1().ln()
            })
            .sum();
        let term = vf * power.ln() - libm::lgamma(vf + 1.0) + log_prod - log_denoms;
        total = log_add(total, term);
        if term - total < (1e-16f64).ln() && vf + 1.0 > growth {
            break;
        }
    }
    Ok((mode_count as f64).powf(1.5 * order_m as f64) * total.exp())
}

/// One row of a bound grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub alpha2: f64,
    pub order: usize,
    pub factor: f64,
    pub bound: f64,
}

/// Bound values over every `(power, order)` pair, power-major.
pub fn bound_grid(
    mode_count: usize,
    order_m: usize,
    powers: &[f64],
    factor: f64,
    max_order: usize,
) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::with_capacity(powers.len() * max_order);
    for &alpha2 in powers {
        for order in 1..=max_order {
            let bound = z_order_bound(mode_count, order_m, alpha2, factor, order)?;
            rows.push(BoundRow { alpha2, order, factor, bound });
        }
    }
    Ok(rows)
}

/// Settings for [`empirical_order_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudyConfig {
    pub factor: f64,
    pub orders: Vec<usize>,
    pub base_powers: Vec<f64>,
    pub port_count: usize,
    /// Number of driven input modes.
    pub plan_modes: usize,
}

/// Fitted error exponent (in |α|²) of one extrapolation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: usize,
    pub slope: f64,
    /// `(base power, |combined − exact|)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Smallest error kept in a fit.
pub const ERROR_FLOOR: f64 = 1e-13;

/// Error of Z-order combined elastic reconstructions against the exact oracle, fitted per order.
pub fn empirical_order_study(
    oracle: &TruncatedUnitary,
    target: &Target,
    config: &OrderStudyConfig,
) -> Result<Vec<OrderFit>> {
    if oracle.kind() == UnitaryKind::GeneralVacuumFixing {
        return Err(Error::InvalidLadder("order study needs a number-conserving oracle".into()));
    }
    let exact = exact_s_element(oracle, &target.out_modes, &target.in_modes)?;
    let mut cache: Vec<(u64, Complex64)> = Vec::new();
    let mut first_order = |power: f64| -> Result<Complex64> {
        if let Some(&(_, v)) = cache.iter().find(|(k, _)| *k == power.to_bits()) {
            return Ok(v);
        }
        let plan = build_input_plan_elastic(config.plan_modes, &equal_magnitudes(config.plan_modes, power))?;
        let records = simulate_records(oracle, &plan, &target.out_modes, config.port_count, &NoiseConfig::exact())?;
        let v = reconstruct_elastic(&records, target)?.value;
        cache.push((power.to_bits(), v));
        Ok(v)
    };
    config
        .orders
        .iter()
        .map(|&order| {
            let mut points = Vec::with_capacity(config.base_powers.len());
            for &x in &config.base_powers {
                let ladder = PowerLadder::new(x, config.factor, order)?;
                let estimates = ladder
                    .powers()
                    .map(|p| first_order(p).map(|v| (p, v)))
                    .collect::<Result<Vec<_>>>()?;
                let err = (combine(&estimates, &ladder)?.value - exact).norm();
                if err >= ERROR_FLOOR {
                    points.push((x, err));
                }
            }
            if points.len() < 4 {
                return Err(Error::TooFewPoints { order, points: points.len() });
            }
            let slope = loglog_slope(points.iter().copied())
                .ok_or(Error::TooFewPoints { order, points: points.len() })?;
            Ok(OrderFit { order, slope, points })
        })
        .collect()
}
