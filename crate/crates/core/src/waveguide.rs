//! Two-level scatterer in a linear-dispersion waveguide (c = 1) and the Gaussian
//! wave-packet forward model for measured one- and two-photon amplitudes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::quadrature::GaussHermite;

/// Transition frequency and decay rate of the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub omega0: f64,
    pub gamma: f64,
}

impl Default for QubitParams {
    fn default() -> Self {
        Self { omega0: 20.0, gamma: 1.0 }
    }
}

impl QubitParams {
    pub fn new(omega0: f64, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) || !omega0.is_finite() {
            return Err(Error::InvalidParameter(format!("need finite ω0 and γ > 0, got ω0={omega0}, γ={gamma}")));
        }
        Ok(Self { omega0, gamma })
    }

    /// r_ω = −1 / (1 − i(ω − ω0)/γ).
    pub fn reflection(&self, omega: f64) -> Complex64 {
        -Complex64::new(1.0, -(omega - self.omega0) / self.gamma).inv()
    }

    /// t_ω = 1 + r_ω.
    pub fn transmission(&self, omega: f64) -> Complex64 {
        self.reflection(omega) + 1.0
    }

    /// Monochromatic two-photon nonlinearity −(i/πγ) r_{ω1} r_{ω2} (r_{ν1} + r_{ν2}) for outgoing ω and incoming ν.
    pub fn tmono(&self, omega1: f64, omega2: f64, nu1: f64, nu2: f64) -> Complex64 {
        let pre = Complex64::new(0.0, -1.0 / (PI * self.gamma));
        pre * self.reflection(omega1) * self.reflection(omega2) * (self.reflection(nu1) + self.reflection(nu2))
    }
}

pub fn reflection(omega: f64, params: &QubitParams) -> Complex64 {
    params.reflection(omega)
}

pub fn transmission(omega: f64, params: &QubitParams) -> Complex64 {
    params.transmission(omega)
}

pub fn tmono(omega1: f64, omega2: f64, nu1: f64, nu2: f64, params: &QubitParams) -> Complex64 {
    params.tmono(omega1, omega2, nu1, nu2)
}

/// Gaussian wave-packet width in momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    pub sigma: f64,
}

impl WavePacketSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("σ must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    /// True when every momentum is at least `ratio` widths above zero.
    pub fn forward_valid(&self, momenta: &[f64], ratio: f64) -> bool {
        momenta.iter().all(|&k| k > ratio * self.sigma)
    }
}

/// Gauss–Hermite orders used by the forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub check_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: 80, check_nodes: 120, rel_tol: 1e-7 }
    }
}

/// On-shell coordinates (k̂, Δ_k, Δ_p) plus an optional energy mismatch δΣ = p1 + p2 − k1 − k2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCoordinates {
    pub khat: f64,
    pub delta_k: f64,
    pub delta_p: f64,
    #[serde(default)]
    pub sum_mismatch: f64,
}

impl TCoordinates {
    pub fn on_shell(khat: f64, delta_k: f64, delta_p: f64) -> Self {
        Self { khat, delta_k, delta_p, sum_mismatch: 0.0 }
    }

    /// `[p1, p2, k1, k2]`.
    pub fn momenta(&self) -> [f64; 4] {
        let kk = self.khat - self.sum_mismatch / 4.0;
        let kp = self.khat + self.sum_mismatch / 4.0;
        [kp - self.delta_p, kp + self.delta_p, kk - self.delta_k, kk + self.delta_k]
    }

    pub fn from_momenta([p1, p2, k1, k2]: [f64; 4]) -> Self {
        Self {
            khat: (p1 + p2 + k1 + k2) / 4.0,
            delta_k: (k2 - k1) / 2.0,
            delta_p: (p2 - p1) / 2.0,
            sum_mismatch: p1 + p2 - k1 - k2,
        }
    }
}

fn check_forward(momenta: &[f64]) -> Result<()> {
    if momenta.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(Error::InvalidParameter(format!("forward scattering needs positive momenta, got {momenta:?}")));
    }
    Ok(())
}

fn converged(a: Complex64, b: Complex64, scale: f64, tol: f64) -> Result<Complex64> {
    let residual = (a - b).norm() / scale.max(f64::MIN_POSITIVE);
    if residual > tol {
        return Err(Error::QuadratureNotConverged { residual, tol });
    }
    Ok(b)
}

fn single_with(p1: f64, k1: f64, sigma: f64, params: &QubitParams, rule: &GaussHermite) -> Complex64 {
    let centre = (k1 + p1) / 2.0;
    let sum: Complex64 = rule.iter().map(|(u, w)| params.transmission(centre + sigma * u) * w).sum();
    sum * ((-(p1 - k1).powi(2) / (4.0 * sigma * sigma)).exp() / PI.sqrt())
}

/// S_{p1 k1} = e^{−(p1−k1)²/4σ²} ∫ dk' G_σ(k' − (k1+p1)/2) t_{k'}.
pub fn measured_single(
    p1: f64,
    k1: f64,
    spec: &WavePacketSpec,
    params: &QubitParams,
    quad: &QuadratureConfig,
) -> Result<Complex64> {
    check_forward(&[p1, k1])?;
    let a = single_with(p1, k1, spec.sigma, params, &GaussHermite::new(quad.nodes));
    let b = single_with(p1, k1, spec.sigma, params, &GaussHermite::new(quad.check_nodes));
    let scale = (-(p1 - k1).powi(2) / (4.0 * spec.sigma * spec.sigma)).exp();
    converged(a, b, scale.max(b.norm()), quad.rel_tol)
}

fn envelope(coords: &TCoordinates, sigma: f64) -> f64 {
    SQRT_2 * sigma / PI * (-coords.sum_mismatch.powi(2) / (8.0 * sigma * sigma)).exp()
}

/// Measured T by full tensor-product quadrature of an arbitrary monochromatic nonlinearity
/// `f(p1, p2, k1, k2)`.
pub fn measured_t_with<F>(coords: &TCoordinates, spec: &WavePacketSpec, rule: &GaussHermite, f: F) -> Complex64
where
    F: Fn(f64, f64, f64, f64) -> Complex64,
{
    let s = spec.sigma;
    let mut sum = Complex64::zero();
    for (u1, w1) in rule.iter() {
        let k = coords.khat + s * u1 / SQRT_2;
        for (u2, w2) in rule.iter() {
            let dp = coords.delta_p + s * u2;
            let mut inner = Complex64::zero();
            for (u3, w3) in rule.iter() {
                let dk = coords.delta_k + s * u3;
                inner += f(k - dp, k + dp, k - dk, k + dk) * w3;
            }
            sum += inner * (w1 * w2);
        }
    }
    sum * envelope(coords, s)
}

/// Qubit nonlinearity factorises as P(K, Δp) · Q(K, Δk), giving an O(n²) rule.
fn qubit_t(coords: &TCoordinates, sigma: f64, params: &QubitParams, rule: &GaussHermite) -> Complex64 {
    let pre = Complex64::new(0.0, -1.0 / (PI * params.gamma));
    let mut sum = Complex64::zero();
    for (u1, w1) in rule.iter() {
        let k = coords.khat + sigma * u1 / SQRT_2;
        let (mut out, mut inc) = (Complex64::zero(), Complex64::zero());
        for (u, w) in rule.iter() {
            let dp = coords.delta_p + sigma * u;
            let dk = coords.delta_k + sigma * u;
            out += params.reflection(k - dp) * params.reflection(k + dp) * w;
            inc += (params.reflection(k - dk) + params.reflection(k + dk)) * w;
        }
        sum += out * inc * w1;
    }
    sum * pre * envelope(coords, sigma)
}

/// Measured two-photon nonlinearity T_{p1p2k1k2} of the qubit for Gaussian wave packets.
pub fn measured_t(
    coords: &TCoordinates,
    spec: &WavePacketSpec,
    params: &QubitParams,
    quad: &QuadratureConfig,
) -> Result<Complex64> {
    check_forward(&coords.momenta())?;
    let a = qubit_t(coords, spec.sigma, params, &GaussHermite::new(quad.nodes));
    let b = qubit_t(coords, spec.sigma, params, &GaussHermite::new(quad.check_nodes));
    let scale = SQRT_2 * spec.sigma * 4.0 / (PI * params.gamma) * (-coords.sum_mismatch.powi(2) / (8.0 * spec.sigma.powi(2))).exp();
    converged(a, b, scale.max(b.norm()), quad.rel_tol)
}

/// Provenance of a sampled surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub sigma: f64,
    pub gamma: f64,
    pub omega0: f64,
}

/// Complex samples over (k̂, Δ_p, Δ_k), Δ_k varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSurface {
    pub khat: Axis,
    pub delta_p: Axis,
    pub delta_k: Axis,
    pub values: Vec<Complex64>,
    pub meta: SurfaceMeta,
}

impl SampledSurface {
    pub fn zeros(khat: Axis, delta_p: Axis, delta_k: Axis, meta: SurfaceMeta) -> Self {
        let values = vec![Complex64::zero(); khat.count * delta_p.count * delta_k.count];
        Self { khat, delta_p, delta_k, values, meta }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.khat.count, self.delta_p.count, self.delta_k.count]
    }

    pub fn index(&self, ik: usize, ip: usize, idk: usize) -> usize {
        (ik * self.delta_p.count + ip) * self.delta_k.count + idk
    }

    pub fn get(&self, ik: usize, ip: usize, idk: usize) -> Complex64 {
        self.values[self.index(ik, ip, idk)]
    }

    pub fn is_consistent(&self) -> bool {
        let axes = [self.khat, self.delta_p, self.delta_k];
        axes.iter().all(|a| a.step > 0.0 && a.count > 0)
            && self.values.len() == self.shape().iter().product::<usize>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Iterator over `(khat, delta_k, delta_p, value)` in storage order.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64, Complex64)> + '_ {
        let [nk, np, nd] = self.shape();
        (0..nk).flat_map(move |ik| {
            (0..np).flat_map(move |ip| {
                (0..nd).map(move |id| {
                    (self.khat.at(ik), self.delta_k.at(id), self.delta_p.at(ip), self.get(ik, ip, id))
                })
            })
        })
    }
}

/// Measured T over a (Δ_p, Δ_k) grid at one k̂, Δ_k fastest, using a prebuilt rule.
pub fn t_slice(
    khat: f64,
    delta_p: &Axis,
    delta_k: &Axis,
    spec: &WavePacketSpec,
    params: &QubitParams,
    rule: &GaussHermite,
) -> Vec<Complex64> {
    let s = spec.sigma;
    let n = rule.len();
    let mut out = vec![Complex64::zero(); delta_p.count * delta_k.count];
    let mut outgoing = vec![Complex64::zero(); delta_p.count];
    let mut incoming = vec![Complex64::zero(); delta_k.count];
    for i in 0..n {
        let k = khat + s * rule.nodes[i] / SQRT_2;
        for (ip, slot) in outgoing.iter_mut().enumerate() {
            let d = delta_p.at(ip);
            *slot = rule
                .iter()
                .map(|(u, w)| params.reflection(k - d - s * u) * params.reflection(k + d + s * u) * w)
                .sum();
        }
        for (ik, slot) in incoming.iter_mut().enumerate() {
            let d = delta_k.at(ik);
            *slot = rule
                .iter()
                .map(|(u, w)| (params.reflection(k - d - s * u) + params.reflection(k + d + s * u)) * w)
                .sum();
        }
        let w1 = rule.weights[i];
        for (row, o) in out.chunks_mut(delta_k.count).zip(&outgoing) {
            let ow = o * w1;
            row.iter_mut().zip(&incoming).for_each(|(v, q)| *v += ow * q);
        }
    }
    let pre = Complex64::new(0.0, -1.0 / (PI * params.gamma)) * (SQRT_2 * s / PI);
    out.iter_mut().for_each(|v| *v *= pre);
    out
}

/// Sampled measured-T surface; convergence is checked at the peak sample against the higher order.
pub fn t_surface(
    khat: &Axis,
    delta_p: &Axis,
    delta_k: &Axis,
    spec: &WavePacketSpec,
    params: &QubitParams,
    quad: &QuadratureConfig,
) -> Result<SampledSurface> {
    let rule = GaussHermite::new(quad.nodes);
    let meta = SurfaceMeta { sigma: spec.sigma, gamma: params.gamma, omega0: params.omega0 };
    let mut surface = SampledSurface::zeros(*khat, *delta_p, *delta_k, meta);
    let plane = delta_p.count * delta_k.count;
    for ik in 0..khat.count {
        let slice = t_slice(khat.at(ik), delta_p, delta_k, spec, params, &rule);
        surface.values[ik * plane..(ik + 1) * plane].copy_from_slice(&slice);
    }
    verify_surface(&surface, spec, params, quad)?;
    Ok(surface)
}

/// Re-evaluate the peak sample with [`measured_t`] (both quadrature orders).
pub fn verify_surface(
    surface: &SampledSurface,
    spec: &WavePacketSpec,
    params: &QubitParams,
    quad: &QuadratureConfig,
) -> Result<()> {
    let (peak, _) = surface
        .values
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
    let nd = surface.delta_k.count;
    let np = surface.delta_p.count;
    let (ik, ip, id) = (peak / (np * nd), peak / nd % np, peak % nd);
    let coords = TCoordinates::on_shell(surface.khat.at(ik), surface.delta_k.at(id), surface.delta_p.at(ip));
    let reference = measured_t(&coords, spec, params, quad)?;
    converged(surface.values[peak], reference, reference.norm(), quad.rel_tol).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: QubitParams = QubitParams { omega0: 20.0, gamma: 1.0 };

    #[test]
    fn resonance_values() {
        assert!((P.reflection(20.0) + 1.0).norm() < 1e-15);
        assert!(P.transmission(20.0).norm() < 1e-15);
        assert!((P.transmission(1e9) - 1.0).norm() < 1e-8);
        let t = P.tmono(20.0, 20.0, 20.0, 20.0);
        assert!((t - Complex64::new(0.0, 2.0 / PI)).norm() < 1e-15);
    }

    #[test]
    fn single_photon_unitarity_on_grid() {
        for i in 0..10_000 {
            let w = -30.0 + 0.006 * i as f64 + 20.0;
            let (r, t) = (P.reflection(w), P.transmission(w));
            assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tmono_symmetry_and_decay() {
        let a = P.tmono(19.3, 21.1, 20.4, 18.9);
        assert!((a - P.tmono(21.1, 19.3, 20.4, 18.9)).norm() < 1e-15);
        assert!((a - P.tmono(19.3, 21.1, 18.9, 20.4)).norm() < 1e-15);
        let far1 = P.tmono(20.0 + 1e4, 20.0, 20.0, 20.0).norm();
        let far2 = P.tmono(20.0 + 2e4, 20.0, 20.0, 20.0).norm();
        assert!((far1 / far2 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn coordinates_round_trip() {
        let c = TCoordinates { khat: 21.5, delta_k: 0.3, delta_p: -1.2, sum_mismatch: 0.4 };
        let back = TCoordinates::from_momenta(c.momenta());
        assert!((back.khat - c.khat).abs() < 1e-14);
        assert!((back.delta_k - c.delta_k).abs() < 1e-14);
        assert!((back.delta_p - c.delta_p).abs() < 1e-14);
        assert!((back.sum_mismatch - c.sum_mismatch).abs() < 1e-14);
    }

    #[test]
    fn measured_single_limits() {
        let q = QuadratureConfig::default();
        let narrow = WavePacketSpec::new(1e-3).unwrap();
        for k in [16.0, 19.5, 20.0, 23.0] {
            let s = measured_single(k, k, &narrow, &P, &q).unwrap();
            assert!((s - P.transmission(k)).norm() < 1e-4);
        }
        let wide = WavePacketSpec::new(0.8).unwrap();
        let diag = measured_single(20.0, 20.0, &wide, &P, &q).unwrap();
        let off = measured_single(24.0, 20.0, &WavePacketSpec::new(0.4).unwrap(), &P, &q).unwrap();
        assert!(off.norm() < (-25.0f64).exp() * 1.01);
        assert!(diag.norm() > 0.1);
        assert!(measured_single(-1.0, 2.0, &wide, &P, &q).is_err());
    }

    #[test]
    fn measured_single_matches_trapezoid() {
        let sigma = 0.8;
        let got = measured_single(20.0, 20.0, &WavePacketSpec::new(sigma).unwrap(), &P, &QuadratureConfig::default()).unwrap();
        let h = 1e-3;
        let mut sum = Complex64::zero();
        let mut x = 20.0 - 12.0 * sigma;
        while x <= 20.0 + 12.0 * sigma {
            let g = (-(x - 20.0).powi(2) / (sigma * sigma)).exp() / (PI.sqrt() * sigma);
            sum += P.transmission(x) * g * h;
            x += h;
        }
        assert!((got - sum).norm() < 1e-8);
    }

    #[test]
    fn off_shell_suppression() {
        let q = QuadratureConfig::default();
        let spec = WavePacketSpec::new(0.5).unwrap();
        let on = measured_t(&TCoordinates::on_shell(21.0, 0.2, 0.4), &spec, &P, &q).unwrap();
        let off = measured_t(&TCoordinates { khat: 21.0, delta_k: 0.2, delta_p: 0.4, sum_mismatch: 4.0 }, &spec, &P, &q).unwrap();
        assert!((off.norm() / on.norm() - (-8.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn factorised_rule_matches_generic() {
        let spec = WavePacketSpec::new(0.8).unwrap();
        let rule = GaussHermite::new(40);
        let c = TCoordinates::on_shell(21.5, 0.7, -0.4);
        let fast = qubit_t(&c, spec.sigma, &P, &rule);
        let slow = measured_t_with(&c, &spec, &rule, |p1, p2, k1, k2| P.tmono(p1, p2, k1, k2));
        assert!((fast - slow).norm() < 1e-13 * fast.norm());
    }

    #[test]
    fn surface_symmetry_and_single_point() {
        let spec = WavePacketSpec::new(0.8).unwrap();
        let q = QuadratureConfig::default();
        let axis = Axis::centred(0.0, 1.0, 0.5);
        let surf = t_surface(&Axis::single(21.5), &axis, &axis, &spec, &P, &q).unwrap();
        let n = axis.count;
        for ip in 0..n {
            for id in 0..n {
                let v = surf.get(0, ip, id);
                assert!((v - surf.get(0, n - 1 - ip, id)).norm() < 1e-10 * v.norm());
                assert!((v - surf.get(0, ip, n - 1 - id)).norm() < 1e-10 * v.norm());
            }
        }
        let one = t_surface(&Axis::single(21.5), &Axis::single(0.5), &Axis::single(-0.5), &spec, &P, &q).unwrap();
        let direct = measured_t(&TCoordinates::on_shell(21.5, -0.5, 0.5), &spec, &P, &q).unwrap();
        assert!((one.values[0] - direct).norm() < 1e-12 * direct.norm());
    }
}
