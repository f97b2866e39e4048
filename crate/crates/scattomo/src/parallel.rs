//! Thread-parallel drivers for the engine loops.

use rayon::prelude::*;
use scattomo_core::grid::Axis;
use scattomo_core::quadrature::GaussHermite;
use scattomo_core::waveguide::{t_slice, verify_surface, QuadratureConfig, QubitParams, SampledSurface, SurfaceMeta, WavePacketSpec};
use scattomo_core::Result;

/// Measured-T surface with one k̂ slice per task; identical to the sequential engine.
pub fn t_surface(
    khat: &Axis,
    delta_p: &Axis,
    delta_k: &Axis,
    spec: &WavePacketSpec,
    params: &QubitParams,
    quad: &QuadratureConfig,
) -> Result<SampledSurface> {
    let rule = GaussHermite::new(quad.nodes);
    let slices: Vec<_> = (0..khat.count)
        .into_par_iter()
        .map(|ik| t_slice(khat.at(ik), delta_p, delta_k, spec, params, &rule))
        .collect();
    let meta = SurfaceMeta { sigma: spec.sigma, gamma: params.gamma, omega0: params.omega0 };
    let surface = SampledSurface { khat: *khat, delta_p: *delta_p, delta_k: *delta_k, values: slices.concat(), meta };
    verify_surface(&surface, spec, params, quad)?;
    Ok(surface)
}
