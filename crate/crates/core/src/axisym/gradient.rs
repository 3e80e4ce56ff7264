//! Normal-velocity L2 gradients on profiles and the constrained direction.

use crate::axisym::profile::{metrics_unchecked, profile_gradients, AxisymProfile};
use crate::discrete::pairwise_sum;
use crate::error::{Error, Result};
use crate::functionals::{MultiplierEstimate, SurfaceMetrics, DEGENERACY_RATIO};

/// L2(dmu) normal velocities of W and sigma and the constrained direction.
#[derive(Debug, Clone)]
pub struct AxisymGradient {
    /// Normal component of grad W per sample.
    pub grad_w: Vec<f64>,
    /// Normal component of grad sigma per sample (exact first variation).
    pub grad_sigma: Vec<f64>,
    /// grad W - lambda grad sigma (zero lambda when degenerate).
    pub direction: Vec<f64>,
    pub mass: Vec<f64>,
    pub normal: Vec<[f64; 2]>,
    pub multiplier: MultiplierEstimate,
    pub metrics: SurfaceMetrics,
    /// Size of the constrained direction relative to grad W.
    pub relative_norm: f64,
}

/// Constrained descent data for a closed profile. Poles move only along the
/// axis, so their normal velocity is the z component projected on the
/// vertical normal.
pub fn axisym_gradient(profile: &AxisymProfile) -> Result<AxisymGradient> {
    profile.validate_basic()?;
    if !profile.is_closed() {
        return Err(Error::InvalidProfile("profile must start and end on the axis".into()));
    }
    let (metrics, geo) = metrics_unchecked(profile)?;
    let p = &profile.samples;
    let n = p.len();
    let g = profile_gradients(p);
    let normal = geo.normal();
    let SurfaceMetrics {
        area, volume, sigma, ..
    } = metrics;
    let mut gw = vec![0.0; n];
    let mut gs = vec![0.0; n];
    let mut formula = vec![0.0; n];
    for i in 0..n {
        let nv = if i == 0 {
            [0.0, -1.0]
        } else if i == n - 1 {
            [0.0, 1.0]
        } else {
            normal[i]
        };
        let dot = |v: [f64; 2]| v[0] * nv[0] + v[1] * nv[1];
        let ds = [
            sigma * (g.dv[i][0] / volume - 1.5 * g.da[i][0] / area),
            sigma * (g.dv[i][1] / volume - 1.5 * g.da[i][1] / area),
        ];
        gw[i] = dot(g.dw[i]) / geo.mass[i];
        gs[i] = dot(ds) / geo.mass[i];
        formula[i] = sigma * (1.0 / volume + 1.5 * geo.h[i] / area);
    }
    // Pole vertices are left out of the L2 products: their lumped mass
    // shrinks quadratically with the cap segment while their gradient only
    // shrinks linearly, so on finely capped profiles they would dominate.
    let mut m = geo.mass.clone();
    m[0] = 0.0;
    m[n - 1] = 0.0;
    let ip =
        |a: &[f64], b: &[f64]| pairwise_sum(&a.iter().zip(b).zip(&m).map(|((x, y), w)| x * y * w).collect::<Vec<_>>());
    let ww = ip(&gw, &gw);
    let ss = ip(&gs, &gs);
    let ws = ip(&gw, &gs);
    let scale = sigma / volume * area.sqrt();
    let ratio = ip(&formula, &formula).sqrt() / scale;
    let degenerate = ss < 1e-10 * ww || ratio < DEGENERACY_RATIO;
    let lambda = if degenerate { 0.0 } else { ws / ss };
    let direction: Vec<f64> = gw.iter().zip(&gs).map(|(a, b)| a - lambda * b).collect();
    let res = ip(&direction, &direction).sqrt();
    let multiplier = MultiplierEstimate {
        lambda: if degenerate { None } else { Some(lambda) },
        residual: res,
        relative_residual: if ww > 0.0 { res / ww.sqrt() } else { 0.0 },
        conditioning: ss,
        degenerate,
    };
    Ok(AxisymGradient {
        relative_norm: multiplier.relative_residual,
        grad_w: gw,
        grad_sigma: gs,
        direction,
        mass: geo.mass.clone(),
        normal,
        multiplier,
        metrics,
    })
}

/// Moves each sample along its normal by `step * velocity` (poles along the axis).
pub fn displace_normal(profile: &AxisymProfile, velocity: &[f64], step: f64) -> AxisymProfile {
    let geo = crate::axisym::profile::ProfileGeometry::new(profile);
    let nrm = geo.normal();
    let n = profile.len();
    let mut out = profile.samples.clone();
    for i in 0..n {
        let nv = if i == 0 {
            [0.0, -1.0]
        } else if i == n - 1 {
            [0.0, 1.0]
        } else {
            nrm[i]
        };
        out[i][0] += step * velocity[i] * nv[0];
        out[i][1] += step * velocity[i] * nv[1];
    }
    AxisymProfile::new(out)
}
