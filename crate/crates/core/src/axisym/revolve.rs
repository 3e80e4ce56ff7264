//! Lifting profiles to triangle meshes.

use std::f64::consts::PI;

use crate::axisym::isothermal::log_mean_step;
use crate::axisym::profile::AxisymProfile;
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

/// Sweeps the profile samples into rings of `angular` vertices. Poles become
/// single vertices.
pub fn revolve(profile: &AxisymProfile, angular: usize) -> Result<TriMesh> {
    if angular < 8 {
        return Err(Error::Config(format!("need at least 8 angular samples, got {angular}")));
    }
    profile.validate_basic()?;
    if !profile.is_closed() {
        return Err(Error::InvalidProfile("profile must start and end on the axis".into()));
    }
    let p = &profile.samples;
    let n = p.len();
    let rings = n - 2;
    let mut v = Vec::with_capacity(rings * angular + 2);
    v.push(Vec3::new(0.0, 0.0, p[0][1]));
    for s in &p[1..n - 1] {
        for j in 0..angular {
            let a = 2.0 * PI * j as f64 / angular as f64;
            v.push(Vec3::new(s[0] * a.cos(), s[0] * a.sin(), s[1]));
        }
    }
    v.push(Vec3::new(0.0, 0.0, p[n - 1][1]));
    let north = v.len() - 1;
    let id = |ring: usize, j: usize| 1 + ring * angular + (j % angular);
    let mut f = Vec::with_capacity(2 * rings * angular);
    for j in 0..angular {
        f.push([0, id(0, j + 1), id(0, j)]);
    }
    for r in 0..rings - 1 {
        for j in 0..angular {
            // profile runs upward along the meridian, theta counterclockwise
            f.push([id(r, j), id(r, j + 1), id(r + 1, j + 1)]);
            f.push([id(r, j), id(r + 1, j + 1), id(r + 1, j)]);
        }
    }
    for j in 0..angular {
        f.push([north, id(rings - 1, j), id(rings - 1, j + 1)]);
    }
    Ok(TriMesh::new(v, f))
}

/// Resamples a closed profile at conformal spacing 2 pi / angular, so that
/// revolved faces are close to isotropic, keeping rings with
/// rho >= `cutoff` times the largest radius.
pub fn resample_conformal(profile: &AxisymProfile, angular: usize, cutoff: f64) -> Result<AxisymProfile> {
    profile.validate_basic()?;
    let p = &profile.samples;
    let n = p.len();
    let rmax = p.iter().map(|q| q[0]).fold(0.0, f64::max);
    let keep: Vec<usize> = (1..n - 1).filter(|&i| p[i][0] >= cutoff * rmax).collect();
    if keep.len() < 2 {
        return Err(Error::InvalidProfile("nothing left above the cutoff".into()));
    }
    let (i0, i1) = (keep[0], *keep.last().unwrap());
    let mut x = vec![0.0; i1 - i0 + 1];
    for i in i0 + 1..=i1 {
        let l = ((p[i][0] - p[i - 1][0]).powi(2) + (p[i][1] - p[i - 1][1]).powi(2)).sqrt();
        x[i - i0] = x[i - i0 - 1] + log_mean_step(l, p[i - 1][0], p[i][0]);
    }
    let total = x[x.len() - 1];
    let dx = 2.0 * PI / angular as f64;
    let m = (total / dx).round().max(2.0) as usize;
    let mut out = vec![[0.0, p[0][1]]];
    let mut k = 0usize;
    for j in 0..=m {
        let xv = total * j as f64 / m as f64;
        while k + 1 < x.len() - 1 && x[k + 1] < xv {
            k += 1;
        }
        let w = ((xv - x[k]) / (x[k + 1] - x[k])).clamp(0.0, 1.0);
        let (a, b) = (p[i0 + k], p[i0 + k + 1]);
        out.push([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]);
    }
    out.push([0.0, p[n - 1][1]]);
    Ok(AxisymProfile::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axisym::profile::{axisym_metrics, sphere_profile};
    use crate::functionals::metrics;

    #[test]
    fn sphere_mesh() {
        let m = revolve(&sphere_profile(1.0, 400), 256).unwrap();
        let t = m.validate_closed().unwrap();
        assert_eq!(t.euler_characteristic(), 2);
        let s = metrics(&m).unwrap();
        assert!((s.sigma - 1.0).abs() < 1e-3);
        let coarse = metrics(&revolve(&sphere_profile(1.0, 40), 8).unwrap()).unwrap();
        assert!(coarse.sigma < 1.0);
    }

    #[test]
    fn cross_representation_agreement() {
        let p = crate::axisym::profile::ellipsoid_profile(1.0, 1.6, 2000);
        let a = axisym_metrics(&p).unwrap();
        let q = resample_conformal(&p, 256, 1e-3).unwrap();
        let m = metrics(&revolve(&q, 256).unwrap()).unwrap();
        assert!(
            (a.willmore - m.willmore).abs() < 1e-2 * a.willmore,
            "{} vs {}",
            a.willmore,
            m.willmore
        );
        assert!((a.sigma - m.sigma).abs() < 1e-3);
    }
}
