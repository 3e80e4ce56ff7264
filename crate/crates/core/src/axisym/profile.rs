//! Meridian profiles and their polyline functionals.
//!
//! A profile is the polyline (rho_i, z_i) swept about the z axis. The
//! tangent angle psi is measured from the rho direction, so that
//! (rho', z') = (cos psi, sin psi) in arc length and the exterior normal is
//! (sin psi, -cos psi). A round sphere traversed from its south pole has
//! psi running from 0 to pi; a stomatocyte climbs to 2 pi across its neck
//! and returns to pi along the inner lobe.

use std::f64::consts::PI;

use nalgebra::SVector;
use num_dual::{DualNum, DualSVec64};

use crate::discrete::pairwise_sum;
use crate::error::{Error, Result};
use crate::functionals::{isoperimetric_ratio, SurfaceMetrics};

/// Sampled generating curve of a surface of revolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymProfile {
    /// (rho, z) pairs from the south pole to the north pole.
    pub samples: Vec<[f64; 2]>,
}

impl AxisymProfile {
    pub fn new(samples: Vec<[f64; 2]>) -> Self {
        AxisymProfile { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Both endpoints on the axis.
    pub fn is_closed(&self) -> bool {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => a[0] == 0.0 && b[0] == 0.0,
            _ => false,
        }
    }

    pub fn rho(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p[0]).collect()
    }

    pub fn z(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p[1]).collect()
    }

    pub fn scaled(&self, s: f64) -> AxisymProfile {
        AxisymProfile::new(self.samples.iter().map(|p| [p[0] * s, p[1] * s]).collect())
    }

    pub fn shifted(&self, dz: f64) -> AxisymProfile {
        AxisymProfile::new(self.samples.iter().map(|p| [p[0], p[1] + dz]).collect())
    }

    /// Basic validity: finite samples, rho >= 0, distinct consecutive samples,
    /// no interior zeros of rho. Closed profiles must end on the axis.
    pub fn validate_basic(&self) -> Result<()> {
        let n = self.samples.len();
        if n < 3 {
            return Err(Error::InvalidProfile(format!("need at least 3 samples, got {n}")));
        }
        for (i, p) in self.samples.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::InvalidProfile(format!("sample {i} is not finite")));
            }
            if p[0] < 0.0 {
                return Err(Error::InvalidProfile(format!("negative rho {} at sample {i}", p[0])));
            }
        }
        for i in 1..n - 1 {
            if self.samples[i][0] == 0.0 {
                return Err(Error::PinchedProfile(i));
            }
        }
        for i in 0..n - 1 {
            if self.samples[i] == self.samples[i + 1] {
                return Err(Error::InvalidProfile(format!("samples {i} and {} coincide", i + 1)));
            }
        }
        Ok(())
    }

    /// Full validation including the simple-polyline check.
    pub fn validate(&self) -> Result<()> {
        self.validate_basic()?;
        if let Some((a, b)) = self.first_crossing() {
            return Err(Error::SelfIntersecting(a, b));
        }
        Ok(())
    }

    /// First pair of non-adjacent segments that intersect, if any.
    pub fn first_crossing(&self) -> Option<(usize, usize)> {
        let p = &self.samples;
        let ns = p.len() - 1;
        let bbox: Vec<[f64; 4]> = (0..ns)
            .map(|i| {
                let (a, b) = (p[i], p[i + 1]);
                [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
            })
            .collect();
        // sort segments by lower z for a sweep
        let mut order: Vec<usize> = (0..ns).collect();
        order.sort_by(|&a, &b| bbox[a][2].total_cmp(&bbox[b][2]));
        for (oi, &i) in order.iter().enumerate() {
            for &j in &order[oi + 1..] {
                if bbox[j][2] > bbox[i][3] {
                    break;
                }
                if i.abs_diff(j) <= 1 {
                    continue;
                }
                if bbox[i][0] > bbox[j][1] || bbox[j][0] > bbox[i][1] {
                    continue;
                }
                if segments_cross(p[i], p[i + 1], p[j], p[j + 1]) {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn seg_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[1] - a[1]).atan2(b[0] - a[0])
}

fn turn(t1: [f64; 2], t2: [f64; 2]) -> f64 {
    (t1[0] * t2[1] - t1[1] * t2[0]).atan2(t1[0] * t2[0] + t1[1] * t2[1])
}

/// Per-vertex discrete geometry of a profile polyline.
#[derive(Debug, Clone)]
pub struct ProfileGeometry {
    /// Segment lengths.
    pub seg_len: Vec<f64>,
    /// Tangent angle at vertices (continuous, unwrapped).
    pub psi: Vec<f64>,
    /// Meridian curvature.
    pub kappa_m: Vec<f64>,
    /// Parallel curvature sin(psi)/rho.
    pub kappa_p: Vec<f64>,
    /// Scalar mean curvature in the sphere-negative convention, -(kappa_m + kappa_p).
    pub h: Vec<f64>,
    /// Area of the surface band attached to each vertex.
    pub mass: Vec<f64>,
    /// Integrated Gauss curvature attached to each vertex.
    pub gauss: Vec<f64>,
    /// Integrated H^2 attached to each vertex (poles carry none).
    pub h2: Vec<f64>,
    pub closed: bool,
}

impl ProfileGeometry {
    pub fn new(profile: &AxisymProfile) -> Self {
        let p = &profile.samples;
        let n = p.len();
        let closed = profile.is_closed();
        let seg_len: Vec<f64> = (0..n - 1)
            .map(|i| ((p[i + 1][0] - p[i][0]).powi(2) + (p[i + 1][1] - p[i][1]).powi(2)).sqrt())
            .collect();
        let dir = |i: usize| -> [f64; 2] {
            [
                (p[i + 1][0] - p[i][0]) / seg_len[i],
                (p[i + 1][1] - p[i][1]) / seg_len[i],
            ]
        };
        let mut psi = vec![0.0; n];
        let mut kappa_m = vec![0.0; n];
        let mut kappa_p = vec![0.0; n];
        let mut mass = vec![0.0; n];
        let mut gauss = vec![0.0; n];
        let mut h2 = vec![0.0; n];

        // unwrapped segment angles
        let mut phi = vec![0.0; n - 1];
        phi[0] = seg_angle(p[0], p[1]);
        if closed {
            // the south pole tangent is +rho, so phi[0] is measured from 0
            phi[0] = turn([1.0, 0.0], dir(0));
        }
        for i in 1..n - 1 {
            phi[i] = phi[i - 1] + turn(dir(i - 1), dir(i));
        }
        for i in 1..n - 1 {
            let s = 0.5 * (seg_len[i - 1] + seg_len[i]);
            let dphi = phi[i] - phi[i - 1];
            psi[i] = phi[i - 1] + 0.5 * dphi;
            kappa_m[i] = dphi / s;
            kappa_p[i] = psi[i].sin() / p[i][0];
            mass[i] = 2.0 * PI * p[i][0] * s;
            h2[i] = (kappa_m[i] + kappa_p[i]).powi(2) * mass[i];
            gauss[i] = 2.0 * PI * (phi[i - 1].cos() - phi[i].cos());
        }
        if closed {
            let l0 = seg_len[0];
            psi[0] = 0.0;
            kappa_m[0] = phi[0] / (0.5 * l0);
            kappa_p[0] = kappa_m[0];
            mass[0] = PI * (0.5 * l0).powi(2);
            gauss[0] = 2.0 * PI * (1.0 - phi[0].cos());
            let ln = seg_len[n - 2];
            let last = phi[n - 2];
            let end_turn = turn(dir(n - 2), [-1.0, 0.0]);
            psi[n - 1] = last + end_turn;
            kappa_m[n - 1] = end_turn / (0.5 * ln);
            kappa_p[n - 1] = kappa_m[n - 1];
            mass[n - 1] = PI * (0.5 * ln).powi(2);
            gauss[n - 1] = 2.0 * PI * (last.cos() + 1.0);
        } else {
            psi[0] = phi[0];
            psi[n - 1] = phi[n - 2];
            mass[0] = PI * p[0][0] * seg_len[0];
            mass[n - 1] = PI * p[n - 1][0] * seg_len[n - 2];
        }
        let h = kappa_m.iter().zip(&kappa_p).map(|(a, b)| -(a + b)).collect();
        ProfileGeometry {
            seg_len,
            psi,
            kappa_m,
            kappa_p,
            h,
            mass,
            gauss,
            h2,
            closed,
        }
    }

    pub fn willmore(&self) -> f64 {
        0.25 * pairwise_sum(&self.h2)
    }

    pub fn total_gauss(&self) -> f64 {
        pairwise_sum(&self.gauss)
    }

    /// Per-vertex integrated |A|^2 = H^2 - 2K.
    pub fn a2(&self) -> Vec<f64> {
        self.h2.iter().zip(&self.gauss).map(|(h, k)| h - 2.0 * k).collect()
    }

    pub fn total_a2(&self) -> f64 {
        pairwise_sum(&self.a2())
    }

    /// Pointwise Gauss curvature kappa_m kappa_p.
    pub fn gauss_pointwise(&self) -> Vec<f64> {
        self.kappa_m.iter().zip(&self.kappa_p).map(|(a, b)| a * b).collect()
    }

    /// Exterior unit normal (sin psi, -cos psi) per vertex.
    pub fn normal(&self) -> Vec<[f64; 2]> {
        self.psi.iter().map(|s| [s.sin(), -s.cos()]).collect()
    }
}

/// Frustum area of a profile.
pub fn profile_area(p: &[[f64; 2]]) -> f64 {
    let terms: Vec<f64> = p
        .windows(2)
        .map(|w| {
            let l = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            PI * (w[0][0] + w[1][0]) * l
        })
        .collect();
    pairwise_sum(&terms)
}

/// Signed enclosed volume of a profile (exact for the frusta).
pub fn profile_volume(p: &[[f64; 2]]) -> f64 {
    let terms: Vec<f64> = p
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0][0], w[1][0]);
            PI / 3.0 * (a * a + a * b + b * b) * (w[1][1] - w[0][1])
        })
        .collect();
    pairwise_sum(&terms)
}

/// All scalar functionals of a closed profile.
pub fn axisym_metrics(profile: &AxisymProfile) -> Result<SurfaceMetrics> {
    profile.validate_basic()?;
    if !profile.is_closed() {
        return Err(Error::InvalidProfile("profile must start and end on the axis".into()));
    }
    Ok(metrics_unchecked(profile)?.0)
}

/// Metrics and geometry without validation beyond the volume sign.
pub fn metrics_unchecked(profile: &AxisymProfile) -> Result<(SurfaceMetrics, ProfileGeometry)> {
    let g = ProfileGeometry::new(profile);
    let area = profile_area(&profile.samples);
    let volume = profile_volume(&profile.samples);
    if !(volume > 0.0) {
        return Err(Error::Orientation(volume));
    }
    let m = SurfaceMetrics {
        area,
        volume,
        sigma: isoperimetric_ratio(area, volume),
        willmore: g.willmore(),
        total_a2: g.total_a2(),
        total_gauss: g.total_gauss(),
        helfrich: None,
    };
    Ok((m, g))
}

fn vertex_w<T: DualNum<Primitive = f64> + Copy>(x: &[T]) -> T {
    // x = [rho_a, z_a, rho, z, rho_b, z_b]
    let (dra, dza) = (x[2] - x[0], x[3] - x[1]);
    let (drb, dzb) = (x[4] - x[2], x[5] - x[3]);
    let la = (dra * dra + dza * dza).sqrt();
    let lb = (drb * drb + dzb * dzb).sqrt();
    let s = (la + lb) * 0.5;
    let phi_a = dza.atan2(dra);
    let dphi = (dra * dzb - dza * drb).atan2(dra * drb + dza * dzb);
    let psi = phi_a + dphi * 0.5;
    let k = dphi / s + psi.sin() / x[2];
    k * k * x[2] * s * (2.0 * PI)
}

/// Position gradients of W, area and volume of a closed or open profile,
/// as (d/drho, d/dz) per sample.
#[derive(Debug, Clone)]
pub struct ProfileGradients {
    pub dw: Vec<[f64; 2]>,
    pub da: Vec<[f64; 2]>,
    pub dv: Vec<[f64; 2]>,
}

pub fn profile_gradients(p: &[[f64; 2]]) -> ProfileGradients {
    let n = p.len();
    let mut dw = vec![[0.0; 2]; n];
    let mut da = vec![[0.0; 2]; n];
    let mut dv = vec![[0.0; 2]; n];
    for i in 1..n - 1 {
        let x = SVector::<f64, 6>::from([p[i - 1][0], p[i - 1][1], p[i][0], p[i][1], p[i + 1][0], p[i + 1][1]]);
        let (_, g) = num_dual::gradient(|xd: SVector<DualSVec64<6>, 6>| vertex_w(xd.as_slice()), &x);
        // the sum carries the factor 1/4 of W
        for k in 0..3 {
            dw[i - 1 + k][0] += 0.25 * g[2 * k];
            dw[i - 1 + k][1] += 0.25 * g[2 * k + 1];
        }
    }
    for i in 0..n - 1 {
        let (a, b) = (p[i], p[i + 1]);
        let (dr, dz) = (b[0] - a[0], b[1] - a[1]);
        let l = (dr * dr + dz * dz).sqrt();
        let sr = a[0] + b[0];
        // area pi (ra + rb) l
        da[i][0] += PI * (l - sr * dr / l);
        da[i][1] += -PI * sr * dz / l;
        da[i + 1][0] += PI * (l + sr * dr / l);
        da[i + 1][1] += PI * sr * dz / l;
        // volume pi/3 (ra^2 + ra rb + rb^2) dz
        let q = a[0] * a[0] + a[0] * b[0] + b[0] * b[0];
        dv[i][0] += PI / 3.0 * (2.0 * a[0] + b[0]) * dz;
        dv[i][1] -= PI / 3.0 * q;
        dv[i + 1][0] += PI / 3.0 * (2.0 * b[0] + a[0]) * dz;
        dv[i + 1][1] += PI / 3.0 * q;
    }
    ProfileGradients { dw, da, dv }
}

/// Discrete W of a polyline evaluated through the same kernel as the
/// gradient (used for consistency checks).
pub fn profile_willmore(p: &[[f64; 2]]) -> f64 {
    let terms: Vec<f64> = (1..p.len() - 1)
        .map(|i| vertex_w(&[p[i - 1][0], p[i - 1][1], p[i][0], p[i][1], p[i + 1][0], p[i + 1][1]]))
        .collect();
    0.25 * pairwise_sum(&terms)
}

/// Profile of the sphere of radius r centered at the origin with `n`
/// segments, uniform in polar angle.
pub fn sphere_profile(r: f64, n: usize) -> AxisymProfile {
    let mut s: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let th = PI * i as f64 / n as f64;
            [r * th.sin(), -r * th.cos()]
        })
        .collect();
    s[0][0] = 0.0;
    s[n][0] = 0.0;
    AxisymProfile::new(s)
}

/// Profile of the ellipsoid of revolution with equatorial semi-axis `a` and
/// polar semi-axis `c`, uniform in the parameter angle.
pub fn ellipsoid_profile(a: f64, c: f64, n: usize) -> AxisymProfile {
    let mut s: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let th = PI * i as f64 / n as f64;
            [a * th.sin(), -c * th.cos()]
        })
        .collect();
    s[0][0] = 0.0;
    s[n][0] = 0.0;
    AxisymProfile::new(s)
}

/// Open catenoid band rho = c cosh(z/c), |z| <= zmax, uniform in z.
pub fn catenoid_profile(c: f64, zmax: f64, n: usize) -> AxisymProfile {
    AxisymProfile::new(
        (0..=n)
            .map(|i| {
                let z = -zmax + 2.0 * zmax * i as f64 / n as f64;
                [c * (z / c).cosh(), z]
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_values() {
        let m = axisym_metrics(&sphere_profile(1.0, 2000)).unwrap();
        assert!((m.area - 4.0 * PI).abs() < 1e-4 * 4.0 * PI);
        assert!((m.volume - 4.0 * PI / 3.0).abs() < 1e-4);
        assert!((m.sigma - 1.0).abs() < 1e-4);
        assert!((m.willmore - 4.0 * PI).abs() < 1e-4 * 4.0 * PI, "{}", m.willmore);
        assert!((m.total_gauss - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn second_order_convergence() {
        let mut errs = Vec::new();
        for &n in &[100usize, 200, 400, 800, 1600] {
            let m = axisym_metrics(&sphere_profile(1.0, n)).unwrap();
            errs.push((m.willmore - 4.0 * PI).abs() + (m.area - 4.0 * PI).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "observed order {order}");
        }
    }

    #[test]
    fn scale_invariance() {
        let p = ellipsoid_profile(1.0, 2.0, 500);
        let a = axisym_metrics(&p).unwrap();
        let b = axisym_metrics(&p.scaled(13.0)).unwrap();
        assert!((a.sigma - b.sigma).abs() < 1e-12);
        assert!((a.willmore - b.willmore).abs() < 1e-12 * a.willmore);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ellipsoid_profile(1.0, 1.7, 60).samples;
        let g = profile_gradients(&p);
        let h = 1e-6;
        for i in [0usize, 1, 17, 30, 59, 60] {
            for k in 0..2 {
                if (i == 0 || i == 60) && k == 0 {
                    continue;
                }
                let mut a = p.clone();
                let mut b = p.clone();
                a[i][k] += h;
                b[i][k] -= h;
                let fd_w = (profile_willmore(&a) - profile_willmore(&b)) / (2.0 * h);
                let fd_a = (profile_area(&a) - profile_area(&b)) / (2.0 * h);
                let fd_v = (profile_volume(&a) - profile_volume(&b)) / (2.0 * h);
                assert!(
                    (fd_w - g.dw[i][k]).abs() < 1e-6 * (1.0 + fd_w.abs()),
                    "W {i} {k}: {fd_w} vs {}",
                    g.dw[i][k]
                );
                assert!((fd_a - g.da[i][k]).abs() < 1e-6 * (1.0 + fd_a.abs()));
                assert!((fd_v - g.dv[i][k]).abs() < 1e-6 * (1.0 + fd_v.abs()));
            }
        }
    }

    #[test]
    fn kernel_matches_geometry() {
        let p = ellipsoid_profile(1.0, 0.6, 300);
        let g = ProfileGeometry::new(&p);
        assert!((g.willmore() - profile_willmore(&p.samples)).abs() < 1e-12);
    }

    #[test]
    fn invalid_profiles() {
        let mut p = sphere_profile(1.0, 50);
        p.samples[10][0] = -0.1;
        assert!(p.validate().is_err());
        let mut p = sphere_profile(1.0, 50);
        p.samples[10][0] = 0.0;
        assert!(matches!(p.validate(), Err(Error::PinchedProfile(10))));
        let mut p = sphere_profile(1.0, 50);
        p.samples[20] = [0.5, 1.5];
        assert!(matches!(p.validate(), Err(Error::SelfIntersecting(..))));
        assert!(sphere_profile(1.0, 50).validate().is_ok());
    }
}
