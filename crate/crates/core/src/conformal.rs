//! The conformal-coordinate form Q[f] of the Willmore first variation.
//!
//! For a conformal parametrization f(x, y) with metric e^{2u} delta,
//!
//! ```text
//! Q_j = 1/2 (d_j Hvec - 3/2 H d_j n + 1/2 Hvec x (grad^perp n)_j),
//! grad^perp = (-d_2, d_1),
//! ```
//!
//! with `Hvec = Delta_g f` and `n = f_x x f_y / |f_x x f_y|`. Derivatives of
//! Hvec and n are taken by central differences of the analytic second-order
//! data supplied by the patch.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Relative tolerance on the metric for a parametrization to count as conformal.
pub const CONFORMAL_TOL: f64 = 1e-8;

/// Position with first and second derivatives at a parameter point.
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    pub f: Vec3,
    pub fx: Vec3,
    pub fy: Vec3,
    pub fxx: Vec3,
    pub fxy: Vec3,
    pub fyy: Vec3,
}

/// A parametrized surface patch with two derivatives.
pub trait SurfacePatch {
    fn jet(&self, x: f64, y: f64) -> Jet2;
}

/// The plane z = 0.
pub struct PlanePatch;

impl SurfacePatch for PlanePatch {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        Jet2 {
            f: Vec3::new(x, y, 0.0),
            fx: Vec3::x(),
            fy: Vec3::y(),
            fxx: Vec3::zeros(),
            fxy: Vec3::zeros(),
            fyy: Vec3::zeros(),
        }
    }
}

/// Inverse stereographic projection onto the sphere of radius `r`,
/// oriented with the exterior normal.
pub struct StereographicSphere {
    pub radius: f64,
}

impl SurfacePatch for StereographicSphere {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        // f = r (2x, 2y, 1 - x^2 - y^2) / (1 + x^2 + y^2)
        let r = self.radius;
        let d = 1.0 + x * x + y * y;
        let f = Vec3::new(2.0 * x / d, 2.0 * y / d, (1.0 - x * x - y * y) / d) * r;
        let d2 = d * d;
        let d3 = d2 * d;
        let fx = Vec3::new(2.0 * (d - 2.0 * x * x) / d2, -4.0 * x * y / d2, -4.0 * x / d2) * r;
        let fy = Vec3::new(-4.0 * x * y / d2, 2.0 * (d - 2.0 * y * y) / d2, -4.0 * y / d2) * r;
        let fxx = Vec3::new(
            (4.0 * x * (x * x - 3.0 * y * y - 3.0)) / d3,
            (4.0 * y * (3.0 * x * x - y * y - 1.0)) / d3,
            (4.0 * (3.0 * x * x - y * y - 1.0)) / d3,
        ) * r;
        let fyy = Vec3::new(
            (4.0 * x * (3.0 * y * y - x * x - 1.0)) / d3,
            (4.0 * y * (y * y - 3.0 * x * x - 3.0)) / d3,
            (4.0 * (3.0 * y * y - x * x - 1.0)) / d3,
        ) * r;
        let fxy = Vec3::new(
            (4.0 * y * (3.0 * x * x - y * y - 1.0)) / d3,
            (4.0 * x * (3.0 * y * y - x * x - 1.0)) / d3,
            (16.0 * x * y) / d3,
        ) * r;
        Jet2 {
            f,
            fx,
            fy,
            fxx,
            fxy,
            fyy,
        }
    }
}

/// Catenoid of waist radius `c` about the z axis in the conformal chart
/// w = x + i y on the punctured plane: f = (c/2 (|w| + 1/|w|) w/|w|, c log|w|).
pub struct CatenoidPatch {
    pub c: f64,
}

impl SurfacePatch for CatenoidPatch {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        // write f = (c/2)(x + x/r^2, y + y/r^2, log r^2)
        let c = self.c;
        let r2 = x * x + y * y;
        let r4 = r2 * r2;
        let r6 = r4 * r2;
        let f = Vec3::new(x + x / r2, y + y / r2, r2.ln()) * (0.5 * c);
        // d(x/r2)/dx = (y^2 - x^2)/r^4, d(x/r2)/dy = -2xy/r^4
        let fx = Vec3::new(1.0 + (y * y - x * x) / r4, -2.0 * x * y / r4, 2.0 * x / r2) * (0.5 * c);
        let fy = Vec3::new(-2.0 * x * y / r4, 1.0 + (x * x - y * y) / r4, 2.0 * y / r2) * (0.5 * c);
        let fxx = Vec3::new(
            (2.0 * x * x * x - 6.0 * x * y * y) / r6,
            (6.0 * x * x * y - 2.0 * y * y * y) / r6,
            2.0 * (y * y - x * x) / r4,
        ) * (0.5 * c);
        let fyy = Vec3::new(
            (6.0 * x * y * y - 2.0 * x * x * x) / r6,
            (2.0 * y * y * y - 6.0 * x * x * y) / r6,
            2.0 * (x * x - y * y) / r4,
        ) * (0.5 * c);
        let fxy = Vec3::new(
            (6.0 * x * x * y - 2.0 * y * y * y) / r6,
            (6.0 * x * y * y - 2.0 * x * x * x) / r6,
            -4.0 * x * y / r4,
        ) * (0.5 * c);
        Jet2 {
            f,
            fx,
            fy,
            fxx,
            fxy,
            fyy,
        }
    }
}

/// Image of a patch under the sphere inversion y -> (y - y0)/|y - y0|^2.
pub struct InvertedPatch<P> {
    pub inner: P,
    pub center: Vec3,
}

impl<P: SurfacePatch> SurfacePatch for InvertedPatch<P> {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        let j = self.inner.jet(x, y);
        let d = j.f - self.center;
        let q = d.norm_squared();
        let di = |v: Vec3| v / q - d * (2.0 * d.dot(&v) / (q * q));
        let d2i = |v: Vec3, w: Vec3| {
            -(v * d.dot(&w) + w * d.dot(&v) + d * v.dot(&w)) * (2.0 / (q * q))
                + d * (8.0 * d.dot(&v) * d.dot(&w) / (q * q * q))
        };
        Jet2 {
            f: d / q,
            fx: di(j.fx),
            fy: di(j.fy),
            fxx: di(j.fxx) + d2i(j.fx, j.fx),
            fxy: di(j.fxy) + d2i(j.fx, j.fy),
            fyy: di(j.fyy) + d2i(j.fy, j.fy),
        }
    }
}

/// Mean curvature vector, normal and scalar H at a point of a conformal patch.
#[derive(Debug, Clone, Copy)]
pub struct ConformalFrame {
    pub hvec: Vec3,
    pub normal: Vec3,
    pub h: f64,
    /// e^{2u}
    pub conformal_factor: f64,
}

pub fn conformal_frame(patch: &dyn SurfacePatch, x: f64, y: f64) -> Result<ConformalFrame> {
    let j = patch.jet(x, y);
    let (e, f, g) = (j.fx.norm_squared(), j.fx.dot(&j.fy), j.fy.norm_squared());
    let scale = 0.5 * (e + g);
    if ((e - g).abs() > CONFORMAL_TOL * scale) || (f.abs() > CONFORMAL_TOL * scale) {
        return Err(Error::NonConformal(format!(
            "metric at ({x}, {y}) is [{e:e}, {f:e}; {f:e}, {g:e}]"
        )));
    }
    let normal = j.fx.cross(&j.fy).normalize();
    let hvec = (j.fxx + j.fyy) / scale;
    Ok(ConformalFrame {
        hvec,
        normal,
        h: hvec.dot(&normal),
        conformal_factor: scale,
    })
}

/// Q[f] at a parameter point as the pair (Q_1, Q_2).
pub fn conformal_form_q(patch: &dyn SurfacePatch, x: f64, y: f64) -> Result<[Vec3; 2]> {
    let c = conformal_frame(patch, x, y)?;
    let h = 1e-4 * (1.0 + x.abs().max(y.abs()));
    let px = conformal_frame(patch, x + h, y)?;
    let mx = conformal_frame(patch, x - h, y)?;
    let py = conformal_frame(patch, x, y + h)?;
    let my = conformal_frame(patch, x, y - h)?;
    // fourth-order stencil for derivatives of Hvec and n
    let px2 = conformal_frame(patch, x + 2.0 * h, y)?;
    let mx2 = conformal_frame(patch, x - 2.0 * h, y)?;
    let py2 = conformal_frame(patch, x, y + 2.0 * h)?;
    let my2 = conformal_frame(patch, x, y - 2.0 * h)?;
    let d4 = |a2: Vec3, a1: Vec3, b1: Vec3, b2: Vec3| (-a2 + a1 * 8.0 - b1 * 8.0 + b2) / (12.0 * h);
    let dh = [
        d4(px2.hvec, px.hvec, mx.hvec, mx2.hvec),
        d4(py2.hvec, py.hvec, my.hvec, my2.hvec),
    ];
    let dn = [
        d4(px2.normal, px.normal, mx.normal, mx2.normal),
        d4(py2.normal, py.normal, my.normal, my2.normal),
    ];
    let perp = [-dn[1], dn[0]];
    let q = |k: usize| (dh[k] - dn[k] * (1.5 * c.h) + c.hvec.cross(&perp[k]) * 0.5) * 0.5;
    Ok([q(0), q(1)])
}

/// Flux of Q through the parameter circle |w - w0| = radius, i.e.
/// the integral of <Q, d_r> r dtheta, by the trapezoidal rule with `n` nodes.
pub fn q_flux(patch: &dyn SurfacePatch, center: [f64; 2], radius: f64, n: usize) -> Result<Vec3> {
    let mut acc = Vec3::zeros();
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        let (s, co) = th.sin_cos();
        let q = conformal_form_q(patch, center[0] + radius * co, center[1] + radius * s)?;
        acc += (q[0] * co + q[1] * s) * radius;
    }
    Ok(acc * (2.0 * PI / n as f64))
}

/// Divergence d_1 Q_1 + d_2 Q_2 by central differences.
pub fn q_divergence(patch: &dyn SurfacePatch, x: f64, y: f64) -> Result<Vec3> {
    let h = 1e-3 * (1.0 + x.abs().max(y.abs()));
    let a = conformal_form_q(patch, x + h, y)?[0];
    let b = conformal_form_q(patch, x - h, y)?[0];
    let c = conformal_form_q(patch, x, y + h)?[1];
    let d = conformal_form_q(patch, x, y - h)?[1];
    Ok((a - b + c - d) / (2.0 * h))
}

/// A patch that is not conformal, for exercising the error path.
pub struct ShearedPlane {
    pub shear: f64,
}

impl SurfacePatch for ShearedPlane {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        Jet2 {
            f: Vec3::new(x + self.shear * y, y, 0.0),
            fx: Vec3::x(),
            fy: Vec3::new(self.shear, 1.0, 0.0),
            fxx: Vec3::zeros(),
            fxy: Vec3::zeros(),
            fyy: Vec3::zeros(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(p: &dyn SurfacePatch, x: f64, y: f64) {
        let h = 1e-5;
        let j = p.jet(x, y);
        let jx = (p.jet(x + h, y).f - p.jet(x - h, y).f) / (2.0 * h);
        let jy = (p.jet(x, y + h).f - p.jet(x, y - h).f) / (2.0 * h);
        assert!((jx - j.fx).norm() < 1e-6 * (1.0 + j.fx.norm()));
        assert!((jy - j.fy).norm() < 1e-6 * (1.0 + j.fy.norm()));
        let jxx = (p.jet(x + h, y).fx - p.jet(x - h, y).fx) / (2.0 * h);
        let jxy = (p.jet(x, y + h).fx - p.jet(x, y - h).fx) / (2.0 * h);
        let jyy = (p.jet(x, y + h).fy - p.jet(x, y - h).fy) / (2.0 * h);
        assert!((jxx - j.fxx).norm() < 1e-5 * (1.0 + j.fxx.norm()));
        assert!((jxy - j.fxy).norm() < 1e-5 * (1.0 + j.fxy.norm()));
        assert!((jyy - j.fyy).norm() < 1e-5 * (1.0 + j.fyy.norm()));
    }

    #[test]
    fn jets_match_finite_differences() {
        fd_check(&StereographicSphere { radius: 1.3 }, 0.3, -0.7);
        fd_check(&CatenoidPatch { c: 0.8 }, 0.9, 0.4);
        fd_check(
            &InvertedPatch {
                inner: CatenoidPatch { c: 1.0 },
                center: Vec3::new(0.0, 0.0, 2.0),
            },
            0.7,
            -1.1,
        );
    }

    #[test]
    fn sphere_h_is_minus_two() {
        let s = StereographicSphere { radius: 1.0 };
        for &(x, y) in &[(0.1, 0.2), (1.5, -0.3), (-2.0, 0.7)] {
            let fr = conformal_frame(&s, x, y).unwrap();
            assert!((fr.h + 2.0).abs() < 1e-12);
            assert!((fr.normal - s.jet(x, y).f).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_and_sphere_have_zero_q() {
        let q = conformal_form_q(&PlanePatch, 0.3, 0.4).unwrap();
        assert!(q[0].norm() + q[1].norm() < 1e-14);
        let s = StereographicSphere { radius: 2.0 };
        let q = conformal_form_q(&s, 0.5, -0.2).unwrap();
        assert!(q[0].norm() + q[1].norm() < 1e-7);
        assert!(q_divergence(&s, 0.4, 0.1).unwrap().norm() < 1e-5);
    }

    #[test]
    fn q_scales_inversely() {
        let inv = |c: f64| InvertedPatch {
            inner: CatenoidPatch { c },
            center: Vec3::new(0.0, 0.0, c * 0.7),
        };
        let q1 = conformal_form_q(&inv(1.0), 0.8, 0.3).unwrap();
        // inversion of the scaled catenoid about the scaled center is the
        // unscaled image shrunk by 1/lambda
        let q3 = conformal_form_q(&inv(3.0), 0.8, 0.3).unwrap();
        assert!((q3[0] * (1.0 / 3.0) - q1[0]).norm() < 1e-6 * q1[0].norm().max(1e-3) + 1e-8);
    }

    #[test]
    fn non_conformal_rejected() {
        assert!(matches!(
            conformal_form_q(&ShearedPlane { shear: 0.3 }, 0.0, 0.0),
            Err(Error::NonConformal(_))
        ));
    }
}
