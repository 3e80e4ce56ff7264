//! Closed-form reference surfaces and brute-force checkers.
//!
//! Nothing here calls the discrete curvature operators; reference values
//! come from the analytic integrands by adaptive quadrature.

pub mod fd;
pub mod graph;
pub mod inversion;

use std::f64::consts::PI;

use quadrature::double_exponential::integrate;
use serde::{Deserialize, Serialize};

use crate::axisym::{resample_conformal, revolve, AxisymProfile};
use crate::error::{Error, Result};
use crate::functionals::SurfaceMetrics;
use crate::mesh::{catenoid_band, ellipsoid, icosphere, TriMesh, Vec3};

pub use fd::{fd_directional, fd_ladder, FdEstimate};
pub use graph::{graph_curvatures, GraphCurvatures, GraphPatch};
pub use inversion::invert;

/// Radius of the round sphere of area 1/2.
pub fn half_area_radius() -> f64 {
    1.0 / (8.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceSurface {
    Sphere {
        r: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Band rho = c cosh(z/c), |z| <= zmax.
    Catenoid {
        c: f64,
        zmax: f64,
    },
    /// Two spheres of area 1/2 on a common axis joined by a catenoid of
    /// waist radius c, glued with matching tangents at rho = sqrt(c R).
    DoubleSphereNeck {
        c: f64,
    },
}

/// Closed-form data at a point.
#[derive(Debug, Clone, Copy)]
pub struct RefPoint {
    pub position: Vec3,
    pub normal: Vec3,
    /// Mean curvature, -2/R on spheres.
    pub h: f64,
    pub k: f64,
    /// Area element per unit parameter area.
    pub area_density: f64,
}

/// One analytic piece of a meridian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeridianPiece {
    /// rho = r sin a, z = zc - r cos a for a in [a0, a1].
    SphereArc { zc: f64, r: f64, a0: f64, a1: f64 },
    /// rho = c cosh(z/c) for z in [z0, z1].
    CatenoidArc { c: f64, z0: f64, z1: f64 },
}

/// Meridian point: (rho, z), tangent angle psi, arc-length speed and curvatures.
#[derive(Debug, Clone, Copy)]
pub struct MeridianPoint {
    pub rho: f64,
    pub z: f64,
    pub psi: f64,
    pub speed: f64,
    pub h: f64,
    pub k: f64,
}

impl MeridianPiece {
    pub fn range(&self) -> [f64; 2] {
        match *self {
            MeridianPiece::SphereArc { a0, a1, .. } => [a0, a1],
            MeridianPiece::CatenoidArc { z0, z1, .. } => [z0, z1],
        }
    }

    pub fn eval(&self, s: f64) -> MeridianPoint {
        match *self {
            MeridianPiece::SphereArc { zc, r, .. } => {
                let rho = if s == 0.0 || s == PI { 0.0 } else { r * s.sin() };
                MeridianPoint {
                    rho,
                    z: zc - r * s.cos(),
                    psi: s,
                    speed: r,
                    h: -2.0 / r,
                    k: 1.0 / (r * r),
                }
            }
            MeridianPiece::CatenoidArc { c, .. } => {
                let ch = (s / c).cosh();
                MeridianPoint {
                    rho: c * ch,
                    z: s,
                    psi: 1f64.atan2((s / c).sinh()),
                    speed: ch,
                    h: 0.0,
                    k: -1.0 / (c * c * ch.powi(4)),
                }
            }
        }
    }
}

impl ReferenceSurface {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ReferenceSurface::Sphere { r } => r > 0.0,
            ReferenceSurface::Ellipsoid { a, b, c } => a > 0.0 && b > 0.0 && c > 0.0,
            ReferenceSurface::Catenoid { c, zmax } => c > 0.0 && zmax > 0.0,
            ReferenceSurface::DoubleSphereNeck { c } => c > 0.0 && c < 0.1 * half_area_radius(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid reference surface parameters {self:?}")))
        }
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self, ReferenceSurface::Catenoid { .. })
    }

    /// Meridian pieces for surfaces of revolution (None for general ellipsoids).
    pub fn meridian(&self) -> Option<Vec<MeridianPiece>> {
        match *self {
            ReferenceSurface::Sphere { r } => Some(vec![MeridianPiece::SphereArc {
                zc: 0.0,
                r,
                a0: 0.0,
                a1: PI,
            }]),
            ReferenceSurface::Ellipsoid { a, b, c } if a == b && a == c => Some(vec![MeridianPiece::SphereArc {
                zc: 0.0,
                r: a,
                a0: 0.0,
                a1: PI,
            }]),
            ReferenceSurface::Ellipsoid { .. } => None,
            ReferenceSurface::Catenoid { c, zmax } => Some(vec![MeridianPiece::CatenoidArc { c, z0: -zmax, z1: zmax }]),
            ReferenceSurface::DoubleSphereNeck { c } => {
                let r = half_area_radius();
                let a = (c * r).sqrt();
                let zn = c * (a / c).acosh();
                let h = (r * r - a * a).sqrt();
                let g = (a / r).asin();
                Some(vec![
                    MeridianPiece::SphereArc {
                        zc: -zn - h,
                        r,
                        a0: 0.0,
                        a1: PI - g,
                    },
                    MeridianPiece::CatenoidArc { c, z0: -zn, z1: zn },
                    MeridianPiece::SphereArc {
                        zc: zn + h,
                        r,
                        a0: g,
                        a1: PI,
                    },
                ])
            }
        }
    }

    /// Closed-form data at parameter (u, v): for surfaces of revolution u is
    /// the global meridian parameter (piece index plus local fraction) and
    /// v the angle; for ellipsoids (theta, phi).
    pub fn eval(&self, u: f64, v: f64) -> RefPoint {
        match (*self, self.meridian()) {
            (_, Some(pieces)) => {
                let i = (u.floor() as usize).min(pieces.len() - 1);
                let [s0, s1] = pieces[i].range();
                let s = s0 + (u - i as f64) * (s1 - s0);
                let m = pieces[i].eval(s);
                let (sv, cv) = v.sin_cos();
                RefPoint {
                    position: Vec3::new(m.rho * cv, m.rho * sv, m.z),
                    normal: Vec3::new(m.psi.sin() * cv, m.psi.sin() * sv, -m.psi.cos()),
                    h: m.h,
                    k: m.k,
                    area_density: m.rho * m.speed * (s1 - s0),
                }
            }
            (ReferenceSurface::Ellipsoid { a, b, c }, None) => ellipsoid_point(a, b, c, u, v),
            _ => unreachable!(),
        }
    }

    /// Sampled meridian: `n` intervals per piece, shared junctions once.
    pub fn profile(&self, n: usize) -> Result<AxisymProfile> {
        self.validate()?;
        let pieces = self
            .meridian()
            .ok_or_else(|| Error::Config("general ellipsoids have no meridian".into()))?;
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(pieces.len() * n + 1);
        for (k, p) in pieces.iter().enumerate() {
            let [s0, s1] = p.range();
            for j in 0..=n {
                if k > 0 && j == 0 {
                    continue;
                }
                let s = if j == n {
                    s1
                } else {
                    s0 + (s1 - s0) * j as f64 / n as f64
                };
                let m = p.eval(s);
                out.push([m.rho, m.z]);
            }
        }
        Ok(AxisymProfile::new(out))
    }

    /// Triangle mesh: icosphere level `resolution` for spheres and
    /// ellipsoids, otherwise a revolved profile with `8 * 2^resolution`
    /// angular samples.
    pub fn mesh(&self, resolution: u32) -> Result<TriMesh> {
        self.validate()?;
        match *self {
            ReferenceSurface::Sphere { r } => icosphere(resolution, r),
            ReferenceSurface::Ellipsoid { a, b, c } => ellipsoid(resolution, a, b, c),
            ReferenceSurface::Catenoid { c, zmax } => {
                let n = 8 << resolution;
                let m = ((2.0 * zmax / c) * n as f64 / (2.0 * PI)).ceil().max(2.0) as usize;
                Ok(catenoid_band(c, zmax, n, m))
            }
            ReferenceSurface::DoubleSphereNeck { .. } => {
                let angular = 8 << resolution;
                let p = self.profile(4000)?;
                revolve(&resample_conformal(&p, angular, 1e-3)?, angular)
            }
        }
    }
}

fn ellipsoid_point(a: f64, b: f64, c: f64, th: f64, ph: f64) -> RefPoint {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    let p = Vec3::new(a * st * cp, b * st * sp, c * ct);
    let g = Vec3::new(p.x / (a * a), p.y / (b * b), p.z / (c * c));
    let hn = g.norm();
    let abc2 = (a * b * c).powi(2);
    RefPoint {
        position: p,
        normal: g / hn,
        h: (p.norm_squared() - a * a - b * b - c * c) / (abc2 * hn.powi(3)),
        k: 1.0 / (abc2 * hn.powi(4)),
        area_density: a * b * c * st * hn,
    }
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    integrate(f, a, b, tol).integral
}

/// Area, volume, sigma, W, total |A|^2 and total K by adaptive quadrature
/// of the closed-form integrands. `tol` is the absolute target per
/// one-dimensional integral. Open surfaces report NaN volume and sigma.
pub fn reference_metrics_tol(surface: &ReferenceSurface, tol: f64) -> Result<SurfaceMetrics> {
    surface.validate()?;
    // integrands: [area, volume, H^2, K]
    let totals: [f64; 4] = match surface.meridian() {
        Some(pieces) => {
            let mut acc = [0.0; 4];
            for p in &pieces {
                let [s0, s1] = p.range();
                let term = |which: usize| {
                    quad(
                        |s| {
                            let m = p.eval(s);
                            let dmu = 2.0 * PI * m.rho * m.speed;
                            dmu * match which {
                                0 => 1.0,
                                1 => (m.rho * m.psi.sin() - m.z * m.psi.cos()) / 3.0,
                                2 => m.h * m.h,
                                _ => m.k,
                            }
                        },
                        s0,
                        s1,
                        tol,
                    )
                };
                for (w, slot) in acc.iter_mut().enumerate() {
                    *slot += term(w);
                }
            }
            acc
        }
        None => {
            let ReferenceSurface::Ellipsoid { a, b, c } = *surface else {
                unreachable!()
            };
            let mut acc = [0.0; 4];
            for (w, slot) in acc.iter_mut().enumerate() {
                *slot = quad(
                    |ph| {
                        quad(
                            |th| {
                                let q = ellipsoid_point(a, b, c, th, ph);
                                q.area_density
                                    * match w {
                                        0 => 1.0,
                                        1 => q.position.dot(&q.normal) / 3.0,
                                        2 => q.h * q.h,
                                        _ => q.k,
                                    }
                            },
                            0.0,
                            PI,
                            tol,
                        )
                    },
                    0.0,
                    2.0 * PI,
                    tol,
                );
            }
            acc
        }
    };
    let [area, volume, h2, k] = totals;
    let closed = surface.is_closed();
    Ok(SurfaceMetrics {
        area,
        volume: if closed { volume } else { f64::NAN },
        sigma: if closed {
            crate::functionals::isoperimetric_ratio(area, volume)
        } else {
            f64::NAN
        },
        willmore: 0.25 * h2,
        total_a2: h2 - 2.0 * k,
        total_gauss: k,
        helfrich: None,
    })
}

pub fn reference_metrics(surface: &ReferenceSurface) -> Result<SurfaceMetrics> {
    reference_metrics_tol(surface, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn half_area_sphere() {
        let m = reference_metrics(&ReferenceSurface::Sphere { r: half_area_radius() }).unwrap();
        assert!((m.area - 0.5).abs() < 1e-12);
        assert!((m.willmore - 4.0 * PI).abs() < 1e-12);
        assert!((m.sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn catenoid_band_energy() {
        let m = reference_metrics(&ReferenceSurface::Catenoid { c: 1.0, zmax: 6.0 }).unwrap();
        // -2 int K = 2 * 2 pi int_{-6}^{6} sech^2 = 8 pi tanh 6
        assert!(rel(m.total_a2, 8.0 * PI * 6f64.tanh()) < 1e-10);
        assert!(m.willmore.abs() < 1e-14);
    }

    #[test]
    fn round_ellipsoid_is_sphere() {
        let e = reference_metrics(&ReferenceSurface::Ellipsoid { a: 1.0, b: 1.0, c: 1.0 }).unwrap();
        let s = reference_metrics(&ReferenceSurface::Sphere { r: 1.0 }).unwrap();
        assert!(rel(e.area, s.area) < 1e-12 && rel(e.willmore, s.willmore) < 1e-12);
    }

    #[test]
    fn general_ellipsoid_gauss_bonnet() {
        let s = ReferenceSurface::Ellipsoid { a: 1.0, b: 0.7, c: 1.6 };
        let m = reference_metrics(&s).unwrap();
        assert!(rel(m.total_gauss, 4.0 * PI) < 1e-9);
        assert!(rel(m.volume, 4.0 / 3.0 * PI * 1.12) < 1e-9);
    }

    #[test]
    fn evaluators_satisfy_identities() {
        let cat = ReferenceSurface::Catenoid { c: 0.7, zmax: 2.0 };
        let sph = ReferenceSurface::Sphere { r: 2.0 };
        for i in 0..20 {
            let u = i as f64 / 20.0;
            assert_eq!(cat.eval(u, 0.3).h, 0.0);
            let q = sph.eval(u, 1.1);
            assert!((q.position.norm() - 2.0).abs() < 1e-12);
            assert!((q.normal - q.position / 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn double_sphere_is_c1() {
        let s = ReferenceSurface::DoubleSphereNeck { c: 1e-3 };
        let pieces = s.meridian().unwrap();
        for w in pieces.windows(2) {
            let a = w[0].eval(w[0].range()[1]);
            let b = w[1].eval(w[1].range()[0]);
            assert!((a.rho - b.rho).abs() < 1e-14 && (a.z - b.z).abs() < 1e-14);
            assert!((a.psi - b.psi).abs() < 1e-12, "{} {}", a.psi, b.psi);
        }
        let m = reference_metrics(&s).unwrap();
        assert!(rel(m.area, 1.0) < 1e-2);
        assert!(rel(m.total_a2, 24.0 * PI) < 2e-2);
    }

    #[test]
    fn quadrature_self_consistency() {
        for s in [
            ReferenceSurface::Ellipsoid { a: 1.0, b: 0.7, c: 1.6 },
            ReferenceSurface::DoubleSphereNeck { c: 1e-3 },
        ] {
            let a = reference_metrics_tol(&s, 1e-10).unwrap();
            let b = reference_metrics_tol(&s, 1e-13).unwrap();
            for (x, y) in [(a.area, b.area), (a.willmore, b.willmore), (a.total_a2, b.total_a2)] {
                assert!(rel(x, y) < 1e-8);
            }
        }
    }
}
