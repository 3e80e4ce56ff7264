//! Energies, constraint, gradients and Lagrange multiplier on closed meshes.

use std::f64::consts::PI;

use nalgebra::SVector;
use num_dual::{DualNum, DualSVec64};
use serde::{Deserialize, Serialize};

use crate::discrete::{pairwise_sum, DiscreteGeometry, FieldRole, VertexField};
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

/// Relative cancellation in grad sigma below which the isoperimetric
/// constraint counts as degenerate (round sphere).
pub const DEGENERACY_RATIO: f64 = 1e-2;

/// Scalar summary of a closed surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMetrics {
    pub area: f64,
    pub volume: f64,
    pub sigma: f64,
    pub willmore: f64,
    #[serde(rename = "totalA2")]
    pub total_a2: f64,
    #[serde(rename = "totalGauss")]
    pub total_gauss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub helfrich: Option<f64>,
}

/// sigma = 6 sqrt(pi) V / mu^(3/2).
pub fn isoperimetric_ratio(area: f64, volume: f64) -> f64 {
    6.0 * PI.sqrt() * volume / area.powf(1.5)
}

pub fn signed_volume(mesh: &TriMesh) -> f64 {
    let v: Vec<f64> = mesh
        .faces
        .iter()
        .map(|&[a, b, c]| mesh.vertices[a].dot(&mesh.vertices[b].cross(&mesh.vertices[c])))
        .collect();
    pairwise_sum(&v) / 6.0
}

fn metrics_from(mesh: &TriMesh, g: &DiscreteGeometry) -> Result<SurfaceMetrics> {
    let area = g.total_area();
    let volume = signed_volume(mesh);
    if !(volume > 0.0) {
        return Err(Error::Orientation(volume));
    }
    Ok(SurfaceMetrics {
        area,
        volume,
        sigma: isoperimetric_ratio(area, volume),
        willmore: g.willmore(),
        total_a2: g.total_a2(),
        total_gauss: g.total_gauss(),
        helfrich: None,
    })
}

/// All scalar functionals of a closed oriented mesh.
pub fn metrics(mesh: &TriMesh) -> Result<SurfaceMetrics> {
    let g = DiscreteGeometry::closed(mesh)?;
    metrics_from(mesh, &g)
}

fn vol_grad(mesh: &TriMesh) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); mesh.n_vertices()];
    for f in &mesh.faces {
        for k in 0..3 {
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            out[f[k]] += mesh.vertices[i].cross(&mesh.vertices[j]) / 6.0;
        }
    }
    out
}

fn sub<T: DualNum<Primitive = f64> + Copy>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross<T: DualNum<Primitive = f64> + Copy>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot<T: DualNum<Primitive = f64> + Copy>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Per-face piece of the Willmore energy with the vertex curvature vectors
/// held fixed; summing its gradients over faces gives the exact gradient of
/// the discrete energy (1/4) sum |Hvec_i|^2 m_i.
fn face_willmore_part<T: DualNum<Primitive = f64> + Copy>(x: &[T], hv: [Vec3; 3]) -> T {
    let p = [[x[0], x[1], x[2]], [x[3], x[4], x[5]], [x[6], x[7], x[8]]];
    let nrm = cross(sub(p[1], p[0]), sub(p[2], p[0]));
    let dbl = dot(nrm, nrm).sqrt();
    let area = dbl * 0.5;
    let nh = [nrm[0] / dbl, nrm[1] / dbl, nrm[2] / dbl];
    let mut cot = [T::from(0.0); 3];
    for k in 0..3 {
        let (e1, e2) = (sub(p[(k + 1) % 3], p[k]), sub(p[(k + 2) % 3], p[k]));
        let c = cross(e1, e2);
        cot[k] = dot(e1, e2) / dot(c, c).sqrt();
    }
    let obtuse = (0..3).find(|&k| cot[k].re() < 0.0);
    let mut acc = T::from(0.0);
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let ga = cross(sub(p[i], p[j]), nh);
        let hk = [T::from(hv[k].x), T::from(hv[k].y), T::from(hv[k].z)];
        acc -= dot(hk, ga) * 0.25;
        let m = match obtuse {
            None => {
                let (di, dj) = (sub(p[i], p[k]), sub(p[j], p[k]));
                (dot(di, di) * cot[j] + dot(dj, dj) * cot[i]) / 8.0
            }
            Some(o) if o == k => area * 0.5,
            Some(_) => area * 0.25,
        };
        acc -= m * (0.25 * hv[k].norm_squared());
    }
    acc
}

/// Exact gradient of the discrete Willmore energy with respect to vertex
/// positions (not divided by the mass).
pub fn willmore_position_gradient(mesh: &TriMesh, g: &DiscreteGeometry) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); mesh.n_vertices()];
    for f in &mesh.faces {
        let mut x = SVector::<f64, 9>::zeros();
        for k in 0..3 {
            let p = mesh.vertices[f[k]];
            x[3 * k] = p.x;
            x[3 * k + 1] = p.y;
            x[3 * k + 2] = p.z;
        }
        let hv = [g.hvec[f[0]], g.hvec[f[1]], g.hvec[f[2]]];
        let (_, grad) = num_dual::gradient(
            |xd: SVector<DualSVec64<9>, 9>| face_willmore_part(xd.as_slice(), hv),
            &x,
        );
        for k in 0..3 {
            out[f[k]] += Vec3::new(grad[3 * k], grad[3 * k + 1], grad[3 * k + 2]);
        }
    }
    out
}

/// L2(dmu) gradients of W and sigma: `sum_v <G_v, phi_v> m_v` is the exact
/// first variation of the discrete functional along the vertex field phi.
#[derive(Debug, Clone)]
pub struct GradientPair {
    pub grad_w: VertexField,
    pub grad_sigma: VertexField,
    pub mass: Vec<f64>,
}

/// Everything the flows and diagnostics need from a single evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub geometry: DiscreteGeometry,
    pub metrics: SurfaceMetrics,
    /// Position gradients (dual vectors) of W, area and volume.
    pub dw: Vec<Vec3>,
    pub da: Vec<Vec3>,
    pub dv: Vec<Vec3>,
}

impl Evaluation {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        let geometry = DiscreteGeometry::closed(mesh)?;
        Self::with_geometry(mesh, geometry)
    }

    /// Skips the topology checks; for flows that keep the connectivity fixed.
    pub fn unchecked(mesh: &TriMesh, topo: &crate::mesh::Topology) -> Result<Self> {
        Self::with_geometry(mesh, DiscreteGeometry::with_topology(mesh, topo))
    }

    fn with_geometry(mesh: &TriMesh, geometry: DiscreteGeometry) -> Result<Self> {
        let metrics = metrics_from(mesh, &geometry)?;
        let dw = willmore_position_gradient(mesh, &geometry);
        let da = geometry.area_grad.clone();
        let dv = vol_grad(mesh);
        Ok(Evaluation {
            geometry,
            metrics,
            dw,
            da,
            dv,
        })
    }

    /// Position gradient of sigma.
    pub fn dsigma(&self) -> Vec<Vec3> {
        let SurfaceMetrics {
            area, volume, sigma, ..
        } = self.metrics;
        self.dv
            .iter()
            .zip(&self.da)
            .map(|(v, a)| sigma * (v / volume - 1.5 * a / area))
            .collect()
    }

    pub fn gradients(&self) -> GradientPair {
        let m = &self.geometry.mass;
        let gw = self.dw.iter().zip(m).map(|(g, mi)| g / *mi).collect();
        let gs = self.dsigma().iter().zip(m).map(|(g, mi)| g / *mi).collect();
        GradientPair {
            grad_w: VertexField::new(FieldRole::Gradient, gw),
            grad_sigma: VertexField::new(FieldRole::Gradient, gs),
            mass: m.clone(),
        }
    }

    /// Pointwise formula sigma (1/V + 3/2 H/mu) n with the discrete normal
    /// and H = <Hvec, n>.
    pub fn sigma_formula(&self) -> VertexField {
        let SurfaceMetrics {
            area, volume, sigma, ..
        } = self.metrics;
        let g = &self.geometry;
        VertexField::new(
            FieldRole::Gradient,
            g.normal
                .iter()
                .zip(&g.hvec)
                .map(|(n, h)| n * (sigma * (1.0 / volume + 1.5 * h.dot(n) / area)))
                .collect(),
        )
    }

    /// L2 size of the pointwise formula relative to its volume part alone.
    /// Small values mean the constraint is degenerate (round sphere).
    pub fn cancellation_ratio(&self) -> f64 {
        let SurfaceMetrics { volume, sigma, .. } = self.metrics;
        let m = &self.geometry.mass;
        let f = self.sigma_formula();
        let scale = sigma / volume * pairwise_sum(m).sqrt();
        f.dot_weighted(&f, m).sqrt() / scale
    }

    pub fn multiplier(&self) -> MultiplierEstimate {
        let gp = self.gradients();
        let m = &gp.mass;
        let ww = gp.grad_w.dot_weighted(&gp.grad_w, m);
        let ss = gp.grad_sigma.dot_weighted(&gp.grad_sigma, m);
        let ws = gp.grad_w.dot_weighted(&gp.grad_sigma, m);
        let degenerate = ss < 1e-10 * ww || self.cancellation_ratio() < DEGENERACY_RATIO;
        if degenerate {
            return MultiplierEstimate {
                lambda: None,
                residual: ww.sqrt(),
                relative_residual: 1.0,
                conditioning: ss,
                degenerate: true,
            };
        }
        let lambda = ws / ss;
        let res2 = (ww - 2.0 * lambda * ws + lambda * lambda * ss).max(0.0);
        MultiplierEstimate {
            lambda: Some(lambda),
            residual: res2.sqrt(),
            relative_residual: if ww > 0.0 { (res2 / ww).sqrt() } else { 0.0 },
            conditioning: ss,
            degenerate: false,
        }
    }
}

/// Gradient of the isoperimetric ratio, sigma (n/V + 3/2 Hvec/mu), evaluated
/// pointwise with the discrete normal and Hvec = <Hvec, n> n.
///
/// This is the field that vanishes on round spheres. The exact first
/// variation of the discrete ratio is `GradientPair::grad_sigma`; the two
/// differ at the discretization scale because an inscribed polyhedron is not
/// a critical point of the discrete ratio.
pub fn isoperimetric_gradient(mesh: &TriMesh) -> Result<VertexField> {
    Ok(Evaluation::new(mesh)?.sigma_formula())
}

/// L2 gradient of the Willmore energy, assembled from the weak form.
pub fn willmore_gradient(mesh: &TriMesh) -> Result<VertexField> {
    let g = DiscreteGeometry::closed(mesh)?;
    let dw = willmore_position_gradient(mesh, &g);
    Ok(VertexField::new(
        FieldRole::Gradient,
        dw.iter().zip(&g.mass).map(|(d, m)| d / *m).collect(),
    ))
}

pub fn gradients(mesh: &TriMesh) -> Result<GradientPair> {
    Ok(Evaluation::new(mesh)?.gradients())
}

/// Least-squares multiplier with degeneracy detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierEstimate {
    /// None on the round-sphere degeneracy.
    pub lambda: Option<f64>,
    /// L2(dmu) norm of grad W - lambda grad sigma.
    pub residual: f64,
    #[serde(rename = "relativeResidual")]
    pub relative_residual: f64,
    pub conditioning: f64,
    pub degenerate: bool,
}

pub fn estimate_multiplier(mesh: &TriMesh) -> Result<MultiplierEstimate> {
    Ok(Evaluation::new(mesh)?.multiplier())
}

/// Euler-Lagrange residual at mu = 1.
#[derive(Debug, Clone)]
pub struct ElResidual {
    /// Strong form: 1/2 (Lap H + |A0|^2 H) - 3 lambda / 2 (4 sqrt(pi) + sigma H).
    pub field: Vec<f64>,
    pub norm: f64,
    /// Weak form: normal part of grad W - lambda grad sigma.
    pub weak_field: Vec<f64>,
    pub weak_norm: f64,
    /// L2 norm of the normal part of grad W, for relative statements.
    pub grad_norm: f64,
    pub normalized: bool,
}

pub fn el_residual(mesh: &TriMesh, lambda: f64) -> Result<ElResidual> {
    let area = DiscreteGeometry::closed(mesh)?.total_area();
    let normalized = (area - 1.0).abs() > 1e-10;
    let scaled;
    let mesh = if normalized {
        log::warn!("el_residual: rescaling surface of area {area} to unit area");
        scaled = mesh.scaled(1.0 / area.sqrt());
        &scaled
    } else {
        mesh
    };
    let ev = Evaluation::new(mesh)?;
    let g = &ev.geometry;
    let sigma = ev.metrics.sigma;
    let h = &g.h;
    let lap = g.laplacian(mesh, h);
    let k = g.gauss();
    let gp = ev.gradients();
    let c = 4.0 * PI.sqrt();
    let mut field = Vec::with_capacity(h.len());
    let mut weak = Vec::with_capacity(h.len());
    let mut gn = Vec::with_capacity(h.len());
    for i in 0..h.len() {
        let a0 = 0.5 * h[i] * h[i] - 2.0 * k[i];
        let rhs = 1.5 * lambda * (c + sigma * h[i]);
        field.push(0.5 * (lap[i] + a0 * h[i]) - rhs);
        let n = g.normal[i];
        let gw = gp.grad_w.values[i].dot(&n);
        weak.push(gw - lambda * gp.grad_sigma.values[i].dot(&n));
        gn.push(gw);
    }
    let l2 = |v: &[f64]| pairwise_sum(&v.iter().zip(&g.mass).map(|(x, m)| x * x * m).collect::<Vec<_>>()).sqrt();
    Ok(ElResidual {
        norm: l2(&field),
        weak_norm: l2(&weak),
        grad_norm: l2(&gn),
        field,
        weak_field: weak,
        normalized,
    })
}

/// (kappa/2) int (H - C0)^2 dmu + 4 pi kappa_G.
pub fn helfrich_energy(mesh: &TriMesh, kappa: f64, kappa_g: f64, c0: f64) -> Result<f64> {
    let g = DiscreteGeometry::closed(mesh)?;
    let terms: Vec<f64> = g.h.iter().zip(&g.mass).map(|(h, m)| (h - c0).powi(2) * m).collect();
    Ok(0.5 * kappa * pairwise_sum(&terms) + 4.0 * PI * kappa_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{ellipsoid, icosphere};

    #[test]
    fn sphere_metrics() {
        let m = icosphere(4, 1.0).unwrap();
        let s = metrics(&m).unwrap();
        assert!((s.area - 4.0 * PI).abs() < 1e-2 * 4.0 * PI);
        assert!((s.sigma - 1.0).abs() < 1e-3);
        assert!((s.willmore - 4.0 * PI).abs() < 1e-2 * 4.0 * PI);
        let t = metrics(&m.scaled(7.0)).unwrap();
        assert!((t.sigma - s.sigma).abs() < 1e-12);
        assert!((t.willmore - s.willmore).abs() < 1e-12 * s.willmore);
    }

    #[test]
    fn inverted_orientation_is_an_error() {
        let m = icosphere(2, 1.0).unwrap().flipped();
        assert!(matches!(metrics(&m), Err(Error::Orientation(_))));
    }

    #[test]
    fn helfrich_reduces_to_willmore() {
        let m = ellipsoid(3, 1.5, 1.0, 0.8).unwrap();
        let w = metrics(&m).unwrap().willmore;
        let f = helfrich_energy(&m, 0.5, 0.0, 0.0).unwrap();
        assert!((w - f).abs() < 1e-12 * w);
    }

    #[test]
    fn sphere_is_degenerate() {
        let m = icosphere(4, 1.0).unwrap();
        let e = estimate_multiplier(&m).unwrap();
        assert!(e.degenerate);
        let gs = isoperimetric_gradient(&m).unwrap();
        assert!(gs.sup_norm() < 1e-3, "{}", gs.sup_norm());
    }

    #[test]
    fn ellipsoid_has_multiplier() {
        let m = ellipsoid(3, 2.0, 1.0, 1.0).unwrap();
        let e = estimate_multiplier(&m).unwrap();
        assert!(!e.degenerate);
        assert!(e.lambda.unwrap().is_finite());
        assert!(e.residual > 0.0);
    }

    #[test]
    fn strong_and_weak_forms_agree_in_sign() {
        // the normal component of the weak gradient should track the
        // strong-form expression on a smooth non-critical surface
        let m = ellipsoid(5, 1.3, 1.0, 0.9).unwrap();
        let m = m.scaled(1.0 / metrics(&m).unwrap().area.sqrt());
        let r = el_residual(&m, 0.0).unwrap();
        let dotp: f64 = r.field.iter().zip(&r.weak_field).map(|(a, b)| a * b).sum();
        let na: f64 = r.field.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = r.weak_field.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(dotp / (na * nb) > 0.9, "correlation {}", dotp / (na * nb));
    }
}
