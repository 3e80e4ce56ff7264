//! Discrete differential operators on triangle meshes.
//!
//! Conventions: the mean curvature vector is the cotangent Laplacian of the
//! position, `Hvec_i = -(grad_i area) / m_i`, with `m_i` the mixed Voronoi
//! area. On the unit sphere with exterior normals this gives `H = -2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Topology, TriMesh, Vec3};

/// Cotangents are clamped to this magnitude on near-degenerate angles.
pub const COT_CLAMP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldRole {
    Normal,
    MeanCurvatureVector,
    Gradient,
}

/// One 3-vector per vertex, tagged with what it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    pub role: FieldRole,
    pub values: Vec<Vec3>,
}

impl VertexField {
    pub fn new(role: FieldRole, values: Vec<Vec3>) -> Self {
        VertexField { role, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Mass-weighted inner product sum_i <a_i, b_i> m_i.
    pub fn dot_weighted(&self, other: &VertexField, mass: &[f64]) -> f64 {
        pairwise_sum(
            &self
                .values
                .iter()
                .zip(&other.values)
                .zip(mass)
                .map(|((a, b), m)| a.dot(b) * m)
                .collect::<Vec<_>>(),
        )
    }

    pub fn scaled(&self, s: f64) -> VertexField {
        VertexField::new(self.role, self.values.iter().map(|v| v * s).collect())
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// All per-vertex and per-face quantities the functionals need.
#[derive(Debug, Clone)]
pub struct DiscreteGeometry {
    pub face_area: Vec<f64>,
    /// Mixed (Meyer) area per face corner.
    pub corner_area: Vec<[f64; 3]>,
    /// Cotangent of the angle at each face corner (clamped).
    pub corner_cot: Vec<[f64; 3]>,
    pub corner_angle: Vec<[f64; 3]>,
    pub mass: Vec<f64>,
    pub normal: Vec<Vec3>,
    /// Gradient of total area with respect to each vertex.
    pub area_grad: Vec<Vec3>,
    pub hvec: Vec<Vec3>,
    /// Signed scalar mean curvature, sign of <Hvec, n>, magnitude |Hvec|.
    pub h: Vec<f64>,
    pub angle_defect: Vec<f64>,
    pub boundary: Vec<bool>,
    pub clamped_angles: usize,
}

fn clamp_cot(cos: f64, sin: f64, clamped: &mut usize) -> f64 {
    let c = cos / sin;
    if !c.is_finite() || c.abs() > COT_CLAMP {
        *clamped += 1;
        if c.is_nan() {
            return 0.0;
        }
        return c.signum() * COT_CLAMP;
    }
    c
}

/// Mixed Voronoi area of each corner of triangle (p0, p1, p2).
pub fn mixed_corner_areas(p: [Vec3; 3], cot: [f64; 3], area: f64) -> [f64; 3] {
    let obtuse = (0..3).find(|&k| cot[k] < 0.0);
    match obtuse {
        None => {
            let mut out = [0.0; 3];
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                // Voronoi part of corner k: edges k-i (opposite j) and k-j (opposite i)
                out[k] = ((p[i] - p[k]).norm_squared() * cot[j] + (p[j] - p[k]).norm_squared() * cot[i]) / 8.0;
            }
            out
        }
        Some(o) => {
            let mut out = [area / 4.0; 3];
            out[o] = area / 2.0;
            out
        }
    }
}

impl DiscreteGeometry {
    /// Builds the operators for a manifold mesh (boundary allowed).
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        let topo = mesh.validate_manifold()?;
        Ok(Self::with_topology(mesh, &topo))
    }

    /// Same as [`DiscreteGeometry::new`] but requires a closed mesh.
    pub fn closed(mesh: &TriMesh) -> Result<Self> {
        let topo = mesh.validate_closed()?;
        Ok(Self::with_topology(mesh, &topo))
    }

    pub fn with_topology(mesh: &TriMesh, topo: &Topology) -> Self {
        let n = mesh.n_vertices();
        let nf = mesh.n_faces();
        let mut face_area = Vec::with_capacity(nf);
        let mut corner_area = Vec::with_capacity(nf);
        let mut corner_cot = Vec::with_capacity(nf);
        let mut corner_angle = Vec::with_capacity(nf);
        let mut normal_acc = vec![Vec3::zeros(); n];
        let mut area_grad = vec![Vec3::zeros(); n];
        let mut mass = vec![0.0; n];
        let mut angle_sum = vec![0.0; n];
        let mut clamped = 0usize;

        for f in &mesh.faces {
            let p = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
            let cr = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let dbl = cr.norm();
            let area = 0.5 * dbl;
            let mut cot = [0.0; 3];
            let mut ang = [0.0; 3];
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let (e1, e2) = (p[i] - p[k], p[j] - p[k]);
                let cos = e1.dot(&e2);
                let sin = e1.cross(&e2).norm();
                cot[k] = clamp_cot(cos, sin, &mut clamped);
                ang[k] = sin.atan2(cos);
                // Max weights: exact for meshes inscribed in a sphere
                normal_acc[f[k]] += e1.cross(&e2) / (e1.norm_squared() * e2.norm_squared());
                angle_sum[f[k]] += ang[k];
            }
            let ca = mixed_corner_areas(p, cot, area);
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                mass[f[k]] += ca[k];
                // grad of face area w.r.t. p_k: 0.5 * (p_i - p_j) x nhat ... in cot form
                area_grad[f[k]] += 0.5 * (cot[j] * (p[k] - p[i]) + cot[i] * (p[k] - p[j]));
            }
            face_area.push(area);
            corner_area.push(ca);
            corner_cot.push(cot);
            corner_angle.push(ang);
        }
        if clamped > 0 {
            log::warn!("{clamped} near-degenerate angles: cotangent weights clamped");
        }

        let normal: Vec<Vec3> = normal_acc.iter().map(|v| v.normalize()).collect();
        let hvec: Vec<Vec3> = area_grad.iter().zip(&mass).map(|(g, m)| -g / *m).collect();
        let h: Vec<f64> = hvec
            .iter()
            .zip(&normal)
            .map(|(hv, nv)| {
                let s = hv.dot(nv);
                if s < 0.0 {
                    -hv.norm()
                } else {
                    hv.norm()
                }
            })
            .collect();
        let angle_defect: Vec<f64> = angle_sum
            .iter()
            .zip(&topo.boundary_vertex)
            .map(|(s, &b)| if b { PI - s } else { 2.0 * PI - s })
            .collect();

        DiscreteGeometry {
            face_area,
            corner_area,
            corner_cot,
            corner_angle,
            mass,
            normal,
            area_grad,
            hvec,
            h,
            angle_defect,
            boundary: topo.boundary_vertex.clone(),
            clamped_angles: clamped,
        }
    }

    pub fn total_area(&self) -> f64 {
        pairwise_sum(&self.face_area)
    }

    /// Discrete Willmore energy (1/4) sum |Hvec|^2 m over interior vertices.
    pub fn willmore(&self) -> f64 {
        0.25 * pairwise_sum(&self.interior_map(|i| self.hvec[i].norm_squared() * self.mass[i]))
    }

    /// Sum of angle defects over interior vertices.
    pub fn total_gauss(&self) -> f64 {
        pairwise_sum(&self.interior_map(|i| self.angle_defect[i]))
    }

    /// Per-vertex integrated |A|^2 = (H^2 - 2K) m.
    pub fn a2_density(&self) -> Vec<f64> {
        (0..self.mass.len())
            .map(|i| self.hvec[i].norm_squared() * self.mass[i] - 2.0 * self.angle_defect[i])
            .collect()
    }

    pub fn total_a2(&self) -> f64 {
        let d = self.a2_density();
        pairwise_sum(&self.interior_map(|i| d[i]))
    }

    /// Pointwise Gauss curvature K_i = defect_i / m_i.
    pub fn gauss(&self) -> Vec<f64> {
        self.angle_defect.iter().zip(&self.mass).map(|(d, m)| d / m).collect()
    }

    /// Cotangent Laplace-Beltrami of a scalar field, (1/m_i) sum w_ij (u_j - u_i).
    pub fn laplacian(&self, mesh: &TriMesh, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (fi, f) in mesh.faces.iter().enumerate() {
            let cot = self.corner_cot[fi];
            for k in 0..3 {
                let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let w = 0.5 * cot[k];
                out[i] += w * (u[j] - u[i]);
                out[j] += w * (u[i] - u[j]);
            }
        }
        for (o, m) in out.iter_mut().zip(&self.mass) {
            *o /= m;
        }
        out
    }

    fn interior_map(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..self.mass.len()).filter(|&i| !self.boundary[i]).map(f).collect()
    }
}

/// Exterior unit vertex normals of a closed mesh.
pub fn vertex_normals(mesh: &TriMesh) -> Result<VertexField> {
    let g = DiscreteGeometry::closed(mesh)?;
    Ok(VertexField::new(FieldRole::Normal, g.normal))
}

/// Discrete mean curvature vector per vertex. Values at boundary vertices
/// (open meshes) only see the interior side and should be ignored.
pub fn mean_curvature_vector(mesh: &TriMesh) -> Result<VertexField> {
    let g = DiscreteGeometry::new(mesh)?;
    Ok(VertexField::new(FieldRole::MeanCurvatureVector, g.hvec))
}

/// Scalar mean curvature <Hvec, n>.
pub fn mean_curvature(mesh: &TriMesh) -> Result<Vec<f64>> {
    let g = DiscreteGeometry::new(mesh)?;
    Ok(g.hvec.iter().zip(&g.normal).map(|(h, n)| h.dot(n)).collect())
}

/// Total angle defect over interior vertices; equals 2 pi chi on closed meshes.
pub fn gauss_curvature_total(mesh: &TriMesh) -> Result<f64> {
    Ok(DiscreteGeometry::new(mesh)?.total_gauss())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecondFundamentalEnergy {
    #[serde(rename = "totalA2")]
    pub total_a2: f64,
    /// totalA2 - (4 W - 8 pi)
    pub residual: f64,
}

/// Integral of |A|^2 = H^2 - 2K, with the Gauss-Bonnet identity residual.
pub fn second_fundamental_energy(mesh: &TriMesh) -> Result<SecondFundamentalEnergy> {
    let topo = mesh.validate_closed()?;
    if topo.euler_characteristic() != 2 {
        return Err(Error::InvalidMesh(format!(
            "expected a genus-0 surface, Euler characteristic is {}",
            topo.euler_characteristic()
        )));
    }
    let g = DiscreteGeometry::with_topology(mesh, &topo);
    let total_a2 = g.total_a2();
    Ok(SecondFundamentalEnergy {
        total_a2,
        residual: total_a2 - (4.0 * g.willmore() - 8.0 * PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{catenoid_band, ellipsoid, icosphere, torus};

    #[test]
    fn sphere_normals_exact() {
        let m = icosphere(3, 1.0).unwrap();
        let n = vertex_normals(&m).unwrap();
        for (v, p) in n.values.iter().zip(&m.vertices) {
            assert!(v.dot(p).clamp(-1.0, 1.0).acos() < 1e-6);
        }
        let nf = vertex_normals(&m.flipped()).unwrap();
        for (a, b) in n.values.iter().zip(&nf.values) {
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn sphere_mean_curvature() {
        for &r in &[1.0, 3.0, 0.2] {
            let m = icosphere(4, r).unwrap();
            let h = mean_curvature(&m).unwrap();
            for v in h {
                assert!((v * r + 2.0).abs() < 2e-2, "H = {v}");
            }
        }
    }

    #[test]
    fn refinement_improves_h() {
        // on meshes inscribed in the sphere <Hvec, x> = -2 exactly, so track
        // the energy error instead
        let mut prev = f64::INFINITY;
        for l in 2..=5 {
            let m = icosphere(l, 1.0).unwrap();
            let g = DiscreteGeometry::closed(&m).unwrap();
            for (h, p) in g.hvec.iter().zip(&m.vertices) {
                assert!((h.dot(p) + 2.0).abs() < 1e-10);
            }
            let err = (g.willmore() - 4.0 * PI).abs();
            assert!(err < prev, "level {l}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn gauss_bonnet() {
        let m = ellipsoid(3, 2.0, 1.0, 0.5).unwrap();
        let k = gauss_curvature_total(&m).unwrap();
        assert!((k - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
        let t = torus(2.0, 0.5, 40, 20);
        assert!(gauss_curvature_total(&t).unwrap().abs() < 1e-10);
    }

    #[test]
    fn catenoid_minimal() {
        let m = catenoid_band(1.0, 1.0, 128, 64);
        let g = DiscreteGeometry::new(&m).unwrap();
        for i in 0..m.n_vertices() {
            if !g.boundary[i] {
                assert!(g.hvec[i].norm() < 5e-2);
            }
        }
    }

    #[test]
    fn identity_on_sphere() {
        let m = icosphere(4, 1.0).unwrap();
        let s = second_fundamental_energy(&m).unwrap();
        assert!((s.total_a2 - 8.0 * PI).abs() < 2e-2 * 8.0 * PI);
        assert!(s.residual.abs() < 1e-10);
    }
}
