//! Sphere inversion of meshes.

use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

/// y -> (y - y0)/|y - y0|^2 applied to every vertex. Faces are flipped when
/// needed so that the image encloses positive volume.
pub fn invert(mesh: &TriMesh, center: Vec3) -> Result<TriMesh> {
    let dist = mesh
        .faces
        .iter()
        .map(|f| point_triangle_distance(center, [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]]))
        .fold(f64::INFINITY, f64::min);
    if !(dist > 1e-6 * mesh.diameter()) {
        return Err(Error::CenterOnSurface(dist));
    }
    let out = mesh.map_vertices(|y| {
        let d = y - center;
        d / d.norm_squared()
    });
    let vol: f64 = out
        .faces
        .iter()
        .map(|f| out.vertices[f[0]].dot(&out.vertices[f[1]].cross(&out.vertices[f[2]])))
        .sum();
    Ok(if vol < 0.0 { out.flipped() } else { out })
}

/// Euclidean distance from `p` to a triangle.
pub fn point_triangle_distance(p: Vec3, t: [Vec3; 3]) -> f64 {
    let [a, b, c] = t;
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return (p - (a + ab * (d1 / (d1 - d3)))).norm();
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return (p - (a + ac * (d2 / (d2 - d6)))).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    (p - (a + ab * v + ac * w)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    #[test]
    fn unit_sphere_about_its_center_is_fixed() {
        let m = icosphere(3, 1.0).unwrap();
        let i = invert(&m, Vec3::zeros()).unwrap();
        for (a, b) in m.vertices.iter().zip(&i.vertices) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(i.faces, m.faces);
    }

    #[test]
    fn exterior_center_gives_a_sphere() {
        let m = icosphere(3, 1.0).unwrap();
        let i = invert(&m, Vec3::new(3.0, 0.0, 0.0)).unwrap();
        // the image of the unit sphere under inversion about (3,0,0) is the
        // sphere through the images of (1,0,0) and (-1,0,0), centered on the x axis
        let (x1, x2) = (-1.0 / 2.0, -1.0 / 4.0);
        let (c, r) = (0.5 * (x1 + x2), 0.5 * (x2 - x1));
        for v in &i.vertices {
            assert!(((v - Vec3::new(c, 0.0, 0.0)).norm() - r).abs() < 1e-6 * r);
        }
    }

    #[test]
    fn center_on_surface_rejected() {
        let m = icosphere(2, 1.0).unwrap();
        assert!(matches!(invert(&m, m.vertices[3]), Err(Error::CenterOnSurface(_))));
    }

    #[test]
    fn distance_cases() {
        let t = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!((point_triangle_distance(Vec3::new(0.2, 0.2, 1.0), t) - 1.0).abs() < 1e-15);
        assert!((point_triangle_distance(Vec3::new(-1.0, -1.0, 0.0), t) - 2f64.sqrt()).abs() < 1e-15);
        assert!((point_triangle_distance(Vec3::new(1.0, 1.0, 0.0), t) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
