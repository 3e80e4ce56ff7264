//! Closed oriented triangle meshes and a few generators.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Relative threshold below which a face counts as degenerate.
pub const DEGENERATE_FACE_EPS: f64 = 1e-8;

/// Largest icosphere subdivision level accepted by [`icosphere`].
pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

/// Triangle mesh with counterclockwise (exterior) face orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Optional per-vertex integer tags; empty when unused.
    pub tags: Vec<u32>,
}

/// Edge/boundary bookkeeping produced by [`TriMesh::topology`].
#[derive(Debug, Clone)]
pub struct Topology {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_faces: usize,
    pub boundary_edges: Vec<[usize; 2]>,
    /// True for vertices touching a boundary edge.
    pub boundary_vertex: Vec<bool>,
}

impl Topology {
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.n_edges as i64 + self.n_faces as i64
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges.is_empty()
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            faces,
            tags: Vec::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * (pb - pa).cross(&(pc - pa)).norm()
    }

    /// Manifold check (boundary allowed). Every directed edge may appear at
    /// most once, and every vertex fan must be a single disc or half-disc.
    pub fn topology(&self) -> Result<Topology> {
        let n = self.vertices.len();
        if self.faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        if !self.tags.is_empty() && self.tags.len() != n {
            return Err(Error::InvalidMesh(format!(
                "{} tags for {} vertices",
                self.tags.len(),
                n
            )));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.faces.len());
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a >= n || b >= n {
                    return Err(Error::InvalidMesh(format!("face {fi} references vertex out of range")));
                }
                if a == b {
                    return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
                }
                if directed.insert((a, b), fi).is_some() {
                    return Err(Error::NonManifold(format!(
                        "directed edge ({a}, {b}) used twice; inconsistent orientation or more than two faces per edge"
                    )));
                }
            }
        }
        let mut boundary_edges = Vec::new();
        let mut n_edges = 0usize;
        for &(a, b) in directed.keys() {
            if directed.contains_key(&(b, a)) {
                if a < b {
                    n_edges += 1;
                }
            } else {
                boundary_edges.push([a, b]);
                n_edges += 1;
            }
        }
        boundary_edges.sort_unstable();
        let mut boundary_vertex = vec![false; n];
        for e in &boundary_edges {
            boundary_vertex[e[0]] = true;
            boundary_vertex[e[1]] = true;
        }

        // Fan check: walking around each vertex through shared edges must
        // visit every incident face.
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                incident[v].push(fi);
            }
        }
        for v in 0..n {
            let inc = &incident[v];
            if inc.is_empty() {
                return Err(Error::InvalidMesh(format!("vertex {v} is isolated")));
            }
            // outgoing edge v->next of a face, keyed by the "next" vertex
            let mut next_of: HashMap<usize, usize> = HashMap::with_capacity(inc.len());
            for &fi in inc {
                let f = self.faces[fi];
                let k = f.iter().position(|&x| x == v).unwrap();
                next_of.insert(f[(k + 1) % 3], fi);
            }
            let start_face = if boundary_vertex[v] {
                // start at the face whose edge (v, next) has no twin
                let mut s = None;
                for &fi in inc {
                    let f = self.faces[fi];
                    let k = f.iter().position(|&x| x == v).unwrap();
                    let next = f[(k + 1) % 3];
                    if !directed.contains_key(&(next, v)) {
                        s = Some(fi);
                        break;
                    }
                }
                match s {
                    Some(s) => s,
                    None => {
                        return Err(Error::NonManifold(format!(
                            "vertex {v} has an inconsistent boundary fan"
                        )))
                    }
                }
            } else {
                inc[0]
            };
            let mut visited = 1usize;
            let mut cur = start_face;
            loop {
                let f = self.faces[cur];
                let k = f.iter().position(|&x| x == v).unwrap();
                let prev = f[(k + 2) % 3];
                // the neighbouring face across edge (v, prev) contains v -> prev
                match next_of.get(&prev) {
                    Some(&nf) if nf != start_face => {
                        visited += 1;
                        cur = nf;
                        if visited > inc.len() {
                            break;
                        }
                    }
                    _ => break,
                }
            }
            if visited != inc.len() {
                return Err(Error::NonManifold(format!("vertex {v} joins {} separate fans", 2)));
            }
        }
        Ok(Topology {
            n_vertices: n,
            n_edges,
            n_faces: self.faces.len(),
            boundary_edges,
            boundary_vertex,
        })
    }

    /// Full validation for closed surfaces: manifold, no boundary and no
    /// degenerate faces.
    pub fn validate_closed(&self) -> Result<Topology> {
        let topo = self.topology()?;
        if !topo.is_closed() {
            return Err(Error::OpenMesh(topo.boundary_edges.len()));
        }
        self.check_degenerate()?;
        Ok(topo)
    }

    /// Manifold (possibly with boundary) and free of degenerate faces.
    pub fn validate_manifold(&self) -> Result<Topology> {
        let topo = self.topology()?;
        self.check_degenerate()?;
        Ok(topo)
    }

    pub fn check_degenerate(&self) -> Result<()> {
        let areas: Vec<f64> = (0..self.faces.len()).map(|f| self.face_area(f)).collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        let threshold = DEGENERATE_FACE_EPS * mean;
        for (face, &area) in areas.iter().enumerate() {
            if !(area > threshold) {
                return Err(Error::DegenerateFace { face, area, threshold });
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> TriMesh {
        self.map_vertices(|p| p * s)
    }

    pub fn translated(&self, t: Vec3) -> TriMesh {
        self.map_vertices(|p| p + t)
    }

    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            faces: self.faces.clone(),
            tags: self.tags.clone(),
        }
    }

    /// Reverses the orientation of every face.
    pub fn flipped(&self) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            tags: self.tags.clone(),
        }
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().fold(Vec3::zeros(), |acc, p| acc + p) / self.vertices.len() as f64
    }

    /// Largest pairwise extent of the bounding box diagonal.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }

    /// Edge list (each undirected edge once, smaller index first).
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .faces
            .iter()
            .flat_map(|f| {
                (0..3).map(move |k| {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Vertex one-ring adjacency.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for [a, b] in self.edges() {
            nb[a].push(b);
            nb[b].push(a);
        }
        nb
    }
}

/// Subdivided icosahedron projected onto the sphere of given radius.
pub fn icosphere(level: u32, radius: f64) -> Result<TriMesh> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(Error::Config(format!(
            "icosphere level {level} exceeds the limit {MAX_ICOSPHERE_LEVEL}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Config(format!(
            "icosphere radius must be positive, got {radius}"
        )));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let mesh = TriMesh::new(verts.into_iter().map(|p| p * radius).collect(), faces);
    Ok(orient_outward(mesh))
}

/// Flips all faces if the signed volume is negative.
pub fn orient_outward(mesh: TriMesh) -> TriMesh {
    if signed_volume(&mesh) < 0.0 {
        mesh.flipped()
    } else {
        mesh
    }
}

pub fn signed_volume(mesh: &TriMesh) -> f64 {
    mesh.faces
        .iter()
        .map(|&[a, b, c]| mesh.vertices[a].dot(&mesh.vertices[b].cross(&mesh.vertices[c])))
        .sum::<f64>()
        / 6.0
}

/// Torus with major radius `big` and minor radius `small`, `n` by `m` grid.
pub fn torus(big: f64, small: f64, n: usize, m: usize) -> TriMesh {
    let mut v = Vec::with_capacity(n * m);
    for i in 0..n {
        let u = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        for j in 0..m {
            let w = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let r = big + small * w.cos();
            v.push(Vec3::new(r * u.cos(), r * u.sin(), small * w.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % n) * m + (j % m);
    let mut f = Vec::with_capacity(2 * n * m);
    for i in 0..n {
        for j in 0..m {
            f.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            f.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    orient_outward(TriMesh::new(v, f))
}

/// Open catenoid band rho = c cosh(z / c), |z| <= zmax, on an `n` (around) by
/// `m` (along) grid, sampled uniformly in z.
pub fn catenoid_band(c: f64, zmax: f64, n: usize, m: usize) -> TriMesh {
    let mut v = Vec::with_capacity(n * (m + 1));
    for j in 0..=m {
        let z = -zmax + 2.0 * zmax * j as f64 / m as f64;
        let r = c * (z / c).cosh();
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            v.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let idx = |i: usize, j: usize| j * n + (i % n);
    let mut f = Vec::with_capacity(2 * n * m);
    for j in 0..m {
        for i in 0..n {
            // normals point away from the axis
            f.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            f.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(v, f)
}

/// Icosphere mapped onto the ellipsoid with semi-axes (a, b, c).
pub fn ellipsoid(level: u32, a: f64, b: f64, c: f64) -> Result<TriMesh> {
    Ok(icosphere(level, 1.0)?.map_vertices(|p| Vec3::new(a * p.x, b * p.y, c * p.z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for l in 0..5 {
            let m = icosphere(l, 1.0).unwrap();
            assert_eq!(m.n_vertices(), 10 * 4usize.pow(l) + 2);
            let t = m.validate_closed().unwrap();
            assert_eq!(t.euler_characteristic(), 2);
        }
        assert!(icosphere(9, 1.0).is_err());
    }

    #[test]
    fn icosphere_is_outward() {
        let m = icosphere(2, 1.0).unwrap();
        for &[a, b, c] in &m.faces {
            let n = (m.vertices[b] - m.vertices[a]).cross(&(m.vertices[c] - m.vertices[a]));
            assert!(n.dot(&(m.vertices[a] + m.vertices[b] + m.vertices[c])) > 0.0);
        }
    }

    #[test]
    fn torus_euler() {
        let t = torus(2.0, 0.7, 24, 12).validate_closed().unwrap();
        assert_eq!(t.euler_characteristic(), 0);
    }

    #[test]
    fn open_mesh_rejected() {
        let mut m = icosphere(1, 1.0).unwrap();
        m.faces.pop();
        assert!(matches!(m.validate_closed(), Err(Error::OpenMesh(3))));
    }

    #[test]
    fn inconsistent_orientation_rejected() {
        let mut m = icosphere(1, 1.0).unwrap();
        let [a, b, c] = m.faces[0];
        m.faces[0] = [a, c, b];
        assert!(matches!(m.validate_closed(), Err(Error::NonManifold(_))));
    }

    #[test]
    fn degenerate_face_rejected() {
        let mut m = icosphere(1, 1.0).unwrap();
        let [a, b, _] = m.faces[0];
        let c = m.faces[0][2];
        m.vertices[c] = (m.vertices[a] + m.vertices[b]) * 0.5;
        assert!(m.validate_closed().is_err());
    }

    #[test]
    fn band_has_boundary() {
        let t = catenoid_band(1.0, 1.0, 16, 8).topology().unwrap();
        assert_eq!(t.boundary_edges.len(), 32);
        assert_eq!(t.euler_characteristic(), 0);
    }
}
