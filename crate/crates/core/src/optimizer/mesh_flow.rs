//! Projected quasi-Newton flow on triangle meshes with fixed connectivity
//! and tangential smoothing as the remeshing step.
//!
//! The base metric is H^1: directions are mapped through (K + M/mu)^{-1},
//! K the cotangent stiffness matrix and M the lumped mass, which removes
//! most of the mesh-size stiffness of the fourth-order Willmore gradient.

use crate::discrete::DiscreteGeometry;
use crate::error::{Error, Result};
use crate::functionals::Evaluation;
use crate::mesh::{Topology, TriMesh, Vec3};
use crate::optimizer::config::{FlowConfig, HistoryRow, Termination};
use crate::optimizer::lbfgs::{dot, Lbfgs};

fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

/// Keeps only the component of each vertex vector along its normal.
fn normal_part(normals: &[Vec3], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (i, n) in normals.iter().enumerate() {
        let d = Vec3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
        let p = n * n.dot(&d);
        out[3 * i] = p.x;
        out[3 * i + 1] = p.y;
        out[3 * i + 2] = p.z;
    }
    out
}

/// Multiplier and relative residual of the normal parts of the L2
/// gradients, the weak form of the constrained critical point equation.
pub fn normal_residual(e: &Evaluation) -> (f64, f64) {
    let g = &e.geometry;
    let (mut ww, mut ss, mut ws) = (0.0, 0.0, 0.0);
    let ds = e.dsigma();
    for (((n, dw), dsi), m) in g.normal.iter().zip(&e.dw).zip(&ds).zip(&g.mass) {
        let (a, b) = (n.dot(dw), n.dot(dsi));
        ww += a * a / m;
        ss += b * b / m;
        ws += a * b / m;
    }
    let lambda = ws / ss;
    let res = (ww - 2.0 * lambda * ws + lambda * lambda * ss).max(0.0);
    (lambda, (res / ww).sqrt())
}

fn with_offset(mesh: &TriMesh, a: f64, d: &[f64]) -> TriMesh {
    let mut m = mesh.clone();
    for (i, p) in m.vertices.iter_mut().enumerate() {
        *p += a * Vec3::new(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
    }
    m
}

/// (K + c M) applied to a scalar field.
fn stiffness_apply(mesh: &TriMesh, g: &DiscreteGeometry, c: f64, u: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().zip(&g.mass).map(|(x, m)| c * m * x).collect();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * g.corner_cot[fi][k];
            out[i] += w * (u[i] - u[j]);
            out[j] += w * (u[j] - u[i]);
        }
    }
    out
}

/// Jacobi-preconditioned conjugate gradients for (K + c M) x = b.
fn solve_h1(mesh: &TriMesh, g: &DiscreteGeometry, c: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut diag: Vec<f64> = g.mass.iter().map(|m| c * m).collect();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let w = 0.5 * g.corner_cot[fi][k];
            diag[f[(k + 1) % 3]] += w;
            diag[f[(k + 2) % 3]] += w;
        }
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d.max(1e-300)).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let bn = dot(b, b).sqrt();
    for _ in 0..4 * n {
        if dot(&r, &r).sqrt() <= 1e-12 * bn {
            break;
        }
        let ap = stiffness_apply(mesh, g, c, &p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&diag).map(|(a, d)| a / d.max(1e-300)).collect();
        let rz1 = dot(&r, &z);
        let beta = rz1 / rz;
        rz = rz1;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// The H^1 base operator on stacked xyz vectors.
fn base_operator(mesh: &TriMesh, g: &DiscreteGeometry, v: &[f64]) -> Vec<f64> {
    let n = mesh.n_vertices();
    let c = 1.0 / g.total_area();
    let mut out = vec![0.0; 3 * n];
    for k in 0..3 {
        let comp: Vec<f64> = (0..n).map(|i| v[3 * i + k]).collect();
        let x = solve_h1(mesh, g, c, &comp);
        for i in 0..n {
            out[3 * i + k] = x[i];
        }
    }
    out
}

/// Mesh quality: (longest/shortest edge, worst triangle aspect), where the
/// aspect is l_max^2 sqrt(3) / (4 area), 1 for equilateral triangles.
pub fn mesh_quality(mesh: &TriMesh) -> (f64, f64) {
    let (mut lmin, mut lmax, mut aspect) = (f64::INFINITY, 0.0f64, 1.0f64);
    for f in &mesh.faces {
        let p = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        let l = [(p[1] - p[0]).norm(), (p[2] - p[1]).norm(), (p[0] - p[2]).norm()];
        let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let m = l[0].max(l[1]).max(l[2]);
        lmin = lmin.min(l[0].min(l[1]).min(l[2]));
        lmax = lmax.max(m);
        aspect = aspect.max(m * m * 3f64.sqrt() / (4.0 * area));
    }
    (lmax / lmin, aspect)
}

/// Tangential smoothing: vertices move towards the average of their
/// neighbors within the tangent plane, leaving the shape nearly unchanged.
pub fn tangential_smooth(mesh: &TriMesh, sweeps: usize) -> Result<TriMesh> {
    let nb = mesh.neighbors();
    let mut m = mesh.clone();
    for _ in 0..sweeps {
        let g = DiscreteGeometry::closed(&m)?;
        let next: Vec<Vec3> = (0..m.n_vertices())
            .map(|i| {
                let c = nb[i].iter().map(|&j| m.vertices[j]).sum::<Vec3>() / nb[i].len() as f64;
                let d = c - m.vertices[i];
                let n = g.normal[i];
                m.vertices[i] + 0.5 * (d - n * n.dot(&d))
            })
            .collect();
        m.vertices = next;
    }
    Ok(m)
}

/// One damped sweep of tangential smoothing with given normals.
fn relax_once(mesh: &TriMesh, nb: &[Vec<usize>], normals: &[Vec3], w: f64) -> TriMesh {
    let mut m = mesh.clone();
    for i in 0..m.n_vertices() {
        let c = nb[i].iter().map(|&j| mesh.vertices[j]).sum::<Vec3>() / nb[i].len() as f64;
        let d = c - mesh.vertices[i];
        let n = normals[i];
        m.vertices[i] += w * (d - n * n.dot(&d));
    }
    m
}

/// Newton retraction of a mesh onto sigma = target along `dir`.
pub fn retract_mesh(
    mesh: &TriMesh,
    topo: &Topology,
    dir: &[f64],
    target: f64,
    tol: f64,
) -> Result<(TriMesh, Evaluation)> {
    let mut tau = 0.0;
    let dmax = dir.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let cap = 0.05 * mesh.diameter() / dmax;
    for _ in 0..50 {
        let m = with_offset(mesh, tau, dir);
        let e = Evaluation::unchecked(&m, topo)?;
        let r = e.metrics.sigma - target;
        if r.abs() < tol {
            return Ok((m, e));
        }
        let slope = dot(&flatten(&e.dsigma()), dir);
        if !(slope.abs() > 0.0) {
            break;
        }
        tau += (-r / slope).clamp(-cap, cap);
    }
    Err(Error::Projection(format!(
        "Newton on sigma did not reach {target} in 50 iterations"
    )))
}

/// Projects a mesh onto sigma = target along the H^1 gradient of sigma.
pub fn project_mesh(mesh: &TriMesh, target: f64, tol: f64) -> Result<(TriMesh, Evaluation)> {
    let topo = mesh.validate_closed()?;
    let e = Evaluation::unchecked(mesh, &topo)?;
    if e.multiplier().degenerate && e.cancellation_ratio() < crate::functionals::DEGENERACY_RATIO {
        return Err(Error::DegenerateMultiplier);
    }
    let mut m = mesh.clone();
    let mut sigma = e.metrics.sigma;
    for _ in 0..40 {
        let stage = if (sigma - target).abs() < 0.02 {
            target
        } else {
            sigma + (target - sigma).clamp(-0.02, 0.02)
        };
        let ev = Evaluation::unchecked(&m, &topo)?;
        let dir = base_operator(&m, &ev.geometry, &flatten(&ev.dsigma()));
        let (nm, ne) = retract_mesh(&m, &topo, &dir, stage, if stage == target { tol } else { 1e-6 })?;
        m = nm;
        sigma = ne.metrics.sigma;
        if stage == target {
            return Ok((m, ne));
        }
    }
    Err(Error::Projection(format!("could not reach sigma {target}")))
}

/// Tangential relaxation folded into every trial step.
const RELAX: f64 = 0.5;
const RELAX_SWEEPS: usize = 3;

#[derive(Debug, Clone)]
pub struct MeshEngine {
    pub mesh: TriMesh,
    pub topo: Topology,
    neighbors: Vec<Vec<usize>>,
    pub eval: Evaluation,
    pub memory: Lbfgs,
    pub segment: usize,
    pub since_remesh: usize,
    pub lambda: f64,
    pub residual: f64,
}

impl MeshEngine {
    pub fn new(mesh: TriMesh, config: &FlowConfig) -> Result<Self> {
        let (mesh, eval) = project_mesh(&mesh, config.sigma_target, config.constraint_tolerance)?;
        let topo = mesh.validate_closed()?;
        let mut e = MeshEngine {
            neighbors: mesh.neighbors(),
            mesh,
            topo,
            eval,
            memory: Lbfgs::new(config.memory, 1.0),
            segment: 0,
            since_remesh: 0,
            lambda: f64::NAN,
            residual: f64::INFINITY,
        };
        e.update_residual();
        Ok(e)
    }

    fn base(&self) -> impl Fn(&[f64]) -> Vec<f64> + use<> {
        let mesh = self.mesh.clone();
        let geo = self.eval.geometry.clone();
        move |v: &[f64]| base_operator(&mesh, &geo, v)
    }

    /// Multiplier and relative constrained-gradient norm of the normal
    /// parts in the dual H^1 norm, which discounts mesh-scale noise in the
    /// discrete gradient.
    fn update_residual(&mut self) {
        let normals = &self.eval.geometry.normal;
        let g = normal_part(normals, &flatten(&self.eval.dw));
        let a = normal_part(normals, &flatten(&self.eval.dsigma()));
        let base = self.base();
        let (bg, ba) = (normal_part(normals, &base(&g)), normal_part(normals, &base(&a)));
        let lambda = dot(&a, &bg) / dot(&a, &ba);
        let l: Vec<f64> = g.iter().zip(&a).map(|(x, y)| x - lambda * y).collect();
        let bl = normal_part(normals, &base(&l));
        self.lambda = lambda;
        self.residual = (dot(&l, &bl) / dot(&g, &bg)).max(0.0).sqrt();
    }

    pub fn step(
        &mut self,
        config: &FlowConfig,
        iteration: usize,
    ) -> Result<std::result::Result<HistoryRow, Termination>> {
        if self.residual < config.tolerance {
            return Ok(Err(Termination::Converged));
        }
        self.maybe_remesh(config)?;
        // work with the normal parts only; tangential drift is left to the remesher
        let normals = self.eval.geometry.normal.clone();
        let g = normal_part(&normals, &flatten(&self.eval.dw));
        let a = normal_part(&normals, &flatten(&self.eval.dsigma()));
        let base = self.base();
        let hg = normal_part(&normals, &self.memory.apply(&g, &base));
        let ha = normal_part(&normals, &self.memory.apply(&a, &base));
        let lam = dot(&a, &hg) / dot(&a, &ha);
        let d: Vec<f64> = hg.iter().zip(&ha).map(|(x, y)| -(x - lam * y)).collect();
        let slope = dot(&g, &d);
        if !(slope < 0.0) {
            if self.memory.is_empty() {
                return Ok(Err(Termination::Stalled));
            }
            self.memory.clear();
            return self.step(config, iteration);
        }
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let h = (self.eval.metrics.area / self.mesh.n_faces() as f64).sqrt();
        let mut alpha = config.initial_step.min(0.25 * h / dmax);
        let w0 = self.eval.metrics.willmore;
        let retract_dir = ha.clone();
        let alpha0 = alpha;
        // relaxed trials first; plain ones if relaxation blocks descent
        for attempt in 0..2 * (config.max_backtracks + 1) {
            let (k, sweeps) = if attempt <= config.max_backtracks {
                (attempt, RELAX_SWEEPS)
            } else {
                (attempt - config.max_backtracks - 1, 0)
            };
            alpha = alpha0 * config.backtrack_factor.powi(k as i32);
            if alpha < 1e-14 {
                continue;
            }
            let mut trial = with_offset(&self.mesh, alpha, &d);
            for _ in 0..sweeps {
                trial = relax_once(&trial, &self.neighbors, &normals, RELAX);
            }
            let ok = trial.check_degenerate().is_ok();
            let accepted = if ok {
                match retract_mesh(
                    &trial,
                    &self.topo,
                    &retract_dir,
                    config.sigma_target,
                    config.constraint_tolerance,
                ) {
                    Ok((m, e)) if e.metrics.willmore <= w0 + config.armijo * alpha * slope => Some((m, e)),
                    _ => None,
                }
            } else {
                None
            };
            if let Some((m, e)) = accepted {
                let s: Vec<f64> = d.iter().map(|x| alpha * x).collect();
                let old_l: Vec<f64> = g.iter().zip(&a).map(|(x, y)| x - lam * y).collect();
                let n1 = &e.geometry.normal;
                let g1 = normal_part(n1, &flatten(&e.dw));
                let a1 = normal_part(n1, &flatten(&e.dsigma()));
                let y: Vec<f64> = g1
                    .iter()
                    .zip(&a1)
                    .zip(&old_l)
                    .map(|((x, y), o)| x - lam * y - o)
                    .collect();
                self.mesh = m;
                self.eval = e;
                self.memory.push(s, y, self.base());
                self.update_residual();
                self.since_remesh += 1;
                return Ok(Ok(HistoryRow {
                    iteration,
                    willmore: self.eval.metrics.willmore,
                    sigma: self.eval.metrics.sigma,
                    lambda: self.lambda,
                    step_size: alpha,
                    residual: self.residual,
                    segment: self.segment,
                }));
            }
        }
        Ok(Err(Termination::Stalled))
    }

    fn maybe_remesh(&mut self, config: &FlowConfig) -> Result<()> {
        if self.since_remesh < 10 {
            return Ok(());
        }
        self.since_remesh = 0;
        let (er, ar) = mesh_quality(&self.mesh);
        if er <= config.edge_ratio && ar <= config.aspect_ratio {
            return Ok(());
        }
        let smooth = tangential_smooth(&self.mesh, 10)?;
        let (er2, ar2) = mesh_quality(&smooth);
        // long thin shapes legitimately have uneven edges; only slivers are fatal
        if ar2 > 2.0 * config.aspect_ratio || smooth.check_degenerate().is_err() {
            return Err(Error::Flow(format!(
                "mesh degenerated beyond repair: edge ratio {er2:.3}, aspect {ar2:.3} (before smoothing {er:.3}, {ar:.3})"
            )));
        }
        let (mesh, eval) = project_mesh(&smooth, config.sigma_target, config.constraint_tolerance)?;
        self.mesh = mesh;
        self.eval = eval;
        self.memory.clear();
        self.segment += 1;
        self.update_residual();
        Ok(())
    }
}
