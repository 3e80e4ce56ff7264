//! Graph patches f(x, y) = (x, y, u(x, y)) and their curvature formulas.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// Height function on the disc of radius `radius` about the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphPatch {
    /// u = sum c[i][j] x^i y^j for i + j <= 4.
    Polynomial { coeffs: [[f64; 5]; 5], radius: f64 },
    /// u = -sqrt(r^2 - x^2 - y^2).
    LowerHemisphere { r: f64 },
}

/// Metric, second fundamental form and both mean curvature evaluations.
#[derive(Debug, Clone, Copy)]
pub struct GraphCurvatures {
    pub metric: [[f64; 2]; 2],
    /// Third component of A, (1 - g^{ab} u_a u_b) u_{ij}.
    pub a3: [[f64; 2]; 2],
    /// Vector second fundamental form A_ij.
    pub a: [[[f64; 3]; 2]; 2],
    /// H from (delta - Du Du / (1 + |Du|^2)) D^2 u = H sqrt(1 + |Du|^2),
    /// relative to the upward normal (-Du, 1)/sqrt(1 + |Du|^2).
    pub h: f64,
    /// g^{ij} A_ij paired with the upward normal.
    pub h_trace: f64,
}

impl GraphPatch {
    pub fn plane() -> Self {
        GraphPatch::Polynomial {
            coeffs: [[0.0; 5]; 5],
            radius: 1.0,
        }
    }

    /// u = (x^2 + y^2) / 2.
    pub fn paraboloid() -> Self {
        let mut c = [[0.0; 5]; 5];
        c[2][0] = 0.5;
        c[0][2] = 0.5;
        GraphPatch::Polynomial { coeffs: c, radius: 1.0 }
    }

    /// Random polynomial of degree 4 with coefficients in [-1, 1] on the
    /// disc of radius 1/2.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut c = [[0.0; 5]; 5];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i + j <= 4 {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
        }
        GraphPatch::Polynomial { coeffs: c, radius: 0.5 }
    }

    pub fn radius(&self) -> f64 {
        match self {
            GraphPatch::Polynomial { radius, .. } => *radius,
            GraphPatch::LowerHemisphere { r } => *r,
        }
    }

    /// (u, [u_x, u_y], [[u_xx, u_xy], [u_xy, u_yy]]).
    pub fn jet(&self, x: f64, y: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        match self {
            GraphPatch::Polynomial { coeffs, .. } => {
                let pw = |b: f64, k: i32| if k < 0 { 0.0 } else { b.powi(k) };
                let (mut u, mut ux, mut uy, mut uxx, mut uxy, mut uyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for (i, row) in coeffs.iter().enumerate() {
                    for (j, &c) in row.iter().enumerate() {
                        if c == 0.0 {
                            continue;
                        }
                        let (fi, fj) = (i as f64, j as f64);
                        let (i, j) = (i as i32, j as i32);
                        u += c * pw(x, i) * pw(y, j);
                        ux += c * fi * pw(x, i - 1) * pw(y, j);
                        uy += c * fj * pw(x, i) * pw(y, j - 1);
                        uxx += c * fi * (fi - 1.0) * pw(x, i - 2) * pw(y, j);
                        uxy += c * fi * fj * pw(x, i - 1) * pw(y, j - 1);
                        uyy += c * fj * (fj - 1.0) * pw(x, i) * pw(y, j - 2);
                    }
                }
                (u, [ux, uy], [[uxx, uxy], [uxy, uyy]])
            }
            GraphPatch::LowerHemisphere { r } => {
                let w = (r * r - x * x - y * y).sqrt();
                let w3 = w * w * w;
                (
                    -w,
                    [x / w, y / w],
                    [[(r * r - y * y) / w3, x * y / w3], [x * y / w3, (r * r - x * x) / w3]],
                )
            }
        }
    }
}

/// Evaluates g, A and H at `point` by the graph formulas.
pub fn graph_curvatures(patch: &GraphPatch, point: [f64; 2]) -> Result<GraphCurvatures> {
    let [x, y] = point;
    if x * x + y * y > patch.radius().powi(2) {
        return Err(Error::Config(format!("point ({x}, {y}) outside the patch")));
    }
    let (_, du, d2u) = patch.jet(x, y);
    let q = du[0] * du[0] + du[1] * du[1];
    if !(q.is_finite() && d2u.iter().flatten().all(|v| v.is_finite())) {
        return Err(Error::Config(format!("unbounded gradient at ({x}, {y})")));
    }
    let w = (1.0 + q).sqrt();
    let mut metric = [[0.0; 2]; 2];
    let mut ginv = [[0.0; 2]; 2];
    for l in 0..2 {
        for m in 0..2 {
            let d = if l == m { 1.0 } else { 0.0 };
            metric[l][m] = d + du[l] * du[m];
            ginv[l][m] = d - du[l] * du[m] / (1.0 + q);
        }
    }
    // mean curvature equation
    let mut lhs = 0.0;
    for l in 0..2 {
        for m in 0..2 {
            lhs += ginv[l][m] * d2u[l][m];
        }
    }
    let h = lhs / w;
    // second fundamental form
    let mut gdu = 0.0;
    for l in 0..2 {
        for m in 0..2 {
            gdu += ginv[l][m] * du[l] * du[m];
        }
    }
    let mut a3 = [[0.0; 2]; 2];
    let mut a = [[[0.0; 3]; 2]; 2];
    for l in 0..2 {
        for m in 0..2 {
            a3[l][m] = (1.0 - gdu) * d2u[l][m];
            // A = <f_lm, nu> nu with nu = (-Du, 1)/w; its third component is a3
            a[l][m] = [-du[0] * a3[l][m], -du[1] * a3[l][m], a3[l][m]];
        }
    }
    let mut tr3 = 0.0;
    for l in 0..2 {
        for m in 0..2 {
            tr3 += ginv[l][m] * a3[l][m];
        }
    }
    // Hvec = H nu, so its third component is H / w
    let h_trace = tr3 * w;
    Ok(GraphCurvatures {
        metric,
        a3,
        a,
        h,
        h_trace,
    })
}
