//! Profiles parametrized by their tangent angle on a uniform grid in the
//! isothermal coordinate x = log t.
//!
//! With rho = e^u the conformal condition reads u' = cos psi and
//! z' = e^u sin psi, so psi alone determines the curve up to scale and
//! translation. Sampling uniformly in x puts points where the profile
//! varies on the log t scale, which keeps thin necks resolved without any
//! local refinement. Node 0 sits next to the south pole (psi = 0), node N
//! next to the north pole (psi = pi), and the node at x = 0 is pinned to
//! psi = pi/2 to fix the translation freedom in x.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::axisym::isothermal::log_mean_step;
use crate::axisym::profile::{profile_area, profile_gradients, profile_volume, profile_willmore};
use crate::axisym::{AxisymProfile, ProfileGeometry};
use crate::error::{Error, Result};
use crate::functionals::isoperimetric_ratio;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalProfile {
    /// x of node 0.
    pub x0: f64,
    pub h: f64,
    pub psi: Vec<f64>,
}

/// Value and psi-gradients of the functionals of a grid profile.
#[derive(Debug, Clone)]
pub struct GridEval {
    pub points: Vec<[f64; 2]>,
    pub area: f64,
    pub volume: f64,
    pub sigma: f64,
    pub willmore: f64,
    pub grad_sigma: Vec<f64>,
    /// Empty unless requested.
    pub grad_w: Vec<f64>,
}

impl ConformalProfile {
    pub fn n(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + self.h * j as f64
    }

    /// Index of the gauge node (x = 0).
    pub fn gauge(&self) -> usize {
        (-self.x0 / self.h).round() as usize
    }

    /// Free-variable mask: poles and gauge are pinned.
    pub fn free(&self) -> Vec<bool> {
        let n = self.n();
        let g = self.gauge();
        (0..=n).map(|j| j != 0 && j != n && j != g).collect()
    }

    /// (u_j, z_j) at the nodes, with u_0 = z_0 = 0.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut u = vec![0.0; n + 1];
        let mut z = vec![0.0; n + 1];
        for k in 0..n {
            let m = 0.5 * (self.psi[k] + self.psi[k + 1]);
            u[k + 1] = u[k] + self.h * m.cos();
            z[k + 1] = z[k] + self.h * m.sin() * (0.5 * (u[k] + u[k + 1])).exp();
        }
        (u, z)
    }

    /// Polyline including both poles, unnormalized.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let (u, z) = self.nodes();
        let n = self.n();
        let mut p = Vec::with_capacity(n + 3);
        p.push([0.0, z[0]]);
        for j in 0..=n {
            p.push([u[j].exp(), z[j]]);
        }
        p.push([0.0, z[n]]);
        p
    }

    /// The profile rescaled to unit area.
    pub fn to_profile(&self) -> AxisymProfile {
        let p = self.points();
        let s = profile_area(&p).sqrt().recip();
        AxisymProfile::new(p).scaled(s)
    }

    /// Pulls a gradient with respect to the polyline points back to psi.
    pub fn pullback(&self, g: &[[f64; 2]]) -> Vec<f64> {
        let n = self.n();
        let (u, _) = self.nodes();
        let mut gr = vec![0.0; n + 1];
        let mut gz = vec![0.0; n + 1];
        for j in 0..=n {
            gr[j] = g[j + 1][0];
            gz[j] = g[j + 1][1];
        }
        gz[0] += g[0][1];
        gz[n] += g[n + 2][1];
        let mid: Vec<f64> = (0..n).map(|k| 0.5 * (self.psi[k] + self.psi[k + 1])).collect();
        let a: Vec<f64> = (0..n)
            .map(|k| self.h * mid[k].sin() * (0.5 * (u[k] + u[k + 1])).exp())
            .collect();
        // suffix sums over later nodes
        let mut zs = vec![0.0; n];
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += gz[k + 1];
            zs[k] = acc;
        }
        let ubar: Vec<f64> = (0..=n)
            .map(|j| {
                let mut v = gr[j] * u[j].exp();
                if j < n {
                    v += 0.5 * zs[j] * a[j];
                }
                if j >= 1 {
                    v += 0.5 * zs[j - 1] * a[j - 1];
                }
                v
            })
            .collect();
        let mut us = vec![0.0; n];
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += ubar[k + 1];
            us[k] = acc;
        }
        let mut out = vec![0.0; n + 1];
        for k in 0..n {
            let e = (0.5 * (u[k] + u[k + 1])).exp();
            let gm = -us[k] * self.h * mid[k].sin() + zs[k] * self.h * mid[k].cos() * e;
            out[k] += 0.5 * gm;
            out[k + 1] += 0.5 * gm;
        }
        out
    }

    pub fn evaluate(&self, with_w: bool) -> Result<GridEval> {
        let points = self.points();
        let area = profile_area(&points);
        let volume = profile_volume(&points);
        if !(volume > 0.0) || !area.is_finite() {
            return Err(Error::Orientation(volume));
        }
        let sigma = isoperimetric_ratio(area, volume);
        let pg = profile_gradients(&points);
        let ds: Vec<[f64; 2]> = pg
            .da
            .iter()
            .zip(&pg.dv)
            .map(|(a, v)| {
                [
                    sigma * (v[0] / volume - 1.5 * a[0] / area),
                    sigma * (v[1] / volume - 1.5 * a[1] / area),
                ]
            })
            .collect();
        let grad_sigma = self.pullback(&ds);
        let (willmore, grad_w) = if with_w {
            (profile_willmore(&points), self.pullback(&pg.dw))
        } else {
            (f64::NAN, Vec::new())
        };
        Ok(GridEval {
            points,
            area,
            volume,
            sigma,
            willmore,
            grad_sigma,
            grad_w,
        })
    }

    /// x of the outermost equator: the last local maximum of rho.
    pub fn last_equator(&self) -> f64 {
        let (u, _) = self.nodes();
        let mut best = 0;
        for j in 1..u.len() - 1 {
            if u[j] >= u[j - 1] && u[j] > u[j + 1] {
                best = j;
            }
        }
        self.x(best)
    }

    /// Rebuilds the grid so that the north tail is `tail` long beyond the
    /// last equator. Values inside the old range are interpolated linearly;
    /// new tail nodes follow the cap asymptotics psi - pi ~ C e^{-x}.
    pub fn regrid(&self, tail: f64) -> ConformalProfile {
        let xe = self.last_equator();
        let n_new = ((xe + tail - self.x0) / self.h).round() as usize;
        let n = self.n();
        let back = ((3.0 / self.h).round() as usize).min(n / 4).max(1);
        let jf = n - back;
        let c = (0.5 * (self.psi[jf] - PI)).tan() * self.x(jf).exp();
        let mut psi: Vec<f64> = (0..=n_new)
            .map(|j| {
                let x = self.x0 + self.h * j as f64;
                if j <= n && x <= self.x(jf) {
                    self.psi[j]
                } else {
                    PI + 2.0 * (c * (-x).exp()).atan()
                }
            })
            .collect();
        psi[n_new] = PI;
        ConformalProfile {
            x0: self.x0,
            h: self.h,
            psi,
        }
    }

    /// Grid profile from a tangent-angle function of x (pinned values imposed).
    pub fn from_fn(x0: f64, x1: f64, h: f64, f: impl Fn(f64) -> f64) -> ConformalProfile {
        let n = ((x1 - x0) / h).round() as usize;
        let mut p = ConformalProfile {
            x0,
            h,
            psi: (0..=n).map(|j| f(x0 + h * j as f64)).collect(),
        };
        let g = p.gauge();
        p.psi[0] = 0.0;
        p.psi[n] = PI;
        p.psi[g] = FRAC_PI_2;
        p
    }

    /// Converts a closed polyline profile. The isothermal coordinate is
    /// built with the log-mean rule, shifted so the first equator crossing
    /// sits at x = 0, and psi is interpolated onto the grid with cap tails.
    pub fn from_profile(profile: &AxisymProfile, h: f64, tail: f64) -> Result<ConformalProfile> {
        profile.validate()?;
        let p = &profile.samples;
        let geo = ProfileGeometry::new(profile);
        let n = p.len();
        // x at interior samples
        let mut xs = vec![0.0; n];
        for i in 2..n - 1 {
            let l = geo.seg_len[i - 1];
            xs[i] = xs[i - 1] + log_mean_step(l, p[i - 1][0], p[i][0]);
        }
        let psi = &geo.psi;
        let cross = (1..n - 2)
            .find(|&i| psi[i] < FRAC_PI_2 && psi[i + 1] >= FRAC_PI_2)
            .ok_or_else(|| Error::InvalidProfile("no equator crossing".into()))?;
        let f = (FRAC_PI_2 - psi[cross]) / (psi[cross + 1] - psi[cross]);
        let shift = xs[cross] + f * (xs[cross + 1] - xs[cross]);
        let xs: Vec<f64> = xs.iter().map(|x| x - shift).collect();
        let (i0, i1) = (1, n - 2);
        let c0 = (0.5 * psi[i0]).tan() * (-xs[i0]).exp();
        let c1 = (0.5 * (psi[i1] - PI)).tan() * xs[i1].exp();
        let interp = |x: f64| -> f64 {
            if x <= xs[i0] {
                return 2.0 * (c0 * x.exp()).atan();
            }
            if x >= xs[i1] {
                return PI + 2.0 * (c1 * (-x).exp()).atan();
            }
            let k = xs[i0..=i1].partition_point(|&v| v <= x) + i0 - 1;
            let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
            psi[k] + w * (psi[k + 1] - psi[k])
        };
        let x0 = -(tail / h).round() * h;
        let draft = ConformalProfile::from_fn(x0, xs[i1].max(0.0) + tail, h, interp);
        Ok(draft.regrid(tail))
    }

    /// Analytic two-lobe seed: an outer sphere, a catenoidal neck and an
    /// inner sphere of the opposite orientation, glued in the tangent angle.
    /// The neck sits at x = a, the inner lobe at x = b; with outer radius R
    /// the neck radius is 4R e^{-a} and the inner radius R e^{b - 2a}.
    pub fn stomatocyte_seed(a: f64, b: f64, h: f64, tail: f64) -> ConformalProfile {
        let x0 = -(tail / h).round() * h;
        let f = |x: f64| 2.0 * x.exp().atan() + 2.0 * (x - a).exp().atan() - 2.0 * (x - b).exp().atan();
        ConformalProfile::from_fn(x0, b + tail, h, f)
    }

    /// Round sphere: psi = 2 atan(e^x).
    pub fn sphere(h: f64, tail: f64) -> ConformalProfile {
        let x0 = -(tail / h).round() * h;
        ConformalProfile::from_fn(x0, tail, h, |x| 2.0 * x.exp().atan())
    }
}

/// Two-lobe seed with a prescribed neck radius (relative to the outer
/// lobe) whose inner lobe is sized by bisection so that sigma hits the target.
pub fn stomatocyte_seed_for(sigma: f64, neck: f64, h: f64, tail: f64) -> Result<ConformalProfile> {
    let a = (4.0 / neck).ln();
    let at = |b: f64| -> Result<f64> {
        let g = ConformalProfile::stomatocyte_seed(a, b, h, tail);
        g.to_profile().validate()?;
        Ok(g.evaluate(false)?.sigma)
    };
    let (mut lo, mut hi) = (a + 0.5, 2.0 * a);
    // shrink the inner lobe until it fits inside the outer one
    while at(hi).is_err() {
        hi -= 0.05;
        if hi <= lo {
            return Err(Error::Projection("no embedded two-lobe seed".into()));
        }
    }
    let (slo, shi) = (at(lo)?, at(hi)?);
    if !(slo > sigma && shi < sigma) {
        return Err(Error::Projection(format!(
            "two-lobe seeds with neck {neck} span sigma in ({shi}, {slo}), target {sigma}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid).is_ok_and(|v| v > sigma) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ConformalProfile::stomatocyte_seed(a, 0.5 * (lo + hi), h, tail))
}

/// Two-lobe seed for a target ratio, with the widest neck from a fixed
/// ladder that can reach it.
pub fn two_lobe_seed(sigma: f64, h: f64, tail: f64) -> Result<ConformalProfile> {
    let mut last = None;
    for neck in [0.1, 0.05, 0.02, 0.01, 3e-3, 1e-3] {
        match stomatocyte_seed_for(sigma, neck, h, tail) {
            Ok(g) => return Ok(g),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}
