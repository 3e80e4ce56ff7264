//! Isothermal radial coordinate of a surface of revolution.
//!
//! With x = log t and dx = ds / rho the metric becomes rho^2 (dx^2 + dtheta^2),
//! so (t, theta) are polar isothermal coordinates and the conformal factor in
//! the Cartesian chart is e^u = rho / t.

use crate::axisym::profile::{AxisymProfile, ProfileGeometry};
use crate::error::{Error, Result};

/// t(s), u(s) on the interior samples of a profile.
#[derive(Debug, Clone)]
pub struct IsothermalMap {
    /// Profile sample index of each entry.
    pub index: Vec<usize>,
    /// Arc length from the first sample.
    pub s: Vec<f64>,
    /// log t.
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// log(rho / t).
    pub u: Vec<f64>,
    /// Sample index where t = 1 (equator of the larger lobe).
    pub anchor: usize,
    /// +1 if t increases along the profile, -1 otherwise.
    pub orientation: f64,
    /// Max |-w'' - K rho^2| with w = log rho on the log-t grid.
    pub liouville_residual: f64,
    /// RMS of the same residual.
    pub liouville_rms: f64,
}

impl IsothermalMap {
    /// Linear interpolation of log t at a fractional sample position.
    pub fn x_at(&self, sample: f64) -> f64 {
        let k = self.index.partition_point(|&i| (i as f64) <= sample);
        if k == 0 {
            return self.x[0];
        }
        if k >= self.index.len() {
            return *self.x.last().unwrap();
        }
        let (i0, i1) = (self.index[k - 1] as f64, self.index[k] as f64);
        let w = (sample - i0) / (i1 - i0);
        self.x[k - 1] * (1.0 - w) + self.x[k] * w
    }

    pub fn t_at(&self, sample: f64) -> f64 {
        self.x_at(sample).exp()
    }
}

/// Increment of the integral of ds / rho over a straight segment.
pub fn log_mean_step(len: f64, ra: f64, rb: f64) -> f64 {
    let d = rb - ra;
    let m = 0.5 * (ra + rb);
    if d.abs() < 1e-6 * m {
        // series of ln(rb/ra)/(rb-ra) about the midpoint
        let e = d / m;
        len / m * (1.0 + e * e / 12.0)
    } else {
        len * (rb / ra).ln() / d
    }
}

/// Local minima of rho between two larger maxima with prominence ratio above
/// `prom`, as (index, depth ratio).
pub fn interior_minima(rho: &[f64], prom: f64) -> Vec<usize> {
    let n = rho.len();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if rho[i] <= rho[i - 1] && rho[i] < rho[i + 1] {
            let left = rho[..i].iter().cloned().fold(0.0, f64::max);
            let right = rho[i + 1..].iter().cloned().fold(0.0, f64::max);
            if left.min(right) > prom * rho[i] {
                out.push(i);
            }
        }
    }
    out
}

pub fn isothermal_coordinate(profile: &AxisymProfile) -> Result<IsothermalMap> {
    profile.validate_basic()?;
    let p = &profile.samples;
    let n = p.len();
    let first = if p[0][0] == 0.0 { 1 } else { 0 };
    let last = if p[n - 1][0] == 0.0 { n - 2 } else { n - 1 };
    if last <= first + 1 {
        return Err(Error::InvalidProfile("too few interior samples".into()));
    }
    let rho = profile.rho();
    let anchor = (first..=last).max_by(|&a, &b| rho[a].total_cmp(&rho[b])).unwrap();
    let minima = interior_minima(&rho, 1.05);
    let deepest = minima.iter().cloned().min_by(|&a, &b| rho[a].total_cmp(&rho[b]));
    let orientation = match deepest {
        Some(k) if anchor < k => -1.0,
        _ => 1.0,
    };

    let index: Vec<usize> = (first..=last).collect();
    let mut s = vec![0.0; index.len()];
    let mut x = vec![0.0; index.len()];
    let mut arc = 0.0;
    for i in 0..first {
        arc += seg(p, i);
    }
    s[0] = arc;
    for k in 1..index.len() {
        let i = index[k];
        let l = seg(p, i - 1);
        arc += l;
        s[k] = arc;
        x[k] = x[k - 1] + orientation * log_mean_step(l, rho[i - 1], rho[i]);
    }
    let x0 = x[anchor - first];
    for v in x.iter_mut() {
        *v -= x0;
    }
    let t: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let u: Vec<f64> = index.iter().zip(&x).map(|(&i, xv)| rho[i].ln() - xv).collect();

    let geo = ProfileGeometry::new(profile);
    let k = geo.gauss_pointwise();
    let mut res = Vec::new();
    for j in 1..index.len() - 1 {
        let i = index[j];
        let (h0, h1) = (x[j] - x[j - 1], x[j + 1] - x[j]);
        let w = |q: usize| rho[index[q]].ln();
        let d2 = 2.0 * (h0 * w(j + 1) - (h0 + h1) * w(j) + h1 * w(j - 1)) / (h0 * h1 * (h0 + h1));
        res.push(-d2 - k[i] * rho[i] * rho[i]);
    }
    let liouville_residual = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let liouville_rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len().max(1) as f64).sqrt();
    Ok(IsothermalMap {
        index,
        s,
        x,
        t,
        u,
        anchor,
        orientation,
        liouville_residual,
        liouville_rms,
    })
}

fn seg(p: &[[f64; 2]], i: usize) -> f64 {
    ((p[i + 1][0] - p[i][0]).powi(2) + (p[i + 1][1] - p[i][1]).powi(2)).sqrt()
}
