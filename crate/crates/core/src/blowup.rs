//! Neck analysis of two-lobe profiles: waist detection, the three rescaled
//! limits, catenoid fits, energy bookkeeping and the log-scaling regressions.
//!
//! Conformal radii come from the isothermal coordinate with t = 1 on the
//! equator of the larger lobe, so t decreases from there into the neck and
//! on into the small lobe.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::axisym::isothermal::interior_minima;
use crate::axisym::profile::{profile_area, AxisymProfile, ProfileGeometry};
use crate::axisym::IsothermalMap;
use crate::conformal::{q_flux, CatenoidPatch, InvertedPatch};
use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Energy windows end where rho first exceeds this multiple of the waist radius.
pub const WINDOW_FACTOR: f64 = 3.0;
/// Largest admissible share of a lobe's area inside the neck window.
pub const MAX_WINDOW_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CatenoidFit {
    /// Waist radius of the fitted catenoid.
    pub c: f64,
    pub z0: f64,
    /// RMS relative radial error over the fit window.
    pub residual: f64,
    pub axis: [f64; 3],
    pub center: [f64; 3],
    /// Samples inside the fit window.
    pub samples: usize,
}

/// Integrated |A|^2 per piece; the three windows partition the profile.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PieceEnergies {
    pub big_lobe: f64,
    pub small_lobe: f64,
    pub neck: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NeckReport {
    /// Waist diameter 2 rho_min.
    pub lambda: f64,
    pub circumference: f64,
    pub waist_index: usize,
    /// Arc length from the first sample to the waist.
    pub waist_s: f64,
    pub waist_z: f64,
    /// Conformal radius of the waist.
    pub t: f64,
    /// Conformal radius of the small lobe's equator.
    pub r: f64,
    pub small_equator_index: usize,
    /// +1 if the small lobe follows the waist in sample order.
    pub small_side: i32,
    /// First and last sample of the neck window (rho <= 3 rho_min).
    pub window: [usize; 2],
    pub energies: PieceEnergies,
    /// Range over the neck window of u minus the catenoid conformal factor
    /// log(lambda/2) + log cosh(log t - log t_waist) - log t.
    pub conformal_oscillation: f64,
    pub fit: Option<CatenoidFit>,
}

/// Locates the waist: the deepest interior minimum of rho with both sides
/// rising by at least 5%.
pub fn detect_neck(profile: &AxisymProfile, iso: &IsothermalMap) -> Result<NeckReport> {
    profile.validate_basic()?;
    let rho = profile.rho();
    let z = profile.z();
    let n = rho.len();
    let minima = interior_minima(&rho, 1.05);
    let w = minima
        .iter()
        .cloned()
        .filter(|i| iso.index.contains(i))
        .min_by(|&a, &b| rho[a].total_cmp(&rho[b]))
        .ok_or_else(|| Error::NoNeck("rho has no interior local minimum".into()))?;
    let k = |i: usize| iso.index.iter().position(|&j| j == i).unwrap();
    let anchor = iso.index[iso.anchor];
    let small_side: i32 = if anchor < w { 1 } else { -1 };
    let small_range: Vec<usize> = if small_side > 0 {
        (w + 1..n).filter(|i| iso.index.contains(i)).collect()
    } else {
        (0..w).filter(|i| iso.index.contains(i)).collect()
    };
    let eq = small_range
        .iter()
        .cloned()
        .max_by(|&a, &b| rho[a].total_cmp(&rho[b]))
        .ok_or_else(|| Error::NoNeck("no small lobe beyond the waist".into()))?;

    let limit = WINDOW_FACTOR * rho[w];
    let mut lo = w;
    while lo > 0 && rho[lo - 1] <= limit {
        lo -= 1;
    }
    let mut hi = w;
    while hi + 1 < n && rho[hi + 1] <= limit {
        hi += 1;
    }

    let geo = ProfileGeometry::new(profile);
    let a2 = geo.a2();
    let sum = |r: std::ops::Range<usize>| crate::discrete::pairwise_sum(&a2[r]);
    let (before, neck, after) = (sum(0..lo), sum(lo..hi + 1), sum(hi + 1..n));
    let (big, small) = if small_side > 0 {
        (before, after)
    } else {
        (after, before)
    };
    let energies = PieceEnergies {
        big_lobe: big,
        small_lobe: small,
        neck,
        total: geo.total_a2(),
    };

    let xw = iso.x[k(w)];
    let lambda = 2.0 * rho[w];
    let dev: Vec<f64> = (lo..=hi)
        .filter(|i| iso.index.contains(i))
        .map(|i| {
            let x = iso.x[k(i)];
            iso.u[k(i)] - ((0.5 * lambda).ln() + (x - xw).cosh().ln() - x)
        })
        .collect();
    let osc = dev.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - dev.iter().cloned().fold(f64::INFINITY, f64::min);
    let waist_s = geo.seg_len[..w].iter().sum();

    Ok(NeckReport {
        lambda,
        circumference: 2.0 * PI * rho[w],
        waist_index: w,
        waist_s,
        waist_z: z[w],
        t: iso.t[k(w)],
        r: iso.t[k(eq)],
        small_equator_index: eq,
        small_side,
        window: [lo, hi],
        energies,
        conformal_oscillation: if dev.is_empty() { 0.0 } else { osc },
        fit: None,
    })
}

/// An open profile piece with its conformal radii in the piece's own chart.
#[derive(Debug, Clone)]
pub struct LimitPiece {
    pub profile: AxisymProfile,
    pub t: Vec<f64>,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct Limits {
    /// Larger lobe, unscaled, with the waist moved to z = 0.
    pub big: LimitPiece,
    /// Smaller lobe with the waist at z = 0 and conformal radii divided by r.
    pub small: LimitPiece,
    /// Neck window scaled by 1/lambda about the waist, conformal radii divided by t.
    pub neck: LimitPiece,
}

/// Splits the profile at the neck window into the three rescaled limits.
/// The pieces overlap the window by one sample on each side so that each is
/// a connected polyline. Points of the axis keep rho = 0; only z is shifted.
pub fn rescale_limits(profile: &AxisymProfile, iso: &IsothermalMap, report: &NeckReport) -> Result<Limits> {
    let p = &profile.samples;
    let n = p.len();
    let [lo, hi] = report.window;
    let (big_r, small_r) = if report.small_side > 0 {
        (0..lo + 1, hi..n)
    } else {
        (hi..n, 0..lo + 1)
    };
    let zw = report.waist_z;
    let t_of = |i: usize| -> f64 {
        match iso.index.iter().position(|&j| j == i) {
            Some(k) => iso.t[k],
            None => {
                // poles sit at t = 0 on the small side and t = infinity past the anchor
                let small_pole = (i > report.waist_index) == (report.small_side > 0);
                if small_pole {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    };
    let piece = |r: std::ops::Range<usize>, scale: f64, tscale: f64| -> LimitPiece {
        let s: Vec<[f64; 2]> = p[r.clone()]
            .iter()
            .map(|q| [q[0] * scale, (q[1] - zw) * scale])
            .collect();
        let area = profile_area(&p[r.clone()]);
        LimitPiece {
            profile: AxisymProfile::new(s),
            t: r.map(|i| t_of(i) / tscale).collect(),
            area,
        }
    };
    let big = piece(big_r, 1.0, 1.0);
    let small = piece(small_r, 1.0, report.r);
    let neck = piece(lo..hi + 1, 1.0 / report.lambda, report.t);
    let neck_area = profile_area(&p[lo..hi + 1]);
    for (name, lobe) in [("big", &big), ("small", &small)] {
        if neck_area > MAX_WINDOW_SHARE * lobe.area {
            return Err(Error::ScalesNotSeparated(format!(
                "neck window area {neck_area:.4e} exceeds {MAX_WINDOW_SHARE} of the {name} lobe ({:.4e})",
                lobe.area
            )));
        }
    }
    Ok(Limits { big, small, neck })
}

/// Least-squares fit of rho = c cosh((z - z0)/c) in relative radial error
/// over the samples with rho <= 3 rho_min. A diverging fit reports an
/// infinite residual.
pub fn fit_catenoid(piece: &AxisymProfile) -> Result<CatenoidFit> {
    let rho = piece.rho();
    let z = piece.z();
    let imin = (0..rho.len())
        .filter(|&i| rho[i] > 0.0)
        .min_by(|&a, &b| rho[a].total_cmp(&rho[b]))
        .ok_or_else(|| Error::InsufficientData("empty neck piece".into()))?;
    let limit = WINDOW_FACTOR * rho[imin];
    let idx: Vec<usize> = (0..rho.len()).filter(|&i| rho[i] > 0.0 && rho[i] <= limit).collect();
    if idx.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "{} samples in the fit window, need 20",
            idx.len()
        )));
    }
    let resid = |c: f64, z0: f64| -> f64 {
        let ss: f64 = idx
            .iter()
            .map(|&i| (c * ((z[i] - z0) / c).cosh() / rho[i] - 1.0).powi(2))
            .sum();
        (ss / idx.len() as f64).sqrt()
    };
    // Levenberg-Marquardt on (c, z0)
    let (mut c, mut z0) = (rho[imin], z[imin]);
    let mut mu = 1e-3;
    let mut cur = resid(c, z0);
    for _ in 0..200 {
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for &i in &idx {
            let a = (z[i] - z0) / c;
            let (ch, sh) = (a.cosh(), a.sinh());
            let r = c * ch / rho[i] - 1.0;
            let jc = (ch - a * sh) / rho[i];
            let jz = -sh / rho[i];
            let j = [jc, jz];
            for u in 0..2 {
                jtr[u] += j[u] * r;
                for v in 0..2 {
                    jtj[u][v] += j[u] * j[v];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let m = [[jtj[0][0] * (1.0 + mu), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + mu)]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 || !det.is_finite() {
                mu *= 10.0;
                continue;
            }
            let dc = -(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
            let dz = -(m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
            let (nc, nz) = (c + dc, z0 + dz);
            let r = if nc > 0.0 { resid(nc, nz) } else { f64::INFINITY };
            if r < cur {
                let done = (dc.abs() < 1e-14 * c) && (dz.abs() < 1e-14 * c);
                c = nc;
                z0 = nz;
                cur = r;
                mu = (mu * 0.3).max(1e-12);
                improved = !done;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let residual = if cur.is_finite() && c.is_finite() && c > 0.0 {
        cur
    } else {
        f64::INFINITY
    };
    Ok(CatenoidFit {
        c,
        z0,
        residual,
        axis: [0.0, 0.0, 1.0],
        center: [0.0, 0.0, z0],
        samples: idx.len(),
    })
}

/// Detection plus catenoid fit of the scaled neck window.
pub fn analyze_neck(profile: &AxisymProfile, iso: &IsothermalMap) -> Result<(NeckReport, Limits)> {
    let mut report = detect_neck(profile, iso)?;
    let limits = rescale_limits(profile, iso, &report)?;
    report.fit = Some(fit_catenoid(&limits.neck.profile).unwrap_or(CatenoidFit {
        c: f64::NAN,
        z0: f64::NAN,
        residual: f64::INFINITY,
        axis: [0.0, 0.0, 1.0],
        center: [0.0; 3],
        samples: 0,
    }));
    Ok((report, limits))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnergyIdentity {
    pub big_lobe: f64,
    pub small_lobe: f64,
    pub neck: f64,
    pub total: f64,
    /// 24 pi minus the total.
    pub gap_to_24pi: f64,
    pub big_lobe_over_8pi: f64,
    pub small_lobe_over_8pi: f64,
    pub neck_over_8pi: f64,
    pub has_neck: bool,
}

/// Splits the total |A|^2 by the neck windows; without a neck everything
/// is one lobe.
pub fn energy_identity(report: Option<&NeckReport>, total: f64) -> EnergyIdentity {
    let e8 = 8.0 * PI;
    let (b, s, k) = match report {
        Some(r) => (r.energies.big_lobe, r.energies.small_lobe, r.energies.neck),
        None => (total, 0.0, 0.0),
    };
    EnergyIdentity {
        big_lobe: b,
        small_lobe: s,
        neck: k,
        total,
        gap_to_24pi: 24.0 * PI - total,
        big_lobe_over_8pi: b / e8,
        small_lobe_over_8pi: s / e8,
        neck_over_8pi: k / e8,
        has_neck: report.is_some(),
    }
}

/// One sweep entry as seen by the scaling regressions.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingPoint {
    pub sigma: f64,
    pub lambda: f64,
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope (Student t, n - 2 dof).
    pub slope_ci: [f64; 2],
    pub slope_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingFit {
    /// log lambda against log t.
    pub lambda_vs_t: LineFit,
    /// log r against log lambda.
    pub r_vs_lambda: LineFit,
    pub points: Vec<ScalingPoint>,
}

/// Ordinary least squares of y on x.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::InsufficientData(format!("{n} points, need at least 3")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (sse / (n - 2) as f64 / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, (n - 2) as f64)
        .map_err(|e| Error::InsufficientData(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LineFit {
        slope,
        intercept,
        slope_ci: [slope - q * se, slope + q * se],
        slope_stderr: se,
    })
}

/// Regressions of log lambda on log t and log r on log lambda.
pub fn scaling_law(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} sweep points with necks, need 3",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.lambda > 0.0 && p.t > 0.0 && p.r > 0.0)) {
        return Err(Error::InsufficientData("scales must be positive".into()));
    }
    let lt: Vec<f64> = points.iter().map(|p| p.t.ln()).collect();
    let ll: Vec<f64> = points.iter().map(|p| p.lambda.ln()).collect();
    let lr: Vec<f64> = points.iter().map(|p| p.r.ln()).collect();
    Ok(ScalingFit {
        lambda_vs_t: line_fit(&lt, &ll)?,
        r_vs_lambda: line_fit(&ll, &lr)?,
        points: points.to_vec(),
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioEntry {
    pub sigma: f64,
    /// Lambda / lambda_neck; None where the multiplier was degenerate.
    pub ratio: Option<f64>,
    /// Relative change from the previous entry with a ratio.
    pub change: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FluxCheck {
    pub flux: [f64; 3],
    /// Angle between the flux and the symmetry axis.
    pub axis_angle: f64,
    /// (3/2) sqrt 2 |y0| |Lambda/lambda| with |y0| = 1/sqrt(8 pi).
    pub predicted: f64,
    pub relative_discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MultiplierAsymptotics {
    pub series: Vec<RatioEntry>,
    pub last_change: Option<f64>,
    pub flux: Option<FluxCheck>,
}

/// Flux of Q over the waist circle of the unit-diameter catenoid inverted
/// in the sphere about its center.
pub fn catenoid_flux() -> Result<Vec3> {
    let patch = InvertedPatch {
        inner: CatenoidPatch { c: 0.5 },
        center: Vec3::zeros(),
    };
    q_flux(&patch, [0.0, 0.0], 1.0, 256)
}

/// Lambda / lambda_neck per sigma with successive relative changes and the
/// flux comparison for the last ratio. Entries are (sigma, Lambda, lambda_neck).
pub fn multiplier_asymptotics(records: &[(f64, Option<f64>, f64)], with_flux: bool) -> Result<MultiplierAsymptotics> {
    let mut series = Vec::with_capacity(records.len());
    let mut prev: Option<f64> = None;
    for &(sigma, mult, lam) in records {
        let ratio = mult.filter(|m| m.is_finite() && lam > 0.0).map(|m| m / lam);
        let change = match (ratio, prev) {
            (Some(a), Some(b)) => Some(((a - b) / b).abs()),
            _ => None,
        };
        if ratio.is_some() {
            prev = ratio;
        }
        series.push(RatioEntry { sigma, ratio, change });
    }
    let last_change = series.iter().rev().find_map(|e| e.change);
    let flux = match (with_flux, prev) {
        (true, Some(ratio)) => {
            let f = catenoid_flux()?;
            let predicted = 1.5 * 2f64.sqrt() / (8.0 * PI).sqrt() * ratio.abs();
            let norm = f.norm();
            Some(FluxCheck {
                flux: [f.x, f.y, f.z],
                axis_angle: (f.z.abs() / norm).clamp(-1.0, 1.0).acos(),
                predicted,
                relative_discrepancy: (norm - predicted).abs() / predicted,
            })
        }
        _ => None,
    };
    Ok(MultiplierAsymptotics {
        series,
        last_change,
        flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axisym::isothermal_coordinate;
    use crate::axisym::profile::{catenoid_profile, sphere_profile};

    #[test]
    fn sphere_has_no_neck() {
        let p = sphere_profile(1.0, 400);
        let iso = isothermal_coordinate(&p).unwrap();
        assert!(matches!(detect_neck(&p, &iso), Err(Error::NoNeck(_))));
    }

    #[test]
    fn catenoid_fit_recovers_parameters() {
        for c in [1e-4, 1e-2, 0.3, 1.0] {
            let p = catenoid_profile(c, 1.7 * c, 400).shifted(0.25 * c);
            let f = fit_catenoid(&p).unwrap();
            assert!((f.c - c).abs() < 1e-8 * c, "{c}: {}", f.c);
            assert!((f.z0 - 0.25 * c).abs() < 1e-8 * c);
            assert!(f.residual < 1e-8);
        }
    }

    #[test]
    fn sphere_cap_is_not_a_catenoid() {
        // unit sphere between z = -0.9 and 0.9, read as rho(z)
        let p = AxisymProfile::new(
            (0..=200)
                .map(|i| {
                    let z = -0.9 + 1.8 * i as f64 / 200.0;
                    [(1.0 - z * z).sqrt(), z]
                })
                .collect(),
        );
        let f = fit_catenoid(&p).unwrap();
        assert!(f.residual > 0.1, "{}", f.residual);
    }

    #[test]
    fn exact_linear_scaling() {
        let pts: Vec<ScalingPoint> = [-4.0f64, -6.0, -8.0]
            .iter()
            .map(|m| ScalingPoint {
                sigma: 0.0,
                lambda: m.exp(),
                t: m.exp(),
                r: (2.0 * m).exp(),
            })
            .collect();
        let f = scaling_law(&pts).unwrap();
        assert!((f.lambda_vs_t.slope - 1.0).abs() < 1e-12);
        assert!((f.r_vs_lambda.slope - 2.0).abs() < 1e-12);
        assert!(scaling_law(&pts[..2]).is_err());
    }

    #[test]
    fn constant_ratio_series() {
        let recs: Vec<(f64, Option<f64>, f64)> = [0.3, 0.2, 0.1]
            .iter()
            .map(|&s| (s, Some(3.0 * s * 0.1), s * 0.1))
            .collect();
        let m = multiplier_asymptotics(&recs, false).unwrap();
        for e in &m.series {
            assert!((e.ratio.unwrap() - 3.0).abs() < 1e-12);
        }
        assert!(m.last_change.unwrap() < 1e-12);
        let recs = [(0.3, None, 0.1), (0.2, Some(0.3), 0.1)];
        let m = multiplier_asymptotics(&recs, false).unwrap();
        assert!(m.series[0].ratio.is_none());
    }

    #[test]
    fn catenoid_flux_is_axial() {
        let f = catenoid_flux().unwrap();
        let angle = (f.z.abs() / f.norm()).acos();
        assert!(f.norm() > 1e-6);
        assert!(angle < 1e-3, "{angle}");
    }
}
