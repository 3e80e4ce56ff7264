//! Central differences over a geometric step ladder.

use serde::Serialize;

use crate::error::Result;
use crate::mesh::{TriMesh, Vec3};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FdEstimate {
    pub value: f64,
    /// Step at the plateau.
    pub step: f64,
    /// Set when successive estimates never settle.
    pub flagged: bool,
    /// (step, estimate) for the whole ladder.
    pub ladder: Vec<(f64, f64)>,
}

/// d/de g(e) at 0 from central differences with 8 steps from 1e-2 to 1e-6
/// of `scale`. The estimate is taken where successive rungs differ least.
pub fn fd_ladder(g: impl Fn(f64) -> Result<f64>, scale: f64) -> Result<FdEstimate> {
    let g0 = g(0.0)?;
    let ratio = 1e-4f64.powf(1.0 / 7.0);
    let mut ladder = Vec::with_capacity(8);
    let mut h = 1e-2 * scale;
    for _ in 0..8 {
        ladder.push((h, (g(h)? - g(-h)?) / (2.0 * h)));
        h *= ratio;
    }
    let (k, diff) = (0..7)
        .map(|i| (i, (ladder[i].1 - ladder[i + 1].1).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let value = ladder[k + 1].1;
    let floor = 1e-8 * (g0.abs() + f64::MIN_POSITIVE) / scale;
    Ok(FdEstimate {
        value,
        step: ladder[k + 1].0,
        flagged: diff > 1e-3 * value.abs() && diff > floor,
        ladder,
    })
}

/// Directional derivative of a mesh functional along a vertex field. The
/// ladder is relative to the mesh diameter over the largest displacement.
pub fn fd_directional(
    functional: impl Fn(&TriMesh) -> Result<f64>,
    mesh: &TriMesh,
    direction: &[Vec3],
) -> Result<FdEstimate> {
    let dmax = direction
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let moved = |e: f64| -> TriMesh {
        let mut m = mesh.clone();
        for (v, d) in m.vertices.iter_mut().zip(direction) {
            *v += d * e;
        }
        m
    };
    fd_ladder(|e| functional(&moved(e)), mesh.diameter() / dmax)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_function() {
        let f = fd_ladder(|e| Ok((1.0 + e).exp()), 1.0).unwrap();
        assert!((f.value - 1f64.exp()).abs() < 1e-7, "{}", f.value);
        assert!(!f.flagged);
        assert_eq!(f.ladder.len(), 8);
    }

    #[test]
    fn noise_is_flagged() {
        let f = fd_ladder(|e| Ok(e + 1e-3 * (1e9 * e).sin()), 1.0).unwrap();
        assert!(f.flagged);
        // a one-sided kink still has a clean central difference of 1
        let g = fd_ladder(|e| Ok(if e > 0.0 { 2.0 * e } else { 0.0 }), 1.0).unwrap();
        assert!(!g.flagged);
        assert!((g.value - 1.0).abs() < 1e-12);
    }
}
