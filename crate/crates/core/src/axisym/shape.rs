//! Vesicle shape regimes from profile diagnostics.

use std::f64::consts::PI;

use serde::Serialize;

use crate::axisym::isothermal::interior_minima;
use crate::axisym::profile::{AxisymProfile, ProfileGeometry};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeLabel {
    ProlateDumbbell,
    OblateDiscocyte,
    Stomatocyte,
}

impl ShapeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeLabel::ProlateDumbbell => "prolate-dumbbell",
            ShapeLabel::OblateDiscocyte => "oblate-discocyte",
            ShapeLabel::Stomatocyte => "stomatocyte",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeClass {
    pub label: ShapeLabel,
    /// Pole-to-pole extent along the axis.
    pub height: f64,
    /// Twice the largest radius.
    pub width: f64,
    /// Interior local minima of rho with prominence above 5%.
    #[serde(rename = "waistCount")]
    pub waist_count: usize,
    /// Range of the tangent angle over the profile, in units of pi.
    #[serde(rename = "psiMin")]
    pub psi_min_over_pi: f64,
    #[serde(rename = "psiMax")]
    pub psi_max_over_pi: f64,
    /// Height of the topmost point above the end pole; zero unless the end
    /// pole is tucked inside.
    #[serde(rename = "invaginationDepth")]
    pub invagination_depth: f64,
}

/// Classifies a closed embedded profile. The stomatocyte test is an
/// invagination with overhang: the tangent angle leaves [-pi/2, 3pi/2], i.e.
/// the meridian heads straight down (or up) and then folds back outward, as
/// it does across a neck into an inner lobe. Otherwise the aspect ratio
/// decides, with ties going to prolate.
pub fn classify_shape(profile: &AxisymProfile) -> Result<ShapeClass> {
    profile.validate()?;
    let geo = ProfileGeometry::new(profile);
    let n = profile.len();
    let psi_max = geo.psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let psi_min = geo.psi.iter().cloned().fold(f64::INFINITY, f64::min);
    let z = profile.z();
    let rho = profile.rho();
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zmin = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let width = 2.0 * rho.iter().cloned().fold(0.0, f64::max);
    let height = (z[n - 1] - z[0]).abs();
    let inv_top = (zmax - z[n - 1]).max(0.0);
    let inv_bottom = (z[0] - zmin).max(0.0);
    let stomatocyte = psi_max > 1.5 * PI || psi_min < -0.5 * PI;
    let label = if stomatocyte {
        ShapeLabel::Stomatocyte
    } else if height >= width {
        ShapeLabel::ProlateDumbbell
    } else {
        ShapeLabel::OblateDiscocyte
    };
    Ok(ShapeClass {
        label,
        height,
        width,
        waist_count: interior_minima(&rho, 1.05).len(),
        psi_min_over_pi: psi_min / PI,
        psi_max_over_pi: psi_max / PI,
        invagination_depth: if stomatocyte { inv_top.max(inv_bottom) } else { 0.0 },
    })
}
