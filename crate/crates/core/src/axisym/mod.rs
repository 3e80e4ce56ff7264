//! Surfaces of revolution: profile functionals, isothermal coordinate,
//! shape classification and lifting to meshes.

pub mod gradient;
pub mod isothermal;
pub mod profile;
pub mod revolve;
pub mod shape;

pub use gradient::{axisym_gradient, AxisymGradient};
pub use isothermal::{isothermal_coordinate, IsothermalMap};
pub use profile::{axisym_metrics, AxisymProfile, ProfileGeometry};
pub use revolve::{resample_conformal, revolve};
pub use shape::{classify_shape, ShapeClass, ShapeLabel};
