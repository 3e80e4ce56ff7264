//! Willmore energy minimization at prescribed isoperimetric ratio.
//!
//! Closed surfaces are handled either as triangle meshes or, for surfaces of
//! revolution, as meridian profiles. The blow-up tools analyze the thin neck
//! that forms between two nearly round lobes as the isoperimetric ratio goes
//! to zero.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axisym;
pub mod blowup;
pub mod conformal;
pub mod discrete;
pub mod error;
pub mod functionals;
pub mod io;
pub mod mesh;
pub mod optimizer;
pub mod oracle;
pub mod verify;

pub use error::{Error, Result};
