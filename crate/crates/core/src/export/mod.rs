//! GXL and DOT output.

mod dot;
mod gxl;

pub use dot::{config_to_dot, space_to_dot};
pub use gxl::{from_gxl, to_gxl, GxlError};
