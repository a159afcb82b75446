//! Gauss maps of spacelike hypersurfaces of anti-de Sitter space into the
//! complex hyperbolic quadric, and numerical checks of their geometry.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod diff;
pub mod dual;
pub mod error;
pub mod gauss;
pub mod hypersurface;
pub mod indefinite;
pub mod quadric;

pub use error::{GeomError, Result};
