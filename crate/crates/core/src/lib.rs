//! Numerical laboratory for the convex hull property of planar maps.
//!
//! The crate checks whether a map sends a bounded open domain into the convex hull of
//! its boundary image, builds the separation objects that appear when it does not
//! (a core set, a sublevel region `X`, a threshold `lambda~` and supported points of
//! `g + lambda f`), detects the Jacobian singularities and two-to-one preimages those
//! objects force, and exercises the Monge-Ampere and transport-equation consequences.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod cli;
pub mod dichotomy;
pub mod hull_property;
pub mod monge_ampere;
pub mod singularity;
pub mod svg;
pub mod transport;

pub use error::{Error, Result};
