//! Reconstruction of elastic inclusions in a planar body from boundary
//! displacement measurements.
//!
//! The forward side solves the Lamé transmission problem with boundary
//! layer potentials. The inverse side filters the data with the
//! double-layer boundary operator, locates the inclusions with a
//! joint-sparse Bayesian solver ([`msbl`]) and recovers Lamé parameters on
//! the located support with a constrained ℓ1 solver ([`csalsa`]).

pub mod csalsa;
pub mod error;
pub mod exec;
pub mod filtering;
pub mod forward;
pub mod geometry;
pub mod internal_field;
pub mod kernels;
pub mod msbl;
pub mod pipeline;
pub mod potentials;
pub mod sensing;
pub mod spline;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{Mat2, Vec2};
