//! Zero-threshold flip cooling of lozenge tilings.

#![allow(clippy::needless_range_loop)]

pub mod cooling;
pub mod domain;
pub mod exact;
pub mod hull;
pub mod lattice;
pub mod reporting;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod tiling;
pub mod verify;

pub use scalar::{Field, Real};

/// Exact arithmetic for the absorption-time solver.
pub type Rational = num_rational::BigRational;
pub type Real64 = f64;
