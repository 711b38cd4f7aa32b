//! Scalar abstractions for the numeric parts of the toolkit.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, Signed};

/// An ordered field: exact rationals or floats.
pub trait Field: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive {}

impl<T> Field for T where T: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive {}

/// Floating-point scalars for statistics and fits (`f32`, `f64`).
pub trait Real: Float + FromPrimitive + Debug + Sum + Send + Sync {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Sum + Send + Sync {}
