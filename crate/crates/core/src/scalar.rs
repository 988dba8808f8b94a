//! Numeric traits the analytical engine is generic over.
//!
//! The Markov-chain layer only needs field arithmetic, so it runs on any
//! [`Scalar`], including exact rationals. The stochastic-geometry layer needs
//! transcendental functions and is bound by [`Real`] (`f32` or `f64`).

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// A probability-valued number: field arithmetic plus ordering.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + FromPrimitive + ToPrimitive {
    /// Converts a small integer count (slot index, class count).
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    /// Lossy view used only for tolerance checks and reporting.
    fn approx(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + Debug + Send + Sync + FromPrimitive + ToPrimitive {}

/// Floating point scalar: f32 or f64.
pub trait Real: Scalar + Float + FloatConst {
    /// Lossless-enough conversion of an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal must be representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
