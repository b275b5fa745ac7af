//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the kinematics, rigidity and observer code is written against.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Default relative threshold for counting a singular value as nonzero.
    const RANK_TOL: f64;

    /// Converts an `f64` literal. Panics only for values the type cannot hold at all.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const RANK_TOL: f64 = 1e-5;
}

impl Real for f64 {
    const RANK_TOL: f64 = 1e-10;
}
