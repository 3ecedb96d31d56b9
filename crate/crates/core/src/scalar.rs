//! Scalar abstraction shared by the geometry, grid and solver code.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating point scalar the tracker is generic over (`f32` or `f64`).
///
/// Transcendental functions come from [`RealField`]; conversions go through
/// `num_traits`.
pub trait Real: RealField + Copy + ToPrimitive + Send + Sync + 'static {
    /// Rotation angle below which series expansions replace the closed forms.
    const SMALL_ANGLE: f64;

    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossless widening for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const SMALL_ANGLE: f64 = 1e-8;
}

impl Real for f32 {
    const SMALL_ANGLE: f64 = 1e-4;
}
