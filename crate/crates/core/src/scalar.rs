use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, NumCast};

/// Real floating-point scalar the linear-algebra core is written against.
///
/// Implemented for `f32` and `f64`. Default tolerances scale with the
/// machine epsilon of the type so that `f32` runs do not treat rounding
/// noise as signal.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Relative eigenvalue threshold below which a direction counts as null.
    fn default_rank_tol() -> Self;

    /// Margin used when comparing two candidate scores.
    fn default_tie_margin() -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_rank_tol() -> Self {
        1e-10
    }

    fn default_tie_margin() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn default_rank_tol() -> Self {
        1e-5
    }

    fn default_tie_margin() -> Self {
        1e-5
    }
}
