use std::cmp::Ordering;
use std::ops::Add;

use serde::{Serialize, Serializer};

use crate::scalar::Scalar;

/// A real value extended with a negative-infinity sentinel.
///
/// Log-determinants of singular matrices and the objectives built from them
/// take the sentinel instead of a floating-point `-inf`, so callers branch on
/// singularity explicitly. The sentinel sorts below every finite value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended<T> {
    NegInfinity,
    Finite(T),
}

impl<T: Scalar> Extended<T> {
    /// Natural log of a non-negative quantity; values at or below `zero_tol`
    /// map to the sentinel.
    pub fn ln_above(x: T, zero_tol: T) -> Self {
        if x > zero_tol {
            Extended::Finite(x.ln())
        } else {
            Extended::NegInfinity
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn is_neg_infinity(&self) -> bool {
        matches!(self, Extended::NegInfinity)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Extended::Finite(v) => Some(v),
            Extended::NegInfinity => None,
        }
    }

    /// Floating-point view (`-inf` for the sentinel).
    pub fn to_scalar(&self) -> T {
        match *self {
            Extended::Finite(v) => v,
            Extended::NegInfinity => T::neg_infinity(),
        }
    }

    /// Multiplies by a non-negative factor.
    pub fn scale(self, factor: T) -> Self {
        match self {
            Extended::Finite(v) => Extended::Finite(v * factor),
            Extended::NegInfinity if factor == T::zero() => Extended::Finite(T::zero()),
            Extended::NegInfinity => Extended::NegInfinity,
        }
    }

    pub fn neg_finite(v: T) -> Self {
        Extended::Finite(-v)
    }

    /// `self < other` by more than `margin * max(1, |self|, |other|)`, with
    /// the sentinel strictly below any finite value and equal to itself.
    pub fn strictly_below(&self, other: &Self, margin: T) -> bool {
        self.strictly_below_at(other, margin, T::one())
    }

    /// [`Extended::strictly_below`] with the unit floor of the margin
    /// replaced by `floor`, the magnitude of a typical value.
    pub fn strictly_below_at(&self, other: &Self, margin: T, floor: T) -> bool {
        match (self, other) {
            (Extended::NegInfinity, Extended::Finite(_)) => true,
            (Extended::Finite(a), Extended::Finite(b)) => {
                if a.is_infinite() || b.is_infinite() {
                    return *a < *b;
                }
                let scale = floor.max(a.abs()).max(b.abs());
                *a < *b - margin * scale
            }
            _ => false,
        }
    }

    /// Total order: sentinel first, then finite values (NaN sorts last).
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Extended::NegInfinity, Extended::NegInfinity) => Ordering::Equal,
            (Extended::NegInfinity, Extended::Finite(_)) => Ordering::Less,
            (Extended::Finite(_), Extended::NegInfinity) => Ordering::Greater,
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b).unwrap_or_else(|| {
                match (a.is_nan(), b.is_nan()) {
                    (true, true) => Ordering::Equal,
                    (true, false) => Ordering::Greater,
                    _ => Ordering::Less,
                }
            }),
        }
    }
}

impl<T: Scalar> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            _ => Some(self.total_cmp(other)),
        }
    }
}

impl<T: Scalar> Add for Extended<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::NegInfinity,
        }
    }
}

impl<T: Scalar> Add<T> for Extended<T> {
    type Output = Self;

    fn add(self, rhs: T) -> Self {
        match self {
            Extended::Finite(a) => Extended::Finite(a + rhs),
            Extended::NegInfinity => Extended::NegInfinity,
        }
    }
}

impl<T: Scalar> From<T> for Extended<T> {
    fn from(v: T) -> Self {
        Extended::Finite(v)
    }
}

/// Serialises as a number, or as the string `"-inf"` for the sentinel and
/// `"inf"` for an infinite value.
impl<T: Scalar + Serialize> Serialize for Extended<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) if v.is_infinite() && *v > T::zero() => serializer.serialize_str("inf"),
            Extended::Finite(v) if v.is_infinite() => serializer.serialize_str("-inf"),
            Extended::Finite(v) => v.serialize(serializer),
            Extended::NegInfinity => serializer.serialize_str("-inf"),
        }
    }
}

/// Index of the smallest value, preferring the lowest index among values
/// within `margin` (scaled by `max(1, |v|)`) of the minimum.
pub fn argmin_lowest<T: Scalar>(values: &[(usize, Extended<T>)], margin: T) -> Option<(usize, Extended<T>)> {
    argmin_lowest_at(values, margin, T::one())
}

/// [`argmin_lowest`] with the margin floor `floor` in place of 1.
pub fn argmin_lowest_at<T: Scalar>(
    values: &[(usize, Extended<T>)],
    margin: T,
    floor: T,
) -> Option<(usize, Extended<T>)> {
    let best = values
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))?
        .1;
    values
        .iter()
        .filter(|(_, v)| !best.strictly_below_at(v, margin, floor))
        .min_by_key(|(i, _)| *i)
        .copied()
}
