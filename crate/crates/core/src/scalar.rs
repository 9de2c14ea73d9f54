//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating point type usable for ranks, state probabilities and spread sums.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Default L1 convergence threshold for the iterative rank solvers.
    fn default_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn from_count(v: usize) -> Self {
        Self::from_usize(v).expect("count fits in scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn default_tolerance() -> Self {
        1e-5
    }
}

/// Rounds to `digits` decimal places (used for report rendering).
pub fn round_to(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (v * scale).round() / scale
}

/// Rounds to `sig` significant digits via the decimal representation.
pub fn round_sig(v: f64, sig: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", sig.saturating_sub(1), v).parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_helpers() {
        assert_eq!(round_to(0.2047872, 6), 0.204787);
        assert_eq!(round_sig(0.204787234042553, 12), 0.204787234043);
        assert_eq!(round_sig(0.0, 12), 0.0);
    }

    #[test]
    fn tolerances_are_positive() {
        assert!(f64::default_tolerance() > 0.0);
        assert!(f32::default_tolerance() > 0.0);
        assert_eq!(f32::lit(0.5), 0.5f32);
    }
}
