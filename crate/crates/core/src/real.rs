//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the allocator can run on: `f32` or `f64`.
///
/// Tolerances are part of the trait because the simplex pivot threshold and
/// the singularity test for the power-control matrix have to track the
/// precision of the underlying type.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Smallest magnitude accepted as a simplex pivot.
    fn pivot_tol() -> Self;
    /// Relative pivot size below which a dense factorization is declared singular.
    fn singular_tol() -> Self;
    /// Slack used when testing feasibility and tightness of LP rows.
    fn feas_tol() -> Self;

    /// Converts an `f64` literal. Panics only if the value is unrepresentable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn pivot_tol() -> Self {
        1e-9
    }
    fn singular_tol() -> Self {
        1e-12
    }
    fn feas_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn pivot_tol() -> Self {
        1e-5
    }
    fn singular_tol() -> Self {
        1e-6
    }
    fn feas_tol() -> Self {
        1e-5
    }
}

/// dB to linear power ratio.
#[inline]
pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Linear power ratio to dB.
#[inline]
pub fn linear_to_db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// dBm to milliwatts.
#[inline]
pub fn dbm_to_mw<T: Real>(dbm: T) -> T {
    db_to_linear(dbm)
}

/// Milliwatts to dBm.
#[inline]
pub fn mw_to_dbm<T: Real>(mw: T) -> T {
    linear_to_db(mw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        for db in [-114.0, -3.0, 0.0, 5.0, 23.0] {
            let back: f64 = linear_to_db(db_to_linear(db));
            assert!((back - db).abs() < 1e-12);
        }
        assert!((dbm_to_mw(23.0f64) - 199.526_231_496_887_9).abs() < 1e-9);
        assert!((mw_to_dbm(1.0f32)).abs() < 1e-6);
    }
}
