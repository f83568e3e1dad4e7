//! Special functions and numerically careful primitives used by every
//! probability computation in the crate.

mod marcum;
mod quadrature;
mod sine_integral;

pub use marcum::{marcum_q1, marcum_q1_with};
pub use quadrature::{integrate, GaussLegendre};
pub use sine_integral::{sine_integral, SI_SERIES_LIMIT};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Accuracy and effort limits for series, recurrences and quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_terms: usize,
    pub quadrature_points: usize,
}

impl<T: Scalar> Default for ToleranceConfig<T> {
    /// `1e-12` absolute and `1e-10` relative for `f64`; widened to a few ulps
    /// for narrower types.
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            abs_tol: T::lit(1e-12).max(eps * T::lit(16.0)),
            rel_tol: T::lit(1e-10).max(eps * T::lit(64.0)),
            max_terms: 10_000,
            quadrature_points: 128,
        }
    }
}

impl<T: Scalar> ToleranceConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.abs_tol) || !positive(self.rel_tol) {
            return Err(Error::InvalidConfig(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.max_terms < 16 {
            return Err(Error::InvalidConfig("max_terms must be at least 16".into()));
        }
        if self.quadrature_points < 8 {
            return Err(Error::InvalidConfig(
                "quadrature_points must be at least 8".into(),
            ));
        }
        Ok(())
    }
}

/// Normalized sinc, `sin(πx)/(πx)`, equal to 1 at the origin.
pub fn sinc<T: Scalar>(x: T) -> T {
    let px = T::PI() * x;
    if px.abs() < T::lit(1e-4) {
        // sin(y)/y = 1 - y²/6 + y⁴/120, exact to rounding for |y| < 1e-4
        let y2 = px * px;
        T::one() - y2 / T::lit(6.0) + y2 * y2 / T::lit(120.0)
    } else {
        px.sin() / px
    }
}

/// `(1 - p)^n` evaluated as `exp(n·ln(1-p))`, exact at the endpoints.
pub fn pow_complement<T: Scalar>(p: T, n: T) -> T {
    if n == T::zero() {
        return T::one();
    }
    if p >= T::one() {
        return T::zero();
    }
    (n * (-p).ln_1p()).exp()
}

/// `1 - (1 - p)^n` without cancellation for small `p`.
pub fn one_minus_pow_complement<T: Scalar>(p: T, n: T) -> Result<T> {
    check_probability("one_minus_pow_complement", p)?;
    if !(n >= T::zero()) || !n.is_finite() {
        return Err(domain("one_minus_pow_complement", "count must be finite and >= 0"));
    }
    if n == T::zero() || p == T::zero() {
        return Ok(T::zero());
    }
    if p == T::one() {
        return Ok(T::one());
    }
    Ok(-(n * (-p).ln_1p()).exp_m1())
}

/// `(1 - (1 - p)^n) / p`, continuous at `p = 0` where it equals `n`.
pub fn complement_ratio<T: Scalar>(p: T, n: T) -> Result<T> {
    let tiny = T::lit(1e-300).max(T::min_positive_value());
    if p < tiny {
        check_probability("complement_ratio", p)?;
        return Ok(n);
    }
    Ok(one_minus_pow_complement(p, n)? / p)
}

pub(crate) fn check_probability<T: Scalar>(func: &'static str, p: T) -> Result<()> {
    if p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(domain(func, format!("probability {p} outside [0, 1]")))
    }
}

/// Clamps a computed probability into [0, 1].
///
/// Excursions up to `1e-9` are treated as rounding; anything larger (or NaN)
/// is reported as an internal consistency error.
pub fn clamp_probability<T: Scalar>(what: &'static str, p: T) -> Result<T> {
    let slack = T::lit(1e-9);
    if p.is_nan() || p < -slack || p > T::one() + slack {
        return Err(Error::Consistency {
            what,
            value: p.as_f64(),
        });
    }
    Ok(p.max(T::zero()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0_f64), 1.0);
        assert_abs_diff_eq!(sinc(1.0_f64), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(sinc(0.5_f64), 2.0 / std::f64::consts::PI, epsilon = 1e-15);
        assert_abs_diff_eq!(sinc(1e-5_f64), sinc(-1e-5_f64), epsilon = 0.0);
        // small-argument branch joins the direct formula smoothly
        assert_abs_diff_eq!(
            sinc(0.99e-4 / std::f64::consts::PI),
            (0.99e-4_f64).sin() / 0.99e-4,
            epsilon = 1e-15
        );
    }

    #[test]
    fn sinc_f32() {
        assert!((sinc(0.5_f32) - 0.636_619_8).abs() < 1e-6);
    }

    #[test]
    fn one_minus_pow_complement_examples() {
        assert_eq!(one_minus_pow_complement(0.0, 20460.0).unwrap(), 0.0);
        assert_eq!(one_minus_pow_complement(1.0, 5.0).unwrap(), 1.0);
        // oracle: 1 - exp(20460·ln(1 - 1e-6)) evaluated in extended precision
        let v = one_minus_pow_complement(1e-6, 20460.0).unwrap();
        assert_abs_diff_eq!(v, 0.020_252_124_416_673_28, epsilon = 1e-15);
        assert!(one_minus_pow_complement(-0.1, 3.0).is_err());
        assert!(one_minus_pow_complement(1.1, 3.0).is_err());
        assert_eq!(one_minus_pow_complement(0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn complement_ratio_limit() {
        assert_eq!(complement_ratio(0.0, 1023.0).unwrap(), 1023.0);
        let r = complement_ratio(1e-280, 1023.0).unwrap();
        assert_abs_diff_eq!(r, 1023.0, epsilon = 1e-9);
        assert_eq!(complement_ratio(1.0, 7.0).unwrap(), 1.0);
    }

    #[test]
    fn clamp_behaviour() {
        assert_eq!(clamp_probability("t", 1.0 + 1e-12).unwrap(), 1.0);
        assert_eq!(clamp_probability("t", -1e-12).unwrap(), 0.0);
        assert!(clamp_probability("t", 1.0 + 1e-6).is_err());
        assert!(clamp_probability("t", f64::NAN).is_err());
    }

    #[test]
    fn tolerance_defaults() {
        let t = ToleranceConfig::<f64>::default();
        assert_eq!(t.abs_tol, 1e-12);
        assert_eq!(t.rel_tol, 1e-10);
        assert_eq!(t.max_terms, 10_000);
        assert_eq!(t.quadrature_points, 128);
        t.validate().unwrap();
        let bad = ToleranceConfig {
            quadrature_points: 4,
            ..t
        };
        assert!(bad.validate().is_err());
        ToleranceConfig::<f32>::default().validate().unwrap();
    }

    proptest::proptest! {
        #[test]
        fn one_minus_pow_complement_bounds(p in 0.0_f64..=1.0, n in 0u32..100_000) {
            let n = n as f64;
            let v = one_minus_pow_complement(p, n).unwrap();
            proptest::prop_assert!(v >= 0.0);
            proptest::prop_assert!(v <= (n * p).min(1.0) * (1.0 + 1e-12) + 1e-300);
            if n * p <= 1.0 {
                proptest::prop_assert!(v >= n * p - (n * p).powi(2) / 2.0 - 1e-15);
            }
        }

        #[test]
        fn sinc_even_and_bounded(x in -50.0_f64..50.0) {
            proptest::prop_assert_eq!(sinc(x), sinc(-x));
            if x != 0.0 {
                proptest::prop_assert!(sinc(x).abs() < 1.0);
            }
        }
    }
}
