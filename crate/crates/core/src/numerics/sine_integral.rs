use num_complex::Complex;

use crate::scalar::Scalar;

/// Below this magnitude `Si` is summed from its Taylor series; above it the
/// auxiliary functions `f`, `g` are taken from the continued fraction of
/// `E1(ix)`.
pub const SI_SERIES_LIMIT: f64 = 4.0;

const MAX_ITER: usize = 200;

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`.
///
/// Odd symmetry is exact: the magnitude is evaluated and the sign restored.
pub fn sine_integral<T: Scalar>(x: T) -> T {
    let ax = x.abs();
    let v = if ax <= T::lit(SI_SERIES_LIMIT) {
        taylor(ax)
    } else {
        let (f, g) = auxiliary(ax);
        T::FRAC_PI_2() - f * ax.cos() - g * ax.sin()
    };
    if x.is_sign_negative() {
        -v
    } else {
        v
    }
}

// Σ (-1)^k x^(2k+1) / ((2k+1)(2k+1)!)
fn taylor<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let mut power = x; // x^(2k+1)/(2k+1)!
    let mut sum = x;
    let eps = T::epsilon();
    for k in 1..MAX_ITER {
        let a = T::count(2 * k);
        let b = T::count(2 * k + 1);
        power = -power * x2 / (a * b);
        let term = power / b;
        sum = sum + term;
        if term.abs() <= eps * sum.abs() {
            break;
        }
    }
    sum
}

/// Auxiliary functions `(f(x), g(x))` with `e^{ix}E1(ix) = g - i f`, via
/// modified Lentz evaluation of the continued fraction. Requires `x > 2`.
fn auxiliary<T: Scalar>(x: T) -> (T, T) {
    let one = Complex::new(T::one(), T::zero());
    let two = Complex::new(T::lit(2.0), T::zero());
    let tiny = T::min_positive_value() / T::epsilon();
    let eps = T::epsilon();

    let mut b = Complex::new(T::one(), x);
    let mut c = Complex::new(T::one() / tiny, T::zero());
    let mut d = one / b;
    let mut h = d;
    for i in 2..MAX_ITER {
        let a = -T::count((i - 1) * (i - 1));
        b = b + two;
        d = one / (d.scale(a) + b);
        c = b + Complex::new(a, T::zero()) / c;
        let del = c * d;
        h = h * del;
        if (del.re - T::one()).abs() + del.im.abs() < eps {
            break;
        }
    }
    (-h.im, h.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Composite Simpson on sin(t)/t, an oracle independent of both branches.
    fn si_simpson(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let f = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn known_values() {
        assert_eq!(sine_integral(0.0_f64), 0.0);
        // Si(π) = 1.851937051982466...
        assert_abs_diff_eq!(sine_integral(PI), 1.851_937_051_982_466_2, epsilon = 1e-14);
        assert_abs_diff_eq!(sine_integral(-PI), -1.851_937_051_982_466_2, epsilon = 1e-14);
        assert!((sine_integral(100.0_f64) - PI / 2.0).abs() < 0.02);
    }

    #[test]
    fn matches_quadrature_oracle() {
        for &x in &[0.3, 1.0, 2.5, 3.9, 4.1, 6.0, 10.0, 25.0, 31.4] {
            assert_abs_diff_eq!(sine_integral(x), si_simpson(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn continuous_at_branch_switch() {
        let lo = taylor(SI_SERIES_LIMIT);
        let (f, g) = auxiliary(SI_SERIES_LIMIT);
        let hi = PI / 2.0 - f * SI_SERIES_LIMIT.cos() - g * SI_SERIES_LIMIT.sin();
        assert_abs_diff_eq!(lo, hi, epsilon = 1e-10);
        let below = sine_integral(SI_SERIES_LIMIT - 1e-12);
        let above = sine_integral(SI_SERIES_LIMIT + 1e-12);
        assert_abs_diff_eq!(below, above, epsilon = 1e-10);
    }

    #[test]
    fn f32_branch() {
        assert!((sine_integral(std::f32::consts::PI) - 1.851_937).abs() < 1e-5);
        assert!((sine_integral(12.0_f32) - 1.504_971_2).abs() < 1e-5);
    }

    #[test]
    fn monotone_on_zero_to_pi() {
        let mut prev = sine_integral(0.0_f64);
        for i in 1..=1000 {
            let v = sine_integral(PI * i as f64 / 1000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    proptest::proptest! {
        #[test]
        fn odd(x in -60.0_f64..60.0) {
            proptest::prop_assert_eq!(sine_integral(-x), -sine_integral(x));
        }
    }
}
