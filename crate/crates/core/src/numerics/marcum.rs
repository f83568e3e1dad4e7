//! First-order Marcum Q-function.
//!
//! With `λ = a²/2` and `x = b²/2`, `Q₁(a, b) = P(Y ≤ J)` for independent
//! `J ~ Poisson(λ)` and `Y ~ Poisson(x)`. This gives two sums of
//! non-negative terms:
//!
//! ```text
//! Q₁     = Σ_{j≥0} P(J = j) · P(Y ≤ j)
//! 1 − Q₁ = Σ_{i≥1} P(Y = i) · P(J ≤ i − 1)
//! ```
//!
//! The first is summed when `b² > a² + 4` (the right tail, where `Q₁` is
//! small), the second otherwise, so that the returned value never comes from
//! subtracting a sum that is close to one from one in the tail.

use super::{clamp_probability, ToleranceConfig};
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// `Q₁(a, b)` with default tolerances.
pub fn marcum_q1<T: Scalar>(a: T, b: T) -> Result<T> {
    marcum_q1_with(a, b, &ToleranceConfig::default())
}

pub fn marcum_q1_with<T: Scalar>(a: T, b: T, tol: &ToleranceConfig<T>) -> Result<T> {
    if !a.is_finite() || !b.is_finite() || a < T::zero() || b < T::zero() {
        return Err(domain(
            "marcum_q1",
            format!("arguments must be finite and non-negative, got ({a}, {b})"),
        ));
    }
    if b == T::zero() {
        return Ok(T::one());
    }
    let half = T::lit(0.5);
    let lambda = a * a * half;
    let x = b * b * half;
    if lambda == T::zero() {
        return Ok((-x).exp());
    }
    // two degrees of freedom
    let q = if b * b > a * a + T::lit(4.0) {
        poisson_mixture(lambda, x, 0, tol)?
    } else {
        T::one() - poisson_mixture(x, lambda, 1, tol)?
    };
    clamp_probability("marcum_q1", q)
}

/// `Σ_{j≥shift} P(Poisson(outer) = j) · P(Poisson(inner) ≤ j − shift)`.
fn poisson_mixture<T: Scalar>(
    outer: T,
    inner: T,
    shift: usize,
    tol: &ToleranceConfig<T>,
) -> Result<T> {
    // exp(-μ) stays comfortably normal below this bound
    let linear_limit = -T::min_positive_value().ln() - T::lit(50.0);
    if outer < linear_limit && inner < linear_limit {
        mixture_linear(outer, inner, shift, tol)
    } else {
        mixture_log(outer, inner, shift, tol)
    }
}

/// Bound on the remaining outer mass `Σ_{t>j} P(J = t)` given `P(J = j)`,
/// valid once `outer < j + 2`.
fn tail_bound<T: Scalar>(pmf_j: T, outer: T, j: usize) -> Option<T> {
    let next_ratio = outer / T::count(j + 1);
    let r = outer / T::count(j + 2);
    if r >= T::one() {
        return None;
    }
    Some(pmf_j * next_ratio / (T::one() - r))
}

fn converged<T: Scalar>(bound: Option<T>, sum: T, tol: &ToleranceConfig<T>) -> bool {
    match bound {
        Some(b) => b <= tol.abs_tol.min(tol.rel_tol * sum) || b < T::min_positive_value(),
        None => false,
    }
}

fn mixture_linear<T: Scalar>(
    outer: T,
    inner: T,
    shift: usize,
    tol: &ToleranceConfig<T>,
) -> Result<T> {
    let mut pmf_o = (-outer).exp();
    let mut pmf_i = (-inner).exp();
    let mut cdf_i = pmf_i;
    let mut sum = T::zero();
    for j in 0..tol.max_terms {
        if j >= shift {
            let i = j - shift;
            sum = sum + pmf_o * cdf_i;
            pmf_i = pmf_i * inner / T::count(i + 1);
            cdf_i = (cdf_i + pmf_i).min(T::one());
        }
        if converged(tail_bound(pmf_o, outer, j), sum, tol) {
            return Ok(sum);
        }
        pmf_o = pmf_o * outer / T::count(j + 1);
    }
    Err(Error::NonConvergence {
        what: "marcum_q1 series",
        iterations: tol.max_terms,
    })
}

fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn mixture_log<T: Scalar>(
    outer: T,
    inner: T,
    shift: usize,
    tol: &ToleranceConfig<T>,
) -> Result<T> {
    let ln_outer = outer.ln();
    let ln_inner = inner.ln();
    let mut lp_o = -outer;
    let mut lp_i = -inner;
    let mut lcdf_i = lp_i;
    let mut sum = T::zero();
    for j in 0..tol.max_terms {
        if j >= shift {
            let i = j - shift;
            sum = sum + (lp_o + lcdf_i).exp();
            lp_i = lp_i + ln_inner - T::count(i + 1).ln();
            lcdf_i = log_add_exp(lcdf_i, lp_i).min(T::zero());
        }
        if converged(tail_bound(lp_o.exp(), outer, j), sum, tol) {
            return Ok(sum);
        }
        lp_o = lp_o + ln_outer - T::count(j + 1).ln();
    }
    Err(Error::NonConvergence {
        what: "marcum_q1 series",
        iterations: tol.max_terms,
    })
}
