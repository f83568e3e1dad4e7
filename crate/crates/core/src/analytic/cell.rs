use super::{DopplerGrid, SignalParams};
use crate::error::{domain, Result};
use crate::numerics::{clamp_probability, integrate, marcum_q1_with, sinc, ToleranceConfig};
use crate::scalar::Scalar;

fn check_beta<T: Scalar>(func: &'static str, beta: T) -> Result<()> {
    if beta >= T::zero() && !beta.is_nan() {
        Ok(())
    } else {
        Err(domain(func, format!("threshold {beta} must be >= 0")))
    }
}

/// Noise-only exceedance probability `e^{-β}`.
pub fn cell_pfa<T: Scalar>(beta: T) -> Result<T> {
    check_beta("cell_pfa", beta)?;
    Ok((-beta).exp())
}

/// Inverse of [`cell_pfa`].
pub fn threshold_for_cell_pfa<T: Scalar>(pfa: T) -> Result<T> {
    if !(pfa > T::zero() && pfa <= T::one()) {
        return Err(domain("threshold_for_cell_pfa", format!("{pfa} outside (0, 1]")));
    }
    Ok(-pfa.ln())
}

/// Probability that a cell with non-centrality `l_param` exceeds `β`:
/// `Q₁(√L, √(2β))`.
pub fn cell_pdet<T: Scalar>(l_param: T, beta: T) -> Result<T> {
    cell_pdet_with(l_param, beta, &ToleranceConfig::default())
}

pub(crate) fn cell_pdet_with<T: Scalar>(l_param: T, beta: T, tol: &ToleranceConfig<T>) -> Result<T> {
    check_beta("cell_pdet", beta)?;
    if !(l_param >= T::zero()) || !l_param.is_finite() {
        return Err(domain("cell_pdet", format!("non-centrality {l_param} must be >= 0")));
    }
    let q = marcum_q1_with(l_param.sqrt(), (T::lit(2.0) * beta).sqrt(), tol)?;
    clamp_probability("cell detection probability", q)
}

/// Detection probability of a cell whose frequency error is `x = Δf·T_per`.
pub fn cell_pdet_at_residual<T: Scalar>(l_max: T, x: T, beta: T) -> Result<T> {
    let s = sinc(x);
    cell_pdet(l_max * s * s, beta)
}

/// Detection probability at offset `l` averaged over a residual Doppler
/// uniform within the bin, by adaptive Gauss–Legendre quadrature.
pub fn cell_pdet_exact<T: Scalar>(
    params: &SignalParams<T>,
    grid: &DopplerGrid<T>,
    l: usize,
    beta: T,
    tol: &ToleranceConfig<T>,
) -> Result<T> {
    check_beta("cell_pdet_exact", beta)?;
    tol.validate()?;
    let wt = grid.relative_width;
    let l_max = params.l_max();
    let half = T::lit(0.5);
    let integral = if l == 0 {
        // even integrand
        T::lit(2.0)
            * integrate(T::zero(), wt * half, tol, |x| {
                let s = sinc(x);
                cell_pdet_with(l_max * s * s, beta, tol)
            })?
    } else {
        let lower = (T::count(2 * l) - T::one()) * wt * half;
        let upper = (T::count(2 * l) + T::one()) * wt * half;
        integrate(lower, upper, tol, |x| {
            let s = sinc(x);
            cell_pdet_with(l_max * s * s, beta, tol)
        })?
    };
    clamp_probability("exact cell detection probability", integral / wt)
}
