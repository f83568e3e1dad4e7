//! Closed-form detection and false-alarm probabilities of a threshold-based
//! serial acquisition search.
//!
//! All thresholds are in normalized decision-metric units: the noise part of
//! each correlator output has unit total variance, so a noise-only cell
//! exceeds `β` with probability `e^{-β}`.

mod cell;
mod global;
mod roc;

pub use cell::{cell_pdet, cell_pdet_at_residual, cell_pdet_exact, cell_pfa, threshold_for_cell_pfa};
pub use global::{
    global_pdet_approx, global_pdet_code_first, global_pdet_doppler_first,
    global_pdet_marginalized, global_pdet_naive, global_pdet_refined, global_pfa,
    refined_detection, threshold_for_global_pfa, RefinedModel,
};
pub use roc::{log_spaced_beta_grid, roc_curve, RocCurve, RocPoint, RocRequest};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{sine_integral, ToleranceConfig};
use crate::scalar::Scalar;

/// Carrier-to-noise density and coherent integration period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams<T> {
    pub cn0_dbhz: T,
    /// Seconds.
    pub t_per: T,
}

impl<T: Scalar> SignalParams<T> {
    pub fn new(cn0_dbhz: T, t_per: T) -> Result<Self> {
        if !cn0_dbhz.is_finite() {
            return Err(Error::InvalidConfig("C/N0 must be finite".into()));
        }
        if !(t_per > T::zero()) || !t_per.is_finite() {
            return Err(Error::InvalidConfig("integration period must be positive".into()));
        }
        Ok(Self { cn0_dbhz, t_per })
    }

    /// C/N₀ as a linear ratio in Hz.
    pub fn cn0_linear(&self) -> T {
        T::lit(10.0).powf(self.cn0_dbhz / T::lit(10.0))
    }

    /// Non-centrality of a perfectly aligned cell, `2·T·C/N₀`.
    pub fn l_max(&self) -> T {
        T::lit(2.0) * self.t_per * self.cn0_linear()
    }
}

pub fn l_max_param<T: Scalar>(params: &SignalParams<T>) -> T {
    params.l_max()
}

/// Uniform partition of the Doppler search range `±f_dmax` into `K` bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerGrid<T> {
    pub bin_width_hz: T,
    pub f_dmax_hz: T,
    pub num_bins: usize,
    /// `W·T_per`.
    pub relative_width: T,
}

impl<T: Scalar> DopplerGrid<T> {
    /// `K = ceil(2·f_dmax / W)`; the grid may overshoot the range slightly.
    pub fn new(bin_width_hz: T, f_dmax_hz: T, t_per: T) -> Result<Self> {
        if !(bin_width_hz > T::zero()) || !bin_width_hz.is_finite() {
            return Err(Error::InvalidConfig("bin width must be positive".into()));
        }
        if !(f_dmax_hz > T::zero()) || !f_dmax_hz.is_finite() {
            return Err(Error::InvalidConfig("maximum Doppler must be positive".into()));
        }
        if !(t_per > T::zero()) {
            return Err(Error::InvalidConfig("integration period must be positive".into()));
        }
        let ratio = (T::lit(2.0) * f_dmax_hz / bin_width_hz).as_f64();
        // guard against 2f/W landing a hair above an integer through rounding
        let num_bins = ((ratio - 1e-9).ceil() as usize).max(1);
        Ok(Self {
            bin_width_hz,
            f_dmax_hz,
            num_bins,
            relative_width: bin_width_hz * t_per,
        })
    }

    /// Centre frequency of bin `j`; the bins are laid out symmetrically
    /// about zero Doppler.
    pub fn bin_center_hz(&self, j: usize) -> T {
        let offset = T::count(j) - T::count(self.num_bins - 1) * T::lit(0.5);
        offset * self.bin_width_hz
    }
}

/// Expected non-centrality per Doppler-bin offset `l = 0..=l_max`.
///
/// One value stands for both `k + l` and `k - l`. Offsets beyond `l_max`
/// carry no signal.
#[derive(Debug, Clone, PartialEq)]
pub struct NonCentralityProfile<T> {
    values: Vec<T>,
}

impl<T: Scalar> NonCentralityProfile<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("profile needs at least L_0".into()));
        }
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "non-centrality values must be finite and non-negative".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Only the correct bin carries signal.
    pub fn single_signal(l0: T) -> Result<Self> {
        Self::new(vec![l0])
    }

    /// Expected values from the bin geometry, for offsets `0..=l_max`.
    pub fn expected(params: &SignalParams<T>, grid: &DopplerGrid<T>, l_max: usize) -> Result<Self> {
        let values = (0..=l_max)
            .map(|l| expected_noncentrality(params, grid, l))
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn l_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Non-centrality at signed offset `offset`; zero beyond `l_max`.
    pub fn at(&self, offset: i64) -> T {
        self.values
            .get(offset.unsigned_abs() as usize)
            .copied()
            .unwrap_or_else(T::zero)
    }
}

/// Order in which the serial search visits cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchOrder {
    /// All code phases of a Doppler bin before moving to the next bin.
    CodePhaseFirst,
    /// All Doppler bins of a code phase before moving to the next phase.
    DopplerFirst,
}

impl fmt::Display for SearchOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchOrder::CodePhaseFirst => "code-first",
            SearchOrder::DopplerFirst => "doppler-first",
        })
    }
}

impl FromStr for SearchOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-first" | "code_first" | "CodePhaseFirst" => Ok(SearchOrder::CodePhaseFirst),
            "doppler-first" | "doppler_first" | "DopplerFirst" => Ok(SearchOrder::DopplerFirst),
            other => Err(Error::InvalidConfig(format!(
                "unknown search order '{other}' (expected code-first or doppler-first)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPolicy<T> {
    pub order: SearchOrder,
    /// `M`: stopping within `M` bins of the correct one still counts as detection.
    pub accept_half_width: usize,
    pub threshold: T,
}

impl<T: Scalar> SearchPolicy<T> {
    pub fn new(order: SearchOrder, accept_half_width: usize, threshold: T) -> Result<Self> {
        if !(threshold >= T::zero()) {
            return Err(Error::InvalidConfig("threshold must be non-negative".into()));
        }
        Ok(Self {
            order,
            accept_half_width,
            threshold,
        })
    }

    pub fn with_threshold(&self, threshold: T) -> Result<Self> {
        Self::new(self.order, self.accept_half_width, threshold)
    }

    /// `M < K` is required for the refined models.
    pub fn check_bins(&self, num_bins: usize) -> Result<()> {
        if self.accept_half_width >= num_bins {
            return Err(Error::InvalidConfig(format!(
                "acceptance half-width M = {} must be smaller than the bin count K = {num_bins}",
                self.accept_half_width
            )));
        }
        Ok(())
    }
}

/// `sin²(πx)/(πx)`, zero at the origin.
fn sin2_over<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        return T::zero();
    }
    let px = T::PI() * x;
    let s = px.sin();
    s * s / px
}

/// Expected non-centrality in bins at offset `l` from the correct one, for a
/// residual Doppler uniform over the bin.
///
/// Evaluates `L_max/(W·T) · ∫ sinc²(x) dx` over `x ∈ [(2l−1)WT/2, (2l+1)WT/2]`
/// in closed form through the sine integral. The correct bin uses the
/// symmetric form `L_max/(π·WT)·[2·Si(π·WT) − 4·sin²(π·WT/2)/(π·WT)]`.
pub fn expected_noncentrality<T: Scalar>(
    params: &SignalParams<T>,
    grid: &DopplerGrid<T>,
    l: usize,
) -> T {
    let wt = grid.relative_width;
    let l_max = params.l_max();
    let pi = T::PI();
    let two = T::lit(2.0);
    let bracket = if l == 0 {
        let half = (pi * wt * T::lit(0.5)).sin();
        two * sine_integral(pi * wt) - T::lit(4.0) * half * half / (pi * wt)
    } else {
        let lower = (two * T::count(l) - T::one()) * wt * T::lit(0.5);
        let upper = (two * T::count(l) + T::one()) * wt * T::lit(0.5);
        sine_integral(two * pi * upper) - sine_integral(two * pi * lower) + sin2_over(lower)
            - sin2_over(upper)
    };
    (l_max / (pi * wt) * bracket).max(T::zero())
}

/// Convenience: tolerance used by the model functions when none is given.
pub fn default_tolerance<T: Scalar>() -> ToleranceConfig<T> {
    ToleranceConfig::default()
}
