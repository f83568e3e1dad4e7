use super::cell::{cell_pdet_exact, cell_pdet_with, cell_pfa};
use super::global::{
    global_pdet_marginalized, global_pdet_naive, global_pdet_refined, global_pfa, RefinedModel,
};
use super::{DopplerGrid, NonCentralityProfile, SearchOrder, SearchPolicy, SignalParams};
use crate::error::{Error, Result};
use crate::numerics::ToleranceConfig;
use crate::scalar::Scalar;

/// Everything except the threshold needed to trace one ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRequest<T> {
    pub params: SignalParams<T>,
    pub grid: DopplerGrid<T>,
    pub order: SearchOrder,
    pub accept_half_width: usize,
    /// Largest bin offset carrying signal.
    pub l_max: usize,
    /// Code phases per bin.
    pub code_phases: usize,
    pub tolerance: ToleranceConfig<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint<T> {
    pub beta: T,
    pub p_fa_cell: T,
    /// Per offset `l = 0..=l_max`, evaluated at the expected non-centrality.
    pub p_det_cell: Vec<T>,
    /// Per offset, averaged over the residual Doppler.
    pub p_det_cell_exact: Vec<T>,
    pub p_fa_global: T,
    /// Single signal cell at `L_max`.
    pub p_det_naive: T,
    pub p_det_code_first: T,
    pub p_det_doppler_first: T,
    pub p_det_approx: T,
    /// Refined model for the requested order, averaged over the residual Doppler.
    pub p_det_exact: T,
}

impl<T: Scalar> RocPoint<T> {
    /// Refined expected-profile value for the given search order.
    pub fn p_det_for(&self, order: SearchOrder) -> T {
        match order {
            SearchOrder::CodePhaseFirst => self.p_det_code_first,
            SearchOrder::DopplerFirst => self.p_det_doppler_first,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    pub profile: NonCentralityProfile<T>,
    pub points: Vec<RocPoint<T>>,
}

/// Thresholds whose cell false-alarm probabilities are log-spaced from
/// `max_pfa` down to `min_pfa`, in increasing `β`.
pub fn log_spaced_beta_grid<T: Scalar>(min_pfa: T, max_pfa: T, points: usize) -> Result<Vec<T>> {
    let ok = |p: T| p > T::zero() && p <= T::one();
    if !ok(min_pfa) || !ok(max_pfa) || !(min_pfa < max_pfa) {
        return Err(Error::InvalidConfig(
            "beta grid needs 0 < min_pfa < max_pfa <= 1".into(),
        ));
    }
    if points < 2 {
        return Err(Error::InvalidConfig("beta grid needs at least two points".into()));
    }
    let hi = -max_pfa.ln();
    let lo = -min_pfa.ln();
    let steps = T::count(points - 1);
    Ok((0..points)
        .map(|i| hi + (lo - hi) * T::count(i) / steps)
        .collect())
}

pub fn roc_curve<T: Scalar>(request: &RocRequest<T>, betas: &[T]) -> Result<RocCurve<T>> {
    if betas.is_empty() {
        return Err(Error::InvalidConfig("beta grid is empty".into()));
    }
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("beta grid must be strictly increasing".into()));
    }
    let RocRequest {
        params,
        grid,
        order,
        accept_half_width,
        l_max,
        code_phases: n,
        tolerance: tol,
    } = *request;
    if n == 0 {
        return Err(Error::InvalidConfig("code phase count must be >= 1".into()));
    }
    let k = grid.num_bins;
    let profile = NonCentralityProfile::expected(&params, &grid, l_max)?;
    let points = betas
        .iter()
        .map(|&beta| {
            let policy = SearchPolicy::new(order, accept_half_width, beta)?;
            policy.check_bins(k)?;
            let p_fa_cell = cell_pfa(beta)?;
            let p_det_cell = profile
                .values()
                .iter()
                .map(|&l| cell_pdet_with(l, beta, &tol))
                .collect::<Result<Vec<_>>>()?;
            let p_det_cell_exact = (0..=l_max)
                .map(|l| cell_pdet_exact(&params, &grid, l, beta, &tol))
                .collect::<Result<Vec<_>>>()?;
            Ok(RocPoint {
                beta,
                p_fa_cell,
                p_det_cell,
                p_det_cell_exact,
                p_fa_global: global_pfa(p_fa_cell, n, k)?,
                p_det_naive: global_pdet_naive(params.l_max(), beta, n, k)?,
                p_det_code_first: global_pdet_refined(&profile, &policy, n, k, RefinedModel::CodeFirst)?,
                p_det_doppler_first: global_pdet_refined(
                    &profile,
                    &policy,
                    n,
                    k,
                    RefinedModel::DopplerFirst,
                )?,
                p_det_approx: global_pdet_refined(&profile, &policy, n, k, RefinedModel::Approx)?,
                p_det_exact: global_pdet_marginalized(
                    &params,
                    &grid,
                    &policy,
                    l_max,
                    n,
                    order.into(),
                    &tol,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve { profile, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(width: f64, m: usize) -> RocRequest<f64> {
        RocRequest {
            params: SignalParams::new(40.0, 1e-3).unwrap(),
            grid: DopplerGrid::new(width, 5000.0, 1e-3).unwrap(),
            order: SearchOrder::CodePhaseFirst,
            accept_half_width: m,
            l_max: 2,
            code_phases: 1023,
            tolerance: ToleranceConfig::default(),
        }
    }

    #[test]
    fn beta_grid_shape() {
        let g = log_spaced_beta_grid(1e-9, 0.5, 60).unwrap();
        assert_eq!(g.len(), 60);
        assert!((g[0] - 2f64.ln()).abs() < 1e-15);
        assert!((g[59] + 1e-9f64.ln()).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_spaced_beta_grid(0.5, 1e-9, 60).is_err());
        assert!(log_spaced_beta_grid(1e-9, 0.5, 1).is_err());
    }

    #[test]
    fn single_point_curve() {
        let c = roc_curve(&request(500.0, 0), &[5.0]).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].p_det_cell.len(), 3);
        assert_eq!(c.points[0].p_det_cell_exact.len(), 3);
        assert!(roc_curve(&request(500.0, 0), &[]).is_err());
        assert!(roc_curve(&request(500.0, 0), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn default_configuration_curve() {
        let betas = log_spaced_beta_grid(1e-9, 0.5, 60).unwrap();
        let c = roc_curve(&request(500.0, 0), &betas).unwrap();
        let pfa: Vec<f64> = c.points.iter().map(|p| p.p_fa_global).collect();
        assert!(pfa.windows(2).all(|w| w[1] < w[0] || (w[0] == 1.0 && w[1] == 1.0)));
        assert!(*pfa.last().unwrap() < 1e-4);
        let pd: Vec<f64> = c.points.iter().map(|p| p.p_det_code_first).collect();
        let (imax, max) = pd
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!(imax > 0 && imax < pd.len() - 1, "maximum at {imax}");
        assert!(max > pd[0] && max > pd[pd.len() - 1]);
        for p in &c.points {
            for v in [p.p_det_naive, p.p_det_code_first, p.p_det_doppler_first, p.p_det_approx, p.p_det_exact] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn naive_overestimates_narrow_bins() {
        let betas = log_spaced_beta_grid(1e-9, 0.5, 60).unwrap();
        let c = roc_curve(&request(200.0, 0), &betas).unwrap();
        let best = c
            .points
            .iter()
            .max_by(|a, b| a.p_det_code_first.total_cmp(&b.p_det_code_first))
            .unwrap();
        assert!(best.p_det_naive > best.p_det_code_first + 0.05);
    }
}
