//! Exact serial-search stop probabilities on small grids, computed directly
//! from the sequential-product form of independent cell crossings.

use crate::analytic::{cell_pdet, cell_pfa, NonCentralityProfile, SearchOrder};
use crate::error::{Error, Result};
use crate::numerics::check_probability;
use crate::scalar::Scalar;

/// Per-cell crossing probabilities on a `bins × phases` grid plus the set of
/// cells whose stop counts as a detection.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProbabilityGrid<T> {
    bins: usize,
    phases: usize,
    probs: Vec<T>,
    accepted: Vec<bool>,
}

impl<T: Scalar> CellProbabilityGrid<T> {
    /// `probs` is bin-major: entry `b·phases + p` is cell `(b, p)`.
    pub fn new(bins: usize, phases: usize, probs: Vec<T>, accepted: Vec<bool>) -> Result<Self> {
        if bins == 0 || phases == 0 {
            return Err(Error::InvalidConfig("grid dimensions must be >= 1".into()));
        }
        let cells = bins * phases;
        if probs.len() != cells {
            return Err(Error::LengthMismatch { left: probs.len(), right: cells });
        }
        if accepted.len() != cells {
            return Err(Error::LengthMismatch { left: accepted.len(), right: cells });
        }
        for &p in &probs {
            check_probability("CellProbabilityGrid", p)?;
        }
        Ok(Self { bins, phases, probs, accepted })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn prob(&self, bin: usize, phase: usize) -> T {
        self.probs[bin * self.phases + phase]
    }

    pub fn is_accepted(&self, bin: usize, phase: usize) -> bool {
        self.accepted[bin * self.phases + phase]
    }

    /// Cells in the order the serial search visits them.
    pub fn visit_order(&self, order: SearchOrder) -> Vec<(usize, usize)> {
        match order {
            SearchOrder::CodePhaseFirst => (0..self.bins)
                .flat_map(|b| (0..self.phases).map(move |p| (b, p)))
                .collect(),
            SearchOrder::DopplerFirst => (0..self.phases)
                .flat_map(|p| (0..self.bins).map(move |b| (b, p)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopDistribution<T> {
    /// Bin-major, same layout as the grid.
    pub stop: Vec<T>,
    pub no_stop: T,
    phases: usize,
}

impl<T: Scalar> StopDistribution<T> {
    pub fn at(&self, bin: usize, phase: usize) -> T {
        self.stop[bin * self.phases + phase]
    }
}

/// Probability that the search stops at each cell, and that it never stops.
pub fn stop_distribution<T: Scalar>(grid: &CellProbabilityGrid<T>, order: SearchOrder) -> StopDistribution<T> {
    let mut stop = vec![T::zero(); grid.probs.len()];
    let mut survive = T::one();
    for (b, p) in grid.visit_order(order) {
        let q = grid.prob(b, p);
        stop[b * grid.phases + p] = survive * q;
        survive = survive * (T::one() - q);
    }
    StopDistribution { stop, no_stop: survive, phases: grid.phases }
}

/// Probability of stopping in an accepted cell.
pub fn accepted_stop_probability<T: Scalar>(grid: &CellProbabilityGrid<T>, order: SearchOrder) -> T {
    let dist = stop_distribution(grid, order);
    dist.stop
        .iter()
        .zip(&grid.accepted)
        .filter(|(_, &a)| a)
        .map(|(&s, _)| s)
        .sum()
}

/// Detection probability averaged over every placement of the correct cell.
///
/// `pdet_at(o)` gives the crossing probability of the correct-phase cell in
/// the bin at signed offset `o = bin − correct bin`; all other cells cross
/// with `pfa`. Accepted cells are the correct phase in bins within `±m` of
/// the correct one, clipped to the grid.
pub fn averaged_detection_with<T, F>(
    pdet_at: F,
    pfa: T,
    k: usize,
    n: usize,
    m: usize,
    order: SearchOrder,
) -> Result<T>
where
    T: Scalar,
    F: Fn(i64) -> T,
{
    check_probability("averaged_detection", pfa)?;
    if k == 0 || n == 0 {
        return Err(Error::InvalidConfig("grid dimensions must be >= 1".into()));
    }
    let mut total = T::zero();
    for correct_bin in 0..k {
        for correct_phase in 0..n {
            let mut probs = vec![pfa; k * n];
            let mut accepted = vec![false; k * n];
            for b in 0..k {
                let o = b as i64 - correct_bin as i64;
                probs[b * n + correct_phase] = pdet_at(o);
                accepted[b * n + correct_phase] = o.unsigned_abs() as usize <= m;
            }
            let grid = CellProbabilityGrid::new(k, n, probs, accepted)?;
            total = total + accepted_stop_probability(&grid, order);
        }
    }
    Ok(total / (T::count(k) * T::count(n)))
}

/// [`averaged_detection_with`] for a symmetric expected-value profile at
/// threshold `beta`; offsets beyond the profile carry no signal.
pub fn averaged_detection<T: Scalar>(
    profile: &NonCentralityProfile<T>,
    beta: T,
    k: usize,
    n: usize,
    m_accept: usize,
    order: SearchOrder,
) -> Result<T> {
    let pfa = cell_pfa(beta)?;
    let pd = profile
        .values()
        .iter()
        .map(|&l| cell_pdet(l, beta))
        .collect::<Result<Vec<_>>>()?;
    averaged_detection_with(
        |o| pd.get(o.unsigned_abs() as usize).copied().unwrap_or(pfa),
        pfa,
        k,
        n,
        m_accept,
        order,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        global_pdet_code_first, global_pdet_doppler_first, global_pdet_naive, refined_detection,
        RefinedModel, SearchPolicy,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid2x2() -> CellProbabilityGrid<f64> {
        CellProbabilityGrid::new(2, 2, vec![0.1, 0.2, 0.3, 0.4], vec![false, true, false, false]).unwrap()
    }

    #[test]
    fn single_cell() {
        let g = CellProbabilityGrid::new(1, 1, vec![0.37], vec![true]).unwrap();
        let d = stop_distribution(&g, SearchOrder::CodePhaseFirst);
        assert_eq!(d.at(0, 0), 0.37);
        assert_abs_diff_eq!(d.no_stop, 0.63, epsilon = 1e-16);
    }

    #[test]
    fn hand_computed_two_by_two() {
        let g = grid2x2();
        // (0,0) (0,1) (1,0) (1,1)
        let d = stop_distribution(&g, SearchOrder::CodePhaseFirst);
        assert_abs_diff_eq!(d.at(0, 0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(0, 1), 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(1, 0), 0.216, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(1, 1), 0.2016, epsilon = 1e-15);
        assert_abs_diff_eq!(d.no_stop, 0.3024, epsilon = 1e-15);
        // (0,0) (1,0) (0,1) (1,1)
        let d = stop_distribution(&g, SearchOrder::DopplerFirst);
        assert_abs_diff_eq!(d.at(0, 0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(1, 0), 0.27, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(0, 1), 0.126, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(1, 1), 0.2016, epsilon = 1e-15);
        assert_abs_diff_eq!(accepted_stop_probability(&g, SearchOrder::DopplerFirst), 0.126, epsilon = 1e-15);
    }

    #[test]
    fn uniform_grid_no_stop() {
        let q = 0.07;
        let g = CellProbabilityGrid::new(4, 5, vec![q; 20], vec![false; 20]).unwrap();
        for order in [SearchOrder::CodePhaseFirst, SearchOrder::DopplerFirst] {
            let d = stop_distribution(&g, order);
            assert_abs_diff_eq!(d.no_stop, (1.0f64 - q).powi(20), epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(CellProbabilityGrid::new(0, 1, Vec::<f64>::new(), vec![]).is_err());
        assert!(CellProbabilityGrid::new(1, 2, vec![0.1], vec![true, false]).is_err());
        assert!(CellProbabilityGrid::new(1, 1, vec![1.5], vec![true]).is_err());
    }

    #[test]
    fn stop_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let k = rng.random_range(1..=6);
            let n = rng.random_range(1..=8);
            let probs: Vec<f64> = (0..k * n).map(|_| rng.random::<f64>()).collect();
            let g = CellProbabilityGrid::new(k, n, probs, vec![false; k * n]).unwrap();
            for order in [SearchOrder::CodePhaseFirst, SearchOrder::DopplerFirst] {
                let d = stop_distribution(&g, order);
                let s: f64 = d.stop.iter().sum::<f64>() + d.no_stop;
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn permuting_equal_cells_in_prefix() {
        // swapping two equal-probability cells ahead of an accepted one
        let a = CellProbabilityGrid::new(1, 4, vec![0.2, 0.5, 0.2, 0.3], vec![false, false, false, true]).unwrap();
        let b = CellProbabilityGrid::new(1, 4, vec![0.2, 0.2, 0.5, 0.3], vec![false, false, false, true]).unwrap();
        let pa = accepted_stop_probability(&a, SearchOrder::CodePhaseFirst);
        let pb = accepted_stop_probability(&b, SearchOrder::CodePhaseFirst);
        assert_abs_diff_eq!(pa, pb, epsilon = 1e-15);
    }

    #[test]
    fn reduces_to_naive() {
        let prof = NonCentralityProfile::single_signal(9.0).unwrap();
        for beta in [0.5, 2.0, 6.0] {
            let naive = global_pdet_naive(9.0, beta, 4, 3).unwrap();
            for order in [SearchOrder::CodePhaseFirst, SearchOrder::DopplerFirst] {
                let o = averaged_detection(&prof, beta, 3, 4, 0, order).unwrap();
                assert_abs_diff_eq!(o, naive, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_threshold_stops_at_first_cell() {
        let prof = NonCentralityProfile::new(vec![9.0, 3.0, 0.5]).unwrap();
        let (k, n) = (5, 3);
        for m in 0..3 {
            for order in [SearchOrder::CodePhaseFirst, SearchOrder::DopplerFirst] {
                let o = averaged_detection(&prof, 0.0, k, n, m, order).unwrap();
                // first cell is (0, 0); accepted when the correct phase is 0 and the
                // correct bin is within m of bin 0
                let expect = (m + 1).min(k) as f64 / (k * n) as f64;
                assert_abs_diff_eq!(o, expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn matches_refined_formulas_on_fixture() {
        let prof = NonCentralityProfile::new(vec![9.0, 3.0, 0.5]).unwrap();
        let pol = SearchPolicy::new(SearchOrder::CodePhaseFirst, 1, 3.0).unwrap();
        let cf = global_pdet_code_first(&prof, &pol, 4, 3).unwrap();
        let df = global_pdet_doppler_first(&prof, &pol, 4, 3).unwrap();
        let ocf = averaged_detection(&prof, 3.0, 3, 4, 1, SearchOrder::CodePhaseFirst).unwrap();
        let odf = averaged_detection(&prof, 3.0, 3, 4, 1, SearchOrder::DopplerFirst).unwrap();
        assert_abs_diff_eq!(cf, ocf, epsilon = 1e-12);
        assert_abs_diff_eq!(df, odf, epsilon = 1e-12);
    }

    #[test]
    fn matches_refined_engine_for_asymmetric_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let k = rng.random_range(1..=5);
            let n = rng.random_range(1..=6);
            let m = rng.random_range(0..k.min(3));
            let pfa = rng.random_range(1e-6..0.9);
            let table: Vec<f64> = (0..2 * k + 1).map(|_| rng.random::<f64>()).collect();
            let at = |o: i64| table[(o + k as i64) as usize];
            for (order, model) in [
                (SearchOrder::CodePhaseFirst, RefinedModel::CodeFirst),
                (SearchOrder::DopplerFirst, RefinedModel::DopplerFirst),
            ] {
                let oracle = averaged_detection_with(at, pfa, k, n, m, order).unwrap();
                let formula = refined_detection(at, pfa, n, k, m, model).unwrap();
                assert_abs_diff_eq!(oracle, formula, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let prof = NonCentralityProfile::new(vec![9.0_f32, 3.0]).unwrap();
        let v = averaged_detection(&prof, 3.0_f32, 3, 2, 1, SearchOrder::CodePhaseFirst).unwrap();
        let w = averaged_detection(&NonCentralityProfile::new(vec![9.0, 3.0]).unwrap(), 3.0, 3, 2, 1, SearchOrder::CodePhaseFirst).unwrap();
        assert!((v as f64 - w).abs() < 1e-5);
    }
}
