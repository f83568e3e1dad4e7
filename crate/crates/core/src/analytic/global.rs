use super::cell::{cell_pdet_with, cell_pfa};
use super::{DopplerGrid, NonCentralityProfile, SearchOrder, SearchPolicy, SignalParams};
use crate::error::{domain, Error, Result};
use crate::numerics::{
    check_probability, clamp_probability, complement_ratio, integrate, one_minus_pow_complement,
    pow_complement, sinc, ToleranceConfig,
};
use crate::scalar::Scalar;

/// Which refined global detection model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefinedModel {
    CodeFirst,
    DopplerFirst,
    /// Order-independent form valid when `K·N·P_fa ≪ 1`.
    Approx,
}

impl From<SearchOrder> for RefinedModel {
    fn from(order: SearchOrder) -> Self {
        match order {
            SearchOrder::CodePhaseFirst => RefinedModel::CodeFirst,
            SearchOrder::DopplerFirst => RefinedModel::DopplerFirst,
        }
    }
}

fn check_dims(func: &'static str, n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(domain(func, "code phase and bin counts must be >= 1"));
    }
    Ok(())
}

/// Probability that a noise-only search stops anywhere: `1 − (1 − P_fa)^{NK}`.
pub fn global_pfa<T: Scalar>(pfa_cell: T, n: usize, k: usize) -> Result<T> {
    check_dims("global_pfa", n, k)?;
    one_minus_pow_complement(pfa_cell, T::count(n) * T::count(k))
}

/// Cell threshold that yields a given global false-alarm probability.
pub fn threshold_for_global_pfa<T: Scalar>(target: T, n: usize, k: usize) -> Result<T> {
    check_dims("threshold_for_global_pfa", n, k)?;
    if !(target > T::zero() && target <= T::one()) {
        return Err(domain("threshold_for_global_pfa", format!("{target} outside (0, 1]")));
    }
    if target == T::one() {
        return Ok(T::zero());
    }
    // P_fa = 1 − (1 − P)^{1/(NK)}
    let cells = T::count(n) * T::count(k);
    let pfa = -((-target).ln_1p() / cells).exp_m1();
    Ok(-pfa.ln())
}

/// Single-signal-cell model: only the correct cell, with non-centrality
/// `l_correct`, can produce a detection.
pub fn global_pdet_naive<T: Scalar>(l_correct: T, beta: T, n: usize, k: usize) -> Result<T> {
    check_dims("global_pdet_naive", n, k)?;
    let pfa = cell_pfa(beta)?;
    let pdet = cell_pdet_with(l_correct, beta, &ToleranceConfig::default())?;
    let cells = T::count(n) * T::count(k);
    clamp_probability("naive detection probability", complement_ratio(pfa, cells)? / cells * pdet)
}

/// Refined global detection probability for arbitrary per-offset cell
/// detection probabilities.
///
/// `pdet_at(o)` is the detection probability of the correct-phase cell in the
/// bin at signed offset `o` from the correct bin (`o = bin − correct bin`);
/// every other cell crosses with probability `pfa`. The correct bin and phase
/// are uniform over the grid, the search visits bins in increasing index,
/// and a stop at the correct phase within `±m` bins counts as detection.
pub fn refined_detection<T, F>(
    pdet_at: F,
    pfa: T,
    n: usize,
    k: usize,
    m: usize,
    model: RefinedModel,
) -> Result<T>
where
    T: Scalar,
    F: Fn(i64) -> T,
{
    check_dims("refined_detection", n, k)?;
    check_probability("refined_detection", pfa)?;
    if m >= k {
        return Err(Error::InvalidConfig(format!(
            "acceptance half-width M = {m} must be smaller than the bin count K = {k}"
        )));
    }
    let nt = T::count(n);
    let kt = T::count(k);
    let prefactor = match model {
        RefinedModel::CodeFirst => complement_ratio(pfa, nt)? / (kt * nt),
        RefinedModel::DopplerFirst => {
            complement_ratio(pfa, kt * nt)? / complement_ratio(pfa, kt)? / (kt * nt)
        }
        RefinedModel::Approx => T::one() / kt,
    };
    // probability of clearing one full code-first bin's noise cells
    let noise_pass = match model {
        RefinedModel::CodeFirst => pow_complement(pfa, T::count(n - 1)),
        _ => T::one(),
    };

    let k = k as i64;
    let m = m as i64;
    let mut total = T::zero();
    for q in -m..=m {
        // n counts the bins visited before the stop bin; the correct bin sits
        // at n − q and must be inside the grid
        let first = q.max(0);
        let last = (k - 1).min(k - 1 + q);
        let mut inner = T::zero();
        let mut survive = T::one();
        for nb in 0..=last {
            if nb > 0 {
                survive = survive * noise_pass * (T::one() - pdet_at(q - nb));
            }
            if nb >= first {
                inner = inner + survive;
            }
        }
        total = total + pdet_at(q) * inner;
    }
    clamp_probability("refined detection probability", prefactor * total)
}

fn profile_pdet<T: Scalar>(profile: &NonCentralityProfile<T>, beta: T) -> Result<(Vec<T>, T)> {
    let tol = ToleranceConfig::default();
    let pfa = cell_pfa(beta)?;
    let values = profile
        .values()
        .iter()
        .map(|&l| cell_pdet_with(l, beta, &tol))
        .collect::<Result<Vec<_>>>()?;
    Ok((values, pfa))
}

/// Refined model from an expected-value profile, dispatched on `model`.
pub fn global_pdet_refined<T: Scalar>(
    profile: &NonCentralityProfile<T>,
    policy: &SearchPolicy<T>,
    n: usize,
    k: usize,
    model: RefinedModel,
) -> Result<T> {
    policy.check_bins(k)?;
    let (pd, pfa) = profile_pdet(profile, policy.threshold)?;
    let at = |o: i64| pd.get(o.unsigned_abs() as usize).copied().unwrap_or(pfa);
    refined_detection(at, pfa, n, k, policy.accept_half_width, model)
}

/// Code phases searched within a bin before moving to the next bin.
pub fn global_pdet_code_first<T: Scalar>(
    profile: &NonCentralityProfile<T>,
    policy: &SearchPolicy<T>,
    n: usize,
    k: usize,
) -> Result<T> {
    global_pdet_refined(profile, policy, n, k, RefinedModel::CodeFirst)
}

/// Doppler bins searched at one code phase before moving to the next phase.
pub fn global_pdet_doppler_first<T: Scalar>(
    profile: &NonCentralityProfile<T>,
    policy: &SearchPolicy<T>,
    n: usize,
    k: usize,
) -> Result<T> {
    global_pdet_refined(profile, policy, n, k, RefinedModel::DopplerFirst)
}

/// Search-order-independent approximation, neglecting false alarms before
/// the stop.
pub fn global_pdet_approx<T: Scalar>(
    profile: &NonCentralityProfile<T>,
    policy: &SearchPolicy<T>,
    k: usize,
) -> Result<T> {
    global_pdet_refined(profile, policy, 1, k, RefinedModel::Approx)
}

/// Refined global detection probability averaged over the residual Doppler
/// instead of evaluated at the expected non-centralities.
///
/// For a residual `x = Δf·T_per` uniform over the correct bin, the cell at
/// offset `o` has non-centrality `L_max·sinc²(o·W·T_per − x)` for
/// `|o| ≤ l_max` and none beyond. This is the quantity a Monte Carlo search
/// with random residual Doppler estimates.
#[allow(clippy::too_many_arguments)]
pub fn global_pdet_marginalized<T: Scalar>(
    params: &SignalParams<T>,
    grid: &DopplerGrid<T>,
    policy: &SearchPolicy<T>,
    l_max: usize,
    n: usize,
    model: RefinedModel,
    tol: &ToleranceConfig<T>,
) -> Result<T> {
    tol.validate()?;
    let k = grid.num_bins;
    policy.check_bins(k)?;
    let beta = policy.threshold;
    let pfa = cell_pfa(beta)?;
    let wt = grid.relative_width;
    let lm = params.l_max();
    let half = wt * T::lit(0.5);
    let span = l_max.min(k - 1) as i64;
    let integral = integrate(-half, half, tol, |x| {
        let mut pd = Vec::with_capacity(2 * span as usize + 1);
        for o in -span..=span {
            let s = sinc(offset::<T>(o) * wt - x);
            pd.push(cell_pdet_with(lm * s * s, beta, tol)?);
        }
        let at = |o: i64| {
            if o.abs() <= span {
                pd[(o + span) as usize]
            } else {
                pfa
            }
        };
        refined_detection(at, pfa, n, k, policy.accept_half_width, model)
    })?;
    clamp_probability("marginalized detection probability", integral / wt)
}

fn offset<T: Scalar>(o: i64) -> T {
    let mag = T::count(o.unsigned_abs() as usize);
    if o < 0 {
        -mag
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn policy(m: usize, beta: f64) -> SearchPolicy<f64> {
        SearchPolicy::new(SearchOrder::CodePhaseFirst, m, beta).unwrap()
    }

    fn beta_grid() -> Vec<f64> {
        (0..60)
            .map(|i| -(0.5 * (1e-9f64 / 0.5).powf(i as f64 / 59.0)).ln())
            .collect()
    }

    #[test]
    fn global_pfa_values() {
        assert_eq!(global_pfa(0.0, 1023, 20).unwrap(), 0.0);
        assert_abs_diff_eq!(global_pfa(1e-6, 1023, 20).unwrap(), 0.020_252_124_416_673_28, epsilon = 1e-15);
        for &p in &[1e-9, 1e-8, 1e-7, 4e-7] {
            let g: f64 = global_pfa(p, 1023, 20).unwrap();
            let lin = 1023.0 * 20.0 * p;
            assert!(lin <= 0.01);
            assert!((g - lin).abs() <= 0.02 * lin);
        }
        assert!(global_pfa(0.1, 0, 3).is_err());
    }

    #[test]
    fn threshold_inverts_global_pfa() {
        for &target in &[1e-3f64, 1e-2, 0.1, 0.5] {
            let b = threshold_for_global_pfa(target, 1023, 20).unwrap();
            let back = global_pfa(cell_pfa(b).unwrap(), 1023, 20).unwrap();
            assert_abs_diff_eq!(back, target, epsilon = 1e-12 * target.max(1e-3) * 100.0);
        }
    }

    #[test]
    fn naive_limits() {
        assert_abs_diff_eq!(global_pdet_naive(20.0, 0.0, 1023, 20).unwrap(), 1.0 / 20460.0, epsilon = 1e-15);
        let beta = 60.0;
        let l = 200.0;
        assert_abs_diff_eq!(
            global_pdet_naive(l, beta, 1023, 20).unwrap(),
            cell_pdet_with(l, beta, &ToleranceConfig::default()).unwrap(),
            epsilon = 1e-12
        );
        let beta = 3.0f64;
        let pfa = (-beta).exp();
        let expect = (1.0 - (1.0 - pfa).powi(12)) / 12.0;
        assert_abs_diff_eq!(global_pdet_naive(0.0, beta, 4, 3).unwrap(), expect, epsilon = 1e-14);
    }

    #[test]
    fn refined_reduces_to_naive() {
        let prof = NonCentralityProfile::single_signal(18.7).unwrap();
        for beta in beta_grid() {
            let naive = global_pdet_naive(18.7, beta, 1023, 20).unwrap();
            let pol = policy(0, beta);
            let cf = global_pdet_code_first(&prof, &pol, 1023, 20).unwrap();
            let df = global_pdet_doppler_first(&prof, &pol, 1023, 20).unwrap();
            assert_abs_diff_eq!(cf, naive, epsilon = 1e-12);
            assert_abs_diff_eq!(df, naive, epsilon = 1e-12);
        }
    }

    #[test]
    fn large_threshold_vanishes() {
        let prof = NonCentralityProfile::new(vec![9.0, 3.0, 0.5]).unwrap();
        let pol = policy(1, 400.0);
        assert!(global_pdet_code_first(&prof, &pol, 4, 3).unwrap() < 1e-100);
    }

    #[test]
    fn approx_special_cases() {
        let prof = NonCentralityProfile::new(vec![9.0, 3.0]).unwrap();
        let pol = policy(0, 4.0);
        let pd0 = cell_pdet_with(9.0, 4.0, &ToleranceConfig::default()).unwrap();
        assert_abs_diff_eq!(global_pdet_approx(&prof, &pol, 1).unwrap(), pd0, epsilon = 1e-15);

        // no signal anywhere: sum over the K possible stop positions of P_fa·(1−P_fa)^n
        let zero = NonCentralityProfile::new(vec![0.0, 0.0, 0.0]).unwrap();
        let k = 7;
        let pfa = (-4.0f64).exp();
        let direct = pfa * (1.0 - (1.0 - pfa).powi(k as i32)) / (k as f64 * pfa);
        assert_abs_diff_eq!(global_pdet_approx(&zero, &pol, k).unwrap(), direct, epsilon = 1e-15);
    }

    #[test]
    fn m_must_be_below_k() {
        let prof = NonCentralityProfile::new(vec![9.0]).unwrap();
        assert!(global_pdet_code_first(&prof, &policy(3, 1.0), 4, 3).is_err());
        assert!(global_pdet_approx(&prof, &policy(2, 1.0), 3).is_ok());
    }

    #[test]
    fn search_orders_agree_for_rare_false_alarms() {
        let p = SignalParams::new(40.0, 1e-3).unwrap();
        let g = DopplerGrid::new(500.0, 5000.0, 1e-3).unwrap();
        let prof = NonCentralityProfile::expected(&p, &g, 2).unwrap();
        let pfa: f64 = 1e-4 / (20.0 * 1023.0);
        for m in 0..3 {
            let pol = policy(m, -pfa.ln());
            let cf = global_pdet_code_first(&prof, &pol, 1023, 20).unwrap();
            let df = global_pdet_doppler_first(&prof, &pol, 1023, 20).unwrap();
            let ap = global_pdet_approx(&prof, &pol, 20).unwrap();
            assert!((cf - df).abs() <= 1e-3);
            assert!((cf - ap).abs() <= 1e-4 + 1e-12);
        }
    }

    #[test]
    fn enlarging_k_does_not_help_single_signal() {
        let prof = NonCentralityProfile::single_signal(15.0).unwrap();
        for beta in [1.0, 5.0, 12.0] {
            let pol = policy(0, beta);
            let mut prev = 1.0;
            for k in 1..30 {
                let v = global_pdet_code_first(&prof, &pol, 50, k).unwrap();
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn marginalized_narrow_bins_match_expected() {
        // for small W·T the per-realization L barely varies
        let p = SignalParams::new(40.0, 1e-3).unwrap();
        let g = DopplerGrid::new(50.0, 500.0, 1e-3).unwrap();
        let prof = NonCentralityProfile::expected(&p, &g, 2).unwrap();
        let tol = ToleranceConfig::default();
        for beta in [5.0, 12.0, 18.0] {
            let pol = policy(0, beta);
            let e = global_pdet_code_first(&prof, &pol, 1023, g.num_bins).unwrap();
            let x = global_pdet_marginalized(&p, &g, &pol, 2, 1023, RefinedModel::CodeFirst, &tol).unwrap();
            assert!((e - x).abs() < 2e-3, "beta {beta}: {e} vs {x}");
        }
    }

    #[test]
    fn marginalized_single_cell_matches_exact_cell() {
        // K·N·P_fa tiny, M = 0, l_max = 0: the global value is the exact cell value / 1
        let p = SignalParams::new(40.0, 1e-3).unwrap();
        let g = DopplerGrid::new(700.0, 350.0, 1e-3).unwrap();
        assert_eq!(g.num_bins, 1);
        let tol = ToleranceConfig::default();
        let beta = 40.0;
        let pol = policy(0, beta);
        let x = global_pdet_marginalized(&p, &g, &pol, 0, 1, RefinedModel::CodeFirst, &tol).unwrap();
        let c = super::super::cell_pdet_exact(&p, &g, 0, beta, &tol).unwrap();
        assert_abs_diff_eq!(x, c, epsilon = 1e-12);
    }

    #[test]
    fn m_increase_never_hurts() {
        let p = SignalParams::new(40.0, 1e-3).unwrap();
        for w in [200.0, 500.0, 700.0, 1000.0] {
            let g = DopplerGrid::new(w, 5000.0, 1e-3).unwrap();
            let prof = NonCentralityProfile::expected(&p, &g, 2).unwrap();
            for beta in beta_grid().into_iter().step_by(7) {
                for model in [RefinedModel::CodeFirst, RefinedModel::DopplerFirst, RefinedModel::Approx] {
                    let v: Vec<f64> = (0..3)
                        .map(|m| global_pdet_refined(&prof, &policy(m, beta), 1023, g.num_bins, model).unwrap())
                        .collect();
                    assert!(v[1] >= v[0] && v[2] >= v[1]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn probabilities_bounded(
            l0 in 0.0f64..40.0, l1 in 0.0f64..40.0, l2 in 0.0f64..40.0,
            beta in 0.0f64..30.0, n in 1usize..50, k in 1usize..12, m in 0usize..3,
        ) {
            prop_assume!(m < k);
            let prof = NonCentralityProfile::new(vec![l0, l1, l2]).unwrap();
            let pol = policy(m, beta);
            for model in [RefinedModel::CodeFirst, RefinedModel::DopplerFirst, RefinedModel::Approx] {
                let v = global_pdet_refined(&prof, &pol, n, k, model).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let pfa = global_pfa((-beta).exp(), n, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&pfa));
        }
    }
}
