use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::analytic::{
    cell_pdet, cell_pdet_exact, cell_pfa, expected_noncentrality, global_pdet_refined,
    refined_detection, DopplerGrid, NonCentralityProfile, RefinedModel, SearchOrder, SearchPolicy,
    SignalParams,
};
use crate::error::Result;
use crate::numerics::{sine_integral, ToleranceConfig};
use crate::oracle::{averaged_detection, averaged_detection_with};
use crate::prncode::CODE_LENGTH;
use crate::simulator::{cell_exceedance, cell_exceedance_in_bin};

/// Expected-L cell probabilities further than this from the residual-averaged
/// value are reported as an approximation gap.
pub const GAP_THRESHOLD: f64 = 0.02;
/// Offsets summed in the energy check.
pub const ENERGY_OFFSETS: usize = 50;
const MC_Z: f64 = 4.0;
const MC_DRAWS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Expected-L model departs from the residual-averaged one.
    KnownGap,
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownGap => "GAP ",
            Status::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn add(&mut self, group: &'static str, name: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.checks.push(Check {
            group,
            name: name.into(),
            status,
            detail: detail.into(),
        });
    }

    fn check(&mut self, group: &'static str, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.add(group, name, status, detail);
    }

    fn guard(&mut self, group: &'static str, name: &str, r: Result<()>) {
        if let Err(e) = r {
            self.add(group, name, Status::Fail, format!("error: {e}"));
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} [{}] {}: {}\n", c.status, c.group, c.name, c.detail));
        }
        let fails = self.failures().count();
        let gaps = self.checks.iter().filter(|c| c.status == Status::KnownGap).count();
        out.push_str(&format!(
            "{} checks, {} failed, {} known approximation gaps\n",
            self.checks.len(),
            fails,
            gaps
        ));
        out
    }
}

/// Runs every cross-check for the configured experiment.
pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let r = oracle_suite(cfg, &mut report);
    report.guard("oracle", "suite", r);
    let r = cell_statistics(cfg, &mut report);
    report.guard("cell-mc", "suite", r);
    let r = invariants(cfg, &mut report);
    report.guard("invariants", "suite", r);
    let r = approximation_gaps(cfg, &mut report);
    report.guard("expected-l", "suite", r);
    report
}

/// Largest deviation between the refined formulas and the oracle over
/// random small instances, per search order.
pub fn oracle_deviation(instances: usize, seed: u64) -> Result<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 2];
    for _ in 0..instances {
        let k = rng.random_range(1..=5usize);
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(0..=2usize).min(k - 1);
        let values: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..30.0)).collect();
        let pfa: f64 = rng.random_range(1e-6..0.9);
        let beta = -pfa.ln();
        let profile = NonCentralityProfile::new(values)?;
        for (slot, order) in [SearchOrder::CodePhaseFirst, SearchOrder::DopplerFirst].into_iter().enumerate() {
            let policy = SearchPolicy::new(order, m, beta)?;
            let formula = global_pdet_refined(&profile, &policy, n, k, order.into())?;
            let oracle = averaged_detection(&profile, beta, k, n, m, order)?;
            worst[slot] = worst[slot].max((formula - oracle).abs());
        }
    }
    Ok(worst)
}

fn oracle_suite(cfg: &ExperimentConfig, report: &mut ValidationReport) -> Result<()> {
    let [cf, df] = oracle_deviation(1000, cfg.seed)?;
    report.check("oracle", "code-first, 1000 random instances", cf <= 1e-12, format!("max |formula - oracle| = {cf:.3e}"));
    report.check("oracle", "doppler-first, 1000 random instances", df <= 1e-12, format!("max |formula - oracle| = {df:.3e}"));

    let profile: NonCentralityProfile<f64> = NonCentralityProfile::new(vec![9.0, 3.0, 0.5])?;
    for order in [SearchOrder::CodePhaseFirst, SearchOrder::DopplerFirst] {
        let policy = SearchPolicy::new(order, 1, 3.0)?;
        let f = global_pdet_refined(&profile, &policy, 4, 3, order.into())?;
        let o = averaged_detection(&profile, 3.0, 3, 4, 1, order)?;
        report.check(
            "oracle",
            format!("K=3 N=4 M=1 {order}"),
            (f - o).abs() <= 1e-12,
            format!("formula {f:.12} oracle {o:.12}"),
        );
    }

    // unequal neighbours on either side, as in a single residual-Doppler realization
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(1..=5usize);
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(0..k.min(3));
        let pfa = rng.random_range(1e-6..0.9);
        let table: Vec<f64> = (0..2 * k + 1).map(|_| rng.random::<f64>()).collect();
        let at = |o: i64| table[(o + k as i64) as usize];
        for (order, model) in [
            (SearchOrder::CodePhaseFirst, RefinedModel::CodeFirst),
            (SearchOrder::DopplerFirst, RefinedModel::DopplerFirst),
        ] {
            let a = averaged_detection_with(at, pfa, k, n, m, order)?;
            let b = refined_detection(at, pfa, n, k, m, model)?;
            worst = worst.max((a - b).abs());
        }
    }
    report.check("oracle", "asymmetric cell probabilities", worst <= 1e-12, format!("max deviation {worst:.3e}"));
    Ok(())
}

fn cell_statistics(cfg: &ExperimentConfig, report: &mut ValidationReport) -> Result<()> {
    let betas = [0.5, 2.0, 5.0, 10.0, 20.0];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (s, &l) in [0.0, 1.0, 5.0, 20.0].iter().enumerate() {
        let counts = cell_exceedance(l, &betas, MC_DRAWS, cfg.seed, s as u32);
        for (i, &b) in betas.iter().enumerate() {
            let p = cell_pdet(l, b)?;
            let (lo, hi) = counts.interval(i, MC_Z);
            worst = worst.max((counts.rate(i) - p).abs());
            if !(lo <= p && p <= hi) {
                bad.push(format!("L={l} beta={b}: {p:.6} outside [{lo:.6}, {hi:.6}]"));
            }
        }
    }
    report.check(
        "cell-mc",
        "fixed non-centrality, 20 points x 1e5 draws",
        bad.is_empty(),
        if bad.is_empty() { format!("max |rate - analytic| = {worst:.2e}") } else { bad.join("; ") },
    );

    let tol = ToleranceConfig::default();
    let probe = [2.0, 6.0, 10.0, 14.0];
    for (wi, w) in cfg.widths.iter().enumerate() {
        let mut bad = Vec::new();
        for l in 0..=cfg.l_max.min(2) {
            let counts = cell_exceedance_in_bin(&cfg.params, &w.grid, l, &probe, MC_DRAWS, cfg.seed.wrapping_add(wi as u64));
            for (i, &b) in probe.iter().enumerate() {
                let p = cell_pdet_exact(&cfg.params, &w.grid, l, b, &tol)?;
                let (lo, hi) = counts.interval(i, MC_Z);
                if !(lo <= p && p <= hi) {
                    bad.push(format!("l={l} beta={b}: {p:.6} outside [{lo:.6}, {hi:.6}]"));
                }
            }
        }
        report.check(
            "cell-mc",
            format!("W={} Hz, random residual Doppler", w.grid.bin_width_hz),
            bad.is_empty(),
            if bad.is_empty() { "residual-averaged cell probabilities inside 4-sigma Wilson bounds".to_string() } else { bad.join("; ") },
        );
    }
    Ok(())
}

/// `∫_{-X}^{X} sinc²(x) dx`.
pub fn sinc2_integral(x: f64) -> f64 {
    let px = std::f64::consts::PI * x;
    2.0 / std::f64::consts::PI * (sine_integral(2.0 * px) - px.sin().powi(2) / px)
}

/// `(W·T)·(L_0 + 2·Σ_{l=1..offsets} L_l) / L_max`.
pub fn energy_coverage(params: &SignalParams<f64>, grid: &DopplerGrid<f64>, offsets: usize) -> f64 {
    let l0 = expected_noncentrality(params, grid, 0);
    let side: f64 = (1..=offsets).map(|l| expected_noncentrality(params, grid, l)).sum();
    grid.relative_width * (l0 + 2.0 * side) / params.l_max()
}

fn invariants(cfg: &ExperimentConfig, report: &mut ValidationReport) -> Result<()> {
    for w in &cfg.widths {
        let cov = energy_coverage(&cfg.params, &w.grid, ENERGY_OFFSETS);
        let exact = sinc2_integral((ENERGY_OFFSETS as f64 + 0.5) * w.grid.relative_width);
        report.check(
            "invariants",
            format!("energy sum W={} Hz", w.grid.bin_width_hz),
            (cov - exact).abs() <= 1e-9,
            format!("sum {cov:.10} vs integral of sinc^2 over the covered band {exact:.10}"),
        );
        report.add(
            "invariants",
            format!("energy coverage W={} Hz", w.grid.bin_width_hz),
            Status::Info,
            format!(
                "{:.4}% of the signal energy lies within +-{ENERGY_OFFSETS} bins (tail {:.2e})",
                100.0 * cov,
                1.0 - cov
            ),
        );
    }

    let mut ordered = true;
    for i in 0..=140 {
        let wt = 0.1 + 0.01 * i as f64;
        let grid = DopplerGrid::new(wt / cfg.params.t_per, cfg.f_dmax_hz.max(wt / cfg.params.t_per), cfg.params.t_per)?;
        let v: Vec<f64> = (0..3).map(|l| expected_noncentrality(&cfg.params, &grid, l)).collect();
        ordered &= v[0] > v[1] && v[1] > v[2] && v[0] <= cfg.params.l_max();
    }
    report.check("invariants", "L0 > L1 > L2 for W*T in [0.1, 1.5]", ordered, "141 widths");

    let mut mono = true;
    for i in 0..20 {
        for j in 0..20 {
            let (l, b) = (2.0 * i as f64, 1.5 * j as f64);
            let here = cell_pdet(l, b)?;
            mono &= cell_pdet(l + 2.0, b)? >= here - 1e-15 && cell_pdet(l, b + 1.5)? <= here + 1e-15;
        }
    }
    report.check("invariants", "cell P_det monotone in L and beta", mono, "20 x 20 grid");

    let betas = cfg.betas()?;
    let mut worst = 0.0f64;
    for &b in &betas {
        worst = worst.max((cell_pdet(0.0, b)? - cell_pfa(b)?).abs());
    }
    report.check("invariants", "cell P_det(L=0) = P_fa", worst <= 1e-10, format!("max deviation {worst:.2e}"));

    let mut m_ok = true;
    let mut bounded = true;
    for w in &cfg.widths {
        let profile = NonCentralityProfile::expected(&cfg.params, &w.grid, cfg.l_max)?;
        let k = w.grid.num_bins;
        for &b in &betas {
            for model in [RefinedModel::CodeFirst, RefinedModel::DopplerFirst, RefinedModel::Approx] {
                let mut prev = -1.0;
                for m in 0..k.min(4) {
                    let v = global_pdet_refined(&profile, &SearchPolicy::new(cfg.order, m, b)?, CODE_LENGTH, k, model)?;
                    bounded &= (0.0..=1.0).contains(&v);
                    m_ok &= v >= prev;
                    prev = v;
                }
            }
        }
    }
    report.check("invariants", "global P_DET non-decreasing in M", m_ok, "all widths, models and thresholds");
    report.check("invariants", "global probabilities in [0, 1]", bounded, "all widths, models and thresholds");
    Ok(())
}

fn approximation_gaps(cfg: &ExperimentConfig, report: &mut ValidationReport) -> Result<()> {
    let betas = cfg.betas()?;
    let tol = ToleranceConfig::default();
    for w in &cfg.widths {
        for l in 0..=cfg.l_max.min(2) {
            let l_exp = expected_noncentrality(&cfg.params, &w.grid, l);
            let mut worst = (0.0f64, 0.0f64);
            let mut prev = f64::INFINITY;
            let mut monotone = true;
            for &b in &betas {
                let exact = cell_pdet_exact(&cfg.params, &w.grid, l, b, &tol)?;
                monotone &= exact <= prev + 1e-12;
                prev = exact;
                let d = exact - cell_pdet(l_exp, b)?;
                if d.abs() > worst.0.abs() {
                    worst = (d, b);
                }
            }
            let name = format!("W={} Hz (W*T={:.2}) offset {l}", w.grid.bin_width_hz, w.grid.relative_width);
            let detail = format!(
                "max exact - expected-L = {:+.4} at beta {:.3}",
                worst.0, worst.1
            );
            if !monotone {
                report.add("expected-l", name, Status::Fail, "averaged cell probability not monotone in beta");
            } else if worst.0.abs() > GAP_THRESHOLD {
                report.add("expected-l", name, Status::KnownGap, format!("known approximation gap: {detail}"));
            } else {
                report.add("expected-l", name, Status::Pass, detail);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc2_integral_limits() {
        assert!((sinc2_integral(1e6) - 1.0).abs() < 1e-6);
        let p = SignalParams::new(40.0, 1e-3).unwrap();
        let g = DopplerGrid::new(500.0, 5000.0, 1e-3).unwrap();
        let c0 = energy_coverage(&p, &g, 0);
        assert!((c0 - sinc2_integral(0.25)).abs() < 1e-12);
    }

    #[test]
    fn oracle_suite_is_exact() {
        let [a, b] = oracle_deviation(200, 3).unwrap();
        assert!(a <= 1e-12 && b <= 1e-12);
    }

    #[test]
    fn default_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"cn0_dbhz": 40, "tper_ms": 1, "trials": 10000}"#).unwrap();
        let report = validate(&cfg);
        let text = report.render();
        assert!(report.passed(), "{text}");
        let gaps: Vec<&Check> = report.checks.iter().filter(|c| c.status == Status::KnownGap).collect();
        for (w, l) in [(500.0, 1), (700.0, 1)] {
            let needle = format!("W={w} Hz");
            assert!(
                gaps.iter().any(|c| c.name.starts_with(&needle) && c.name.ends_with(&format!("offset {l}"))),
                "{text}"
            );
        }
        assert!(!gaps.iter().any(|c| c.name.starts_with("W=200 Hz")), "{text}");
    }
}
