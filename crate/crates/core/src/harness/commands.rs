use rayon::prelude::*;

use super::config::{ExperimentConfig, WidthSetup};
use super::table::{num, Table};
use crate::analytic::{
    cell_pdet, cell_pfa, expected_noncentrality, roc_curve, RocCurve, RocRequest, SearchPolicy,
};
use crate::error::Result;
use crate::numerics::ToleranceConfig;
use crate::prncode::CODE_LENGTH;
use crate::simulator::{cell_exceedance_in_bin, monte_carlo, MonteCarloResult, SimConfig};

/// z-score of the reported confidence intervals (95 %).
pub const REPORT_Z: f64 = 1.96;

/// Seed for the `index`-th bin width, so widths do not share random draws.
pub fn width_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn request(cfg: &ExperimentConfig, w: &WidthSetup) -> RocRequest<f64> {
    RocRequest {
        params: cfg.params,
        grid: w.grid,
        order: cfg.order,
        accept_half_width: w.accept_half_width,
        l_max: cfg.l_max,
        code_phases: CODE_LENGTH,
        tolerance: ToleranceConfig::default(),
    }
}

pub fn sim_config(cfg: &ExperimentConfig, index: usize) -> Result<SimConfig> {
    let w = &cfg.widths[index];
    let policy = SearchPolicy::new(cfg.order, w.accept_half_width, 0.0)?;
    let mut sim = SimConfig::new(cfg.params, w.grid, policy, cfg.trials, width_seed(cfg.seed, index))?;
    sim.fidelity = cfg.fidelity;
    sim.l_max = cfg.l_max;
    sim.validate()?;
    Ok(sim)
}

/// Cell detection probabilities per width and offset: expected-L model,
/// residual-averaged model, the `L_max` / noise-only reference, and a Monte
/// Carlo estimate with the residual Doppler drawn per cell.
pub fn cell_probs(cfg: &ExperimentConfig) -> Result<Table> {
    let betas = cfg.betas()?;
    let tol = ToleranceConfig::default();
    let mut table = Table::new([
        "width_hz",
        "relative_width",
        "offset",
        "beta",
        "p_fa_cell",
        "l_expected",
        "p_det_expected",
        "p_det_exact",
        "p_det_reference",
        "p_det_mc",
        "ci_low",
        "ci_high",
        "draws",
    ]);
    let blocks = cfg
        .widths
        .par_iter()
        .enumerate()
        .map(|(wi, w)| {
            let mut rows = Vec::new();
            for l in 0..=cfg.l_max {
                let l_exp = expected_noncentrality(&cfg.params, &w.grid, l);
                let mc = cell_exceedance_in_bin(
                    &cfg.params,
                    &w.grid,
                    l,
                    &betas,
                    cfg.trials,
                    width_seed(cfg.seed, wi),
                );
                for (i, &beta) in betas.iter().enumerate() {
                    let reference = if l == 0 {
                        cell_pdet(cfg.params.l_max(), beta)?
                    } else {
                        cell_pfa(beta)?
                    };
                    let (lo, hi) = mc.interval(i, REPORT_Z);
                    rows.push(vec![
                        num(w.grid.bin_width_hz),
                        num(w.grid.relative_width),
                        l.to_string(),
                        num(beta),
                        num(cell_pfa(beta)?),
                        num(l_exp),
                        num(cell_pdet(l_exp, beta)?),
                        num(crate::analytic::cell_pdet_exact(&cfg.params, &w.grid, l, beta, &tol)?),
                        num(reference),
                        num(mc.rate(i)),
                        num(lo),
                        num(hi),
                        mc.draws.to_string(),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    for row in blocks.into_iter().flatten() {
        table.push(row);
    }
    Ok(table)
}

fn roc_header(l_max: usize, with_mc: bool) -> Vec<String> {
    let mut h: Vec<String> = ["width_hz", "relative_width", "bins", "m", "order", "beta", "p_fa_cell"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..=l_max).map(|l| format!("p_det_cell_l{l}")));
    h.extend((0..=l_max).map(|l| format!("p_det_cell_l{l}_exact")));
    h.extend(
        [
            "p_fa_global",
            "p_det_naive",
            "p_det_code_first",
            "p_det_doppler_first",
            "p_det_approx",
            "p_det_exact",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    if with_mc {
        h.extend(
            ["p_det_mc", "p_fa_mc", "ci_low", "ci_high", "trials", "fa_ci_low", "fa_ci_high"]
                .iter()
                .map(|s| s.to_string()),
        );
    }
    h
}

/// Analytic curve for every width, plus a simulation when requested.
pub fn roc_results(
    cfg: &ExperimentConfig,
    with_mc: bool,
) -> Result<Vec<(RocCurve<f64>, Option<MonteCarloResult>)>> {
    let betas = cfg.betas()?;
    cfg.widths
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let curve = roc_curve(&request(cfg, w), &betas)?;
            let mc = if with_mc {
                Some(monte_carlo(&sim_config(cfg, i)?, &betas)?)
            } else {
                None
            };
            Ok((curve, mc))
        })
        .collect()
}

fn roc_table(cfg: &ExperimentConfig, results: &[(RocCurve<f64>, Option<MonteCarloResult>)]) -> Table {
    let with_mc = results.iter().any(|r| r.1.is_some());
    let mut table = Table::new(roc_header(cfg.l_max, with_mc));
    for (w, (curve, mc)) in cfg.widths.iter().zip(results) {
        for (i, p) in curve.points.iter().enumerate() {
            let mut row = vec![
                num(w.grid.bin_width_hz),
                num(w.grid.relative_width),
                w.grid.num_bins.to_string(),
                w.accept_half_width.to_string(),
                cfg.order.to_string(),
                num(p.beta),
                num(p.p_fa_cell),
            ];
            row.extend(p.p_det_cell.iter().map(|&v| num(v)));
            row.extend(p.p_det_cell_exact.iter().map(|&v| num(v)));
            row.extend(
                [
                    p.p_fa_global,
                    p.p_det_naive,
                    p.p_det_code_first,
                    p.p_det_doppler_first,
                    p.p_det_approx,
                    p.p_det_exact,
                ]
                .map(num),
            );
            if let Some(mc) = mc {
                let m = w.accept_half_width;
                let (lo, hi) = mc.det_interval(i, m, REPORT_Z);
                let (flo, fhi) = mc.fa_interval(i, REPORT_Z);
                row.extend([
                    num(mc.p_det(i, m)),
                    num(mc.p_fa(i)),
                    num(lo),
                    num(hi),
                    mc.trials.to_string(),
                    num(flo),
                    num(fhi),
                ]);
            }
            table.push(row);
        }
    }
    table
}

pub fn roc(cfg: &ExperimentConfig, with_mc: bool) -> Result<Table> {
    Ok(roc_table(cfg, &roc_results(cfg, with_mc)?))
}

/// Simulation output: the curve table with Monte Carlo columns and the
/// per-threshold stop histogram.
pub struct SimulateOutput {
    pub roc: Table,
    pub offsets: Table,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    let results = roc_results(cfg, true)?;
    let roc = roc_table(cfg, &results);
    let mut offsets = Table::new(["width_hz", "m", "beta", "outcome", "offset", "count", "trials"]);
    for (w, (_, mc)) in cfg.widths.iter().zip(&results) {
        let Some(mc) = mc else { continue };
        for (i, &beta) in mc.betas.iter().enumerate() {
            let base = |outcome: &str, offset: String, count: u64| {
                vec![
                    num(w.grid.bin_width_hz),
                    w.accept_half_width.to_string(),
                    num(beta),
                    outcome.to_string(),
                    offset,
                    count.to_string(),
                    mc.trials.to_string(),
                ]
            };
            let k = mc.bins as i64;
            for o in -(k - 1)..k {
                let c = mc.offset_count(i, o);
                if c > 0 {
                    offsets.push(base("correct_phase", o.to_string(), c));
                }
            }
            offsets.push(base("wrong_phase", String::new(), mc.wrong_phase[i]));
            offsets.push(base("no_stop", String::new(), mc.no_stop[i]));
        }
    }
    Ok(SimulateOutput { roc, offsets })
}
