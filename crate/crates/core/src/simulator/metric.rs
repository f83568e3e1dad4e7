use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{SearchGeometry, TrialPlacement};

/// One decision metric `|μ + n|²` for a cell with non-centrality `l_param`.
///
/// `μ` has magnitude `√(L/2)` and uniform phase; `n` is circular complex
/// Gaussian with variance 1/2 per component, so `2·|X|²` is non-central χ²
/// with two degrees of freedom and non-centrality `L`.
pub fn draw_metric<R: Rng + ?Sized>(l_param: f64, rng: &mut R) -> f64 {
    if l_param == 0.0 {
        // |n|² is exponential with unit mean
        return Exp1.sample(rng);
    }
    let amp = (0.5 * l_param).sqrt();
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    let nr: f64 = StandardNormal.sample(rng);
    let ni: f64 = StandardNormal.sample(rng);
    let re = amp * phase.cos() + std::f64::consts::FRAC_1_SQRT_2 * nr;
    let im = amp * phase.sin() + std::f64::consts::FRAC_1_SQRT_2 * ni;
    re * re + im * im
}

/// Prefix maximum of the visit-ordered metric sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub value: f64,
    pub bin: usize,
    pub phase: usize,
}

/// Visits the grid in search order and returns the metric records, stopping
/// as soon as one exceeds `max_beta`. The stop for any `β ≤ max_beta` is the
/// first record above `β`.
///
/// Runs of noise-only cells are not drawn one by one: with running maximum
/// `r`, the number of noise cells before the next exceedance is geometric
/// with success probability `e^{-r}`, and the exceeding value is `r` plus a
/// unit exponential. This has the same law as drawing every cell.
pub fn metric_records<R: Rng + ?Sized>(
    geometry: &SearchGeometry,
    placement: Option<&TrialPlacement>,
    max_beta: f64,
    rng: &mut R,
) -> Vec<Record> {
    let total = geometry.bins * geometry.phases;
    let signal = match placement {
        Some(p) => geometry.signal_positions(p),
        None => Vec::new(),
    };
    let mut records = Vec::new();
    let mut best = 0.0_f64;
    let mut pos = 0usize;
    let push = |value: f64, pos: usize, records: &mut Vec<Record>| {
        let (bin, phase) = geometry.cell_at(pos);
        records.push(Record { value, bin, phase });
    };

    let mut next_signal = signal.iter().peekable();
    loop {
        let run_end = next_signal.peek().map_or(total, |&&(p, _)| p);
        while pos < run_end {
            let p_exceed = (-best).exp();
            let rate = -(-p_exceed).ln_1p();
            let e: f64 = Exp1.sample(rng);
            let skip = e / rate;
            if !(skip < (run_end - pos) as f64) {
                break;
            }
            pos += skip as usize;
            let extra: f64 = Exp1.sample(rng);
            best += extra;
            push(best, pos, &mut records);
            if best > max_beta {
                return records;
            }
            pos += 1;
        }
        match next_signal.next() {
            None => return records,
            Some(&(p, l_param)) => {
                let v = draw_metric(l_param, rng);
                if v > best {
                    best = v;
                    push(v, p, &mut records);
                    if best > max_beta {
                        return records;
                    }
                }
                pos = p + 1;
            }
        }
    }
}

/// Reference implementation drawing every visited cell; used to check
/// [`metric_records`].
pub fn metric_records_direct<R: Rng + ?Sized>(
    geometry: &SearchGeometry,
    placement: Option<&TrialPlacement>,
    max_beta: f64,
    rng: &mut R,
) -> Vec<Record> {
    let mut records = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for pos in 0..geometry.bins * geometry.phases {
        let (bin, phase) = geometry.cell_at(pos);
        let l = placement.map_or(0.0, |p| geometry.noncentrality(p, bin, phase));
        let v = draw_metric(l, rng);
        if v > best {
            best = v;
            records.push(Record { value: v, bin, phase });
            if best > max_beta {
                break;
            }
        }
    }
    records
}
