use rand::Rng;
use rayon::prelude::*;

use super::metric::{draw_metric, metric_records};
use super::rng::{substream, StreamKind};
use super::waveform::{waveform_records, WaveformChannel};
use super::{first_above, Fidelity, SimConfig};
use crate::analytic::{DopplerGrid, SignalParams};
use crate::error::{Error, Result};
use crate::numerics::sinc;

/// Aggregated outcome counts of a Monte Carlo run over a threshold grid.
///
/// Detection counts are kept per signed stop-bin offset, so one run serves
/// every acceptance half-width `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub betas: Vec<f64>,
    pub bins: usize,
    pub trials: u64,
    pub fa_trials: u64,
    /// Per threshold, stops at the correct code phase indexed by
    /// `offset + bins − 1` with `offset = stop bin − correct bin`.
    pub offset_hist: Vec<Vec<u64>>,
    /// Per threshold, stops at a wrong code phase.
    pub wrong_phase: Vec<u64>,
    pub no_stop: Vec<u64>,
    /// Per threshold, false-alarm runs that stopped anywhere.
    pub fa_stops: Vec<u64>,
}

impl MonteCarloResult {
    pub fn offset_count(&self, beta_index: usize, offset: i64) -> u64 {
        let i = offset + self.bins as i64 - 1;
        if i < 0 {
            return 0;
        }
        self.offset_hist[beta_index].get(i as usize).copied().unwrap_or(0)
    }

    /// Stops at the correct phase within `±m` bins.
    pub fn detections(&self, beta_index: usize, m: usize) -> u64 {
        let m = m as i64;
        (-m..=m).map(|o| self.offset_count(beta_index, o)).sum()
    }

    pub fn p_det(&self, beta_index: usize, m: usize) -> f64 {
        self.detections(beta_index, m) as f64 / self.trials as f64
    }

    pub fn p_fa(&self, beta_index: usize) -> f64 {
        self.fa_stops[beta_index] as f64 / self.fa_trials as f64
    }

    pub fn det_interval(&self, beta_index: usize, m: usize, z: f64) -> (f64, f64) {
        wilson_interval(self.detections(beta_index, m), self.trials, z)
    }

    pub fn fa_interval(&self, beta_index: usize, z: f64) -> (f64, f64) {
        wilson_interval(self.fa_stops[beta_index], self.fa_trials, z)
    }
}

/// Wilson score interval for `successes` out of `n` at `z` standard scores.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone)]
struct Counters {
    nb: usize,
    width: usize,
    hist: Vec<u64>,
    wrong_phase: Vec<u64>,
    no_stop: Vec<u64>,
    fa_stops: Vec<u64>,
}

impl Counters {
    fn new(nb: usize, bins: usize) -> Self {
        let width = 2 * bins - 1;
        Self {
            nb,
            width,
            hist: vec![0; nb * width],
            wrong_phase: vec![0; nb],
            no_stop: vec![0; nb],
            fa_stops: vec![0; nb],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        let add = |a: &mut [u64], b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.hist, &other.hist);
        add(&mut self.wrong_phase, &other.wrong_phase);
        add(&mut self.no_stop, &other.no_stop);
        add(&mut self.fa_stops, &other.fa_stops);
        self
    }
}

/// Runs `config.trials` detection trials and as many false-alarm trials,
/// evaluating each against every threshold in `betas` from one pass.
///
/// Every trial draws from its own substream of `config.seed` and the counts
/// are integers, so the result is identical for any number of threads.
pub fn monte_carlo(config: &SimConfig, betas: &[f64]) -> Result<MonteCarloResult> {
    config.validate()?;
    if betas.is_empty() || betas.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::InvalidConfig("thresholds must be non-empty and >= 0".into()));
    }
    let max_beta = betas.iter().copied().fold(0.0, f64::max);
    let geometry = config.geometry();
    let bins = geometry.bins;
    let nb = betas.len();
    let wf = config.waveform;

    let detection = |mut acc: Counters, t: u64| -> Result<Counters> {
        let mut rng = substream(config.seed, StreamKind::Detection, t);
        let placement = geometry.draw_placement(&mut rng);
        let records = match config.fidelity {
            Fidelity::MetricLevel => metric_records(&geometry, Some(&placement), max_beta, &mut rng),
            Fidelity::Waveform => {
                let carrier_phase = rng.random::<f64>() * std::f64::consts::TAU;
                let ch = WaveformChannel::for_placement(
                    wf,
                    &config.params,
                    &config.grid,
                    &placement,
                    carrier_phase,
                    wf.prn_signal,
                )?;
                waveform_records(&ch, &geometry, &config.grid, max_beta, &mut rng)
            }
        };
        for (i, &beta) in betas.iter().enumerate() {
            match first_above(&records, beta) {
                None => acc.no_stop[i] += 1,
                Some(r) if r.phase == placement.correct_phase => {
                    let o = r.bin as i64 - placement.correct_bin as i64 + bins as i64 - 1;
                    acc.hist[i * acc.width + o as usize] += 1;
                }
                Some(_) => acc.wrong_phase[i] += 1,
            }
        }
        Ok(acc)
    };

    let false_alarm = |mut acc: Counters, t: u64| -> Result<Counters> {
        let mut rng = substream(config.seed, StreamKind::FalseAlarm, t);
        let records = match config.fidelity {
            Fidelity::MetricLevel => metric_records(&geometry, None, max_beta, &mut rng),
            Fidelity::Waveform => {
                // the signal is present but searched for with another PRN
                let placement = geometry.draw_placement(&mut rng);
                let carrier_phase = rng.random::<f64>() * std::f64::consts::TAU;
                let ch = WaveformChannel::for_placement(
                    wf,
                    &config.params,
                    &config.grid,
                    &placement,
                    carrier_phase,
                    wf.prn_false_alarm,
                )?;
                waveform_records(&ch, &geometry, &config.grid, max_beta, &mut rng)
            }
        };
        let top = records.last().map_or(f64::NEG_INFINITY, |r| r.value);
        for (i, &beta) in betas.iter().enumerate() {
            if top > beta {
                acc.fa_stops[i] += 1;
            }
        }
        Ok(acc)
    };

    let det = (0..config.trials)
        .into_par_iter()
        .try_fold(|| Counters::new(nb, bins), detection)
        .try_reduce(|| Counters::new(nb, bins), |a, b| Ok(a.merge(b)))?;
    let fa = (0..config.trials)
        .into_par_iter()
        .try_fold(|| Counters::new(nb, bins), false_alarm)
        .try_reduce(|| Counters::new(nb, bins), |a, b| Ok(a.merge(b)))?;

    let width = det.width;
    Ok(MonteCarloResult {
        betas: betas.to_vec(),
        bins,
        trials: config.trials,
        fa_trials: config.trials,
        offset_hist: (0..det.nb)
            .map(|i| det.hist[i * width..(i + 1) * width].to_vec())
            .collect(),
        wrong_phase: det.wrong_phase,
        no_stop: det.no_stop,
        fa_stops: fa.fa_stops,
    })
}

/// Exceedance counts of single-cell metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCounts {
    pub draws: u64,
    pub exceed: Vec<u64>,
}

impl CellCounts {
    pub fn rate(&self, i: usize) -> f64 {
        self.exceed[i] as f64 / self.draws as f64
    }

    pub fn interval(&self, i: usize, z: f64) -> (f64, f64) {
        wilson_interval(self.exceed[i], self.draws, z)
    }
}

const CHUNK: u64 = 8192;

fn chunked_counts<F>(betas: &[f64], draws: u64, seed: u64, stream: u64, draw: F) -> CellCounts
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let chunks = draws.div_ceil(CHUNK);
    let exceed = (0..chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; betas.len()],
            |mut acc, c| {
                let mut rng = substream(seed, StreamKind::CellDraws, (stream << 32) | c);
                let len = CHUNK.min(draws - c * CHUNK);
                for _ in 0..len {
                    let v = draw(&mut rng);
                    for (a, &b) in acc.iter_mut().zip(betas) {
                        if v > b {
                            *a += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; betas.len()],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    CellCounts { draws, exceed }
}

/// Draws `draws` metrics with fixed non-centrality and counts how many
/// exceed each threshold. `stream` separates independent calls sharing a seed.
pub fn cell_exceedance(l_param: f64, betas: &[f64], draws: u64, seed: u64, stream: u32) -> CellCounts {
    chunked_counts(betas, draws, seed, stream as u64, |rng| draw_metric(l_param, rng))
}

/// Like [`cell_exceedance`] for the cell at bin offset `l`, with the
/// residual Doppler drawn uniformly over that bin for every draw.
pub fn cell_exceedance_in_bin(
    params: &SignalParams<f64>,
    grid: &DopplerGrid<f64>,
    l: usize,
    betas: &[f64],
    draws: u64,
    seed: u64,
) -> CellCounts {
    let wt = grid.relative_width;
    let l_max = params.l_max();
    let lower = (l as f64 - 0.5) * wt;
    chunked_counts(betas, draws, seed, 0x8000_0000 | l as u64, |rng| {
        let x = lower + rng.random::<f64>() * wt;
        let s = sinc(x);
        draw_metric(l_max * s * s, rng)
    })
}
