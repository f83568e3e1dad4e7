//! Monte Carlo simulation of the serial search, either from the exact
//! per-cell metric statistics or from sampled waveforms.

mod metric;
mod monte_carlo;
mod rng;
mod waveform;

pub use metric::{draw_metric, metric_records, metric_records_direct, Record};
pub use monte_carlo::{
    cell_exceedance, cell_exceedance_in_bin, monte_carlo, wilson_interval, CellCounts,
    MonteCarloResult,
};
pub use rng::{substream, StreamKind};
pub use waveform::{dirichlet_squared, WaveformChannel, WaveformConfig};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::analytic::{DopplerGrid, SearchOrder, SearchPolicy, SignalParams};
use crate::error::{Error, Result};
use crate::numerics::sinc;
use crate::prncode::CODE_LENGTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fidelity {
    /// Decision metrics drawn from their exact distribution.
    MetricLevel,
    /// Sampled signal, downconversion, despreading and averaging.
    Waveform,
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fidelity::MetricLevel => "metric",
            Fidelity::Waveform => "waveform",
        })
    }
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metric" | "MetricLevel" => Ok(Fidelity::MetricLevel),
            "waveform" | "Waveform" => Ok(Fidelity::Waveform),
            other => Err(Error::InvalidConfig(format!(
                "unknown fidelity '{other}' (expected metric or waveform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub fidelity: Fidelity,
    pub params: SignalParams<f64>,
    pub grid: DopplerGrid<f64>,
    pub policy: SearchPolicy<f64>,
    /// Largest bin offset that receives signal energy.
    pub l_max: usize,
    /// Code phases per bin; the waveform path requires the full code length.
    pub code_phases: usize,
    pub waveform: WaveformConfig,
}

impl SimConfig {
    pub fn new(
        params: SignalParams<f64>,
        grid: DopplerGrid<f64>,
        policy: SearchPolicy<f64>,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            trials,
            seed,
            fidelity: Fidelity::MetricLevel,
            params,
            grid,
            policy,
            l_max: 2,
            code_phases: CODE_LENGTH,
            waveform: WaveformConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.code_phases == 0 {
            return Err(Error::InvalidConfig("code phase count must be >= 1".into()));
        }
        self.policy.check_bins(self.grid.num_bins)?;
        if self.fidelity == Fidelity::Waveform {
            if self.code_phases != CODE_LENGTH {
                return Err(Error::InvalidConfig(format!(
                    "waveform simulation searches all {CODE_LENGTH} code phases"
                )));
            }
            self.waveform.decimation()?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> SearchGeometry {
        SearchGeometry {
            bins: self.grid.num_bins,
            phases: self.code_phases,
            order: self.policy.order,
            l_max: self.l_max,
            l_max_param: self.params.l_max(),
            relative_width: self.grid.relative_width,
        }
    }
}

/// True signal location for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlacement {
    pub correct_bin: usize,
    pub correct_phase: usize,
    /// `(f_D − f_bin)·T_per` for the correct bin, uniform on `±W·T_per/2`.
    pub residual: f64,
}

/// Search grid dimensions, visiting order and signal leakage model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGeometry {
    pub bins: usize,
    pub phases: usize,
    pub order: SearchOrder,
    pub l_max: usize,
    pub l_max_param: f64,
    pub relative_width: f64,
}

impl SearchGeometry {
    pub fn draw_placement<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialPlacement {
        let correct_bin = rng.random_range(0..self.bins);
        let correct_phase = rng.random_range(0..self.phases);
        let residual = (rng.random::<f64>() - 0.5) * self.relative_width;
        TrialPlacement {
            correct_bin,
            correct_phase,
            residual,
        }
    }

    /// Cell visited at step `pos`.
    pub fn cell_at(&self, pos: usize) -> (usize, usize) {
        match self.order {
            SearchOrder::CodePhaseFirst => (pos / self.phases, pos % self.phases),
            SearchOrder::DopplerFirst => (pos % self.bins, pos / self.bins),
        }
    }

    pub fn position_of(&self, bin: usize, phase: usize) -> usize {
        match self.order {
            SearchOrder::CodePhaseFirst => bin * self.phases + phase,
            SearchOrder::DopplerFirst => phase * self.bins + bin,
        }
    }

    /// Realized non-centrality of a cell: `L_max·sinc²(x − o·W·T_per)` at the
    /// correct phase within `l_max` bins, zero elsewhere.
    pub fn noncentrality(&self, placement: &TrialPlacement, bin: usize, phase: usize) -> f64 {
        let o = bin as i64 - placement.correct_bin as i64;
        if phase != placement.correct_phase || o.unsigned_abs() as usize > self.l_max {
            return 0.0;
        }
        let s = sinc(placement.residual - o as f64 * self.relative_width);
        self.l_max_param * s * s
    }

    /// Signal cells as `(visit position, L)`, in visiting order.
    pub fn signal_positions(&self, placement: &TrialPlacement) -> Vec<(usize, f64)> {
        let lo = placement.correct_bin.saturating_sub(self.l_max);
        let hi = (placement.correct_bin + self.l_max).min(self.bins - 1);
        let mut cells: Vec<(usize, f64)> = (lo..=hi)
            .map(|b| {
                (
                    self.position_of(b, placement.correct_phase),
                    self.noncentrality(placement, b, placement.correct_phase),
                )
            })
            .collect();
        cells.sort_by_key(|c| c.0);
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Detection,
    FalseStop,
    NoStop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub stopped: bool,
    pub stop_bin: Option<usize>,
    pub stop_phase: Option<usize>,
    pub correct_bin: usize,
    pub correct_phase: usize,
    pub classified: Classification,
}

impl TrialOutcome {
    /// Outcome at threshold `beta` from a trial's records.
    pub fn from_records(records: &[Record], placement: &TrialPlacement, beta: f64, m: usize) -> Self {
        let stop = first_above(records, beta);
        let classified = match stop {
            None => Classification::NoStop,
            Some(r) if r.phase == placement.correct_phase
                && r.bin.abs_diff(placement.correct_bin) <= m =>
            {
                Classification::Detection
            }
            Some(_) => Classification::FalseStop,
        };
        Self {
            stopped: stop.is_some(),
            stop_bin: stop.map(|r| r.bin),
            stop_phase: stop.map(|r| r.phase),
            correct_bin: placement.correct_bin,
            correct_phase: placement.correct_phase,
            classified,
        }
    }
}

/// First record strictly above `beta`; records are increasing.
pub(crate) fn first_above(records: &[Record], beta: f64) -> Option<&Record> {
    let i = records.partition_point(|r| r.value <= beta);
    records.get(i)
}

/// One metric-level detection trial at the configured threshold.
pub fn run_metric_trial<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> TrialOutcome {
    let geometry = config.geometry();
    let placement = geometry.draw_placement(rng);
    let beta = config.policy.threshold;
    let records = metric_records(&geometry, Some(&placement), beta, rng);
    TrialOutcome::from_records(&records, &placement, beta, config.policy.accept_half_width)
}

/// One waveform-level detection trial at the configured threshold.
pub fn run_waveform_trial<R: Rng + ?Sized>(
    config: &SimConfig,
    waveform: &WaveformConfig,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let geometry = config.geometry();
    let placement = geometry.draw_placement(rng);
    let carrier_phase = rng.random::<f64>() * std::f64::consts::TAU;
    let channel = WaveformChannel::for_placement(
        *waveform,
        &config.params,
        &config.grid,
        &placement,
        carrier_phase,
        waveform.prn_signal,
    )?;
    let beta = config.policy.threshold;
    let records = waveform::waveform_records(&channel, &geometry, &config.grid, beta, rng);
    Ok(TrialOutcome::from_records(
        &records,
        &placement,
        beta,
        config.policy.accept_half_width,
    ))
}
