use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::analytic::{DopplerGrid, SearchOrder, SignalParams};
use crate::error::{Error, Result};
use crate::simulator::Fidelity;

/// Bin widths used when the config does not list any.
pub const DEFAULT_BIN_WIDTHS_HZ: [f64; 4] = [200.0, 500.0, 700.0, 1000.0];
pub const DEFAULT_FDMAX_HZ: f64 = 5000.0;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_190_417;
pub const DEFAULT_LMAX: usize = 2;
/// Offsets up to this are accepted for `lmax`.
pub const MAX_LMAX: usize = 50;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    cn0_dbhz: f64,
    tper_ms: f64,
    fdmax_hz: Option<f64>,
    bin_widths_hz: Option<Vec<f64>>,
    m_by_width: Option<BTreeMap<String, usize>>,
    beta_grid: Option<BetaGridSpec>,
    trials: Option<u64>,
    seed: Option<u64>,
    fidelity: Option<String>,
    order: Option<String>,
    lmax: Option<usize>,
}

/// Thresholds whose cell false-alarm probabilities are log-spaced over
/// `[min_pfa, max_pfa]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaGridSpec {
    pub min_pfa: f64,
    pub max_pfa: f64,
    pub points: usize,
}

impl Default for BetaGridSpec {
    fn default() -> Self {
        Self {
            min_pfa: 1e-9,
            max_pfa: 0.5,
            points: 60,
        }
    }
}

impl BetaGridSpec {
    pub fn betas(&self) -> Result<Vec<f64>> {
        crate::analytic::log_spaced_beta_grid(self.min_pfa, self.max_pfa, self.points)
    }
}

/// One bin width of an experiment with its acceptance half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthSetup {
    pub grid: DopplerGrid<f64>,
    pub accept_half_width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SignalParams<f64>,
    pub f_dmax_hz: f64,
    pub widths: Vec<WidthSetup>,
    pub beta_grid: BetaGridSpec,
    pub trials: u64,
    pub seed: u64,
    pub fidelity: Fidelity,
    pub order: SearchOrder,
    pub l_max: usize,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub fidelity: Option<Fidelity>,
    pub order: Option<SearchOrder>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            Error::InvalidConfig(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {}", path.display(), strip(e))))
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let params = SignalParams::new(raw.cn0_dbhz, raw.tper_ms * 1e-3)?;
        let f_dmax_hz = raw.fdmax_hz.unwrap_or(DEFAULT_FDMAX_HZ);
        let widths_hz = raw.bin_widths_hz.unwrap_or_else(|| DEFAULT_BIN_WIDTHS_HZ.to_vec());
        if widths_hz.is_empty() {
            return Err(Error::InvalidConfig("bin_widths_hz must not be empty".into()));
        }
        let mut m_for = vec![0usize; widths_hz.len()];
        for (key, &m) in raw.m_by_width.iter().flatten() {
            let w: f64 = key.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("m_by_width key '{key}' is not a bin width in Hz"))
            })?;
            let i = widths_hz
                .iter()
                .position(|&x| (x - w).abs() <= 1e-9 * x.abs().max(1.0))
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "m_by_width key '{key}' is not one of bin_widths_hz"
                    ))
                })?;
            m_for[i] = m;
        }
        let mut widths = Vec::with_capacity(widths_hz.len());
        for (&w, &m) in widths_hz.iter().zip(&m_for) {
            let grid = DopplerGrid::new(w, f_dmax_hz, params.t_per)?;
            if m >= grid.num_bins {
                return Err(Error::InvalidConfig(format!(
                    "M = {m} for bin width {w} Hz must be smaller than its bin count K = {}",
                    grid.num_bins
                )));
            }
            widths.push(WidthSetup { grid, accept_half_width: m });
        }
        let beta_grid = raw.beta_grid.unwrap_or_default();
        beta_grid.betas()?;
        let trials = raw.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        let l_max = raw.lmax.unwrap_or(DEFAULT_LMAX);
        if l_max > MAX_LMAX {
            return Err(Error::InvalidConfig(format!("lmax must be at most {MAX_LMAX}")));
        }
        Ok(Self {
            params,
            f_dmax_hz,
            widths,
            beta_grid,
            trials,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            fidelity: raw.fidelity.as_deref().map_or(Ok(Fidelity::MetricLevel), str::parse)?,
            order: raw.order.as_deref().map_or(Ok(SearchOrder::CodePhaseFirst), str::parse)?,
            l_max,
        })
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(trials) = overrides.trials {
            if trials == 0 {
                return Err(Error::InvalidConfig("trials must be >= 1".into()));
            }
            self.trials = trials;
        }
        if let Some(f) = overrides.fidelity {
            self.fidelity = f;
        }
        if let Some(o) = overrides.order {
            self.order = o;
        }
        Ok(())
    }

    pub fn betas(&self) -> Result<Vec<f64>> {
        self.beta_grid.betas()
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidConfig(msg) => msg,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"cn0_dbhz": 40, "tper_ms": 1}"#).unwrap();
        assert_eq!(c.f_dmax_hz, 5000.0);
        let w: Vec<f64> = c.widths.iter().map(|w| w.grid.bin_width_hz).collect();
        assert_eq!(w, DEFAULT_BIN_WIDTHS_HZ.to_vec());
        assert!(c.widths.iter().all(|w| w.accept_half_width == 0));
        assert_eq!(c.trials, 100_000);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.l_max, 2);
        assert_eq!(c.fidelity, Fidelity::MetricLevel);
        assert_eq!(c.order, SearchOrder::CodePhaseFirst);
        assert_eq!(c.betas().unwrap().len(), 60);
        assert!((c.params.l_max() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn full_file() {
        let c = ExperimentConfig::from_json(
            r#"{"cn0_dbhz": 37, "tper_ms": 1, "fdmax_hz": 4000, "bin_widths_hz": [200, 500],
                "m_by_width": {"200": 2, "500.0": 1},
                "beta_grid": {"min_pfa": 1e-6, "max_pfa": 0.1, "points": 5},
                "trials": 10, "seed": 3, "fidelity": "waveform", "order": "doppler-first", "lmax": 3}"#,
        )
        .unwrap();
        assert_eq!(c.widths[0].accept_half_width, 2);
        assert_eq!(c.widths[1].accept_half_width, 1);
        assert_eq!(c.widths[0].grid.num_bins, 40);
        assert_eq!(c.fidelity, Fidelity::Waveform);
        assert_eq!(c.order, SearchOrder::DopplerFirst);
        assert_eq!(c.betas().unwrap().len(), 5);
    }

    #[test]
    fn rejections() {
        let bad = [
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "colour": 1}"#,
            r#"{"cn0_dbhz": 40}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "m_by_width": {"1000": 10}}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "m_by_width": {"300": 1}}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "bin_widths_hz": []}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 0}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "trials": 0}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "order": "random"}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "beta_grid": {"min_pfa": 0.6, "max_pfa": 0.5, "points": 3}}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "beta_grid": {"min_pfa": 1e-3, "max_pfa": 0.5, "points": 3, "x": 1}}"#,
            r#"{"cn0_dbhz": 40, "tper_ms": 1, "lmax": 51}"#,
            "{\"cn0_dbhz\": 40,\n \"tper_ms\": }",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
        let e = ExperimentConfig::from_json("{\"cn0_dbhz\": 40,\n \"tper_ms\": }").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"cn0_dbhz": 40, "tper_ms": 1, "m_by_width": {"1000": 10}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("1000"), "{e}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::from_json(r#"{"cn0_dbhz": 40, "tper_ms": 1, "seed": 5}"#).unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            trials: Some(7),
            fidelity: Some(Fidelity::Waveform),
            order: Some(SearchOrder::DopplerFirst),
        })
        .unwrap();
        assert_eq!((c.seed, c.trials), (9, 7));
        assert_eq!(c.fidelity, Fidelity::Waveform);
        assert!(c.apply(&Overrides { trials: Some(0), ..Overrides::default() }).is_err());
    }
}
