use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::metric::Record;
use super::{SearchGeometry, TrialPlacement};
use crate::analytic::{DopplerGrid, SignalParams};
use crate::error::{Error, Result};
use crate::prncode::{generate_ca_code, CaCode, CHIP_RATE_HZ, CODE_LENGTH};

/// Front-end parameters of the sample-level simulation.
///
/// With `if_hz == 0` the received signal is complex baseband. A positive
/// `if_hz` simulates a real IF signal which is mixed down with a complex
/// local carrier; the double-frequency product is left in and only averages
/// out in the integrate-and-dump stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformConfig {
    pub sample_rate_hz: f64,
    pub if_hz: f64,
    pub prn_signal: u8,
    /// Replica used for false-alarm runs; detection runs use `prn_signal`.
    pub prn_false_alarm: u8,
    /// Drop the noise term, leaving the deterministic correlator output.
    pub noiseless: bool,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: CHIP_RATE_HZ,
            if_hz: 0.0,
            prn_signal: 1,
            prn_false_alarm: 5,
            noiseless: false,
        }
    }
}

impl WaveformConfig {
    /// Real IF at a quarter of a 4.092 MHz sampling rate.
    pub fn real_if() -> Self {
        Self {
            sample_rate_hz: 4.0 * CHIP_RATE_HZ,
            if_hz: CHIP_RATE_HZ,
            ..Self::default()
        }
    }

    /// Samples per chip; the sampling rate must be an integer multiple of
    /// the chip rate.
    pub fn decimation(&self) -> Result<usize> {
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(Error::InvalidConfig("sampling rate must be positive".into()));
        }
        if !(self.if_hz >= 0.0) || self.if_hz >= 0.5 * self.sample_rate_hz {
            return Err(Error::InvalidConfig(
                "intermediate frequency must lie in [0, f_s/2)".into(),
            ));
        }
        let ratio = self.sample_rate_hz / CHIP_RATE_HZ;
        let d = ratio.round();
        if d < 1.0 || (ratio - d).abs() > 1e-9 * ratio {
            return Err(Error::InvalidConfig(format!(
                "sampling rate {} Hz is not an integer multiple of the chip rate",
                self.sample_rate_hz
            )));
        }
        Ok(d as usize)
    }
}

/// One trial's received signal, ready to be correlated bin by bin.
///
/// Unit audit. The noise floor is normalized so that the correlator output
/// has unit total noise variance, i.e. 1/2 per component, after averaging
/// the `N_s = T·f_s` samples of one period. Complex baseband: per-sample
/// noise of total variance `N_s` corresponds to `N₀ = N_s/f_s = T`, so the
/// carrier power reproducing `L_max = 2·T·C/N₀` is `C = L_max/2` and the
/// amplitude is `√C`. Real IF: per-sample variance `N_s` is a one-sided
/// `N₀ = 2·N_s/f_s = 2T`, so `C = L_max` with amplitude `√(2C)`; mixing with
/// `e^{-jθ}` halves the amplitude of the wanted term. In both cases a
/// perfectly aligned noiseless cell gives `|X|² = L_max/2`.
pub struct WaveformChannel {
    config: WaveformConfig,
    decimation: usize,
    samples: usize,
    signal_code: CaCode,
    replica: CaCode,
    l_max: f64,
    doppler_hz: f64,
    carrier_phase: f64,
    code_delay: usize,
}

impl WaveformChannel {
    /// `doppler_hz` is the true Doppler, `code_delay` the true code phase in
    /// chips and `replica_prn` the code searched for.
    pub fn new(
        config: WaveformConfig,
        params: &SignalParams<f64>,
        doppler_hz: f64,
        code_delay: usize,
        carrier_phase: f64,
        replica_prn: u8,
    ) -> Result<Self> {
        let decimation = config.decimation()?;
        let periods = params.t_per * CHIP_RATE_HZ;
        if (periods - CODE_LENGTH as f64).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "averaging correlation needs exactly one code period per integration \
                 ({CODE_LENGTH} chips), got {periods:.3}"
            )));
        }
        Ok(Self {
            config,
            decimation,
            samples: decimation * CODE_LENGTH,
            signal_code: generate_ca_code(config.prn_signal)?,
            replica: generate_ca_code(replica_prn)?,
            l_max: params.l_max(),
            doppler_hz,
            carrier_phase,
            code_delay: code_delay % CODE_LENGTH,
        })
    }

    /// Builds the channel for a placement on a search grid.
    pub fn for_placement(
        config: WaveformConfig,
        params: &SignalParams<f64>,
        grid: &DopplerGrid<f64>,
        placement: &TrialPlacement,
        carrier_phase: f64,
        replica_prn: u8,
    ) -> Result<Self> {
        let doppler = grid.bin_center_hz(placement.correct_bin) + placement.residual / params.t_per;
        Self::new(config, params, doppler, placement.correct_phase, carrier_phase, replica_prn)
    }

    /// Fresh received period mixed down with the local carrier at
    /// `bin_freq_hz` and integrated to one sample per chip.
    pub fn bin_chips<R: Rng + ?Sized>(&self, bin_freq_hz: f64, rng: &mut R) -> Vec<Complex64> {
        let fs = self.config.sample_rate_hz;
        let real = self.config.if_hz > 0.0;
        let ns = self.samples as f64;
        let (amp, noise_sd) = if real {
            ((2.0 * self.l_max).sqrt(), ns.sqrt())
        } else {
            ((0.5 * self.l_max).sqrt(), (0.5 * ns).sqrt())
        };
        let d = self.decimation;
        let mut chips = Vec::with_capacity(CODE_LENGTH);
        for j in 0..CODE_LENGTH {
            let c = self.signal_code.chip(j as isize - self.code_delay as isize) as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                let n = (j * d + i) as f64;
                let t = n / fs;
                let theta = std::f64::consts::TAU * (self.config.if_hz + self.doppler_hz) * t
                    + self.carrier_phase;
                let local = Complex64::from_polar(
                    1.0,
                    -std::f64::consts::TAU * (self.config.if_hz + bin_freq_hz) * t,
                );
                let mut rx = if real {
                    Complex64::new(amp * c * theta.cos(), 0.0)
                } else {
                    Complex64::from_polar(amp * c, theta)
                };
                if !self.config.noiseless {
                    let nr: f64 = StandardNormal.sample(rng);
                    if real {
                        rx.re += noise_sd * nr;
                    } else {
                        let ni: f64 = StandardNormal.sample(rng);
                        rx += Complex64::new(noise_sd * nr, noise_sd * ni);
                    }
                }
                acc += rx * local;
            }
            chips.push(acc / d as f64);
        }
        chips
    }

    /// Averaging correlation of one bin's chips with the replica at `phase`.
    pub fn correlate(&self, chips: &[Complex64], phase: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, x) in chips.iter().enumerate() {
            if self.replica.chip(j as isize - phase as isize) > 0 {
                acc += x;
            } else {
                acc -= x;
            }
        }
        acc / CODE_LENGTH as f64
    }
}

/// Squared Dirichlet kernel `sin²(πx)/(N²·sin²(πx/N))`, the exact loss of a
/// length-`N` average at frequency error `x/T`.
pub fn dirichlet_squared(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let den = (std::f64::consts::PI * x / nf).sin();
    if den.abs() < 1e-300 {
        return 1.0;
    }
    let v = (std::f64::consts::PI * x).sin() / (nf * den);
    v * v
}

/// Visit-ordered metric records computed from the waveform, each bin's
/// received period generated on first use.
pub(crate) fn waveform_records<R: Rng + ?Sized>(
    channel: &WaveformChannel,
    geometry: &SearchGeometry,
    grid: &DopplerGrid<f64>,
    max_beta: f64,
    rng: &mut R,
) -> Vec<Record> {
    let mut bins: Vec<Option<Vec<Complex64>>> = vec![None; geometry.bins];
    let mut records = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for pos in 0..geometry.bins * geometry.phases {
        let (bin, phase) = geometry.cell_at(pos);
        let chips = bins[bin].get_or_insert_with(|| channel.bin_chips(grid.bin_center_hz(bin), rng));
        let v = channel.correlate(chips, phase).norm_sqr();
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
