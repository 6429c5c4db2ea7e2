//! Balanced difference photocurrent synthesis.
//!
//! The balanced pair subtracts the photocurrents of the two splitter
//! outputs; in the strong local-oscillator limit the difference current is
//!
//! ```text
//! di(t) = 2 * A * V * sum_k  a_k * cos(2*pi*f_k*t - theta(t) + phi_k)  + noise
//! ```
//!
//! with `A` the local-oscillator amplitude, `V` the interference visibility,
//! and one term per signal component at signed offset `f_k`. Because the
//! cosine is even, a component at a negative offset `-W` contributes
//! `cos(2*pi*W*t + theta - phi)`: the up and down sidebands see the
//! local-oscillator phase with opposite signs, which is what makes the
//! two-sideband configuration phase sensitive while a single sideband is not.
//!
//! Units are normalized so that the shot-noise contract is exact: amplitudes
//! are sqrt(photon flux) and the vacuum noise of the balanced detector is
//! white with a one-sided power spectral density of `A^2` per Hz.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field::{LocalOscillator, OpticalField};
use crate::noise::{self, Stream};

/// A uniformly sampled real-valued trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub sample_rate_hz: f64,
    pub t0_s: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(sample_rate_hz: f64, t0_s: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter("time series must be non-empty".into()));
        }
        Ok(Self { sample_rate_hz, t0_s, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0_s + index as f64 / self.sample_rate_hz
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}

/// An extra sampled phase offset applied to the local-oscillator phase,
/// linearly interpolated onto the synthesis grid. Used to inject residual
/// phase error from a lock simulation into the detected quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrack {
    pub sample_rate_hz: f64,
    pub t0_s: f64,
    pub offsets_rad: Vec<f64>,
}

impl PhaseTrack {
    pub fn from_series(series: &TimeSeries) -> Self {
        Self {
            sample_rate_hz: series.sample_rate_hz,
            t0_s: series.t0_s,
            offsets_rad: series.samples.clone(),
        }
    }

    /// Interpolated value at time `t`, clamped at the ends.
    pub fn value_at(&self, t_s: f64) -> f64 {
        if self.offsets_rad.is_empty() {
            return 0.0;
        }
        let x = (t_s - self.t0_s) * self.sample_rate_hz;
        if x <= 0.0 {
            return self.offsets_rad[0];
        }
        let last = self.offsets_rad.len() - 1;
        if x >= last as f64 {
            return self.offsets_rad[last];
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.offsets_rad[i] * (1.0 - frac) + self.offsets_rad[i + 1] * frac
    }
}

/// Everything needed to synthesize one detection record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub lo: LocalOscillator,
    pub signal: OpticalField,
    /// Interference visibility in [0, 1]; scales the beat amplitude only.
    pub visibility: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub noise_enabled: bool,
    pub seed: u64,
    /// Optional residual phase wobble added to the local-oscillator phase.
    #[serde(default)]
    pub lo_phase_track: Option<PhaseTrack>,
}

impl DetectionConfig {
    pub fn new(
        lo: LocalOscillator,
        signal: OpticalField,
        duration_s: f64,
        sample_rate_hz: f64,
        seed: u64,
    ) -> Self {
        Self {
            lo,
            signal,
            visibility: 1.0,
            duration_s,
            sample_rate_hz,
            noise_enabled: true,
            seed,
            lo_phase_track: None,
        }
    }

    fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.sample_count() == 0 {
            return Err(Error::InvalidParameter(format!(
                "duration {} s yields no samples at {} Hz",
                self.duration_s, self.sample_rate_hz
            )));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::InvalidParameter(format!(
                "visibility must be in [0, 1], got {}",
                self.visibility
            )));
        }
        // Strong-LO regime: the vacuum noise of the balanced pair must be
        // dominated by the local oscillator.
        let lo_power = self.lo.amplitude * self.lo.amplitude;
        let signal_power = self.signal.total_power();
        if lo_power < 100.0 * signal_power {
            return Err(Error::WeakLocalOscillator { lo_power, signal_power });
        }
        // Every beat must be resolvable on the sampling grid.
        for c in self.signal.components() {
            if 2.0 * c.offset_hz.abs() >= self.sample_rate_hz {
                return Err(Error::Nyquist {
                    offset_hz: c.offset_hz,
                    sample_rate_hz: self.sample_rate_hz,
                });
            }
        }
        Ok(())
    }

    fn theta_at(&self, t: f64) -> f64 {
        let track = self.lo_phase_track.as_ref().map_or(0.0, |p| p.value_at(t));
        self.lo.phase_at(t) + track
    }
}

/// Deterministic beat part of the difference photocurrent.
pub fn beat_signal(cfg: &DetectionConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let n = cfg.sample_count();
    let dt = 1.0 / cfg.sample_rate_hz;
    let scale = 2.0 * cfg.lo.amplitude * cfg.visibility;
    let comps = cfg.signal.components();
    let mut samples = vec![0.0; n];
    for (i, s) in samples.iter_mut().enumerate() {
        let t = i as f64 * dt;
        let theta = cfg.theta_at(t);
        let mut acc = 0.0;
        for c in comps {
            acc += c.amplitude * (TAU * c.offset_hz * t - theta + c.phase_rad).cos();
        }
        *s = scale * acc;
    }
    TimeSeries::new(cfg.sample_rate_hz, 0.0, samples)
}

/// Shot-noise part: white Gaussian samples with per-sample variance
/// `A^2 * fs / 2`, i.e. a flat one-sided density of `A^2` per Hz. The series
/// is a pure function of the seed; chunked generation is bit-exact.
pub fn shot_noise(cfg: &DetectionConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let n = cfg.sample_count();
    let sigma = cfg.lo.amplitude * (cfg.sample_rate_hz / 2.0).sqrt();
    let mut samples = vec![0.0; n];
    if sigma > 0.0 {
        noise::fill_standard_normal(cfg.seed, Stream::Shot, 0, &mut samples);
        for v in &mut samples {
            *v *= sigma;
        }
    }
    TimeSeries::new(cfg.sample_rate_hz, 0.0, samples)
}

/// One chunk of the shot-noise stream, starting at absolute sample index
/// `start`. Concatenating chunks reproduces [`shot_noise`] bit for bit.
pub fn shot_noise_chunk(cfg: &DetectionConfig, start: u64, len: usize) -> Vec<f64> {
    let sigma = cfg.lo.amplitude * (cfg.sample_rate_hz / 2.0).sqrt();
    let mut out = vec![0.0; len];
    if sigma > 0.0 {
        noise::fill_standard_normal(cfg.seed, Stream::Shot, start, &mut out);
        for v in &mut out {
            *v *= sigma;
        }
    }
    out
}

/// Full difference photocurrent: beat plus shot noise (noise omitted when
/// `noise_enabled` is false).
pub fn difference_photocurrent(cfg: &DetectionConfig) -> Result<TimeSeries> {
    let mut beat = beat_signal(cfg)?;
    if cfg.noise_enabled {
        let noise = shot_noise(cfg)?;
        for (b, n) in beat.samples.iter_mut().zip(&noise.samples) {
            *b += n;
        }
    }
    Ok(beat)
}
