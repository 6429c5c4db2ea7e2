//! Swept-tuned spectrum-analyzer emulation.
//!
//! The processing chain mirrors the architecture of a classic swept
//! analyzer:
//!
//! 1. the input is complex-demodulated at the tuned frequency (fixed in
//!    zero-span mode, ramping across the span in swept mode);
//! 2. the complex envelope passes a Gaussian resolution filter whose -3 dB
//!    full width is the RBW (the frequency-domain equivalent of a Gaussian
//!    bandpass at the tuned frequency);
//! 3. the squared magnitude forms the linear power video signal, scaled so
//!    that a tone of amplitude `B` displays `B^2 / 2` and white noise of
//!    one-sided density `N0` displays `N0 * ENBW`;
//! 4. a single-pole video filter of cutoff VBW smooths the linear power;
//! 5. the video signal is decimated onto the display grid and converted to
//!    dB relative to a configurable reference power.
//!
//! The Gaussian shape has an equivalent noise bandwidth of
//! `ENBW = sqrt(pi) / (2 sqrt(ln 2)) * RBW ~ 1.0645 * RBW`, used by all
//! analytic level checks.
//!
//! The resolution filter is evaluated directly at the decimated video
//! instants, which is exact: the kernel suppresses everything beyond a few
//! RBW, so no information survives above the video Nyquist rate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, TAU};

use crate::detection::TimeSeries;
use crate::error::{Error, Result};
use crate::spectral;

/// Ratio of equivalent noise bandwidth to -3 dB bandwidth for the Gaussian
/// resolution filter: `sqrt(pi) / (2 sqrt(ln 2))`, about 1.0645.
pub fn gaussian_enbw_factor() -> f64 {
    PI.sqrt() / (2.0 * LN_2.sqrt())
}

/// How one displayed point condenses the video signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorMode {
    /// The video sample nearest the display instant.
    #[default]
    Sample,
    /// Mean of the video samples in the display bucket.
    Average,
}

/// Spectrum-analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub center_hz: f64,
    /// 0 selects zero-span (power versus time at the center frequency).
    pub span_hz: f64,
    /// Resolution bandwidth: -3 dB full width of the Gaussian filter.
    pub rbw_hz: f64,
    /// Video bandwidth: cutoff of the single-pole post-detection filter.
    pub vbw_hz: f64,
    pub sweep_time_s: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub detector: DetectorMode,
    /// Linear power displayed as 0 dB.
    #[serde(default = "default_reference")]
    pub reference_power: f64,
}

fn default_points() -> usize {
    1001
}

fn default_reference() -> f64 {
    1.0
}

impl AnalyzerConfig {
    /// Zero-span settings with the display referenced to unit power.
    pub fn zero_span(center_hz: f64, rbw_hz: f64, vbw_hz: f64, sweep_time_s: f64) -> Self {
        Self {
            center_hz,
            span_hz: 0.0,
            rbw_hz,
            vbw_hz,
            sweep_time_s,
            points: default_points(),
            detector: DetectorMode::Sample,
            reference_power: 1.0,
        }
    }

    /// Swept settings with the display referenced to unit power.
    pub fn swept(center_hz: f64, span_hz: f64, rbw_hz: f64, vbw_hz: f64, sweep_time_s: f64) -> Self {
        Self {
            span_hz,
            ..Self::zero_span(center_hz, rbw_hz, vbw_hz, sweep_time_s)
        }
    }

    /// Equivalent noise bandwidth of the resolution filter in Hz.
    pub fn enbw_hz(&self) -> f64 {
        gaussian_enbw_factor() * self.rbw_hz
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v, positive) in [
            ("center_hz", self.center_hz, false),
            ("span_hz", self.span_hz, false),
            ("rbw_hz", self.rbw_hz, true),
            ("vbw_hz", self.vbw_hz, true),
            ("sweep_time_s", self.sweep_time_s, true),
            ("reference_power", self.reference_power, true),
        ] {
            if !v.is_finite() || v < 0.0 || (positive && v == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "analyzer {name} must be {}, got {v}",
                    if positive { "positive" } else { "nonnegative" }
                )));
            }
        }
        if self.vbw_hz > self.rbw_hz {
            return Err(Error::InvalidParameter(format!(
                "VBW {} Hz exceeds RBW {} Hz",
                self.vbw_hz, self.rbw_hz
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidParameter(format!(
                "display needs at least 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    /// Soft diagnostics that do not abort a measurement.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.span_hz > 0.0 {
            if self.rbw_hz > self.span_hz {
                out.push(format!(
                    "RBW {} Hz is wider than the span {} Hz",
                    self.rbw_hz, self.span_hz
                ));
            }
            let points_per_rbw = self.rbw_hz * (self.points as f64 - 1.0) / self.span_hz;
            if points_per_rbw < 10.0 {
                out.push(format!(
                    "only {points_per_rbw:.1} display points per RBW; peaks may scallop"
                ));
            }
        }
        out
    }
}

/// A displayed trace: time (zero span) or frequency (swept) on the x axis,
/// power in dB relative to the configured reference on y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub x: Vec<f64>,
    pub y_db: Vec<f64>,
    pub config: AnalyzerConfig,
}

impl Trace {
    pub fn points(&self) -> usize {
        self.x.len()
    }

    /// Linear displayed powers (relative to the reference).
    pub fn y_linear(&self) -> Vec<f64> {
        self.y_db.iter().map(|&y| spectral::from_db(y)).collect()
    }

    pub fn max_db(&self) -> f64 {
        self.y_db.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// dB value of the mean linear power over the whole trace.
    pub fn mean_db(&self) -> f64 {
        spectral::db(spectral::mean(&self.y_linear()))
    }

    /// dB value of the mean linear power over x in `[lo, hi]`.
    pub fn mean_db_between(&self, lo: f64, hi: f64) -> f64 {
        let sel: Vec<f64> = self
            .x
            .iter()
            .zip(&self.y_db)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, y)| spectral::from_db(*y))
            .collect();
        if sel.is_empty() {
            spectral::DB_FLOOR
        } else {
            spectral::db(spectral::mean(&sel))
        }
    }
}

/// Gaussian FIR kernel with -3 dB full width `rbw_hz`, unit DC gain.
fn gaussian_kernel(sample_rate_hz: f64, rbw_hz: f64) -> Vec<f64> {
    let sigma_f = rbw_hz / (2.0 * LN_2.sqrt());
    let sigma_t = 1.0 / (TAU * sigma_f);
    let half = (4.0 * sigma_t * sample_rate_hz).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sample_rate_hz;
            (-0.5 * (t / sigma_t) * (t / sigma_t)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Gaussian-shaped low-pass on a complex envelope: -3 dB full width `rbw_hz`
/// around DC, unit gain at DC. This is the resolution filter as seen from
/// baseband.
pub(crate) fn rbw_filter(
    baseband: &[Complex64],
    sample_rate_hz: f64,
    rbw_hz: f64,
) -> Result<Vec<Complex64>> {
    if rbw_hz <= 0.0 || rbw_hz > sample_rate_hz / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "RBW {rbw_hz} Hz must be positive and below the baseband Nyquist {} Hz",
            sample_rate_hz / 2.0
        )));
    }
    let kernel = gaussian_kernel(sample_rate_hz, rbw_hz);
    let half = kernel.len() / 2;
    let n = baseband.len();
    let mut out = vec![Complex64::default(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        let mut weight = 0.0;
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        for j in lo..hi {
            let k = kernel[j + half - i];
            acc += baseband[j] * k;
            weight += k;
        }
        *o = acc / weight;
    }
    Ok(out)
}

enum Tuning {
    Fixed(f64),
    /// Linear ramp from `f0` to `f1` over the sweep.
    Swept { f0: f64, f1: f64 },
}

/// Demodulate, resolution-filter and envelope-detect the input, producing the
/// linear power video signal at a decimated video rate.
fn video_power(input: &TimeSeries, cfg: &AnalyzerConfig, tuning: &Tuning) -> (Vec<f64>, f64) {
    let fs = input.sample_rate_hz;
    let n = (cfg.sweep_time_s * fs).round() as usize;
    let n = n.min(input.samples.len());
    let kernel = gaussian_kernel(fs, cfg.rbw_hz);
    let half = kernel.len() / 2;

    // Keep the video rate a small multiple of the RBW: the Gaussian output
    // carries nothing beyond that.
    let decim = ((fs / (8.0 * cfg.rbw_hz)).floor() as usize).max(1);
    let video_rate = fs / decim as f64;
    let out_len = (n + decim - 1) / decim;

    let sweep_rate = match tuning {
        Tuning::Fixed(_) => 0.0,
        Tuning::Swept { f0, f1 } => (f1 - f0) / cfg.sweep_time_s,
    };
    let f_start = match tuning {
        Tuning::Fixed(f) => *f,
        Tuning::Swept { f0, .. } => *f0,
    };

    // Demodulated samples are produced once each and kept in a ring covering
    // the kernel reach.
    let mut demod = vec![Complex64::default(); n.min(2 * half + 1 + decim)];
    let ring = demod.len();
    let dt = 1.0 / fs;
    let demod_at = |i: usize| -> Complex64 {
        let t = i as f64 * dt;
        let phase = -(TAU * (f_start * t + 0.5 * sweep_rate * t * t));
        Complex64::new(phase.cos(), phase.sin()) * input.samples[i]
    };

    let mut filled_to = 0usize; // demod[i % ring] valid for i < filled_to
    let mut out = vec![0.0f64; out_len];
    for (j, o) in out.iter_mut().enumerate() {
        let center = j * decim;
        let lo = center.saturating_sub(half);
        let hi = (center + half + 1).min(n);
        if filled_to < lo {
            filled_to = lo;
        }
        while filled_to < hi {
            demod[filled_to % ring] = demod_at(filled_to);
            filled_to += 1;
        }
        let mut acc = Complex64::default();
        let mut weight = 0.0;
        for i in lo..hi {
            let k = kernel[i + half - center];
            acc += demod[i % ring] * k;
            weight += k;
        }
        let envelope = acc / weight;
        // Factor 2 refers the envelope power back to the input: a tone of
        // amplitude B displays B^2/2, noise of density N0 displays N0*ENBW.
        *o = 2.0 * envelope.norm_sqr();
    }
    (out, video_rate)
}

/// Single-pole low-pass on the linear power video signal. The state starts
/// at the mean of the first filter time constant's worth of samples, which
/// removes the settle transient a cold start would paint on the left edge of
/// the display.
fn vbw_filter(video: &mut [f64], video_rate_hz: f64, vbw_hz: f64) {
    let alpha = 1.0 - (-TAU * vbw_hz / video_rate_hz).exp();
    let warmup = ((video_rate_hz / vbw_hz).ceil() as usize).clamp(1, video.len());
    let mut y = video[..warmup].iter().sum::<f64>() / warmup as f64;
    for v in video.iter_mut() {
        y += alpha * (*v - y);
        *v = y;
    }
}

fn validate_input(input: &TimeSeries, cfg: &AnalyzerConfig, top_hz: f64) -> Result<()> {
    cfg.validate()?;
    if input.duration_s() + 0.5 / input.sample_rate_hz < cfg.sweep_time_s {
        return Err(Error::InputTooShort {
            got_s: input.duration_s(),
            need_s: cfg.sweep_time_s,
        });
    }
    if top_hz >= input.sample_rate_hz / 2.0 {
        return Err(Error::Nyquist {
            offset_hz: top_hz,
            sample_rate_hz: input.sample_rate_hz,
        });
    }
    if cfg.rbw_hz > input.sample_rate_hz / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "RBW {} Hz exceeds the input Nyquist bandwidth",
            cfg.rbw_hz
        )));
    }
    Ok(())
}

fn render(
    video: &[f64],
    video_rate_hz: f64,
    cfg: &AnalyzerConfig,
    x_of: impl Fn(usize) -> f64,
) -> Trace {
    let points = cfg.points;
    let mut x = Vec::with_capacity(points);
    let mut y_db = Vec::with_capacity(points);
    let t_total = cfg.sweep_time_s;
    for k in 0..points {
        let frac = k as f64 / (points - 1) as f64;
        let p = match cfg.detector {
            DetectorMode::Sample => {
                let idx = ((frac * t_total * video_rate_hz).round() as usize)
                    .min(video.len() - 1);
                video[idx]
            }
            DetectorMode::Average => {
                let lo = ((k as f64 - 0.5) / (points - 1) as f64 * t_total * video_rate_hz)
                    .max(0.0) as usize;
                let hi = (((k as f64 + 0.5) / (points - 1) as f64 * t_total * video_rate_hz)
                    as usize)
                    .min(video.len() - 1);
                let hi = hi.max(lo);
                spectral::mean(&video[lo..=hi])
            }
        };
        x.push(x_of(k));
        y_db.push(spectral::db(p / cfg.reference_power));
    }
    Trace { x, y_db, config: *cfg }
}

/// Zero-span measurement: displayed power versus time in a fixed RBW around
/// the center frequency.
pub fn zero_span(input: &TimeSeries, cfg: &AnalyzerConfig) -> Result<Trace> {
    validate_input(input, cfg, cfg.center_hz)?;
    if cfg.span_hz != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "zero_span requires span 0, got {} Hz",
            cfg.span_hz
        )));
    }
    let (mut video, video_rate) = video_power(input, cfg, &Tuning::Fixed(cfg.center_hz));
    vbw_filter(&mut video, video_rate, cfg.vbw_hz);
    let t_total = cfg.sweep_time_s;
    let points = cfg.points;
    Ok(render(&video, video_rate, cfg, |k| {
        k as f64 / (points - 1) as f64 * t_total
    }))
}

/// Swept measurement from `center - span/2` to `center + span/2`. The local
/// tuning frequency ramps across the input in real time, so display bin `k`
/// is measured from time slice `k` of the input, exactly as in a hardware
/// sweep.
pub fn sweep(input: &TimeSeries, cfg: &AnalyzerConfig) -> Result<Trace> {
    let f0 = cfg.center_hz - cfg.span_hz / 2.0;
    let f1 = cfg.center_hz + cfg.span_hz / 2.0;
    validate_input(input, cfg, f1)?;
    if cfg.span_hz <= 0.0 {
        return Err(Error::InvalidParameter(
            "sweep requires a positive span".into(),
        ));
    }
    if f0 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sweep start {f0} Hz is negative; reduce the span or raise the center"
        )));
    }
    let (mut video, video_rate) = video_power(input, cfg, &Tuning::Swept { f0, f1 });
    vbw_filter(&mut video, video_rate, cfg.vbw_hz);
    let points = cfg.points;
    let span = cfg.span_hz;
    Ok(render(&video, video_rate, cfg, |k| {
        f0 + span * k as f64 / (points - 1) as f64
    }))
}
