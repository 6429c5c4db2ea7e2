//! Spectral estimation utilities: Welch averaging, single-bin tone
//! measurement, and envelope-modulation detection.
//!
//! These are deliberately independent of the spectrum-analyzer emulation so
//! they can serve as oracles for it in tests: a Welch average and the swept
//! RBW/VBW chain must agree on levels without sharing any code path.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

/// Decibel floor used when converting non-positive powers.
pub const DB_FLOOR: f64 = -400.0;

/// Power ratio to decibels, clamped at [`DB_FLOOR`] for non-positive input.
pub fn db(power_ratio: f64) -> f64 {
    if power_ratio > 0.0 {
        10.0 * power_ratio.log10()
    } else {
        DB_FLOOR
    }
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 0 {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    } else {
        v[n / 2]
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// Welch power spectral density estimate of a real signal with a Hann
/// window and 50% overlap. Returns one-sided `(frequencies, psd)` in
/// power-per-Hz units: a white series of variance `v` has a flat density of
/// `2 * v / fs`.
pub fn welch_psd(samples: &[f64], sample_rate_hz: f64, nperseg: usize) -> (Vec<f64>, Vec<f64>) {
    let nperseg = nperseg.min(samples.len()).max(8);
    let step = (nperseg / 2).max(1);
    let window = hann(nperseg);
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nperseg);
    let n_bins = nperseg / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut buf = vec![Complex64::default(); nperseg];
    let mut n_segments = 0usize;

    let mut start = 0usize;
    while start + nperseg <= samples.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (i, a) in acc.iter_mut().enumerate() {
            *a += buf[i].norm_sqr();
        }
        n_segments += 1;
        start += step;
    }
    if n_segments == 0 {
        n_segments = 1;
    }

    let scale = 1.0 / (sample_rate_hz * window_power * n_segments as f64);
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let one_sided = if i == 0 || (nperseg % 2 == 0 && i == n_bins - 1) {
                1.0
            } else {
                2.0
            };
            a * scale * one_sided
        })
        .collect();
    let freqs = (0..n_bins)
        .map(|i| i as f64 * sample_rate_hz / nperseg as f64)
        .collect();
    (freqs, psd)
}

/// Amplitude of the tone at exactly `freq_hz` via a single-bin discrete
/// Fourier sum over the whole record. Exact (to rounding) when the record
/// holds an integer number of cycles.
pub fn tone_amplitude_at(samples: &[f64], sample_rate_hz: f64, freq_hz: f64) -> f64 {
    let n = samples.len();
    let w = -TAU * freq_hz / sample_rate_hz;
    let mut acc = Complex64::default();
    for (i, &x) in samples.iter().enumerate() {
        let phase = w * i as f64;
        acc += Complex64::new(phase.cos(), phase.sin()) * x;
    }
    2.0 * acc.norm() / n as f64
}

/// Estimated period of a periodic modulation in `samples`, or `None` when no
/// modulation stands significantly above the background. Works on linear
/// power traces with the mean removed; the peak location is refined by
/// parabolic interpolation on a zero-padded spectrum.
pub fn estimate_modulation_period(samples: &[f64], dt_s: f64) -> Option<f64> {
    estimate_modulation(samples, dt_s).map(|(period, _)| period)
}

/// As [`estimate_modulation_period`] but also returns the ratio of the peak
/// spectral power to the median background power.
pub fn estimate_modulation(samples: &[f64], dt_s: f64) -> Option<(f64, f64)> {
    let n = samples.len();
    if n < 16 {
        return None;
    }
    let duration = n as f64 * dt_s;
    let m = samples.iter().sum::<f64>() / n as f64;

    let pad = (n * 32).next_power_of_two();
    let mut buf = vec![Complex64::default(); pad];
    for (i, &x) in samples.iter().enumerate() {
        buf[i] = Complex64::new(x - m, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(pad).process(&mut buf);

    let df = 1.0 / (pad as f64 * dt_s);
    // Require at least ~1.5 modulation periods inside the record.
    let lo_bin = ((1.5 / duration) / df).ceil() as usize;
    let hi_bin = pad / 2;
    if lo_bin + 2 >= hi_bin {
        return None;
    }
    let power: Vec<f64> = buf[..hi_bin].iter().map(|c| c.norm_sqr()).collect();
    let (peak_bin, peak_power) = power[lo_bin..hi_bin]
        .iter()
        .enumerate()
        .map(|(i, &p)| (i + lo_bin, p))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let background = median(&power[lo_bin..hi_bin]);
    if background <= 0.0 || peak_power < 25.0 * background {
        return None;
    }

    // Parabolic refinement on log power.
    let refined = if peak_bin > lo_bin && peak_bin + 1 < hi_bin {
        let l = power[peak_bin - 1].max(1e-300).ln();
        let c = power[peak_bin].max(1e-300).ln();
        let r = power[peak_bin + 1].max(1e-300).ln();
        let denom = l - 2.0 * c + r;
        let delta = if denom.abs() > 1e-12 { 0.5 * (l - r) / denom } else { 0.0 };
        peak_bin as f64 + delta.clamp(-0.5, 0.5)
    } else {
        peak_bin as f64
    };
    let freq = refined * df;
    Some((1.0 / freq, peak_power / background))
}

/// Average a periodic trace into `n_bins` phase bins of the given period.
/// Returns the per-bin means; empty bins inherit their left neighbor.
pub fn fold_by_period(samples: &[f64], dt_s: f64, period_s: f64, n_bins: usize) -> Vec<f64> {
    let mut sums = vec![0.0f64; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (i, &x) in samples.iter().enumerate() {
        let phase = (i as f64 * dt_s).rem_euclid(period_s) / period_s;
        let b = ((phase * n_bins as f64) as usize).min(n_bins - 1);
        sums[b] += x;
        counts[b] += 1;
    }
    let mut out = vec![0.0f64; n_bins];
    let mut last = samples.first().copied().unwrap_or(0.0);
    for i in 0..n_bins {
        if counts[i] > 0 {
            last = sums[i] / counts[i] as f64;
        }
        out[i] = last;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{gaussian_series, Stream};
    use approx::assert_relative_eq;

    #[test]
    fn welch_white_noise_density() {
        let fs = 1e6;
        let sigma = 3.0;
        let xs = gaussian_series(17, Stream::Shot, sigma, 400_000);
        let (_, psd) = welch_psd(&xs, fs, 4096);
        let expected = 2.0 * sigma * sigma / fs;
        assert_relative_eq!(mean(&psd[1..psd.len() - 1]), expected, max_relative = 0.03);
    }

    #[test]
    fn welch_finds_a_tone_at_the_right_level() {
        let fs = 1e6;
        let f0 = 125e3;
        let amp = 2.0;
        let xs: Vec<f64> = (0..262_144)
            .map(|i| amp * (TAU * f0 * i as f64 / fs).cos())
            .collect();
        let (freqs, psd) = welch_psd(&xs, fs, 8192);
        let (i, _) = psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_relative_eq!(freqs[i], f0, max_relative = 1e-3);
        // Total power in the peak integrates to amp^2 / 2.
        let df = freqs[1] - freqs[0];
        let peak_power: f64 = psd[i.saturating_sub(4)..(i + 5).min(psd.len())]
            .iter()
            .sum::<f64>()
            * df;
        assert_relative_eq!(peak_power, amp * amp / 2.0, max_relative = 0.01);
    }

    #[test]
    fn single_bin_tone_amplitude_is_exact() {
        let fs = 32e6;
        let f0 = 5e6;
        let n = 32_000; // integer number of cycles
        let xs: Vec<f64> = (0..n).map(|i| 7.5 * (TAU * f0 * i as f64 / fs).cos()).collect();
        assert_relative_eq!(tone_amplitude_at(&xs, fs, f0), 7.5, max_relative = 1e-9);
    }

    #[test]
    fn modulation_period_of_a_cosine_squared() {
        let dt = 5e-4;
        let period = 0.1;
        let xs: Vec<f64> = (0..1000)
            .map(|i| (TAU / period * i as f64 * dt / 2.0).cos().powi(2))
            .collect();
        let est = estimate_modulation_period(&xs, dt).unwrap();
        assert_relative_eq!(est, period, max_relative = 0.01);
    }

    #[test]
    fn flat_noise_has_no_significant_modulation() {
        let xs = gaussian_series(23, Stream::Shot, 1.0, 1000);
        let shifted: Vec<f64> = xs.iter().map(|x| 10.0 + x * 0.1).collect();
        assert_eq!(estimate_modulation_period(&shifted, 1e-3), None);
    }

    #[test]
    fn folding_recovers_envelope_extrema() {
        let dt = 1e-3;
        let period = 0.25;
        let xs: Vec<f64> = (0..2000)
            .map(|i| 4.0 * (TAU / period * i as f64 * dt / 2.0).cos().powi(2) + 1.0)
            .collect();
        let folded = fold_by_period(&xs, dt, period, 50);
        let max = folded.iter().cloned().fold(f64::MIN, f64::max);
        let min = folded.iter().cloned().fold(f64::MAX, f64::min);
        assert_relative_eq!(max, 5.0, max_relative = 0.02);
        assert!(min < 1.05);
    }
}
