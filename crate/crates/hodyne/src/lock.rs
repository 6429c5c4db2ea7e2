//! Locking the relative frequency and phase of the two signal sidebands.
//!
//! Two schemes are modeled. In the first, the drive of each sideband
//! generator is mixed against the shared reference generator, low-pass
//! filtered to the difference frequency, compared with a common reference
//! tone by a phase detector, and steered by a PID controller - one
//! phase-locked loop per sideband. In the second, all three generators share
//! one clock, so their frequency relations are exact by construction and
//! only a small residual phase jitter remains.
//!
//! The loop simulation runs in the rotating frame of the nominal beat: the
//! state per loop is the phase error between the mixed-down tone and the
//! reference. Free-running generators diffuse as a Wiener process with
//! `Var[phi(t+T) - phi(t)] = strength^2 * T`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::detection::TimeSeries;
use crate::error::{Error, Result};
use crate::field::LocalOscillator;
use crate::noise::{self, Stream};

/// One RF signal generator driving an acousto-optic modulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorState {
    pub freq_hz: f64,
    pub phase_rad: f64,
    /// Phase-diffusion strength of the free-running oscillator;
    /// `Var[phi(t+T) - phi(t)] = strength^2 * T`.
    pub phase_noise_std_rad_per_sqrt_hz: f64,
    /// Whether a feedback input can steer this generator.
    pub controllable: bool,
}

impl GeneratorState {
    pub fn new(freq_hz: f64, phase_rad: f64) -> Result<Self> {
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "generator frequency must be positive, got {freq_hz}"
            )));
        }
        Ok(Self {
            freq_hz,
            phase_rad,
            phase_noise_std_rad_per_sqrt_hz: 0.0,
            controllable: true,
        })
    }

    pub fn with_phase_noise(mut self, strength: f64) -> Self {
        self.phase_noise_std_rad_per_sqrt_hz = strength;
        self
    }

    pub fn fixed(mut self) -> Self {
        self.controllable = false;
        self
    }
}

/// Parameters of one phase-locked loop (both loops share one config).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllConfig {
    /// Frequency of the shared reference tone the mixed-down signals are
    /// locked to.
    pub reference_hz: f64,
    /// Cutoff of the low-pass that strips the mixer sum frequency and
    /// smooths the error signal.
    pub lpf_cutoff_hz: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Discrete loop update rate.
    pub update_rate_hz: f64,
    /// Error magnitude below which the loop counts as settled.
    pub settle_threshold_rad: f64,
}

impl Default for PllConfig {
    /// Critically damped loop with about 1 kHz bandwidth: natural frequency
    /// `wn = 2*pi*1e3`, `ki = wn^2`, `kp = 2*0.707*wn`, no derivative term.
    fn default() -> Self {
        let wn = TAU * 1e3;
        Self {
            reference_hz: 5e6,
            lpf_cutoff_hz: 1e4,
            kp: 2.0 * 0.707 * wn,
            ki: wn * wn,
            kd: 0.0,
            update_rate_hz: 1e5,
            settle_threshold_rad: 0.02,
        }
    }
}

impl PllConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.update_rate_hz > 2.0 * self.lpf_cutoff_hz) {
            return Err(Error::InvalidParameter(format!(
                "loop update rate {} Hz must exceed twice the LPF cutoff {} Hz",
                self.update_rate_hz, self.lpf_cutoff_hz
            )));
        }
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if !(self.settle_threshold_rad > 0.0) {
            return Err(Error::InvalidParameter(
                "settle threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockResult {
    pub locked: bool,
    pub settle_time_s: f64,
    /// Standard deviation of the phase error over the post-settle window
    /// (at least the final half of the record).
    pub residual_phase_std_rad: f64,
    pub phase_error_series: TimeSeries,
}

fn wrap_signed(phase: f64) -> f64 {
    let p = (phase + PI).rem_euclid(TAU);
    p - PI
}

/// Ideal mixer followed by a low-pass: two tones in, the difference tone
/// out. Returns `(|f1 - f2|, phase of the difference)`, with the phase of
/// the higher-frequency input counted positive.
pub fn mix_down(f1_hz: f64, f2_hz: f64, phi1_rad: f64, phi2_rad: f64) -> Result<(f64, f64)> {
    if f1_hz == f2_hz {
        return Err(Error::DegenerateMix(f1_hz));
    }
    let phase = if f1_hz > f2_hz {
        phi1_rad - phi2_rad
    } else {
        phi2_rad - phi1_rad
    };
    Ok(((f1_hz - f2_hz).abs(), wrap_signed(phase)))
}

struct LoopState {
    error: f64,
    error_filtered: f64,
    ef_prev: f64,
    ef_prev2: f64,
    correction: f64,
    primed: bool,
}

impl LoopState {
    fn new(initial_error: f64) -> Self {
        Self {
            error: initial_error,
            error_filtered: initial_error,
            ef_prev: initial_error,
            ef_prev2: initial_error,
            correction: 0.0,
            primed: false,
        }
    }

    /// One update: filter the raw error, advance the velocity-form PID
    /// (derivative acts on the filtered measurement), and integrate the
    /// plant with the given disturbance.
    fn step(&mut self, cfg: &PllConfig, dt: f64, alpha: f64, disturbance: f64) {
        self.ef_prev2 = self.ef_prev;
        self.ef_prev = self.error_filtered;
        self.error_filtered += alpha * (self.error - self.error_filtered);
        if !self.primed {
            // Avoid a derivative kick from the synthetic history.
            self.ef_prev = self.error_filtered;
            self.ef_prev2 = self.error_filtered;
            self.primed = true;
        }
        self.correction += cfg.kp * (self.error_filtered - self.ef_prev)
            + cfg.ki * dt * self.error_filtered
            + cfg.kd * (self.error_filtered - 2.0 * self.ef_prev + self.ef_prev2) / dt;
        self.error = wrap_signed(self.error - self.correction * dt + disturbance);
    }
}

fn summarize_loop(errors: Vec<f64>, cfg: &PllConfig, dt: f64) -> LockResult {
    let steps = errors.len();
    let settle_idx = errors
        .iter()
        .position(|e| e.abs() < cfg.settle_threshold_rad);
    let window_start = settle_idx.map(|i| i.max(steps / 2)).unwrap_or(steps / 2);
    let window = &errors[window_start..];
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let residual =
        (window.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / window.len() as f64).sqrt();
    let locked = settle_idx.map_or(false, |i| i < steps / 2)
        && residual < 0.5
        && mean.abs() < 0.25;
    LockResult {
        locked,
        settle_time_s: settle_idx.map_or(f64::INFINITY, |i| i as f64 * dt),
        residual_phase_std_rad: residual,
        phase_error_series: TimeSeries {
            sample_rate_hz: 1.0 / dt,
            t0_s: 0.0,
            samples: errors,
        },
    }
}

/// Mixer/PLL locking: each sideband generator is mixed against the shared
/// generator, the difference tone is phase-compared with the common
/// reference, and the PID correction steers the generator. Returns one
/// [`LockResult`] per loop; non-convergence is reported as `locked = false`,
/// never as an error.
pub fn pll_lock_method1(
    gen1: &GeneratorState,
    gen2: &GeneratorState,
    gen3: &GeneratorState,
    cfg: &PllConfig,
    duration_s: f64,
    seed: u64,
) -> Result<(LockResult, LockResult)> {
    cfg.validate()?;
    if !gen2.controllable || !gen3.controllable {
        return Err(Error::InvalidParameter(
            "pll feedback requires generators 2 and 3 to be controllable".into(),
        ));
    }
    let dt = 1.0 / cfg.update_rate_hz;
    let steps = (duration_s * cfg.update_rate_hz).round() as usize;
    if steps < 4 {
        return Err(Error::InvalidParameter(format!(
            "lock duration {duration_s} s is too short at {} Hz updates",
            cfg.update_rate_hz
        )));
    }

    // Mixed-down tones: (gen2 - gen1) and (gen1 - gen3); their initial
    // frequency offsets from the reference are static detunings the
    // integrator must absorb.
    let (f_up, phase_up) = mix_down(gen2.freq_hz, gen1.freq_hz, gen2.phase_rad, gen1.phase_rad)?;
    let (f_down, phase_down) = mix_down(gen1.freq_hz, gen3.freq_hz, gen1.phase_rad, gen3.phase_rad)?;
    let detune_up = TAU * (f_up - cfg.reference_hz);
    let detune_down = TAU * (f_down - cfg.reference_hz);

    let sqrt_dt = dt.sqrt();
    let w1 = noise::gaussian_series(seed, Stream::Generator(0), gen1.phase_noise_std_rad_per_sqrt_hz * sqrt_dt, steps);
    let w2 = noise::gaussian_series(seed, Stream::Generator(1), gen2.phase_noise_std_rad_per_sqrt_hz * sqrt_dt, steps);
    let w3 = noise::gaussian_series(seed, Stream::Generator(2), gen3.phase_noise_std_rad_per_sqrt_hz * sqrt_dt, steps);

    let alpha = 1.0 - (-TAU * cfg.lpf_cutoff_hz * dt).exp();
    let mut loop_up = LoopState::new(wrap_signed(phase_up));
    let mut loop_down = LoopState::new(wrap_signed(phase_down));
    let mut errors_up = Vec::with_capacity(steps);
    let mut errors_down = Vec::with_capacity(steps);

    for i in 0..steps {
        errors_up.push(loop_up.error);
        errors_down.push(loop_down.error);
        // Generator 1 noise is common mode: it drags both mixed tones.
        loop_up.step(cfg, dt, alpha, detune_up * dt + w2[i] - w1[i]);
        loop_down.step(cfg, dt, alpha, detune_down * dt + w1[i] - w3[i]);
    }

    Ok((
        summarize_loop(errors_up, cfg, dt),
        summarize_loop(errors_down, cfg, dt),
    ))
}

/// Shared-clock locking: all three generators are slaved to one reference
/// clock, so the two beat frequencies are identical by construction and the
/// relative sideband phase is constant up to `residual_jitter_rad`.
///
/// The jitter is deterministic: both steered generators are offset so that
/// the effective detection phase shifts by exactly `residual_jitter_rad`.
pub fn lock_method2(
    gen1: &GeneratorState,
    gen2: &GeneratorState,
    gen3: &GeneratorState,
    residual_jitter_rad: f64,
) -> Result<(GeneratorState, GeneratorState, GeneratorState)> {
    if !(residual_jitter_rad >= 0.0 && residual_jitter_rad.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "residual jitter must be nonnegative, got {residual_jitter_rad}"
        )));
    }
    // Snap both beats to their common value.
    let beat = 0.5 * ((gen2.freq_hz - gen1.freq_hz) + (gen1.freq_hz - gen3.freq_hz));
    let mut g1 = *gen1;
    let mut g2 = *gen2;
    let mut g3 = *gen3;
    g2.freq_hz = gen1.freq_hz + beat;
    g3.freq_hz = gen1.freq_hz - beat;
    g2.phase_rad -= residual_jitter_rad;
    g3.phase_rad -= residual_jitter_rad;
    // Clock-disciplined oscillators no longer diffuse freely.
    g1.phase_noise_std_rad_per_sqrt_hz = 0.0;
    g2.phase_noise_std_rad_per_sqrt_hz = 0.0;
    g3.phase_noise_std_rad_per_sqrt_hz = 0.0;
    Ok((g1, g2, g3))
}

/// Locked sideband phases, as produced by either scheme, in the convention
/// of the stored field components: `plus_rad` belongs to the component at
/// `+omega`, `minus_rad` to the component at `-omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandPhases {
    pub plus_rad: f64,
    pub minus_rad: f64,
    /// Residual frequency difference between the sidebands; must be zero
    /// for a static theta to exist.
    pub delta_omega_hz: f64,
}

/// The single effective phase entering the homodyne `cos^2(theta)` law,
/// combining the local-oscillator phase with the locked sideband phases.
/// Only the common-mode sideband phase shifts theta; the differential part
/// moves the beat's carrier phase and leaves the strength unchanged.
pub fn sideband_phase_to_theta(phases: &SidebandPhases, lo: &LocalOscillator) -> Result<f64> {
    if phases.delta_omega_hz != 0.0 {
        return Err(Error::ThetaNotStatic {
            delta_hz: phases.delta_omega_hz,
        });
    }
    Ok(wrap_signed(
        lo.phase_rad - 0.5 * (phases.plus_rad + phases.minus_rad),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gen(freq: f64) -> GeneratorState {
        GeneratorState::new(freq, 0.0).unwrap()
    }

    #[test]
    fn mix_down_examples() {
        let (f, p) = mix_down(115e6, 110e6, 0.0, 0.0).unwrap();
        assert_eq!((f, p), (5e6, 0.0));
        let (f, p) = mix_down(110e6, 105e6, 0.0, 0.0).unwrap();
        assert_eq!((f, p), (5e6, 0.0));
        let (f, p) = mix_down(115e6, 110e6, PI / 3.0, PI / 6.0).unwrap();
        assert_eq!(f, 5e6);
        assert_relative_eq!(p, PI / 6.0, max_relative = 1e-12);
        assert!(matches!(
            mix_down(110e6, 110e6, 0.0, 0.0),
            Err(Error::DegenerateMix(_))
        ));
    }

    #[test]
    fn noiseless_loop_converges_fast_and_clean() {
        let g1 = gen(110e6).fixed();
        let mut g2 = gen(115e6);
        g2.phase_rad = 0.5; // initial phase step to pull in
        let g3 = gen(105e6);
        let cfg = PllConfig::default();
        let (up, down) = pll_lock_method1(&g1, &g2, &g3, &cfg, 0.2, 1).unwrap();
        assert!(up.locked && down.locked);
        assert!(up.residual_phase_std_rad < 1e-9, "{}", up.residual_phase_std_rad);
        assert!(down.residual_phase_std_rad < 1e-9);
        // A few loop time constants (1 kHz bandwidth -> ms scale).
        assert!(up.settle_time_s < 0.01, "settled in {} s", up.settle_time_s);
    }

    #[test]
    fn open_loop_does_not_lock() {
        let g1 = gen(110e6).fixed().with_phase_noise(10.0);
        let g2 = gen(115e6).with_phase_noise(10.0);
        let g3 = gen(105e6).with_phase_noise(10.0);
        let cfg = PllConfig {
            kp: 0.0,
            ki: 0.0,
            kd: 0.0,
            ..PllConfig::default()
        };
        let (up, _) = pll_lock_method1(&g1, &g2, &g3, &cfg, 0.5, 3).unwrap();
        assert!(!up.locked);
        // Free phase diffusion: the error wanders far beyond any lock band.
        assert!(up.residual_phase_std_rad > 0.5, "{}", up.residual_phase_std_rad);
    }

    #[test]
    fn noisy_loop_locks_with_moderate_residual() {
        let g1 = gen(110e6).fixed().with_phase_noise(10.0);
        let g2 = gen(115e6).with_phase_noise(10.0);
        let g3 = gen(105e6).with_phase_noise(10.0);
        let (up, down) = pll_lock_method1(&g1, &g2, &g3, &PllConfig::default(), 0.5, 3).unwrap();
        assert!(up.locked && down.locked);
        for r in [up.residual_phase_std_rad, down.residual_phase_std_rad] {
            assert!((0.02..0.3).contains(&r), "residual {r}");
        }
    }

    #[test]
    fn loop_absorbs_a_static_detuning() {
        // 30 Hz off the reference: the integrator must pull the beat in.
        let g1 = gen(110e6).fixed();
        let g2 = gen(115e6 + 30.0);
        let g3 = gen(105e6);
        let (up, down) = pll_lock_method1(&g1, &g2, &g3, &PllConfig::default(), 0.2, 9).unwrap();
        assert!(up.locked && down.locked);
        assert!(up.residual_phase_std_rad < 1e-6);
    }

    #[test]
    fn step_disturbance_decays_monotonically_in_envelope() {
        let g1 = gen(110e6).fixed();
        let mut g2 = gen(115e6);
        g2.phase_rad = 1.0;
        let g3 = gen(105e6);
        let (up, _) = pll_lock_method1(&g1, &g2, &g3, &PllConfig::default(), 0.05, 1).unwrap();
        // Envelope of |error| local maxima must decrease.
        let e = &up.phase_error_series.samples;
        let mut peaks = Vec::new();
        for i in 1..e.len() - 1 {
            if e[i].abs() > e[i - 1].abs() && e[i].abs() >= e[i + 1].abs() {
                peaks.push(e[i].abs());
            }
        }
        for w in peaks.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "envelope grew: {w:?}");
        }
    }

    #[test]
    fn uncontrollable_generator_is_rejected() {
        let g1 = gen(110e6).fixed();
        let g2 = gen(115e6).fixed();
        let g3 = gen(105e6);
        assert!(pll_lock_method1(&g1, &g2, &g3, &PllConfig::default(), 0.1, 1).is_err());
    }

    #[test]
    fn method2_relations_are_bit_exact() {
        let g1 = gen(110e6);
        let g2 = gen(115e6 + 7.0);
        let g3 = gen(105e6 + 7.0);
        let (o1, o2, o3) = lock_method2(&g1, &g2, &g3, 0.0).unwrap();
        assert_eq!(o2.freq_hz - o1.freq_hz, o1.freq_hz - o3.freq_hz);
        assert_eq!(o2.phase_rad, g2.phase_rad);
        assert_eq!(o1.freq_hz, g1.freq_hz);
        assert_eq!(o2.phase_noise_std_rad_per_sqrt_hz, 0.0);
    }

    #[test]
    fn method2_jitter_shifts_theta_by_its_value() {
        let g1 = gen(110e6);
        let g2 = gen(115e6);
        let g3 = gen(105e6);
        let jitter = 0.05;
        let (o1, o2, o3) = lock_method2(&g1, &g2, &g3, jitter).unwrap();
        let phases = SidebandPhases {
            plus_rad: o2.phase_rad - o1.phase_rad,
            minus_rad: o3.phase_rad - o1.phase_rad,
            delta_omega_hz: (o2.freq_hz - o1.freq_hz) - (o1.freq_hz - o3.freq_hz),
        };
        let lo = LocalOscillator::new(100.0, 0.0).unwrap();
        let theta = sideband_phase_to_theta(&phases, &lo).unwrap();
        assert_relative_eq!(theta, jitter, max_relative = 1e-12);
    }

    #[test]
    fn theta_bookkeeping() {
        let lo0 = LocalOscillator::new(100.0, 0.0).unwrap();
        let aligned = SidebandPhases { plus_rad: 0.0, minus_rad: 0.0, delta_omega_hz: 0.0 };
        assert_eq!(sideband_phase_to_theta(&aligned, &lo0).unwrap(), 0.0);

        let lo90 = LocalOscillator::new(100.0, PI / 2.0).unwrap();
        assert_relative_eq!(
            sideband_phase_to_theta(&aligned, &lo90).unwrap(),
            PI / 2.0,
            max_relative = 1e-12
        );

        // A quarter-wave shift of the local oscillator plus a common
        // quarter-wave retardation of both sidebands lands on extinction.
        let lo45 = LocalOscillator::new(100.0, PI / 4.0).unwrap();
        let shifted = SidebandPhases {
            plus_rad: -PI / 4.0,
            minus_rad: -PI / 4.0,
            delta_omega_hz: 0.0,
        };
        assert_relative_eq!(
            sideband_phase_to_theta(&shifted, &lo45).unwrap(),
            PI / 2.0,
            max_relative = 1e-12
        );

        let moving = SidebandPhases { delta_omega_hz: 10.0, ..aligned };
        assert!(matches!(
            sideband_phase_to_theta(&moving, &lo0),
            Err(Error::ThetaNotStatic { .. })
        ));
    }

    #[test]
    fn theta_extinction_cross_checked_by_simulation() {
        use crate::detection::{beat_signal, DetectionConfig};
        use crate::field::make_two_sideband_field;

        let lo = LocalOscillator::new(100.0, PI / 4.0).unwrap();
        let field =
            make_two_sideband_field(1.0, 1.0, 1e4, 1e4, -PI / 4.0, -PI / 4.0).unwrap();
        let phases = SidebandPhases {
            plus_rad: -PI / 4.0,
            minus_rad: -PI / 4.0,
            delta_omega_hz: 0.0,
        };
        let theta = sideband_phase_to_theta(&phases, &lo).unwrap();
        assert_relative_eq!(theta, PI / 2.0, max_relative = 1e-12);

        let mut cfg = DetectionConfig::new(lo, field, 0.01, 1e6, 1);
        cfg.noise_enabled = false;
        let power = beat_signal(&cfg).unwrap().mean_square();
        assert!(power < 1e-18, "expected extinction, got {power}");
    }
}
