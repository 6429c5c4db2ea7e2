//! Sparse spectral representation of optical fields.
//!
//! An optical field is stored as a set of coherent components at frequency
//! offsets from a fixed carrier. Amplitudes are in normalized units of
//! sqrt(photon flux): every measurable quantity downstream is a ratio, so no
//! absolute optical power appears anywhere. The carrier frequency itself
//! never enters any beat note and is not represented.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Components with amplitude below this are dropped on insert, which keeps
/// fields sparse after destructive interference.
pub const AMPLITUDE_EPSILON: f64 = 1e-15;

/// Reduce a phase to the canonical interval `[0, 2*pi)`.
pub fn normalize_phase(phase_rad: f64) -> f64 {
    let p = phase_rad.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// One coherent spectral component at a signed frequency offset from the
/// carrier. A component stored at a negative offset is a "down" sideband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralComponent {
    /// Frequency offset from the carrier in Hz, signed.
    pub offset_hz: f64,
    /// Nonnegative amplitude in sqrt(photon flux).
    pub amplitude: f64,
    /// Phase in `[0, 2*pi)`.
    pub phase_rad: f64,
}

impl SpectralComponent {
    pub fn new(offset_hz: f64, amplitude: f64, phase_rad: f64) -> Result<Self> {
        if !offset_hz.is_finite() || !amplitude.is_finite() || !phase_rad.is_finite() {
            return Err(Error::InvalidParameter(
                "spectral component fields must be finite".into(),
            ));
        }
        if amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be nonnegative, got {amplitude}"
            )));
        }
        Ok(Self {
            offset_hz,
            amplitude,
            phase_rad: normalize_phase(phase_rad),
        })
    }

    /// Complex amplitude `a * exp(i*phase)`.
    pub fn as_complex(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase_rad)
    }

    fn from_complex(offset_hz: f64, c: Complex64) -> Self {
        Self {
            offset_hz,
            amplitude: c.norm(),
            phase_rad: normalize_phase(c.arg()),
        }
    }
}

/// A sparse optical field: a list of spectral components, unique per offset,
/// kept sorted by offset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpticalField {
    components: Vec<SpectralComponent>,
    carrier_is_vacuum: bool,
}

impl OpticalField {
    /// The vacuum field: no components at all.
    pub fn empty() -> Self {
        Self {
            components: Vec::new(),
            carrier_is_vacuum: true,
        }
    }

    pub fn from_components<I>(components: I) -> Result<Self>
    where
        I: IntoIterator<Item = SpectralComponent>,
    {
        let mut field = Self::empty();
        for c in components {
            // Revalidate so deserialized data cannot smuggle bad values in.
            let c = SpectralComponent::new(c.offset_hz, c.amplitude, c.phase_rad)?;
            field.insert(c);
        }
        Ok(field)
    }

    /// Insert a component, merging by complex addition when one already
    /// exists at the same offset. Near-cancelled components are dropped.
    pub fn insert(&mut self, component: SpectralComponent) {
        if component.amplitude < AMPLITUDE_EPSILON {
            return;
        }
        match self
            .components
            .binary_search_by(|c| c.offset_hz.total_cmp(&component.offset_hz))
        {
            Ok(i) => {
                let merged = self.components[i].as_complex() + component.as_complex();
                if merged.norm() < AMPLITUDE_EPSILON {
                    self.components.remove(i);
                } else {
                    self.components[i] = SpectralComponent::from_complex(component.offset_hz, merged);
                }
            }
            Err(i) => self.components.insert(i, component),
        }
        self.update_carrier_flag();
    }

    fn update_carrier_flag(&mut self) {
        self.carrier_is_vacuum = !self.components.iter().any(|c| c.offset_hz == 0.0);
    }

    pub fn components(&self) -> &[SpectralComponent] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True when no component sits at the carrier frequency itself.
    pub fn carrier_is_vacuum(&self) -> bool {
        self.carrier_is_vacuum
    }

    /// Total power: the sum of squared amplitudes. Invariant under phase
    /// changes and conserved by unitary optics.
    pub fn total_power(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude * c.amplitude).sum()
    }

    /// Largest absolute frequency offset present, 0 for the vacuum field.
    pub fn max_abs_offset_hz(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.offset_hz.abs())
            .fold(0.0, f64::max)
    }

    /// Apply a complex-amplitude map per component, preserving offsets.
    pub(crate) fn map_amplitudes<F>(&self, mut f: F) -> OpticalField
    where
        F: FnMut(&SpectralComponent) -> Complex64,
    {
        let mut out = OpticalField::empty();
        for c in &self.components {
            let mapped = f(c);
            if mapped.norm() >= AMPLITUDE_EPSILON {
                out.insert(SpectralComponent::from_complex(c.offset_hz, mapped));
            }
        }
        out
    }
}

/// Convenience for the signal fields used throughout: up to two sidebands at
/// `+omega_plus_hz` and `-omega_minus_hz`, with the carrier left in vacuum.
///
/// `omega_plus_hz` and `omega_minus_hz` are magnitudes and must be positive;
/// the minus sideband is stored at the negative offset. Zero-amplitude
/// sidebands are dropped, so a single-sideband field is made by passing 0
/// for the other amplitude.
pub fn make_two_sideband_field(
    amp_plus: f64,
    amp_minus: f64,
    omega_plus_hz: f64,
    omega_minus_hz: f64,
    phi_plus: f64,
    phi_minus: f64,
) -> Result<OpticalField> {
    if amp_plus < 0.0 || amp_minus < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sideband amplitudes must be nonnegative, got ({amp_plus}, {amp_minus})"
        )));
    }
    if omega_plus_hz <= 0.0 || omega_minus_hz <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sideband offsets must be positive, got ({omega_plus_hz}, {omega_minus_hz})"
        )));
    }
    let mut field = OpticalField::empty();
    if amp_plus > 0.0 {
        field.insert(SpectralComponent::new(omega_plus_hz, amp_plus, phi_plus)?);
    }
    if amp_minus > 0.0 {
        field.insert(SpectralComponent::new(-omega_minus_hz, amp_minus, phi_minus)?);
    }
    Ok(field)
}

/// The strong reference field mixed with the signal on the detection beam
/// splitter. Only its amplitude and phase matter; it sits at the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOscillator {
    /// Amplitude in sqrt(photon flux). Must dominate the signal in any
    /// detection scenario; that is enforced at detection time.
    pub amplitude: f64,
    /// Relative phase theta between the local oscillator and the signal.
    pub phase_rad: f64,
    /// Optional linear phase ramp in rad/s for scanned-phase runs.
    pub phase_drift_rad_per_s: Option<f64>,
}

impl LocalOscillator {
    pub fn new(amplitude: f64, phase_rad: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "local oscillator amplitude must be finite and nonnegative, got {amplitude}"
            )));
        }
        Ok(Self {
            amplitude,
            phase_rad,
            phase_drift_rad_per_s: None,
        })
    }

    pub fn with_drift(mut self, rate_rad_per_s: f64) -> Self {
        self.phase_drift_rad_per_s = Some(rate_rad_per_s);
        self
    }

    /// Instantaneous phase at time `t`, including any drift.
    pub fn phase_at(&self, t_s: f64) -> f64 {
        self.phase_rad + self.phase_drift_rad_per_s.unwrap_or(0.0) * t_s
    }
}
