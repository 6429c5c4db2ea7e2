//! Passive optical elements: acousto-optic frequency shifters, beam
//! splitters and attenuators.
//!
//! All elements act per spectral component and are pure functions of
//! immutable fields. The beam splitter uses the symmetric convention with a
//! factor `i` on reflection; any fixed unitary convention is equivalent here
//! because the local-oscillator phase absorbs the constant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::OpticalField;

/// An acousto-optic modulator driven at a fixed RF frequency. The diffracted
/// order is shifted by the drive frequency (negative for a negative-order
/// pass) and attenuated by the diffraction efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AomConfig {
    /// Frequency shift in Hz, signed.
    pub shift_hz: f64,
    /// Diffraction efficiency as a power fraction in (0, 1].
    pub efficiency: f64,
}

impl AomConfig {
    /// Typical diffraction efficiency of the modulators modeled here.
    pub const DEFAULT_EFFICIENCY: f64 = 0.70;

    pub fn new(shift_hz: f64, efficiency: f64) -> Result<Self> {
        if !shift_hz.is_finite() {
            return Err(Error::InvalidParameter("AOM shift must be finite".into()));
        }
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "AOM efficiency must be in (0, 1], got {efficiency}"
            )));
        }
        Ok(Self { shift_hz, efficiency })
    }
}

/// Shift every component of `field` by the AOM drive frequency and scale
/// amplitudes by the square root of the diffraction efficiency.
pub fn aom_shift(field: &OpticalField, cfg: &AomConfig) -> OpticalField {
    let gain = cfg.efficiency.sqrt();
    let mut out = OpticalField::empty();
    for c in field.components() {
        let mut shifted = *c;
        shifted.offset_hz += cfg.shift_hz;
        shifted.amplitude *= gain;
        out.insert(shifted);
    }
    out
}

/// A two-port beam splitter.
///
/// `visibility` models imperfect mode overlap at the combining port. It does
/// not alter the mixed fields themselves (DC powers are unchanged); it is
/// carried to the detection stage, where it scales the interference beat
/// amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterConfig {
    /// Power reflectance in [0, 1]; 0.5 for a 50% splitter.
    pub reflectance: f64,
    /// Mode-overlap visibility in [0, 1].
    pub visibility: f64,
}

impl SplitterConfig {
    pub fn new(reflectance: f64, visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reflectance) {
            return Err(Error::InvalidParameter(format!(
                "reflectance must be in [0, 1], got {reflectance}"
            )));
        }
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::InvalidParameter(format!(
                "visibility must be in [0, 1], got {visibility}"
            )));
        }
        Ok(Self { reflectance, visibility })
    }

    /// A lossless 50% splitter with perfect overlap.
    pub fn balanced() -> Self {
        Self { reflectance: 0.5, visibility: 1.0 }
    }
}

/// Mix two fields on a lossless splitter, per frequency offset:
///
/// ```text
/// out1 = sqrt(1-R) * a + i * sqrt(R) * b
/// out2 = i * sqrt(R) * a + sqrt(1-R) * b
/// ```
pub fn beamsplitter_mix(
    a: &OpticalField,
    b: &OpticalField,
    cfg: &SplitterConfig,
) -> (OpticalField, OpticalField) {
    let t = (1.0 - cfg.reflectance).sqrt();
    let r = Complex64::new(0.0, cfg.reflectance.sqrt());

    let mut out1 = a.map_amplitudes(|c| t * c.as_complex());
    for c in b.map_amplitudes(|c| r * c.as_complex()).components() {
        out1.insert(*c);
    }
    let mut out2 = a.map_amplitudes(|c| r * c.as_complex());
    for c in b.map_amplitudes(|c| Complex64::new(t, 0.0) * c.as_complex()).components() {
        out2.insert(*c);
    }
    (out1, out2)
}

/// Scale a field by a power transmission in [0, 1], e.g. fiber coupling loss.
pub fn attenuate(field: &OpticalField, transmission: f64) -> Result<OpticalField> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::InvalidParameter(format!(
            "transmission must be in [0, 1], got {transmission}"
        )));
    }
    let gain = transmission.sqrt();
    Ok(field.map_amplitudes(|c| gain * c.as_complex()))
}
