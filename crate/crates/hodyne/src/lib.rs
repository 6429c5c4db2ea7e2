//! Desk-scale simulator for balanced optical homodyne and heterodyne
//! detection with controllable signal sidebands.
//!
//! The simulation follows a tabletop optical chain end to end:
//!
//! * [`field`] - optical fields as sparse sets of coherent sidebands around
//!   a carrier, in normalized sqrt(photon flux) units;
//! * [`optics`] - acousto-optic frequency shifters, beam splitters and
//!   attenuators acting on those fields;
//! * [`detection`] - the balanced difference photocurrent as a sampled time
//!   series: deterministic beat notes plus seeded shot noise with an exact
//!   noise-floor contract;
//! * [`analyzer`] - a swept-tuned spectrum-analyzer emulation (Gaussian RBW
//!   filter, envelope detection, single-pole VBW video filter, zero-span and
//!   swept modes, dB display);
//! * [`lock`] - the two schemes that lock the relative phase of the two
//!   sidebands: mixer + phase-locked loops with PID feedback, and shared
//!   clock synchronization;
//! * [`scenario`] - named, seeded experiments composing the whole chain and
//!   emitting CSV traces plus a machine-readable metrics report;
//! * [`spectral`] - Welch estimation and tone measurement, used as
//!   independent oracles for the analyzer chain;
//! * [`io`] - CSV and binary serialization of traces and series.
//!
//! Everything downstream of a seed is deterministic: identical configuration
//! and seed produce byte-identical outputs.

pub mod analyzer;
pub mod detection;
pub mod error;
pub mod field;
pub mod io;
pub mod lock;
pub mod noise;
pub mod optics;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{make_two_sideband_field, LocalOscillator, OpticalField, SpectralComponent};
