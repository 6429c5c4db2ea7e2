//! Crate-wide error type.

/// Errors produced anywhere in the simulation chain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter failed validation (negative amplitude, out-of-range
    /// transmission, malformed analyzer settings, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A spectral component sits at or above the Nyquist frequency of the
    /// requested sample rate.
    #[error("component at {offset_hz} Hz violates Nyquist for sample rate {sample_rate_hz} Hz")]
    Nyquist { offset_hz: f64, sample_rate_hz: f64 },

    /// The local oscillator does not dominate the signal field.
    #[error(
        "local oscillator too weak: power {lo_power:.6e} < 100 x signal power {signal_power:.6e}"
    )]
    WeakLocalOscillator { lo_power: f64, signal_power: f64 },

    /// A time series is shorter than the measurement it is asked to feed.
    #[error("input too short: {got_s} s available, {need_s} s required")]
    InputTooShort { got_s: f64, need_s: f64 },

    /// Mixer inputs share the same frequency, so the difference product is DC.
    #[error("mixer inputs are degenerate: both at {0} Hz, difference product is DC")]
    DegenerateMix(f64),

    /// The relative phase theta is only defined when the sidebands are
    /// frequency locked.
    #[error("theta is not static: sideband frequencies differ by {delta_hz} Hz")]
    ThetaNotStatic { delta_hz: f64 },

    /// Scenario name not in the built-in set.
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    /// Scenario or config file level problem.
    #[error("config: {0}")]
    Config(String),

    /// An error from a pipeline stage, tagged with the stage name.
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than simulation
    /// failures. The CLI maps these to a distinct exit code.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidParameter(_)
            | Error::UnknownScenario(_)
            | Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
