//! Serialization of time series and analyzer traces.
//!
//! Three wire formats, all documented here and stable:
//!
//! * **Time-series CSV**: header `time_s,value`, one row per sample,
//!   values printed as `{:.9e}`. Deterministic byte-for-byte for a given
//!   series.
//! * **Time-series binary**: magic `HDT1`, then little-endian `u64` sample
//!   count, `f64` sample rate in Hz, `f64` start time in seconds, then the
//!   samples as little-endian `f64`. Lossless round trip.
//! * **Trace CSV**: `#`-prefixed header lines echoing the analyzer
//!   configuration, then `time_s,power_db` (zero span) or
//!   `frequency_hz,power_db` (swept) rows.

use std::io::{Read, Write};

use crate::analyzer::Trace;
use crate::detection::TimeSeries;
use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 4] = b"HDT1";

pub fn write_timeseries_csv<W: Write>(w: &mut W, ts: &TimeSeries) -> Result<()> {
    writeln!(w, "time_s,value")?;
    for (i, &s) in ts.samples.iter().enumerate() {
        writeln!(w, "{:.9e},{:.9e}", ts.time_at(i), s)?;
    }
    Ok(())
}

pub fn write_timeseries_binary<W: Write>(w: &mut W, ts: &TimeSeries) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(ts.samples.len() as u64).to_le_bytes())?;
    w.write_all(&ts.sample_rate_hz.to_le_bytes())?;
    w.write_all(&ts.t0_s.to_le_bytes())?;
    for s in &ts.samples {
        w.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_timeseries_binary<R: Read>(r: &mut R) -> Result<TimeSeries> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Config(format!(
            "bad magic {magic:?}, expected {BINARY_MAGIC:?}"
        )));
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let len = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let sample_rate_hz = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let t0_s = f64::from_le_bytes(u64buf);
    let mut samples = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut u64buf)?;
        samples.push(f64::from_le_bytes(u64buf));
    }
    TimeSeries::new(sample_rate_hz, t0_s, samples)
}

pub fn write_trace_csv<W: Write>(w: &mut W, trace: &Trace) -> Result<()> {
    let cfg = &trace.config;
    writeln!(w, "# center_hz: {}", cfg.center_hz)?;
    writeln!(w, "# span_hz: {}", cfg.span_hz)?;
    writeln!(w, "# rbw_hz: {}", cfg.rbw_hz)?;
    writeln!(w, "# vbw_hz: {}", cfg.vbw_hz)?;
    writeln!(w, "# sweep_time_s: {}", cfg.sweep_time_s)?;
    writeln!(w, "# points: {}", cfg.points)?;
    writeln!(w, "# detector: {:?}", cfg.detector)?;
    writeln!(w, "# reference_power: {:.9e}", cfg.reference_power)?;
    let x_name = if cfg.span_hz == 0.0 { "time_s" } else { "frequency_hz" };
    writeln!(w, "{x_name},power_db")?;
    for (x, y) in trace.x.iter().zip(&trace.y_db) {
        writeln!(w, "{x:.9e},{y:.4}")?;
    }
    Ok(())
}

/// Render a trace CSV into a string (the form used for determinism checks).
pub fn trace_csv_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("trace CSV is ASCII")
}
