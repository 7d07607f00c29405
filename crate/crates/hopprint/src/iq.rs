//! Complex-baseband sample streams and raw IQ capture files.
//!
//! Capture files are headerless interleaved IEEE-754 little-endian 32-bit
//! floats, I before Q — the `complex64` convention used by common SDR
//! recording tools, so real captures load unchanged. Sample rate and RF
//! center frequency travel either in an optional JSON sidecar next to the
//! data file (`foo.data` → `foo.meta.json`) or as explicit arguments.
//!
//! In memory, samples are widened to `Complex<f64>`: the DSP stages need the
//! headroom (long FIR convolutions, phase recurrences), and f32 → f64 → f32
//! is lossless, so a file survives a read/write round trip bit-exact.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A complex baseband sample stream tagged with its sample rate and the
/// absolute RF frequency that baseband DC corresponds to.
///
/// `center_freq_hz = 0` marks a pure-baseband stream, e.g. a dehopped burst.
/// Invariants: `sample_rate_hz > 0`, `center_freq_hz >= 0`, all sample
/// components finite. [`IqStream::new`] checks them; code that builds streams
/// internally (where finiteness holds by construction) fills the fields
/// directly.
#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    pub samples: Vec<Complex<f64>>,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
}

impl IqStream {
    /// Builds a stream and validates the type invariants, including a full
    /// finiteness scan of the samples.
    pub fn new(samples: Vec<Complex<f64>>, sample_rate_hz: f64, center_freq_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::parameter(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if !(center_freq_hz >= 0.0 && center_freq_hz.is_finite()) {
            return Err(Error::parameter(format!(
                "center frequency must be non-negative and finite, got {center_freq_hz}"
            )));
        }
        if let Some(n) = samples.iter().position(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::format(format!("non-finite sample at index {n}")));
        }
        Ok(Self { samples, sample_rate_hz, center_freq_hz })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Stream duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean of |x|² over all samples; 0 for an empty stream.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Total energy as Σ|x|² / sample_rate (power integrated over time), the
    /// quantity preserved by rate-changing operations.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.sample_rate_hz
    }
}

/// A sequence of real values at a fixed sample rate — the output domain of
/// the quadrature demodulator (values in Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries {
    pub values: Vec<f64>,
    pub sample_rate_hz: f64,
}

/// Sidecar metadata for an IQ capture file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IqMeta {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    #[serde(default)]
    pub description: String,
}

/// Sidecar path for a capture file: the extension is replaced by
/// `meta.json`, so `radio_lower.data` pairs with `radio_lower.meta.json`.
pub fn meta_path(iq_path: &Path) -> PathBuf {
    iq_path.with_extension("meta.json")
}

/// Reads the sidecar for `iq_path` if one exists. A present-but-unparsable
/// sidecar is an error rather than silently ignored metadata.
pub fn read_meta(iq_path: &Path) -> Result<Option<IqMeta>> {
    let path = meta_path(iq_path);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    let meta: IqMeta = serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    Ok(Some(meta))
}

/// Writes the sidecar for `iq_path`.
pub fn write_meta(iq_path: &Path, meta: &IqMeta) -> Result<()> {
    let path = meta_path(iq_path);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Loads a raw capture file as interleaved little-endian f32 (I, Q) pairs.
///
/// The file length must be a multiple of 8 bytes (one complex sample); the
/// stream has length `bytes / 8` with samples in file order.
pub fn read_iq(path: &Path, sample_rate_hz: f64, center_freq_hz: f64) -> Result<IqStream> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::format(format!(
            "{}: {} bytes is not a whole number of IQ samples (8 bytes each)",
            path.display(),
            bytes.len()
        )));
    }
    let mut samples = Vec::with_capacity(bytes.len() / 8);
    for pair in bytes.chunks_exact(8) {
        let re = f32::from_le_bytes([pair[0], pair[1], pair[2], pair[3]]) as f64;
        let im = f32::from_le_bytes([pair[4], pair[5], pair[6], pair[7]]) as f64;
        samples.push(Complex::new(re, im));
    }
    IqStream::new(samples, sample_rate_hz, center_freq_hz)
}

/// Writes a stream as interleaved little-endian f32 (I, Q) pairs: 8·N bytes.
///
/// Samples are narrowed to f32 on the way out. Values that originated from a
/// capture file are already f32-representable and round-trip bit-exact;
/// synthetic f64 values round to the nearest f32.
pub fn write_iq(stream: &IqStream, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(stream.samples.len() * 8);
    for s in &stream.samples {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Reads a capture using its sidecar for rate/center when present.
/// Explicit overrides win over the sidecar; with neither, `defaults`
/// (rate, center) applies.
pub fn read_iq_auto(
    path: &Path,
    rate_override: Option<f64>,
    center_override: Option<f64>,
    defaults: (f64, f64),
) -> Result<IqStream> {
    let meta = read_meta(path)?;
    let rate = rate_override
        .or_else(|| meta.as_ref().map(|m| m.sample_rate_hz))
        .unwrap_or(defaults.0);
    let center = center_override
        .or_else(|| meta.as_ref().map(|m| m.center_freq_hz))
        .unwrap_or(defaults.1);
    read_iq(path, rate, center)
}
