//! DSP primitives shared by every pipeline stage: frequency translation,
//! 2× interpolation, FIR low-pass filtering, quadrature demodulation, and
//! Welch power spectra.
//!
//! All operations are pure functions of their inputs — no internal state —
//! so they compose freely and can run concurrently on disjoint streams.

mod fir;
mod spectrum;

pub use fir::FirFilter;
pub use spectrum::{power_spectrum, SpectrumBin};

pub(crate) use fir::{blackman, convolve_full, sinc};
pub(crate) use spectrum::peak_bin;

use num_complex::Complex;

use crate::iq::{IqStream, RealSeries};
use crate::{Error, Result};

/// Multiplies the stream by a complex exponential of `shift_hz`, moving all
/// content by that amount within the band. Length, sample rate, and the
/// `center_freq_hz` tag are unchanged.
///
/// The rotator advances by a per-sample phase recurrence and is re-anchored
/// to an exactly computed phase every block, so magnitudes stay within
/// ~1e-13 relative and phase error stays near the f64 floor even across
/// tens of millions of samples.
pub fn frequency_shift(stream: &IqStream, shift_hz: f64) -> Result<IqStream> {
    if !shift_hz.is_finite() {
        return Err(Error::parameter("shift must be finite"));
    }
    if shift_hz.abs() >= stream.sample_rate_hz / 2.0 {
        return Err(Error::parameter(format!(
            "shift of {shift_hz} Hz is outside the representable band of a \
             {} Hz stream",
            stream.sample_rate_hz
        )));
    }

    let mut samples = stream.samples.clone();
    rotate_in_place(&mut samples, shift_hz / stream.sample_rate_hz);
    Ok(IqStream {
        samples,
        sample_rate_hz: stream.sample_rate_hz,
        center_freq_hz: stream.center_freq_hz,
    })
}

/// Rotates samples by `cycles_per_sample` revolutions per sample, in place.
/// A per-sample recurrence multiply, re-anchored to an exactly computed phase
/// every block so error never accumulates across long streams. The anchor
/// phase uses 2π·frac(c·n) rather than 2π·c·n to dodge huge-angle precision
/// loss.
pub(crate) fn rotate_in_place(samples: &mut [Complex<f64>], cycles_per_sample: f64) {
    let step = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * cycles_per_sample);
    const BLOCK: usize = 1024;
    let n = samples.len();
    let mut start = 0;
    while start < n {
        let end = (start + BLOCK).min(n);
        let phase = 2.0 * std::f64::consts::PI * (cycles_per_sample * start as f64).fract();
        let mut rot = Complex::from_polar(1.0, phase);
        for s in &mut samples[start..end] {
            *s *= rot;
            rot *= step;
        }
        start = end;
    }
}

/// Length of the fixed anti-imaging filter used by [`interpolate_x2`].
pub const INTERP_FILTER_LEN: usize = 127;

/// Doubles the sample rate: zero-stuff by 2 and suppress the spectral images
/// with a 127-tap Blackman windowed-sinc half-band filter (−6 dB at the
/// original Nyquist, ≈74 dB image rejection).
///
/// Output length is exactly 2·N and the output is time-aligned with the
/// input (group delay compensated). Thanks to the half-band structure the
/// even output samples are the original samples (scaled by the ≈1.0 center
/// tap) and only the interpolated midpoints need computing.
pub fn interpolate_x2(stream: &IqStream) -> Result<IqStream> {
    let n = stream.len();
    if n < INTERP_FILTER_LEN {
        return Err(Error::parameter(format!(
            "stream of {n} samples is shorter than the {INTERP_FILTER_LEN}-tap \
             anti-imaging filter"
        )));
    }

    // Half-band prototype: cutoff at exactly ¼ of the doubled rate, overall
    // gain 2 to restore amplitude after zero-stuffing.
    let mid = (INTERP_FILTER_LEN / 2) as f64;
    let win = blackman(INTERP_FILTER_LEN);
    let mut h: Vec<f64> = (0..INTERP_FILTER_LEN)
        .map(|k| sinc(0.5 * (k as f64 - mid)) * win[k])
        .collect();
    let sum: f64 = h.iter().sum();
    for t in &mut h {
        *t *= 2.0 / sum;
    }

    // Polyphase split: odd taps are zero except the center (pass-through
    // phase); even taps interpolate the midpoints.
    let center = h[INTERP_FILTER_LEN / 2];
    let g: Vec<f64> = h.iter().step_by(2).copied().collect(); // 64 taps
    let full = convolve_full(&stream.samples, &g);

    let mut samples = Vec::with_capacity(2 * n);
    for m in 0..n {
        samples.push(stream.samples[m] * center);
        samples.push(full[m + g.len() / 2]);
    }

    Ok(IqStream {
        samples,
        sample_rate_hz: 2.0 * stream.sample_rate_hz,
        center_freq_hz: stream.center_freq_hz,
    })
}

/// Low-pass filters the stream with a Hamming windowed-sinc FIR (passband to
/// `cutoff_hz`, stopband beyond `cutoff_hz + transition_hz`), group-delay
/// compensated so the output aligns with the input sample-for-sample.
///
/// The first and last `(taps − 1) / 2` samples are edge transients; callers
/// that care (the fingerprint stage) skip a settling margin of one filter
/// length at each end.
pub fn fir_lowpass(stream: &IqStream, cutoff_hz: f64, transition_hz: f64) -> Result<IqStream> {
    let filter = FirFilter::lowpass(stream.sample_rate_hz, cutoff_hz, transition_hz)?;
    Ok(IqStream {
        samples: filter.filter_same(&stream.samples),
        sample_rate_hz: stream.sample_rate_hz,
        center_freq_hz: stream.center_freq_hz,
    })
}

/// Phase-difference FM discriminator: value n is
/// `angle(s[n+1]·conj(s[n])) · rate / 2π`, the instantaneous frequency in Hz
/// between consecutive samples. Output length is N − 1.
pub fn quadrature_demod(stream: &IqStream) -> Result<RealSeries> {
    if stream.len() < 2 {
        return Err(Error::parameter(format!(
            "quadrature demodulation needs at least 2 samples, got {}",
            stream.len()
        )));
    }
    let scale = stream.sample_rate_hz / (2.0 * std::f64::consts::PI);
    let values = stream
        .samples
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).arg() * scale)
        .collect();
    Ok(RealSeries { values, sample_rate_hz: stream.sample_rate_hz })
}
