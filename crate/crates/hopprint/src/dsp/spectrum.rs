//! Welch-averaged power spectra of IQ streams.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::iq::IqStream;
use crate::{Error, Result};

/// One spectrum bin: absolute frequency of the bin center and linear power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBin {
    pub freq_hz: f64,
    pub power: f64,
}

/// Welch-averaged periodogram: Hann-windowed segments of `nfft` samples at
/// 50% overlap, magnitude-squared spectra averaged across segments.
///
/// Bins run from −rate/2 to +rate/2 around the stream's center frequency, so
/// `freq_hz` is absolute RF when the stream is tagged with one. Normalization
/// makes the bins sum to mean signal power: a tone of amplitude A carries A²
/// across its (few, leakage-spread) bins, and noise of variance σ² sums to σ²
/// across the whole spectrum.
pub fn power_spectrum(stream: &IqStream, nfft: usize) -> Result<Vec<SpectrumBin>> {
    if nfft < 2 || !nfft.is_power_of_two() {
        return Err(Error::parameter(format!(
            "nfft must be a power of two ≥ 2, got {nfft}"
        )));
    }
    if stream.len() < nfft {
        return Err(Error::parameter(format!(
            "stream of {} samples is shorter than nfft {nfft}",
            stream.len()
        )));
    }

    let hann: Vec<f64> = (0..nfft)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / (nfft - 1) as f64;
            0.5 - 0.5 * t.cos()
        })
        .collect();
    let window_power: f64 = hann.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nfft);

    let hop = nfft / 2;
    let mut acc = vec![0.0f64; nfft];
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + nfft <= stream.len() {
        for (b, (s, w)) in buf
            .iter_mut()
            .zip(stream.samples[start..start + nfft].iter().zip(&hann))
        {
            *b = s * *w;
        }
        fft.process(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let norm = 1.0 / (segments as f64 * nfft as f64 * window_power);
    let bin_hz = stream.sample_rate_hz / nfft as f64;
    let half = nfft / 2;
    // FFT order is [0 … +Nyq) then (−Nyq … 0); reorder to ascending frequency.
    Ok((0..nfft)
        .map(|i| {
            let raw = (i + half) % nfft;
            SpectrumBin {
                freq_hz: stream.center_freq_hz + (i as f64 - half as f64) * bin_hz,
                power: acc[raw] * norm,
            }
        })
        .collect())
}

/// Index of the strongest bin.
pub(crate) fn peak_bin(bins: &[SpectrumBin]) -> usize {
    bins.iter()
        .enumerate()
        .max_by(|a, b| a.1.power.total_cmp(&b.1.power))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
