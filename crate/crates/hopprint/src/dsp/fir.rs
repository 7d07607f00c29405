//! Windowed-sinc FIR design and FFT-based convolution.
//!
//! Filters here are linear-phase (symmetric real taps, odd length), so group
//! delay is an integer sample count and [`FirFilter::filter_same`] can return
//! an output aligned in time with its input.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Normalized sinc: sin(πx)/(πx), with sinc(0) = 1.
pub(crate) fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Symmetric Hamming window of length `n` (~53 dB stopband as a sinc window).
pub(crate) fn hamming(n: usize) -> Vec<f64> {
    window(n, |t| 0.54 - 0.46 * (t).cos())
}

/// Symmetric Blackman window of length `n` (~74 dB stopband as a sinc window).
pub(crate) fn blackman(n: usize) -> Vec<f64> {
    window(n, |t| 0.42 - 0.5 * t.cos() + 0.08 * (2.0 * t).cos())
}

fn window(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    assert!(n >= 2, "window needs at least 2 points");
    // Evaluate one half and mirror it so the symmetry is exact in floating
    // point, not merely analytic — linear phase depends on it bitwise.
    let mut w = vec![0.0; n];
    for k in 0..=(n - 1) / 2 {
        let v = f(2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64);
        w[k] = v;
        w[n - 1 - k] = v;
    }
    w
}

/// Linear deconvolution workhorse: full linear convolution of complex samples
/// with real taps, output length `x.len() + taps.len() - 1`. Small products
/// run in direct form; everything else goes through overlap-add FFT blocks,
/// which is what makes kilotap filters on megasample streams affordable.
pub(crate) fn convolve_full(x: &[Complex<f64>], taps: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    let l = taps.len();
    if n == 0 || l == 0 {
        return Vec::new();
    }
    let out_len = n + l - 1;

    if n.saturating_mul(l) <= 1 << 16 {
        let mut out = vec![Complex::new(0.0, 0.0); out_len];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &hj) in taps.iter().enumerate() {
                out[i + j] += xi * hj;
            }
        }
        return out;
    }

    // Block size trades FFT count against per-FFT cost; bigger blocks pay off
    // once the input is long.
    let floor = if n >= 1 << 21 { 32_768 } else { 8_192 };
    let fft_size = (2 * l.next_power_of_two()).max(floor);
    let block = fft_size - (l - 1);

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(fft_size);
    let inv = planner.plan_fft_inverse(fft_size);

    let mut h_f: Vec<Complex<f64>> = taps.iter().map(|&t| Complex::new(t, 0.0)).collect();
    h_f.resize(fft_size, Complex::new(0.0, 0.0));
    fwd.process(&mut h_f);
    // rustfft leaves the round trip scaled by fft_size; fold the correction
    // into the tap spectrum so it costs nothing per block.
    let scale = 1.0 / fft_size as f64;
    for v in &mut h_f {
        *v *= scale;
    }

    let mut out = vec![Complex::new(0.0, 0.0); out_len];
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        let m = end - start;
        buf[..m].copy_from_slice(&x[start..end]);
        for v in &mut buf[m..] {
            *v = Complex::new(0.0, 0.0);
        }
        fwd.process(&mut buf);
        for (v, h) in buf.iter_mut().zip(&h_f) {
            *v *= *h;
        }
        inv.process(&mut buf);
        let take = (out_len - start).min(fft_size);
        for (o, v) in out[start..start + take].iter_mut().zip(&buf[..take]) {
            *o += *v;
        }
        start = end;
    }
    out
}

/// A linear-phase FIR filter with real, odd-length, even-symmetric taps.
#[derive(Debug, Clone)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    /// Wraps explicit taps. The tap count must be odd so the group delay is a
    /// whole number of samples.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() || taps.len().is_multiple_of(2) {
            return Err(Error::parameter(format!(
                "filter needs an odd number of taps, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::parameter("filter taps must be finite"));
        }
        Ok(Self { taps })
    }

    /// Designs a Hamming windowed-sinc low-pass: passband out to `cutoff_hz`,
    /// ≥ ~50 dB down beyond `cutoff_hz + transition_hz`, unity DC gain.
    ///
    /// The tap count comes from the Hamming transition-width rule
    /// (≈ 3.3 / N of the sample rate), rounded up to odd.
    pub fn lowpass(sample_rate_hz: f64, cutoff_hz: f64, transition_hz: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && transition_hz > 0.0) {
            return Err(Error::parameter(format!(
                "cutoff and transition must be positive, got {cutoff_hz} / {transition_hz}"
            )));
        }
        if cutoff_hz + transition_hz >= sample_rate_hz / 2.0 {
            return Err(Error::parameter(format!(
                "cutoff {cutoff_hz} Hz + transition {transition_hz} Hz reaches past Nyquist \
                 ({} Hz)",
                sample_rate_hz / 2.0
            )));
        }
        let mut num_taps = (3.3 * sample_rate_hz / transition_hz).ceil() as usize;
        if num_taps.is_multiple_of(2) {
            num_taps += 1;
        }
        num_taps = num_taps.max(3);

        // -6 dB point in the middle of the transition band.
        let fc = (cutoff_hz + transition_hz / 2.0) / sample_rate_hz;
        let mid = num_taps / 2;
        let win = hamming(num_taps);
        // Mirror around the middle tap instead of evaluating both halves, so
        // the even symmetry (and with it linear phase) holds bit-for-bit.
        let mut taps = vec![0.0; num_taps];
        for k in 0..=mid {
            let v = 2.0 * fc * sinc(2.0 * fc * (k as f64 - mid as f64)) * win[k];
            taps[k] = v;
            taps[num_taps - 1 - k] = v;
        }
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples: (len − 1) / 2 for the odd-length filters here.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Convolves and compensates group delay, returning exactly `x.len()`
    /// samples aligned with the input. The first and last `group_delay()`
    /// output samples are edge transients (the filter window hangs off the
    /// end of the data there).
    pub fn filter_same(&self, x: &[Complex<f64>]) -> Vec<Complex<f64>> {
        if x.is_empty() {
            return Vec::new();
        }
        let mut full = convolve_full(x, &self.taps);
        let delay = self.group_delay();
        full.drain(..delay);
        full.truncate(x.len());
        full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn direct_conv(x: &[Complex<f64>], h: &[f64]) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); x.len() + h.len() - 1];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &hj) in h.iter().enumerate() {
                out[i + j] += xi * hj;
            }
        }
        out
    }

    #[test]
    fn fft_convolution_matches_direct_form() {
        // Long enough to force the FFT path (n·l > 2^16).
        let x: Vec<Complex<f64>> = (0..3000)
            .map(|i| {
                let t = i as f64;
                Complex::new((0.1 * t).sin(), (0.07 * t).cos())
            })
            .collect();
        let h: Vec<f64> = (0..33).map(|j| ((j as f64) * 0.3).cos() / 7.0).collect();
        let fast = convolve_full(&x, &h);
        let slow = direct_conv(&x, &h);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn lowpass_taps_are_even_symmetric_and_odd_count() {
        let f = FirFilter::lowpass(80e6, 600e3, 200e3).unwrap();
        assert_eq!(f.len() % 2, 1);
        let taps = f.taps();
        for k in 0..taps.len() / 2 {
            assert_eq!(taps[k], taps[taps.len() - 1 - k], "tap {k} not mirrored");
        }
    }

    #[test]
    fn lowpass_tap_count_follows_transition_width() {
        // 3.3·fs/transition = 1320 → rounded up to odd.
        let f = FirFilter::lowpass(80e6, 600e3, 200e3).unwrap();
        assert_eq!(f.len(), 1321);
        assert_eq!(f.group_delay(), 660);
    }

    #[test]
    fn lowpass_dc_gain_is_unity() {
        let f = FirFilter::lowpass(1e6, 100e3, 50e3).unwrap();
        let sum: f64 = f.taps().iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lowpass_rejects_band_past_nyquist() {
        assert!(FirFilter::lowpass(1e6, 400e3, 200e3).is_err());
        assert!(FirFilter::lowpass(1e6, 0.0, 100e3).is_err());
        assert!(FirFilter::lowpass(1e6, -1.0, 100e3).is_err());
    }

    #[test]
    fn filter_same_preserves_length_and_alignment() {
        // An impulse through filter_same must come back centered on itself:
        // the peak stays at the impulse position.
        let f = FirFilter::lowpass(1e6, 100e3, 100e3).unwrap();
        let mut x = vec![Complex::new(0.0, 0.0); 201];
        x[100] = Complex::new(1.0, 0.0);
        let y = f.filter_same(&x);
        assert_eq!(y.len(), x.len());
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .unwrap()
            .0;
        assert_eq!(peak, 100);
    }
}
