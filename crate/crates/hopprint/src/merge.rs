//! Combining two half-band captures into one full-band stream.
//!
//! Two receivers, tuned 40 MHz apart, each record half of the 2.4 GHz ISM
//! band. Interpolating both to the doubled rate, shifting the lower capture
//! down by half the original rate and the upper one up by the same amount,
//! and summing yields a single stream covering the union of both bands —
//! with the default tunings, 2401.5–2481.5 MHz at 80 MHz around a
//! 2441.5 MHz center.

use crate::dsp::{interpolate_x2, rotate_in_place, INTERP_FILTER_LEN};
use crate::iq::IqStream;
use crate::{Error, Result};

/// Merges a lower and an upper half-band capture of equal sample rate whose
/// center frequencies are one sample-rate apart.
///
/// `offset_samples` compensates capture-start skew between the two files:
/// positive values drop that many samples from the front of `upper`,
/// negative values from the front of `lower`. Both streams are then trimmed
/// to their common length, so the output holds 2·min(adjusted lengths)
/// samples at twice the input rate, centered midway between the two input
/// centers.
pub fn merge_streams(lower: IqStream, upper: IqStream, offset_samples: i64) -> Result<IqStream> {
    let rate = lower.sample_rate_hz;
    if (upper.sample_rate_hz - rate).abs() > 1e-9 * rate {
        return Err(Error::parameter(format!(
            "sample rates differ: lower {} Hz, upper {} Hz",
            rate, upper.sample_rate_hz
        )));
    }
    let spacing = upper.center_freq_hz - lower.center_freq_hz;
    if (spacing - rate).abs() > 1.0 {
        return Err(Error::parameter(format!(
            "center spacing {spacing} Hz must equal the sample rate {rate} Hz \
             for seamless half-bands"
        )));
    }

    let center = (lower.center_freq_hz + upper.center_freq_hz) / 2.0;
    let (mut lo, mut up) = (lower.samples, upper.samples);
    if offset_samples >= 0 {
        let skip = offset_samples as usize;
        if skip >= up.len() {
            return Err(Error::parameter(format!(
                "offset of {offset_samples} samples leaves no overlap with the \
                 {}-sample upper stream",
                up.len()
            )));
        }
        up.drain(..skip);
    } else {
        let skip = offset_samples.unsigned_abs() as usize;
        if skip >= lo.len() {
            return Err(Error::parameter(format!(
                "offset of {offset_samples} samples leaves no overlap with the \
                 {}-sample lower stream",
                lo.len()
            )));
        }
        lo.drain(..skip);
    }
    let n = lo.len().min(up.len());
    if n < INTERP_FILTER_LEN {
        return Err(Error::parameter(format!(
            "only {n} overlapping samples after offset; need at least \
             {INTERP_FILTER_LEN} to interpolate"
        )));
    }
    lo.truncate(n);
    up.truncate(n);

    // Each half: ×2 interpolation, then translate so its original center
    // lands ∓rate/2 from the new common center.
    let half = |samples: Vec<Complex64>, shift_hz: f64| -> Result<Vec<Complex64>> {
        let stream = IqStream { samples, sample_rate_hz: rate, center_freq_hz: 0.0 };
        let mut up2 = interpolate_x2(&stream)?;
        drop(stream);
        rotate_in_place(&mut up2.samples, shift_hz / up2.sample_rate_hz);
        Ok(up2.samples)
    };

    let mut merged = half(lo, -rate / 2.0)?;
    let upper_shifted = half(up, rate / 2.0)?;
    for (m, u) in merged.iter_mut().zip(&upper_shifted) {
        *m += *u;
    }

    Ok(IqStream { samples: merged, sample_rate_hz: 2.0 * rate, center_freq_hz: center })
}

type Complex64 = num_complex::Complex<f64>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{power_spectrum, SpectrumBin};

    const LOWER_CENTER: f64 = 2.4215e9;
    const UPPER_CENTER: f64 = 2.4615e9;
    const RATE: f64 = 40e6;

    fn tone_stream(n: usize, center: f64, tone_abs_hz: f64, amp: f64) -> IqStream {
        let offset = tone_abs_hz - center;
        let samples = (0..n)
            .map(|i| {
                Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * offset * i as f64 / RATE)
            })
            .collect();
        IqStream { samples, sample_rate_hz: RATE, center_freq_hz: center }
    }

    fn zero_stream(n: usize, center: f64) -> IqStream {
        IqStream {
            samples: vec![Complex64::new(0.0, 0.0); n],
            sample_rate_hz: RATE,
            center_freq_hz: center,
        }
    }

    fn peak(bins: &[SpectrumBin]) -> &SpectrumBin {
        bins.iter().max_by(|a, b| a.power.total_cmp(&b.power)).unwrap()
    }

    #[test]
    fn lower_dc_tone_lands_at_minus_20_mhz() {
        let merged = merge_streams(
            tone_stream(16384, LOWER_CENTER, LOWER_CENTER, 1.0),
            zero_stream(16384, UPPER_CENTER),
            0,
        )
        .unwrap();
        assert_eq!(merged.sample_rate_hz, 80e6);
        assert_eq!(merged.center_freq_hz, 2.4415e9);
        assert_eq!(merged.len(), 2 * 16384);

        let bins = power_spectrum(&merged, 8192).unwrap();
        let p = peak(&bins);
        let bin_hz = 80e6 / 8192.0;
        assert!(
            (p.freq_hz - LOWER_CENTER).abs() <= bin_hz,
            "peak at {} Hz, wanted {} Hz",
            p.freq_hz,
            LOWER_CENTER
        );
    }

    #[test]
    fn upper_dc_tone_lands_at_plus_20_mhz() {
        let merged = merge_streams(
            zero_stream(16384, LOWER_CENTER),
            tone_stream(16384, UPPER_CENTER, UPPER_CENTER, 1.0),
            0,
        )
        .unwrap();
        let bins = power_spectrum(&merged, 8192).unwrap();
        let p = peak(&bins);
        assert!(
            (p.freq_hz - UPPER_CENTER).abs() <= 80e6 / 8192.0,
            "peak at {} Hz",
            p.freq_hz
        );
    }

    #[test]
    fn mid_band_tone_keeps_its_absolute_frequency() {
        // 2435.0 MHz rides in the lower capture at +13.5 MHz and must come
        // out of the merge at −6.5 MHz relative to 2441.5 MHz.
        let merged = merge_streams(
            tone_stream(16384, LOWER_CENTER, 2.435e9, 1.0),
            zero_stream(16384, UPPER_CENTER),
            0,
        )
        .unwrap();
        let bins = power_spectrum(&merged, 8192).unwrap();
        let p = peak(&bins);
        assert!((p.freq_hz - 2.435e9).abs() <= 80e6 / 8192.0, "peak at {} Hz", p.freq_hz);
    }

    #[test]
    fn zeros_merge_to_zeros() {
        let merged =
            merge_streams(zero_stream(1024, LOWER_CENTER), zero_stream(1024, UPPER_CENTER), 0)
                .unwrap();
        assert!(merged.samples.iter().all(|s| s.re == 0.0 && s.im == 0.0));
    }

    #[test]
    fn energy_of_disjoint_content_adds() {
        let lower = tone_stream(8192, LOWER_CENTER, 2.4265e9, 0.8);
        let upper = tone_stream(8192, UPPER_CENTER, 2.4585e9, 1.3);
        let e_in = lower.energy() + upper.energy();
        let merged = merge_streams(lower, upper, 0).unwrap();
        let ratio = merged.energy() / e_in;
        assert!((ratio - 1.0).abs() < 0.02, "energy ratio {ratio}");
    }

    #[test]
    fn positive_offset_drops_upper_lead_in() {
        let upper = tone_stream(4096, UPPER_CENTER, 2.4655e9, 1.0);
        let mut padded = zero_stream(300, UPPER_CENTER);
        padded.samples.extend_from_slice(&upper.samples);

        let lower = zero_stream(4096, LOWER_CENTER);
        let aligned = merge_streams(lower.clone(), upper, 0).unwrap();
        let via_offset = merge_streams(lower, padded, 300).unwrap();
        assert_eq!(aligned.samples, via_offset.samples);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let lower = zero_stream(1024, LOWER_CENTER);
        let mut wrong_rate = zero_stream(1024, UPPER_CENTER);
        wrong_rate.sample_rate_hz = 20e6;
        assert!(merge_streams(lower.clone(), wrong_rate, 0).is_err());

        let wrong_spacing = zero_stream(1024, 2.45e9);
        assert!(merge_streams(lower.clone(), wrong_spacing, 0).is_err());

        let upper = zero_stream(1024, UPPER_CENTER);
        assert!(merge_streams(lower, upper, 5000).is_err());
    }
}
