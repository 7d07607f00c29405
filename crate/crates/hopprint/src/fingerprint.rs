//! Per-burst RF fingerprints: carrier frequency offset and modulation
//! scaling factor.
//!
//! A GFSK burst's instantaneous frequency rides between two plateaus,
//! `cfo + deviation` on one-bits and `cfo − deviation` on zero-bits. The
//! extractor demodulates the dehopped burst, discards the filter-settling
//! edges, and keeps only the flat stretches of the frequency trajectory
//! (slope and curvature gates over sliding half-symbol means — bit
//! transitions have steep slope, and the rounded peak of an isolated bit
//! has high curvature even where its slope vanishes). The gated plateau
//! values are split by sign and reduced to the two levels by per-side
//! medians, which shrug off the residual transition samples a threshold
//! inevitably lets through.
//!
//! Two reductions from the levels to a `(cfo, scaling factor)` pair are in
//! circulation and differ only by an exchange-and-halve; both are offered as
//! [`Variant`]s and are algebraically locked to each other: the literal
//! variant's CFO *is* the symmetric variant's scaling factor, and the
//! symmetric CFO is exactly twice the literal scaling factor. Classification
//! quality is identical either way — the variants are affine images of the
//! same two measurements.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::Burst;
use crate::dsp::quadrature_demod;
use crate::{Error, Result};

/// Which reduction maps the two plateau levels to `(cfo, scaling factor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `cfo = (max − min) / 2`, `scaling factor = (max + min) / 4`.
    ///
    /// Widely quoted; its "cfo" actually measures the frequency deviation
    /// and its scaling factor half the true carrier offset.
    Literal,
    /// `cfo = (max + min) / 2`, `scaling factor = (max − min) / 2` — the
    /// physical reading: the plateau midpoint is the carrier offset and the
    /// half-spread is the deviation.
    Symmetric,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Literal => "literal",
            Variant::Symmetric => "symmetric",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Variant::Literal),
            "symmetric" => Ok(Variant::Symmetric),
            other => Err(Error::parameter(format!(
                "unknown variant '{other}' (expected 'literal' or 'symmetric')"
            ))),
        }
    }
}

/// Tuning for the plateau extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FingerprintConfig {
    /// Symbol rate of the modulation, Hz. Sliding-mean windows are half a
    /// symbol long so they fit inside single-bit plateaus.
    pub symbol_rate_hz: f64,
    /// Keep positions whose slope and curvature are each below this fraction
    /// of that statistic's own 95th percentile.
    pub gate_fraction: f64,
    /// If the gate keeps fewer values than this, fall back to the ungated
    /// trajectory (short bursts, pathological payloads).
    pub min_gated: usize,
    /// Bursts with fewer usable demodulated samples than this are skipped.
    pub min_payload_samples: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 1e6,
            gate_fraction: 0.3,
            min_gated: 8,
            min_payload_samples: 50,
        }
    }
}

/// One burst reduced to the two-dimensional feature the classifier uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    /// Ground-truth or predicted device label; empty in CSV when unknown.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(rename = "channel")]
    pub channel_index: usize,
    pub start_sample: usize,
    pub cfo_hz: f64,
    pub scaling_factor: f64,
    pub variant: Variant,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Reduces a two-level instantaneous-frequency series to `(cfo_hz,
/// scaling_factor)` under the chosen variant.
///
/// Values are split by sign and each side is collapsed to its median, so up
/// to half of either side may be outliers without moving the result. Both
/// variants are computed from the same two medians, which makes the
/// cross-variant identities hold bit for bit. Fails with
/// [`Error::Degenerate`] when the series never crosses zero — there is no
/// second level to measure.
pub fn reduce_series(values: &[f64], variant: Variant) -> Result<(f64, f64)> {
    let mut pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    let mut neg: Vec<f64> = values.iter().copied().filter(|v| *v < 0.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::degenerate(format!(
            "frequency trajectory never crosses zero ({} positive, {} negative values)",
            pos.len(),
            neg.len()
        )));
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let max_level = median(&pos);
    let min_level = median(&neg);

    let mid = (max_level + min_level) / 2.0;
    let half_spread = (max_level - min_level) / 2.0;
    Ok(match variant {
        Variant::Literal => (half_spread, mid / 2.0),
        Variant::Symmetric => (mid, half_spread),
    })
}

/// Demodulates one dehopped burst and extracts its fingerprint.
///
/// The demodulated trajectory is trimmed by the guard padding plus one
/// filter length at each end (filter transients there aren't transmitter
/// behavior), gated down to plateau samples — low slope *and* low curvature,
/// so symbol flanks and isolated-bit peaks both drop out — and reduced by
/// [`reduce_series`]. Errors are [`Error::Degenerate`] for bursts too short
/// or too featureless to measure — callers batching a capture usually skip
/// those rather than abort.
pub fn extract_fingerprint(
    burst: &Burst,
    variant: Variant,
    config: &FingerprintConfig,
) -> Result<Fingerprint> {
    let fs = burst.samples.sample_rate_hz;
    let w = (0.5 * fs / config.symbol_rate_hz).round() as usize;
    if w < 1 {
        return Err(Error::parameter(format!(
            "sample rate {fs} Hz is below the symbol rate {} Hz",
            config.symbol_rate_hz
        )));
    }

    let demod = quadrature_demod(&burst.samples)?;
    let lo = burst.guard_pre + burst.settle_samples;
    let hi = demod
        .values
        .len()
        .saturating_sub(burst.guard_post + burst.settle_samples);
    if hi <= lo {
        return Err(Error::degenerate(
            "burst shorter than its guard padding and filter transients",
        ));
    }
    let vals = &demod.values[lo..hi];
    if vals.len() < config.min_payload_samples.max(2 * w + 1) {
        return Err(Error::degenerate(format!(
            "only {} usable demodulated samples (need {})",
            vals.len(),
            config.min_payload_samples.max(2 * w + 1)
        )));
    }

    // Sliding means from prefix sums: slope = |mean of the right half-symbol
    // − mean of the left|, value = mean over the centered full symbol.
    let mut prefix = Vec::with_capacity(vals.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in vals {
        acc += v;
        prefix.push(acc);
    }
    let mean = |a: usize, b: usize| (prefix[b] - prefix[a]) / (b - a) as f64;

    let positions = vals.len() - 2 * w;
    let h = (w / 2).max(1);
    let mut slopes = Vec::with_capacity(positions);
    let mut curvatures = Vec::with_capacity(positions);
    let mut values = Vec::with_capacity(positions);
    for p in w..vals.len() - w {
        let left = mean(p - w, p);
        let right = mean(p, p + w);
        // A slope gate alone keeps the rounded peak of an isolated bit, where
        // the trajectory is momentarily flat short of the full deviation and
        // drags the level medians inward. The curvature term — the centered
        // half-symbol mean against the average of its flanks — is zero on
        // true plateaus and large exactly at those peaks.
        slopes.push((right - left).abs());
        curvatures.push((mean(p - h, p + h) - 0.5 * (left + right)).abs());
        values.push(mean(p - w, p + w));
    }

    let gate = |series: &[f64]| {
        let mut sorted = series.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        config.gate_fraction * sorted[rank - 1]
    };
    let slope_gate = gate(&slopes);
    let curvature_gate = gate(&curvatures);

    let gated: Vec<f64> = (0..positions)
        .filter(|&p| slopes[p] < slope_gate && curvatures[p] < curvature_gate)
        .map(|p| values[p])
        .collect();
    let kept = if gated.len() >= config.min_gated { &gated } else { &values };

    let (cfo_hz, scaling_factor) = reduce_series(kept, variant)?;
    Ok(Fingerprint {
        label: None,
        channel_index: burst.channel_index,
        start_sample: burst.start_sample,
        cfo_hz,
        scaling_factor,
        variant,
    })
}

/// Fingerprints every burst in a capture, skipping the degenerate ones.
/// Returns the fingerprints plus how many bursts were skipped.
pub fn fingerprint_capture(
    bursts: &[Burst],
    variant: Variant,
    config: &FingerprintConfig,
) -> (Vec<Fingerprint>, usize) {
    let mut out = Vec::with_capacity(bursts.len());
    let mut skipped = 0;
    for burst in bursts {
        match extract_fingerprint(burst, variant, config) {
            Ok(fp) => out.push(fp),
            Err(_) => skipped += 1,
        }
    }
    (out, skipped)
}

/// Writes fingerprints as CSV with columns
/// `label,channel,start_sample,cfo_hz,scaling_factor,variant`.
pub fn write_fingerprints_csv(fingerprints: &[Fingerprint], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for fp in fingerprints {
        writer.serialize(fp)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads fingerprints written by [`write_fingerprints_csv`]. Empty label
/// fields come back as `None`.
pub fn read_fingerprints_csv(path: &Path) -> Result<Vec<Fingerprint>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let mut fp: Fingerprint = row?;
        if fp.label.as_deref() == Some("") {
            fp.label = None;
        }
        out.push(fp);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::frequency_shift;
    use crate::iq::IqStream;
    use crate::synth::{gfsk_burst, DeviceProfile, MERGED_RATE_HZ};
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand::Rng as _;
    use rand_chacha::ChaCha8Rng;

    fn test_profile(deviation_hz: f64) -> DeviceProfile {
        DeviceProfile {
            label: "t".into(),
            cfo_mean_hz: 0.0,
            cfo_jitter_hz: 0.0,
            deviation_hz,
            amplitude: 1.0,
            symbol_rate_hz: 1e6,
        }
    }

    /// Wraps a baseband stream as a detector output with no guard padding;
    /// `settle` covers the synthesis amplitude ramps.
    fn to_burst(stream: IqStream, settle: usize) -> Burst {
        let n = stream.len();
        let mean_power = stream.mean_power();
        Burst {
            samples: stream,
            channel_index: 0,
            start_sample: 0,
            end_sample: n,
            coarse_freq_hz: 0.0,
            mean_power,
            guard_pre: 0,
            guard_post: 0,
            guard_clamped: false,
            settle_samples: settle,
        }
    }

    fn random_payload(bits: usize, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..bits).map(|_| rng.gen()).collect()
    }

    #[test]
    fn reduce_symmetric_levels_exactly() {
        // Levels ±160 kHz: no carrier offset.
        let series = [160_000.0, -160_000.0, 160_000.0, -160_000.0, 160_000.0];
        assert_eq!(reduce_series(&series, Variant::Literal).unwrap(), (160_000.0, 0.0));
        assert_eq!(reduce_series(&series, Variant::Symmetric).unwrap(), (0.0, 160_000.0));
    }

    #[test]
    fn reduce_offset_levels_exactly() {
        // Deviation 160 kHz shifted by a 50 kHz carrier offset.
        let series = [210_000.0, -110_000.0, 210_000.0, -110_000.0];
        assert_eq!(
            reduce_series(&series, Variant::Literal).unwrap(),
            (160_000.0, 25_000.0)
        );
        assert_eq!(
            reduce_series(&series, Variant::Symmetric).unwrap(),
            (50_000.0, 160_000.0)
        );
    }

    #[test]
    fn reduce_rejects_single_sided_series() {
        let err = reduce_series(&[1.0, 2.0, 3.0], Variant::Symmetric).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "got {err:?}");
    }

    #[test]
    fn reduce_shrugs_off_ten_percent_outliers() {
        // 90 plateau samples per side plus 10 wild transition residues.
        let mut series = Vec::new();
        for _ in 0..45 {
            series.push(165_000.0);
            series.push(-155_000.0);
        }
        for i in 0..10 {
            series.push(if i % 2 == 0 { 800_000.0 } else { -3_000.0 });
        }
        let (cfo, sf) = reduce_series(&series, Variant::Symmetric).unwrap();
        assert!((cfo - 5_000.0).abs() < 0.01 * 5_000.0, "cfo {cfo}");
        assert!((sf - 160_000.0).abs() < 0.01 * 160_000.0, "sf {sf}");
    }

    proptest! {
        // The two variants are exact algebraic images of each other,
        // bit for bit, on any reducible series.
        #[test]
        fn variant_identities_are_bit_exact(
            max in 1e3f64..5e5,
            min in -5e5f64..-1e3,
            jitter in proptest::collection::vec(-1e3f64..1e3, 4..40)
        ) {
            let mut series = vec![max, min];
            for (i, j) in jitter.iter().enumerate() {
                series.push(if i % 2 == 0 { max + j } else { min + j });
            }
            let lit = reduce_series(&series, Variant::Literal).unwrap();
            let sym = reduce_series(&series, Variant::Symmetric).unwrap();
            prop_assert_eq!(lit.0.to_bits(), sym.1.to_bits());
            prop_assert_eq!(sym.0.to_bits(), (2.0 * lit.1).to_bits());
        }
    }

    #[test]
    fn noiseless_burst_measures_cfo_and_deviation() {
        let profile = test_profile(160e3);
        let payload = random_payload(300, 5);
        let stream = gfsk_burst(&profile, &payload, MERGED_RATE_HZ, 40e3).unwrap();
        let burst = to_burst(stream, 400);

        let fp = extract_fingerprint(&burst, Variant::Symmetric, &FingerprintConfig::default())
            .unwrap();
        assert!((fp.cfo_hz - 40e3).abs() < 500.0, "cfo {}", fp.cfo_hz);
        assert!(
            (fp.scaling_factor - 160e3).abs() < 0.01 * 160e3,
            "sf {}",
            fp.scaling_factor
        );

        let fp = extract_fingerprint(&burst, Variant::Literal, &FingerprintConfig::default())
            .unwrap();
        assert!((fp.cfo_hz - 160e3).abs() < 0.01 * 160e3, "cfo {}", fp.cfo_hz);
        assert!((fp.scaling_factor - 20e3).abs() < 250.0, "sf {}", fp.scaling_factor);
    }

    #[test]
    fn extracted_variants_satisfy_the_identities_bit_for_bit() {
        let profile = test_profile(150e3);
        let payload = random_payload(250, 9);
        let stream = gfsk_burst(&profile, &payload, MERGED_RATE_HZ, -30e3).unwrap();
        let burst = to_burst(stream, 400);

        let config = FingerprintConfig::default();
        let lit = extract_fingerprint(&burst, Variant::Literal, &config).unwrap();
        let sym = extract_fingerprint(&burst, Variant::Symmetric, &config).unwrap();
        assert_eq!(lit.cfo_hz.to_bits(), sym.scaling_factor.to_bits());
        assert_eq!(sym.cfo_hz.to_bits(), (2.0 * lit.scaling_factor).to_bits());
    }

    #[test]
    fn fingerprint_ignores_amplitude_scale() {
        let profile = test_profile(170e3);
        let payload = random_payload(200, 11);
        let stream = gfsk_burst(&profile, &payload, MERGED_RATE_HZ, 25e3).unwrap();

        let mut scaled = stream.clone();
        for v in &mut scaled.samples {
            *v *= 3.7;
        }
        let config = FingerprintConfig::default();
        let a = extract_fingerprint(&to_burst(stream, 400), Variant::Symmetric, &config).unwrap();
        let b = extract_fingerprint(&to_burst(scaled, 400), Variant::Symmetric, &config).unwrap();
        assert!((a.cfo_hz - b.cfo_hz).abs() <= 1e-9 * a.cfo_hz.abs().max(1.0));
        assert!((a.scaling_factor - b.scaling_factor).abs() <= 1e-9 * a.scaling_factor);
    }

    #[test]
    fn frequency_shift_moves_only_the_symmetric_cfo() {
        let profile = test_profile(160e3);
        let payload = random_payload(220, 3);
        let stream = gfsk_burst(&profile, &payload, MERGED_RATE_HZ, 10e3).unwrap();
        let shifted = frequency_shift(&stream, 5e3).unwrap();

        let config = FingerprintConfig::default();
        let base = extract_fingerprint(&to_burst(stream, 400), Variant::Symmetric, &config).unwrap();
        let moved =
            extract_fingerprint(&to_burst(shifted, 400), Variant::Symmetric, &config).unwrap();
        assert!(
            (moved.cfo_hz - base.cfo_hz - 5e3).abs() < 50.0,
            "Δcfo {}",
            moved.cfo_hz - base.cfo_hz
        );
        assert!(
            (moved.scaling_factor - base.scaling_factor).abs() < 50.0,
            "Δsf {}",
            moved.scaling_factor - base.scaling_factor
        );
    }

    #[test]
    fn capture_batch_counts_skipped_bursts() {
        let profile = test_profile(160e3);
        let config = FingerprintConfig::default();
        let good = |seed| {
            to_burst(
                gfsk_burst(&profile, &random_payload(200, seed), MERGED_RATE_HZ, 15e3).unwrap(),
                400,
            )
        };
        // 30 bits = 2400 samples, entirely eaten by two 1200-sample settles.
        let runt = to_burst(
            gfsk_burst(&profile, &random_payload(30, 2), MERGED_RATE_HZ, 15e3).unwrap(),
            1200,
        );
        let bursts = vec![good(6), runt, good(7)];
        let (fps, skipped) = fingerprint_capture(&bursts, Variant::Symmetric, &config);
        assert_eq!(fps.len(), 2);
        assert_eq!(skipped, 1);
    }

    #[test]
    fn csv_round_trip_preserves_every_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fingerprints.csv");
        let fps = vec![
            Fingerprint {
                label: Some("watch-a".into()),
                channel_index: 37,
                start_sample: 123_456,
                cfo_hz: -44_987.625,
                scaling_factor: 164998.0625,
                variant: Variant::Symmetric,
            },
            Fingerprint {
                label: None,
                channel_index: 2,
                start_sample: 9,
                cfo_hz: 0.1 + 0.2, // not exactly representable — must survive
                scaling_factor: 1.0 / 3.0,
                variant: Variant::Literal,
            },
        ];
        write_fingerprints_csv(&fps, &path).unwrap();
        let back = read_fingerprints_csv(&path).unwrap();
        assert_eq!(back, fps);
    }

    #[test]
    fn variant_parses_and_prints() {
        assert_eq!("literal".parse::<Variant>().unwrap(), Variant::Literal);
        assert_eq!("symmetric".parse::<Variant>().unwrap(), Variant::Symmetric);
        assert!("sym".parse::<Variant>().is_err());
        assert_eq!(Variant::Symmetric.to_string(), "symmetric");
        assert_eq!(Variant::Literal.to_string(), "literal");
    }
}
