//! Ground-truth capture generator.
//!
//! Builds Bluetooth-like GFSK burst captures with controlled per-device
//! impairments — carrier frequency offset, frequency deviation, amplitude —
//! hopped across a channel plan, with an exact truth table for every placed
//! burst. The capture is generated natively at the full 80 MHz merged rate;
//! the two 40 MHz half-band captures are then derived from it by
//! shift/filter/decimate, which makes "merge the halves and recover the
//! content" an exactly testable round trip.
//!
//! Everything is driven by one seed through counter-mode RNG streams (layout
//! on one stream, noise on another, each burst's payload and CFO draw on its
//! own), so identical scenarios produce bit-identical captures regardless of
//! how the work is scheduled.

use num_complex::Complex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::channel::{ChannelPlan, Standard};
use crate::dsp::{fir_lowpass, frequency_shift, rotate_in_place};
use crate::iq::IqStream;
use crate::{Error, Result};

/// Default center of the lower half-band capture (Hz).
pub const LOWER_CENTER_HZ: f64 = 2.4215e9;
/// Default center of the upper half-band capture (Hz).
pub const UPPER_CENTER_HZ: f64 = 2.4615e9;
/// Default half-band sample rate (Hz); the merged stream runs at twice this.
pub const HALF_RATE_HZ: f64 = 40e6;
/// Center of the merged full-band stream (Hz).
pub const MERGED_CENTER_HZ: f64 = (LOWER_CENTER_HZ + UPPER_CENTER_HZ) / 2.0;
/// Sample rate of the merged full-band stream (Hz).
pub const MERGED_RATE_HZ: f64 = 2.0 * HALF_RATE_HZ;

fn default_symbol_rate() -> f64 {
    1e6
}

/// Impairment model for one synthetic transmitter. Each packet draws its
/// carrier offset as `cfo_mean_hz + cfo_jitter_hz · N(0,1)`; deviation and
/// amplitude are fixed per device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub label: String,
    pub cfo_mean_hz: f64,
    #[serde(default)]
    pub cfo_jitter_hz: f64,
    pub deviation_hz: f64,
    pub amplitude: f64,
    #[serde(default = "default_symbol_rate")]
    pub symbol_rate_hz: f64,
}

impl DeviceProfile {
    fn validate(&self, half_bandwidth_hz: f64) -> Result<()> {
        if self.label.is_empty() {
            return Err(Error::parameter("device label must be non-empty"));
        }
        if !(self.deviation_hz > 0.0 && self.amplitude > 0.0 && self.symbol_rate_hz > 0.0) {
            return Err(Error::parameter(format!(
                "device '{}': deviation, amplitude, and symbol rate must be positive",
                self.label
            )));
        }
        if self.cfo_jitter_hz < 0.0 {
            return Err(Error::parameter(format!(
                "device '{}': CFO jitter must be non-negative",
                self.label
            )));
        }
        let swing = self.cfo_mean_hz.abs() + 3.0 * self.cfo_jitter_hz + self.deviation_hz;
        if swing >= half_bandwidth_hz {
            return Err(Error::parameter(format!(
                "device '{}': |CFO| + 3·jitter + deviation reaches {} Hz, escaping \
                 the ±{} Hz channel",
                self.label, swing, half_bandwidth_hz
            )));
        }
        Ok(())
    }
}

fn default_snr() -> f64 {
    20.0
}
fn default_payload_bits() -> usize {
    400
}
fn default_gap() -> (f64, f64) {
    (100.0, 300.0)
}
fn default_plan() -> Standard {
    Standard::Classic
}
fn default_profiles() -> Vec<DeviceProfile> {
    demo_profiles()
}

/// Everything that defines one synthetic recording session. The seed fixes
/// all randomness: hop channels, gaps, payloads, per-packet CFO draws, and
/// noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureScenario {
    #[serde(default = "default_profiles")]
    pub profiles: Vec<DeviceProfile>,
    pub packets_per_device: usize,
    /// Full-band SNR floor in dB: noise variance is set from the weakest
    /// profile so every burst has at least this much SNR over the whole
    /// merged bandwidth. `f64::INFINITY` disables noise.
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default = "default_plan")]
    pub plan: Standard,
    #[serde(default = "default_payload_bits")]
    pub payload_bits: usize,
    pub seed: u64,
    /// Uniformly drawn silence between bursts, microseconds (min, max).
    #[serde(default = "default_gap")]
    pub inter_burst_gap_us: (f64, f64),
}

impl CaptureScenario {
    /// A compact scenario over the built-in demo devices — small enough for
    /// examples and doc tests, structured like the full-scale runs.
    pub fn demo(seed: u64) -> Self {
        Self {
            profiles: demo_profiles(),
            packets_per_device: 8,
            snr_db: 20.0,
            plan: Standard::Classic,
            payload_bits: 200,
            seed,
            inter_burst_gap_us: (60.0, 200.0),
        }
    }

    fn validate(&self) -> Result<ChannelPlan> {
        let plan = ChannelPlan::for_standard(self.plan);
        if self.profiles.is_empty() {
            return Err(Error::parameter("scenario needs at least one device profile"));
        }
        let mut labels: Vec<&str> = self.profiles.iter().map(|p| p.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.profiles.len() {
            return Err(Error::parameter("device labels must be distinct"));
        }
        for p in &self.profiles {
            p.validate(plan.spacing_hz() / 2.0)?;
        }
        if self.packets_per_device == 0 {
            return Err(Error::parameter("packets_per_device must be ≥ 1"));
        }
        if self.payload_bits < 16 {
            return Err(Error::parameter("payload_bits must be ≥ 16"));
        }
        let (gmin, gmax) = self.inter_burst_gap_us;
        if !(gmin >= 0.0 && gmax >= gmin) {
            return Err(Error::parameter(format!(
                "inter-burst gap range ({gmin}, {gmax}) µs is not ordered"
            )));
        }
        if self.snr_db.is_nan() || self.snr_db <= -50.0 {
            return Err(Error::parameter(format!("snr_db {} is not usable", self.snr_db)));
        }

        // Refuse scenarios whose capture would not fit in memory.
        let bursts = self.profiles.len() * self.packets_per_device;
        let per_burst_us = self.payload_bits as f64 + gmax;
        let samples = bursts as f64 * per_burst_us * 1e-6 * MERGED_RATE_HZ;
        if samples > 2.5e8 {
            return Err(Error::parameter(format!(
                "scenario spans ≈{samples:.0} samples; too dense to generate in one capture"
            )));
        }
        Ok(plan)
    }
}

/// Ground truth for one generated burst: where it was placed and with what
/// impairments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub label: String,
    pub channel_index: usize,
    pub start_sample: usize,
    pub end_sample: usize,
    pub cfo_hz: f64,
    pub deviation_hz: f64,
    pub amplitude: f64,
}

/// A generated capture: the native full-band stream, the two derived
/// half-band captures, and the truth table.
#[derive(Debug, Clone)]
pub struct SyntheticCapture {
    pub merged: IqStream,
    pub lower: IqStream,
    pub upper: IqStream,
    pub truth: Vec<TruthRecord>,
}

/// Synthesizes one GFSK burst at complex baseband, carrier offset `cfo_hz`.
///
/// Bits map to ±1 symbols, pulse-shaped by a Gaussian filter with BT = 0.5
/// (the Bluetooth BR profile) so the instantaneous frequency is
/// `cfo + deviation · m(t)` with m ∈ [−1, 1] and full-deviation plateaus on
/// bit runs. Phase is continuous throughout; the envelope ramps up and down
/// with a 4-symbol raised cosine and holds `profile.amplitude` in between.
/// The burst spans exactly `bits · samples_per_symbol` samples, padded at
/// both edges with repeats of the boundary bit so the modulation starts and
/// ends on a plateau.
pub fn gfsk_burst(
    profile: &DeviceProfile,
    payload: &[bool],
    sample_rate_hz: f64,
    cfo_hz: f64,
) -> Result<IqStream> {
    if sample_rate_hz < 8.0 * profile.symbol_rate_hz {
        return Err(Error::parameter(format!(
            "sample rate {sample_rate_hz} Hz is below 8× the symbol rate {} Hz",
            profile.symbol_rate_hz
        )));
    }
    if payload.is_empty() {
        return Err(Error::parameter("payload must contain at least one bit"));
    }

    let t_sym = 1.0 / profile.symbol_rate_hz;
    let n = (payload.len() as f64 * sample_rate_hz * t_sym).round() as usize;

    // Gaussian frequency pulse for BT = 0.5: rectangular bit pulse convolved
    // with a Gaussian whose 3 dB bandwidth is half the symbol rate. kappa
    // packs the constants of that Gaussian's integral (an erf pair per bit).
    let bt = 0.5;
    let b = bt * profile.symbol_rate_hz;
    let kappa = std::f64::consts::PI * b * (2.0 / std::f64::consts::LN_2).sqrt();
    let pulse = |t: f64| 0.5 * (libm::erf(kappa * (t + t_sym / 2.0)) - libm::erf(kappa * (t - t_sym / 2.0)));

    // Beyond ±4 symbols the pulse is below 1e-30; summing a 9-bit window
    // around each sample is exact at f64 precision. Edge bits repeat so the
    // trajectory enters and leaves the burst on a plateau.
    const SPAN: i64 = 4;
    let bit_at = |i: i64| -> f64 {
        let idx = i.clamp(0, payload.len() as i64 - 1) as usize;
        if payload[idx] {
            1.0
        } else {
            -1.0
        }
    };

    let ramp = (4.0 * sample_rate_hz * t_sym).round() as usize;
    let ramp = ramp.min(n / 2).max(1);
    let envelope = |idx: usize| -> f64 {
        let edge = |k: usize| 0.5 * (1.0 - (std::f64::consts::PI * (k as f64 + 0.5) / ramp as f64).cos());
        if idx < ramp {
            profile.amplitude * edge(idx)
        } else if idx >= n - ramp {
            profile.amplitude * edge(n - 1 - idx)
        } else {
            profile.amplitude
        }
    };

    let dt = 1.0 / sample_rate_hz;
    let mut samples = Vec::with_capacity(n);
    let mut phase = 0.0f64;
    for idx in 0..n {
        samples.push(Complex::from_polar(envelope(idx), phase));
        let t = idx as f64 * dt;
        let center_bit = (t / t_sym).floor() as i64;
        let mut m = 0.0;
        for i in (center_bit - SPAN)..=(center_bit + SPAN) {
            m += bit_at(i) * pulse(t - (i as f64 + 0.5) * t_sym);
        }
        let freq = cfo_hz + profile.deviation_hz * m;
        phase += 2.0 * std::f64::consts::PI * freq * dt;
        // Keep the accumulator small so precision never degrades over long
        // payloads.
        if phase.abs() > 1e4 {
            phase %= 2.0 * std::f64::consts::PI;
        }
    }

    Ok(IqStream { samples, sample_rate_hz, center_freq_hz: 0.0 })
}

/// Six demo transmitters mirroring a realistic bench population: four with
/// well-separated oscillator offsets (pairwise CFO gaps of tens of kHz,
/// several times any per-packet jitter) and two built to collide — their
/// mean CFOs differ by less than one jitter standard deviation and their
/// deviations match, so no fingerprint can reliably split them.
pub fn demo_profiles() -> Vec<DeviceProfile> {
    let mk = |label: &str, cfo: f64, jitter: f64, dev: f64, amp: f64| DeviceProfile {
        label: label.to_string(),
        cfo_mean_hz: cfo,
        cfo_jitter_hz: jitter,
        deviation_hz: dev,
        amplitude: amp,
        symbol_rate_hz: 1e6,
    };
    vec![
        mk("watch-a", -45_000.0, 1_500.0, 165_000.0, 1.0),
        mk("tracker-b", -20_000.0, 2_000.0, 150_000.0, 0.9),
        mk("keyboard-c", 20_000.0, 1_800.0, 170_000.0, 1.1),
        mk("speaker-d", 45_000.0, 1_500.0, 155_000.0, 1.2),
        mk("mouse-e", 1_000.0, 2_500.0, 160_000.0, 0.95),
        mk("earbuds-f", 2_500.0, 2_500.0, 160_000.0, 1.05),
    ]
}

/// Generates the full synthetic recording session for a scenario: places
/// every burst on a seeded random channel with seeded gaps, adds white noise
/// sized by `snr_db`, and derives the two half-band captures from the
/// finished merged stream.
pub fn generate_capture(scenario: &CaptureScenario) -> Result<SyntheticCapture> {
    let plan = scenario.validate()?;
    let rate = MERGED_RATE_HZ;

    let mut layout_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    layout_rng.set_stream(0);

    // One entry per burst, devices interleaved by a seeded shuffle — the
    // order real devices would share the air in, not one device at a time.
    let mut order: Vec<usize> = (0..scenario.profiles.len())
        .flat_map(|d| std::iter::repeat_n(d, scenario.packets_per_device))
        .collect();
    order.shuffle(&mut layout_rng);

    let gap_samples = |rng: &mut ChaCha8Rng| -> usize {
        let (gmin, gmax) = scenario.inter_burst_gap_us;
        let us = if gmax > gmin { rng.gen_range(gmin..=gmax) } else { gmin };
        (us * 1e-6 * rate).round() as usize
    };

    let mut samples: Vec<Complex<f64>> = Vec::new();
    let mut truth = Vec::with_capacity(order.len());
    let mut pos = gap_samples(&mut layout_rng);

    for (burst_idx, &device) in order.iter().enumerate() {
        let profile = &scenario.profiles[device];
        let channel = layout_rng.gen_range(0..plan.num_channels());

        let mut burst_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        burst_rng.set_stream(2 + burst_idx as u64);
        let jitter: f64 = StandardNormal.sample(&mut burst_rng);
        let cfo = profile.cfo_mean_hz + profile.cfo_jitter_hz * jitter;
        let payload: Vec<bool> =
            (0..scenario.payload_bits).map(|_| burst_rng.gen::<bool>()).collect();

        let mut burst = gfsk_burst(profile, &payload, rate, cfo)?;
        let offset = plan.center_hz(channel)? - MERGED_CENTER_HZ;
        rotate_in_place(&mut burst.samples, offset / rate);

        let end = pos + burst.len();
        if samples.len() < end {
            samples.resize(end, Complex::new(0.0, 0.0));
        }
        for (dst, src) in samples[pos..end].iter_mut().zip(&burst.samples) {
            *dst += *src;
        }
        truth.push(TruthRecord {
            label: profile.label.clone(),
            channel_index: channel,
            start_sample: pos,
            end_sample: end,
            cfo_hz: cfo,
            deviation_hz: profile.deviation_hz,
            amplitude: profile.amplitude,
        });

        pos = end + gap_samples(&mut layout_rng);
    }
    samples.resize(pos, Complex::new(0.0, 0.0));

    if scenario.snr_db.is_finite() {
        let min_amp = scenario
            .profiles
            .iter()
            .map(|p| p.amplitude)
            .fold(f64::INFINITY, f64::min);
        let sigma2 = min_amp * min_amp / 10f64.powf(scenario.snr_db / 10.0);
        let per_component = (sigma2 / 2.0).sqrt();
        let mut noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        noise_rng.set_stream(1);
        for s in &mut samples {
            let re: f64 = StandardNormal.sample(&mut noise_rng);
            let im: f64 = StandardNormal.sample(&mut noise_rng);
            s.re += re * per_component;
            s.im += im * per_component;
        }
    }

    let merged = IqStream { samples, sample_rate_hz: rate, center_freq_hz: MERGED_CENTER_HZ };
    let (lower, upper) = derive_halfband_pair(&merged)?;
    Ok(SyntheticCapture { merged, lower, upper, truth })
}

/// Splits a full-band stream into the two half-band captures a pair of
/// receivers tuned ±rate/4 from its center would have recorded: shift each
/// half to baseband, low-pass to the new Nyquist, decimate by 2.
///
/// The anti-alias filter's −6 dB point sits exactly at the half-band edge,
/// so the halves are complementary there: merging them back reconstructs
/// seam content at unit gain while anything further into the wrong half is
/// cut ≥ 50 dB before it could alias.
pub fn derive_halfband_pair(merged: &IqStream) -> Result<(IqStream, IqStream)> {
    let rate = merged.sample_rate_hz;
    let transition = rate / 80.0;
    let cutoff = rate / 4.0 - transition / 2.0;

    let make_half = |shift: f64| -> Result<IqStream> {
        let shifted = frequency_shift(merged, shift)?;
        let filtered = fir_lowpass(&shifted, cutoff, transition)?;
        drop(shifted);
        let samples: Vec<Complex<f64>> = filtered.samples.into_iter().step_by(2).collect();
        Ok(IqStream {
            samples,
            sample_rate_hz: rate / 2.0,
            center_freq_hz: merged.center_freq_hz - shift,
        })
    };

    let lower = make_half(rate / 4.0)?;
    let upper = make_half(-rate / 4.0)?;
    Ok((lower, upper))
}

/// Writes the truth table as CSV with one row per burst.
pub fn write_truth_csv(truth: &[TruthRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for record in truth {
        writer.serialize(record)?;
    }
    writer.flush().map_err(Error::from)?;
    Ok(())
}

/// Reads a truth table written by [`write_truth_csv`].
pub fn read_truth_csv(path: &Path) -> Result<Vec<TruthRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{fir_lowpass, quadrature_demod};

    fn demo_device() -> DeviceProfile {
        DeviceProfile {
            label: "dev".into(),
            cfo_mean_hz: 0.0,
            cfo_jitter_hz: 0.0,
            deviation_hz: 160e3,
            amplitude: 1.0,
            symbol_rate_hz: 1e6,
        }
    }

    fn bits(pattern: &[u8]) -> Vec<bool> {
        pattern.iter().map(|&b| b != 0).collect()
    }

    #[test]
    fn envelope_is_flat_at_amplitude_after_ramp() {
        let payload: Vec<bool> = (0..64).map(|i| i % 3 == 0).collect();
        let burst = gfsk_burst(&demo_device(), &payload, 80e6, 10e3).unwrap();
        assert_eq!(burst.len(), 64 * 80);
        let ramp = 4 * 80;
        for s in &burst.samples[ramp..burst.len() - ramp] {
            let err = (s.norm() - 1.0).abs();
            assert!(err < 0.01, "envelope {} off amplitude", s.norm());
        }
    }

    #[test]
    fn all_ones_payload_plateaus_at_cfo_plus_deviation() {
        let burst = gfsk_burst(&demo_device(), &bits(&[1; 40]), 80e6, 25e3).unwrap();
        let demod = quadrature_demod(&burst).unwrap();
        // Skip a couple of symbols of pulse build-up at each end.
        for v in &demod.values[3 * 80..demod.values.len() - 3 * 80] {
            assert!((v - (25e3 + 160e3)).abs() < 1e3, "plateau at {v}");
        }
    }

    #[test]
    fn instantaneous_frequency_stays_within_cfo_plus_deviation() {
        let payload: Vec<bool> = (0..80).map(|i| (i * 7) % 5 < 2).collect();
        let burst = gfsk_burst(&demo_device(), &payload, 80e6, 30e3).unwrap();
        let demod = quadrature_demod(&burst).unwrap();
        for v in &demod.values {
            assert!(v.abs() <= 30e3 + 160e3 + 1.0, "swing to {v}");
        }
    }

    #[test]
    fn demod_and_slice_recovers_payload() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let payload: Vec<bool> = (0..120).map(|_| rng.gen()).collect();
        let cfo = 12e3;
        let mut burst = gfsk_burst(&demo_device(), &payload, 80e6, cfo).unwrap();

        // 30 dB SNR noise on top.
        let sigma = (1.0 / 10f64.powf(30.0 / 10.0) / 2.0).sqrt();
        for s in &mut burst.samples {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex::new(re * sigma, im * sigma);
        }

        // Receive the way a real front end would: select the channel first.
        // Slicing the raw wideband demod would fold all 80 MHz of noise into
        // every sample and no threshold survives that.
        let filtered = fir_lowpass(&burst, 600e3, 600e3).unwrap();
        let demod = quadrature_demod(&filtered).unwrap();

        // Average the middle half of each symbol and skip the ramp/settling
        // bits at either end.
        let errors = payload
            .iter()
            .enumerate()
            .skip(8)
            .take(104)
            .filter(|(i, &bit)| {
                let mid = &demod.values[i * 80 + 20..i * 80 + 60];
                let f = mid.iter().sum::<f64>() / mid.len() as f64;
                (f - cfo > 0.0) != bit
            })
            .count();
        assert_eq!(errors, 0);
    }

    #[test]
    fn burst_energy_scales_with_amplitude_squared() {
        let payload = bits(&[1, 0, 1, 1, 0, 0, 1, 0].repeat(8));
        let single = gfsk_burst(&demo_device(), &payload, 80e6, 0.0).unwrap();
        let mut loud_profile = demo_device();
        loud_profile.amplitude = 2.0;
        let loud = gfsk_burst(&loud_profile, &payload, 80e6, 0.0).unwrap();
        let ratio = loud.energy() / single.energy();
        assert!((ratio - 4.0).abs() < 0.04, "energy ratio {ratio}");
    }

    #[test]
    fn gfsk_rejects_insufficient_oversampling() {
        assert!(gfsk_burst(&demo_device(), &bits(&[1, 0]), 4e6, 0.0).is_err());
    }

    #[test]
    fn demo_profiles_have_structure() {
        let profiles = demo_profiles();
        assert_eq!(profiles.len(), 6);
        let mut labels: Vec<_> = profiles.iter().map(|p| p.label.clone()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 6);

        // The designated overlap pair is closer in mean CFO than its jitter…
        let mouse = profiles.iter().find(|p| p.label == "mouse-e").unwrap();
        let buds = profiles.iter().find(|p| p.label == "earbuds-f").unwrap();
        assert!((mouse.cfo_mean_hz - buds.cfo_mean_hz).abs() < mouse.cfo_jitter_hz);
        assert_eq!(mouse.deviation_hz, buds.deviation_hz);

        // …while every other pair is separated by more than 6× jitter.
        let separated: Vec<_> =
            profiles.iter().filter(|p| p.label != "mouse-e" && p.label != "earbuds-f").collect();
        for a in &separated {
            for b in &separated {
                if a.label != b.label {
                    let gap = (a.cfo_mean_hz - b.cfo_mean_hz).abs();
                    let spread = a.cfo_jitter_hz.max(b.cfo_jitter_hz);
                    assert!(gap > 6.0 * spread, "{} vs {} too close", a.label, b.label);
                }
            }
        }
    }

    fn tiny_scenario(seed: u64) -> CaptureScenario {
        CaptureScenario {
            profiles: demo_profiles().into_iter().take(2).collect(),
            packets_per_device: 3,
            snr_db: 20.0,
            plan: Standard::Classic,
            payload_bits: 80,
            seed,
            inter_burst_gap_us: (40.0, 100.0),
        }
    }

    #[test]
    fn truth_rows_count_and_stay_disjoint() {
        let mut scenario = tiny_scenario(3);
        scenario.profiles = demo_profiles();
        scenario.packets_per_device = 4;
        let capture = generate_capture(&scenario).unwrap();
        assert_eq!(capture.truth.len(), 24);
        for pair in capture.truth.windows(2) {
            assert!(pair[0].end_sample <= pair[1].start_sample, "intervals overlap");
        }
        assert_eq!(capture.lower.len(), capture.merged.len() / 2);
        assert_eq!(capture.upper.len(), capture.merged.len() / 2);
    }

    #[test]
    fn noiseless_single_burst_matches_its_truth_interval() {
        let scenario = CaptureScenario {
            profiles: vec![demo_device()],
            packets_per_device: 1,
            snr_db: f64::INFINITY,
            plan: Standard::Classic,
            payload_bits: 80,
            seed: 9,
            inter_burst_gap_us: (50.0, 50.0),
        };
        let capture = generate_capture(&scenario).unwrap();
        let t = &capture.truth[0];
        assert_eq!(t.end_sample - t.start_sample, 80 * 80);
        // Signal exactly inside the interval, zeros outside it.
        assert!(capture.merged.samples[..t.start_sample].iter().all(|s| s.norm_sqr() == 0.0));
        assert!(capture.merged.samples[t.end_sample..].iter().all(|s| s.norm_sqr() == 0.0));
        let inside: f64 = capture.merged.samples[t.start_sample..t.end_sample]
            .iter()
            .map(|s| s.norm_sqr())
            .sum();
        assert!(inside > 0.0);
    }

    #[test]
    fn same_seed_reproduces_capture_bit_for_bit() {
        let a = generate_capture(&tiny_scenario(42)).unwrap();
        let b = generate_capture(&tiny_scenario(42)).unwrap();
        assert_eq!(a.merged.samples, b.merged.samples);
        assert_eq!(a.truth, b.truth);
        let c = generate_capture(&tiny_scenario(43)).unwrap();
        assert_ne!(a.merged.samples, c.merged.samples);
    }

    #[test]
    fn burst_power_clears_noise_floor_at_10_db() {
        let mut scenario = tiny_scenario(7);
        scenario.snr_db = 10.0;
        let capture = generate_capture(&scenario).unwrap();
        let noise_sigma2 = {
            // True injected variance: weakest amplitude is tracker-b's 0.9.
            let min_amp: f64 = scenario.profiles.iter().map(|p| p.amplitude).fold(f64::INFINITY, f64::min);
            min_amp * min_amp / 10.0
        };
        for t in &capture.truth {
            let power: f64 = capture.merged.samples[t.start_sample..t.end_sample]
                .iter()
                .map(|s| s.norm_sqr())
                .sum::<f64>()
                / (t.end_sample - t.start_sample) as f64;
            assert!(
                power > 10.0 * noise_sigma2 * 0.894,
                "burst power {power} vs floor {noise_sigma2}"
            );
        }
    }

    #[test]
    fn truth_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let capture = generate_capture(&tiny_scenario(1)).unwrap();
        write_truth_csv(&capture.truth, &path).unwrap();
        let back = read_truth_csv(&path).unwrap();
        assert_eq!(back, capture.truth);
    }

    #[test]
    fn scenario_validation_catches_bad_profiles() {
        let mut s = tiny_scenario(1);
        s.profiles[0].cfo_mean_hz = 490e3; // escapes the ±500 kHz channel
        assert!(generate_capture(&s).is_err());

        let mut s = tiny_scenario(1);
        s.profiles[1].label = s.profiles[0].label.clone();
        assert!(generate_capture(&s).is_err());

        let mut s = tiny_scenario(1);
        s.packets_per_device = 0;
        assert!(generate_capture(&s).is_err());
    }
}
