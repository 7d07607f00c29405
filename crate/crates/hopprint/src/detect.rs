//! Burst detection, channel assignment, and dehopping.
//!
//! Packets are found by energy detection on the full-rate merged stream: a
//! sliding mean-power estimate is compared against a noise floor taken from
//! a low percentile of windowed power (robust while bursts occupy a minority
//! of airtime), with rise/fall hysteresis and burst-duration limits. Each
//! detected interval is assigned to the nearest channel by spectral
//! centroid, translated so that channel's center lands at DC, and low-pass
//! filtered down to single-channel bandwidth. Bursts stay at the full sample
//! rate throughout — nothing is decimated before fingerprinting.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::{nearest_channel, ChannelPlan};
use crate::dsp::{peak_bin, power_spectrum, FirFilter, SpectrumBin};
use crate::iq::{read_iq, write_iq, IqStream};
use crate::{Error, Result};

/// Passband edge of the per-packet low-pass applied after dehopping (Hz) —
/// wide enough for one Bluetooth channel plus worst-case CFO.
pub const PACKET_LPF_CUTOFF_HZ: f64 = 600e3;
/// Transition width of the per-packet low-pass (Hz); the stopband starts at
/// cutoff + transition, rejecting the neighboring channel.
pub const PACKET_LPF_TRANSITION_HZ: f64 = 200e3;

/// Windowed mean power percentile used as the noise floor (20th: tolerates
/// burst duty cycles up to ~70%).
const FLOOR_PERCENTILE: f64 = 0.20;

/// Half-width of the spectral window considered "in channel" when measuring
/// centroids and collision contamination (Hz).
const CHANNEL_HALF_WINDOW_HZ: f64 = 1e6;

/// Detected intervals whose noise-subtracted spectral energy outside the
/// assigned channel window exceeds this fraction are discarded as
/// collisions.
const MAX_OUT_OF_CHANNEL_FRACTION: f64 = 0.30;

/// Energy-detector tuning. Thresholds are relative to the estimated noise
/// floor, so detection is invariant to absolute signal scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Rise threshold above the noise floor, dB.
    pub threshold_db: f64,
    /// A burst ends when smoothed power falls below threshold − hysteresis, dB.
    pub hysteresis_db: f64,
    /// Shortest reportable burst, µs.
    pub min_burst_us: f64,
    /// Longest reportable burst, µs.
    pub max_burst_us: f64,
    /// Noise padding kept on each side of a dehopped burst, µs.
    pub guard_us: f64,
    /// Sliding window length for power smoothing and floor estimation.
    pub window_samples: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold_db: 12.0,
            hysteresis_db: 3.0,
            min_burst_us: 60.0,
            max_burst_us: 3000.0,
            guard_us: 10.0,
            window_samples: 64,
        }
    }
}

impl DetectorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.threshold_db > self.hysteresis_db && self.hysteresis_db > 0.0) {
            return Err(Error::parameter(format!(
                "need threshold ({} dB) > hysteresis ({} dB) > 0",
                self.threshold_db, self.hysteresis_db
            )));
        }
        if !(self.min_burst_us < self.max_burst_us && self.min_burst_us > 0.0) {
            return Err(Error::parameter(format!(
                "burst duration bounds ({}, {}) µs are not ordered",
                self.min_burst_us, self.max_burst_us
            )));
        }
        if self.window_samples == 0 {
            return Err(Error::parameter("window_samples must be ≥ 1"));
        }
        if self.guard_us < 0.0 {
            return Err(Error::parameter("guard_us must be non-negative"));
        }
        Ok(())
    }
}

/// One dehopped packet: single-channel baseband samples plus the detection
/// metadata the fingerprint stage needs.
#[derive(Debug, Clone)]
pub struct Burst {
    /// Dehopped, low-pass-filtered samples at the source stream's rate,
    /// `center_freq_hz = 0`. Includes the guard padding.
    pub samples: IqStream,
    pub channel_index: usize,
    /// Detected interval bounds, as indices into the source stream.
    pub start_sample: usize,
    pub end_sample: usize,
    /// Spectral-centroid frequency estimate for the interval, absolute Hz.
    pub coarse_freq_hz: f64,
    /// Mean |x|² over the detected interval in the source stream.
    pub mean_power: f64,
    /// Noise samples actually retained before/after the interval. These fall
    /// short of the configured guard only when the interval sits at a stream
    /// edge, in which case `guard_clamped` is set.
    pub guard_pre: usize,
    pub guard_post: usize,
    pub guard_clamped: bool,
    /// Length of the per-packet low-pass; demodulated values within one
    /// filter length of either interval edge are settling transients.
    pub settle_samples: usize,
}

impl Burst {
    /// Duration of the detected interval in seconds.
    pub fn duration_s(&self) -> f64 {
        (self.end_sample - self.start_sample) as f64 / self.samples.sample_rate_hz
    }
}

fn power_prefix(stream: &IqStream) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(stream.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for s in &stream.samples {
        acc += s.norm_sqr();
        prefix.push(acc);
    }
    prefix
}

/// Estimates the noise floor as the 20th percentile of mean power over
/// non-overlapping windows — bursts inflate the upper percentiles while the
/// quiet gaps dominate the lower ones.
pub fn estimate_noise_floor(stream: &IqStream, config: &DetectorConfig) -> Result<f64> {
    config.validate()?;
    let w = config.window_samples;
    if stream.len() < 10 * w {
        return Err(Error::parameter(format!(
            "need at least {} samples ({}×window) to estimate a floor, got {}",
            10 * w,
            10,
            stream.len()
        )));
    }
    let mut means: Vec<f64> = stream
        .samples
        .chunks_exact(w)
        .map(|c| c.iter().map(|s| s.norm_sqr()).sum::<f64>() / w as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let rank = ((FLOOR_PERCENTILE * means.len() as f64).ceil() as usize)
        .clamp(1, means.len());
    Ok(means[rank - 1])
}

/// Finds intervals where centered sliding mean power rises above
/// floor + threshold_db and stays up until it drops below
/// floor + threshold_db − hysteresis_db, then filters them by duration.
/// Intervals are disjoint and sorted by start.
pub fn detect_bursts(stream: &IqStream, config: &DetectorConfig) -> Result<Vec<(usize, usize)>> {
    let floor = estimate_noise_floor(stream, config)?;
    let rise = floor * 10f64.powf(config.threshold_db / 10.0);
    let fall = floor * 10f64.powf((config.threshold_db - config.hysteresis_db) / 10.0);

    let n = stream.len();
    let w = config.window_samples;
    let half = w / 2;
    let prefix = power_prefix(stream);
    let smooth = |i: usize| -> f64 {
        let lo = i.saturating_sub(half);
        let hi = (i + (w - half)).min(n);
        (prefix[hi] - prefix[lo]) / (hi - lo) as f64
    };

    let min_len = (config.min_burst_us * 1e-6 * stream.sample_rate_hz).round() as usize;
    let max_len = (config.max_burst_us * 1e-6 * stream.sample_rate_hz).round() as usize;

    let mut intervals = Vec::new();
    let mut burst_start: Option<usize> = None;
    for i in 0..n {
        let p = smooth(i);
        match burst_start {
            None if p > rise => burst_start = Some(i),
            Some(start) if p < fall => {
                let len = i - start;
                if len >= min_len && len <= max_len {
                    intervals.push((start, i));
                }
                burst_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = burst_start {
        let len = n - start;
        if len >= min_len && len <= max_len {
            intervals.push((start, n));
        }
    }
    Ok(intervals)
}

fn slice_spectrum(stream: &IqStream, interval: (usize, usize)) -> Result<Vec<SpectrumBin>> {
    let (start, end) = interval;
    if end > stream.len() || start >= end {
        return Err(Error::parameter(format!(
            "interval ({start}, {end}) out of bounds for a {}-sample stream",
            stream.len()
        )));
    }
    let len = end - start;
    if len < 256 {
        return Err(Error::parameter(format!(
            "interval of {len} samples is too short for a frequency estimate (need 256)"
        )));
    }
    let nfft = if len.is_power_of_two() { len } else { len.next_power_of_two() / 2 };
    let nfft = nfft.min(4096);
    let slice = IqStream {
        samples: stream.samples[start..end].to_vec(),
        sample_rate_hz: stream.sample_rate_hz,
        center_freq_hz: stream.center_freq_hz,
    };
    power_spectrum(&slice, nfft)
}

fn median_power(bins: &[SpectrumBin]) -> f64 {
    let mut powers: Vec<f64> = bins.iter().map(|b| b.power).collect();
    powers.sort_by(f64::total_cmp);
    let n = powers.len();
    if n % 2 == 1 {
        powers[n / 2]
    } else {
        0.5 * (powers[n / 2 - 1] + powers[n / 2])
    }
}

fn centroid_around_peak(bins: &[SpectrumBin]) -> f64 {
    let peak = &bins[peak_bin(bins)];
    // The median bin power is almost pure noise floor; subtracting it keeps
    // wideband noise from dragging the centroid toward the window center.
    let floor = median_power(bins);
    let mut num = 0.0;
    let mut den = 0.0;
    for b in bins {
        if (b.freq_hz - peak.freq_hz).abs() <= CHANNEL_HALF_WINDOW_HZ {
            let p = (b.power - floor).max(0.0);
            num += p * b.freq_hz;
            den += p;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        peak.freq_hz
    }
}

/// Absolute frequency of an interval's spectral power centroid, taken over
/// the dominant peak's ±1 MHz neighborhood with the median-bin noise floor
/// subtracted.
pub fn coarse_center_frequency(stream: &IqStream, interval: (usize, usize)) -> Result<f64> {
    Ok(centroid_around_peak(&slice_spectrum(stream, interval)?))
}

/// Fraction of noise-subtracted spectral energy lying outside
/// `center ± 1 MHz`; high values mean another transmission shares the
/// interval.
fn out_of_channel_fraction(bins: &[SpectrumBin], channel_center_hz: f64) -> f64 {
    let floor = median_power(bins);
    let mut in_band = 0.0;
    let mut total = 0.0;
    for b in bins {
        let p = (b.power - floor).max(0.0);
        total += p;
        if (b.freq_hz - channel_center_hz).abs() <= CHANNEL_HALF_WINDOW_HZ {
            in_band += p;
        }
    }
    if total > 0.0 {
        1.0 - in_band / total
    } else {
        0.0
    }
}

/// Translates one detected interval to single-channel baseband: slice with
/// guard padding, shift so the channel center lands at DC, low-pass to
/// channel bandwidth. The result is tagged `center_freq_hz = 0`; any
/// remaining frequency offset is the transmitter's CFO.
///
/// `coarse_freq_hz` is recorded as metadata (callers normally pass the
/// [`coarse_center_frequency`] estimate that picked the channel). Guard
/// padding that would run past the stream bounds is clamped and flagged.
pub fn dehop_burst(
    stream: &IqStream,
    interval: (usize, usize),
    channel_index: usize,
    coarse_freq_hz: f64,
    plan: &ChannelPlan,
    config: &DetectorConfig,
) -> Result<Burst> {
    config.validate()?;
    let (start, end) = interval;
    if end > stream.len() || start >= end {
        return Err(Error::parameter(format!(
            "interval ({start}, {end}) out of bounds for a {}-sample stream",
            stream.len()
        )));
    }
    let channel_center = plan.center_hz(channel_index)?;

    let guard = (config.guard_us * 1e-6 * stream.sample_rate_hz).round() as usize;
    let lo = start.saturating_sub(guard);
    let hi = (end + guard).min(stream.len());
    let guard_pre = start - lo;
    let guard_post = hi - end;
    let guard_clamped = guard_pre < guard || guard_post < guard;

    let mut slice: Vec<Complex<f64>> = stream.samples[lo..hi].to_vec();
    let shift_hz = -(channel_center - stream.center_freq_hz);
    crate::dsp::rotate_in_place(&mut slice, shift_hz / stream.sample_rate_hz);

    let filter = FirFilter::lowpass(
        stream.sample_rate_hz,
        PACKET_LPF_CUTOFF_HZ,
        PACKET_LPF_TRANSITION_HZ,
    )?;
    let filtered = filter.filter_same(&slice);

    let mean_power = stream.samples[start..end]
        .iter()
        .map(|s| s.norm_sqr())
        .sum::<f64>()
        / (end - start) as f64;

    Ok(Burst {
        samples: IqStream {
            samples: filtered,
            sample_rate_hz: stream.sample_rate_hz,
            center_freq_hz: 0.0,
        },
        channel_index,
        start_sample: start,
        end_sample: end,
        coarse_freq_hz,
        mean_power,
        guard_pre,
        guard_post,
        guard_clamped,
        settle_samples: filter.len(),
    })
}

/// The full extraction chain: noise floor → energy detection → per-interval
/// frequency estimate → channel assignment → collision screen → dehop.
/// Output is sorted by start sample.
///
/// Intervals whose centroid falls outside the plan span are dropped, as are
/// collisions (over 30% of noise-subtracted spectral energy outside the
/// assigned channel's ±1 MHz window). Two bursts overlapping in time on
/// *adjacent* channels land within one window of each other and survive the
/// screen as a single interval — the chamber recordings this models make
/// that case rare, and correctness is preferred over recall.
pub fn extract_packets(
    stream: &IqStream,
    plan: &ChannelPlan,
    config: &DetectorConfig,
) -> Result<Vec<Burst>> {
    let intervals = detect_bursts(stream, config)?;
    let mut bursts = Vec::with_capacity(intervals.len());
    for interval in intervals {
        let bins = match slice_spectrum(stream, interval) {
            Ok(bins) => bins,
            Err(_) => continue, // shorter than a frequency estimate allows
        };
        let coarse = centroid_around_peak(&bins);
        let Ok(channel) = nearest_channel(coarse, plan) else {
            continue; // energy outside the plan span entirely
        };
        let channel_center = plan.center_hz(channel)?;
        if out_of_channel_fraction(&bins, channel_center) > MAX_OUT_OF_CHANNEL_FRACTION {
            continue;
        }
        bursts.push(dehop_burst(stream, interval, channel, coarse, plan, config)?);
    }
    Ok(bursts)
}

/// One row of a burst set's `index.json`: everything about a burst except
/// the samples, which live in the referenced `.data` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstIndexEntry {
    pub file: String,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub channel_index: usize,
    pub start_sample: usize,
    pub end_sample: usize,
    pub coarse_freq_hz: f64,
    pub mean_power: f64,
    pub guard_pre: usize,
    pub guard_post: usize,
    pub guard_clamped: bool,
    pub settle_samples: usize,
}

/// Writes a burst set to `dir`: one `burst_NNNN.data` IQ file per burst and
/// an `index.json` carrying the metadata. The directory is created if
/// needed.
pub fn save_bursts(dir: &Path, bursts: &[Burst]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = Vec::with_capacity(bursts.len());
    for (i, burst) in bursts.iter().enumerate() {
        let file = format!("burst_{i:04}.data");
        write_iq(&burst.samples, &dir.join(&file))?;
        index.push(BurstIndexEntry {
            file,
            sample_rate_hz: burst.samples.sample_rate_hz,
            center_freq_hz: burst.samples.center_freq_hz,
            channel_index: burst.channel_index,
            start_sample: burst.start_sample,
            end_sample: burst.end_sample,
            coarse_freq_hz: burst.coarse_freq_hz,
            mean_power: burst.mean_power,
            guard_pre: burst.guard_pre,
            guard_post: burst.guard_post,
            guard_clamped: burst.guard_clamped,
            settle_samples: burst.settle_samples,
        });
    }
    let mut text = serde_json::to_string_pretty(&index)?;
    text.push('\n');
    fs::write(dir.join("index.json"), text)?;
    Ok(())
}

/// Reads a burst set written by [`save_bursts`]. Samples pass through f32
/// on disk; metadata round-trips exactly.
pub fn load_bursts(dir: &Path) -> Result<Vec<Burst>> {
    let index_path = dir.join("index.json");
    let text = fs::read_to_string(&index_path)?;
    let index: Vec<BurstIndexEntry> = serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {e}", index_path.display())))?;
    let mut bursts = Vec::with_capacity(index.len());
    for entry in index {
        let samples = read_iq(&dir.join(&entry.file), entry.sample_rate_hz, entry.center_freq_hz)?;
        bursts.push(Burst {
            samples,
            channel_index: entry.channel_index,
            start_sample: entry.start_sample,
            end_sample: entry.end_sample,
            coarse_freq_hz: entry.coarse_freq_hz,
            mean_power: entry.mean_power,
            guard_pre: entry.guard_pre,
            guard_post: entry.guard_post,
            guard_clamped: entry.guard_clamped,
            settle_samples: entry.settle_samples,
        });
    }
    Ok(bursts)
}
