//! Merges two 40 MHz half-band recordings into one 80 MHz stream and shows
//! that tones land where they should: a marker in the lower half ends up in
//! the lower half of the merged spectrum, and vice versa.
//!
//! Run with:
//!
//! ```text
//! cargo run --example merge_halfbands
//! ```

use num_complex::Complex;

use hopprint::prelude::*;
use hopprint::synth::{HALF_RATE_HZ, LOWER_CENTER_HZ, MERGED_CENTER_HZ, UPPER_CENTER_HZ};

/// A pure tone at an absolute RF frequency, expressed in a receiver's
/// baseband.
fn tone(center_hz: f64, tone_hz: f64, n: usize) -> IqStream {
    let offset = tone_hz - center_hz;
    let step = 2.0 * std::f64::consts::PI * offset / HALF_RATE_HZ;
    let samples = (0..n).map(|i| Complex::cis(step * i as f64)).collect();
    IqStream { samples, sample_rate_hz: HALF_RATE_HZ, center_freq_hz: center_hz }
}

fn main() -> Result<()> {
    const N: usize = 1 << 18;
    let markers = [2_435.0e6, 2_461.5e6];

    let lower = tone(LOWER_CENTER_HZ, markers[0], N);
    let upper = tone(UPPER_CENTER_HZ, markers[1], N);
    println!(
        "lower: {:.1} MHz tone recorded at {:.1} MHz center",
        markers[0] / 1e6,
        LOWER_CENTER_HZ / 1e6
    );
    println!(
        "upper: {:.1} MHz tone recorded at {:.1} MHz center",
        markers[1] / 1e6,
        UPPER_CENTER_HZ / 1e6
    );

    let merged = merge_streams(lower, upper, 0)?;
    println!(
        "merged: {} samples at {:.0} MS/s around {:.1} MHz",
        merged.len(),
        merged.sample_rate_hz / 1e6,
        merged.center_freq_hz / 1e6
    );

    // Both markers should now be visible in one spectrum, each at its
    // absolute RF frequency (the bins carry the merged center).
    let nfft = 8192;
    let spectrum = power_spectrum(&merged, nfft)?;
    for &marker in &markers {
        let peak = spectrum
            .iter()
            .max_by(|a, b| a.power.total_cmp(&b.power).then_with(|| {
                // Between the two tones, prefer the one near this marker.
                (b.freq_hz - marker).abs().total_cmp(&(a.freq_hz - marker).abs())
            }))
            .unwrap();
        let near_peak = spectrum
            .iter()
            .filter(|bin| (bin.freq_hz - marker).abs() < 1e6)
            .max_by(|a, b| a.power.total_cmp(&b.power))
            .unwrap();
        let bin_hz = merged.sample_rate_hz / nfft as f64;
        println!(
            "  {:.1} MHz marker → strongest bin near it at {:+.4} MHz relative \
             (expected {:+.4}, bin width {:.1} kHz)",
            marker / 1e6,
            (near_peak.freq_hz - MERGED_CENTER_HZ) / 1e6,
            (marker - MERGED_CENTER_HZ) / 1e6,
            bin_hz / 1e3
        );
        assert!((near_peak.freq_hz - marker).abs() <= bin_hz);
        assert!(near_peak.power >= peak.power / 2.0, "marker should be a dominant tone");
    }
    println!("both markers within one FFT bin of their expected offsets");
    Ok(())
}
