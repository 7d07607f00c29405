//! Finds the hopped bursts in a wideband capture and brings each one back to
//! baseband: energy detection over the 80 MHz stream, channel assignment,
//! then per-burst translation and channel filtering.
//!
//! Run with:
//!
//! ```text
//! cargo run --example extract_packets
//! ```

use hopprint::prelude::*;

fn main() -> Result<()> {
    let mut scenario = CaptureScenario::demo(21);
    scenario.packets_per_device = 6;
    let capture = generate_capture(&scenario)?;
    println!(
        "capture: {:.2} ms, {} bursts in truth, SNR {} dB",
        capture.merged.duration_s() * 1e3,
        capture.truth.len(),
        scenario.snr_db
    );

    let plan = ChannelPlan::classic();
    let config = DetectorConfig::default();
    let floor = estimate_noise_floor(&capture.merged, &config)?;
    println!("estimated noise floor: {:.1} dB", 10.0 * floor.log10());

    let bursts = extract_packets(&capture.merged, &plan, &config)?;
    println!("detected {} bursts:", bursts.len());
    println!("   #  ch      start µs   length µs   offset kHz   power dB");
    for (i, b) in bursts.iter().enumerate() {
        let to_us = 1e6 / capture.merged.sample_rate_hz;
        let channel_hz = plan.center_hz(b.channel_index)?;
        println!(
            "  {i:2}  {:2}  {:10.1}  {:10.1}   {:+9.1}   {:8.1}",
            b.channel_index,
            b.start_sample as f64 * to_us,
            (b.end_sample - b.start_sample) as f64 * to_us,
            (b.coarse_freq_hz - channel_hz) / 1e3,
            10.0 * b.mean_power.log10(),
        );
    }

    // Detection quality against the generator's truth table.
    let mut matched = 0;
    for t in &capture.truth {
        let hit = bursts.iter().any(|b| {
            let lo = b.start_sample.max(t.start_sample);
            let hi = b.end_sample.min(t.end_sample);
            hi > lo && 2 * (hi - lo) >= t.end_sample - t.start_sample
        });
        matched += hit as usize;
    }
    println!("{matched}/{} truth bursts recovered", capture.truth.len());
    Ok(())
}
