//! Synthesizes a frequency-hopping capture and writes it to disk the way a
//! two-receiver rig would have recorded it: one 40 MHz half-band file per
//! receiver, each with a JSON sidecar, plus the ground-truth burst table.
//!
//! Run with:
//!
//! ```text
//! cargo run --example synthesize_capture [-- <out_dir>]
//! ```

use std::path::PathBuf;

use hopprint::iq::{write_meta, IqMeta};
use hopprint::prelude::*;
use hopprint::synth::write_truth_csv;

fn main() -> Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("target/synthesize_capture"));
    std::fs::create_dir_all(&out_dir)?;

    // Six transmitters with distinct carrier offsets and deviations, hopping
    // over the 79 classic channels. The seed pins every random draw: layout,
    // payloads, per-burst CFO jitter, and noise.
    let mut scenario = CaptureScenario::demo(7);
    scenario.packets_per_device = 12;
    let capture = generate_capture(&scenario)?;

    println!(
        "merged capture: {} samples, {:.2} ms at {:.0} MS/s",
        capture.merged.len(),
        capture.merged.duration_s() * 1e3,
        capture.merged.sample_rate_hz / 1e6,
    );
    for profile in &scenario.profiles {
        let n = capture.truth.iter().filter(|t| t.label == profile.label).count();
        println!(
            "  {:<10} {:2} bursts   cfo {:+6.1} kHz   deviation {:5.1} kHz",
            profile.label,
            n,
            profile.cfo_mean_hz / 1e3,
            profile.deviation_hz / 1e3,
        );
    }

    for (stream, name) in [(&capture.lower, "lower"), (&capture.upper, "upper")] {
        let path = out_dir.join(format!("{name}.data"));
        write_iq(stream, &path)?;
        write_meta(
            &path,
            &IqMeta {
                sample_rate_hz: stream.sample_rate_hz,
                center_freq_hz: stream.center_freq_hz,
                description: format!("synthetic {name} half-band, seed {}", scenario.seed),
            },
        )?;
        println!(
            "wrote {} ({} samples around {:.1} MHz)",
            path.display(),
            stream.len(),
            stream.center_freq_hz / 1e6,
        );
    }
    write_truth_csv(&capture.truth, &out_dir.join("truth.csv"))?;
    println!("wrote {} ({} rows)", out_dir.join("truth.csv").display(), capture.truth.len());
    Ok(())
}
