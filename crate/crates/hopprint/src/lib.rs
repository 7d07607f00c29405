//! Offline signal-processing toolkit for fingerprinting Bluetooth transmitters
//! from wideband IQ captures.
//!
//! The pipeline mirrors a two-receiver lab setup: two 40 MHz half-band
//! recordings are merged into one 80 MHz stream spanning the whole 2.4 GHz ISM
//! band, hopped bursts are located by energy detection and translated back to
//! baseband, and each burst is reduced to a two-dimensional fingerprint —
//! carrier frequency offset and modulation scaling factor — that a k-NN
//! classifier matches against known devices.
//!
//! Every stage is an ordinary function over owned values, so the stages can be
//! used independently: [`merge`] without the classifier, [`synth`] to build
//! test captures, [`fingerprint`] on bursts extracted elsewhere. The `examples/`
//! directory has one runnable program per stage; the `hopprint` binary chains
//! them behind subcommands.
//!
//! ```no_run
//! use hopprint::prelude::*;
//!
//! # fn main() -> hopprint::Result<()> {
//! let scenario = CaptureScenario::demo(7);
//! let capture = generate_capture(&scenario)?;
//! let bursts = extract_packets(&capture.merged, &ChannelPlan::classic(), &DetectorConfig::default())?;
//! for burst in &bursts {
//!     let fp = extract_fingerprint(burst, Variant::Symmetric, &FingerprintConfig::default())?;
//!     println!("ch {:2}  cfo {:+8.0} Hz  sf {:8.0} Hz", burst.channel_index, fp.cfo_hz, fp.scaling_factor);
//! }
//! # Ok(())
//! # }
//! ```

pub mod channel;
pub mod classify;
pub mod cli;
pub mod detect;
pub mod dsp;
mod error;
pub mod fingerprint;
pub mod iq;
pub mod merge;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};

/// The common types and entry points, for glob import in examples and tests.
pub mod prelude {
    pub use crate::channel::{ChannelPlan, Standard};
    pub use crate::classify::{
        split_stratified, EvalReport, KnnConfig, KnnModel, LabeledDataset,
    };
    pub use crate::detect::{
        coarse_center_frequency, dehop_burst, detect_bursts, estimate_noise_floor,
        extract_packets, Burst, DetectorConfig,
    };
    pub use crate::dsp::{
        frequency_shift, interpolate_x2, power_spectrum, quadrature_demod, FirFilter,
    };
    pub use crate::fingerprint::{
        extract_fingerprint, fingerprint_capture, Fingerprint, FingerprintConfig, Variant,
    };
    pub use crate::iq::{read_iq, write_iq, IqStream, RealSeries};
    pub use crate::merge::merge_streams;
    pub use crate::pipeline::{run_pipeline, PipelineConfig, PipelineSummary};
    pub use crate::synth::{
        demo_profiles, derive_halfband_pair, generate_capture, gfsk_burst, CaptureScenario,
        DeviceProfile, SyntheticCapture, TruthRecord,
    };
    pub use crate::{Error, Result};
}
