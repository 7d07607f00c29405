//! The end-to-end run: synthesize → merge → extract → fingerprint →
//! classify → report, with every intermediate materialized on disk.
//!
//! [`run_pipeline`] is what the `pipeline` subcommand and the acceptance
//! tests drive. It deliberately goes through the same files the individual
//! subcommands exchange — half-band captures, the merged stream, a burst
//! set, a fingerprint CSV — so one pipeline run leaves a directory that the
//! stage-by-stage tools can re-process or inspect.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelPlan;
use crate::classify::{split_stratified, EvalReport, KnnConfig, KnnModel, LabeledDataset};
use crate::detect::{extract_packets, save_bursts, Burst, DetectorConfig};
use crate::fingerprint::{
    extract_fingerprint, write_fingerprints_csv, Fingerprint, FingerprintConfig, Variant,
};
use crate::iq::{write_iq, write_meta, IqMeta};
use crate::merge::merge_streams;
use crate::report::{
    emit_confusion_csv, emit_confusion_normalized_csv, emit_metrics_json, emit_scatter_svg,
};
use crate::synth::{generate_capture, write_truth_csv, CaptureScenario, TruthRecord};
use crate::Result;

/// Fingerprint stage settings: which variant plus the extractor tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FingerprintSection {
    pub variant: Variant,
    #[serde(flatten)]
    pub config: FingerprintConfig,
}

impl Default for FingerprintSection {
    fn default() -> Self {
        Self { variant: Variant::Symmetric, config: FingerprintConfig::default() }
    }
}

/// Everything a pipeline run needs, as read from a JSON config file. Only
/// the scenario is mandatory; the other sections default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub scenario: CaptureScenario,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub fingerprint: FingerprintSection,
    #[serde(default)]
    pub classifier: KnnConfig,
    /// Output directory; a CLI `--out` flag overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| crate::Error::format(format!("pipeline config: {e}")))
    }

    pub fn demo(seed: u64) -> Self {
        Self {
            scenario: CaptureScenario::demo(seed),
            detector: DetectorConfig::default(),
            fingerprint: FingerprintSection::default(),
            classifier: KnnConfig { k: 3, ..KnnConfig::default() },
            output_dir: None,
        }
    }
}

/// Counts from one pipeline run plus the final evaluation.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    /// Bursts the detector extracted from the merged stream.
    pub detected: usize,
    /// Bursts that matched a truth interval and produced a fingerprint.
    pub labeled: usize,
    /// Detected bursts with no matching truth interval.
    pub unmatched: usize,
    /// Matched bursts whose fingerprint extraction was degenerate.
    pub skipped: usize,
    pub report: EvalReport,
}

/// Matches each burst to the truth interval it overlaps most. A match needs
/// to cover at least half the truth burst; anything less (a noise blip, a
/// collision fragment) gets `None`.
pub fn label_bursts(bursts: &[Burst], truth: &[TruthRecord]) -> Vec<Option<String>> {
    bursts
        .iter()
        .map(|b| {
            let mut best: Option<(usize, &TruthRecord)> = None;
            for t in truth {
                let lo = b.start_sample.max(t.start_sample);
                let hi = b.end_sample.min(t.end_sample);
                let overlap = hi.saturating_sub(lo);
                if overlap > 0 && best.is_none_or(|(o, _)| overlap > o) {
                    best = Some((overlap, t));
                }
            }
            best.and_then(|(overlap, t)| {
                (2 * overlap >= t.end_sample - t.start_sample).then(|| t.label.clone())
            })
        })
        .collect()
}

fn meta_for(stream: &crate::iq::IqStream, description: &str) -> IqMeta {
    IqMeta {
        sample_rate_hz: stream.sample_rate_hz,
        center_freq_hz: stream.center_freq_hz,
        description: description.to_string(),
    }
}

/// Runs the whole chain into `out_dir`, creating it if needed.
///
/// Artifacts written: `lower.data`/`upper.data` (+ sidecars), `truth.csv`,
/// `merged.data` (re-merged from the halves, not the synthesizer's
/// original), `bursts/` with `index.json`, `fingerprints.csv`,
/// `metrics.json`, `confusion.csv`, `confusion_normalized.csv`, and
/// `scatter.svg`. Every artifact is deterministic in the config.
pub fn run_pipeline(config: &PipelineConfig, out_dir: &Path) -> Result<PipelineSummary> {
    fs::create_dir_all(out_dir)?;
    let plan = ChannelPlan::for_standard(config.scenario.plan);

    let capture = generate_capture(&config.scenario)?;
    let lower_path = out_dir.join("lower.data");
    let upper_path = out_dir.join("upper.data");
    write_iq(&capture.lower, &lower_path)?;
    write_meta(&lower_path, &meta_for(&capture.lower, "lower half-band capture"))?;
    write_iq(&capture.upper, &upper_path)?;
    write_meta(&upper_path, &meta_for(&capture.upper, "upper half-band capture"))?;
    write_truth_csv(&capture.truth, &out_dir.join("truth.csv"))?;

    // Classify what the merge *reconstructs*, not the synthesizer's own
    // full-rate stream — the halves are the pipeline's actual input.
    let crate::synth::SyntheticCapture { lower, upper, truth, .. } = capture;
    let merged = merge_streams(lower, upper, 0)?;
    let merged_path = out_dir.join("merged.data");
    write_iq(&merged, &merged_path)?;
    write_meta(&merged_path, &meta_for(&merged, "merged full-band stream"))?;

    let bursts = extract_packets(&merged, &plan, &config.detector)?;
    drop(merged);
    save_bursts(&out_dir.join("bursts"), &bursts)?;

    let labels = label_bursts(&bursts, &truth);
    let mut fingerprints: Vec<Fingerprint> = Vec::with_capacity(bursts.len());
    let mut unmatched = 0usize;
    let mut skipped = 0usize;
    for (burst, label) in bursts.iter().zip(&labels) {
        let Some(label) = label else {
            unmatched += 1;
            continue;
        };
        match extract_fingerprint(burst, config.fingerprint.variant, &config.fingerprint.config) {
            Ok(mut fp) => {
                fp.label = Some(label.clone());
                fingerprints.push(fp);
            }
            Err(_) => skipped += 1,
        }
    }
    write_fingerprints_csv(&fingerprints, &out_dir.join("fingerprints.csv"))?;

    let dataset = LabeledDataset::from_fingerprints(&fingerprints)?;
    let (train, test) =
        split_stratified(&dataset, config.classifier.test_fraction, config.classifier.seed)?;
    let model = KnnModel::fit(&train, config.classifier.k)?;
    let report = model.evaluate(&test)?;

    emit_metrics_json(&out_dir.join("metrics.json"), &report)?;
    emit_confusion_csv(&out_dir.join("confusion.csv"), &report.labels, &report.confusion)?;
    emit_confusion_normalized_csv(
        &out_dir.join("confusion_normalized.csv"),
        &report.labels,
        &report.confusion,
    )?;
    emit_scatter_svg(&out_dir.join("scatter.svg"), &fingerprints)?;

    Ok(PipelineSummary {
        detected: bursts.len(),
        labeled: fingerprints.len(),
        unmatched,
        skipped,
        report,
    })
}
