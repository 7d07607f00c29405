//! The `hopprint` command line: one subcommand per pipeline stage plus a
//! `pipeline` command that chains them.
//!
//! [`run`] is the whole CLI as a library function returning the process exit
//! code — `main` stays a one-liner and tests can drive the real argument
//! parsing and dispatch in-process. Exit codes: 0 success, 1 a stage failed
//! (message on stderr names the stage), 2 usage errors.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::channel::{ChannelPlan, Standard};
use crate::classify::{split_stratified, KnnConfig, KnnModel, LabeledDataset};
use crate::detect::{extract_packets, load_bursts, save_bursts, DetectorConfig};
use crate::fingerprint::{
    extract_fingerprint, read_fingerprints_csv, write_fingerprints_csv, Fingerprint, Variant,
};
use crate::iq::{read_iq_auto, write_iq, write_meta, IqMeta, IqStream};
use crate::merge::merge_streams;
use crate::pipeline::{label_bursts, run_pipeline, FingerprintSection, PipelineConfig};
use crate::report::{
    emit_confusion_csv, emit_confusion_normalized_csv, emit_metrics_json, emit_scatter_svg,
};
use crate::synth::{
    generate_capture, read_truth_csv, write_truth_csv, CaptureScenario, LOWER_CENTER_HZ,
    MERGED_CENTER_HZ, MERGED_RATE_HZ, UPPER_CENTER_HZ,
};
use crate::{Error, Result};

const HALF_RATE_HZ: f64 = MERGED_RATE_HZ / 2.0;

#[derive(Parser)]
#[command(
    name = "hopprint",
    version,
    about = "Bluetooth RF fingerprinting over merged wideband IQ captures"
)]
struct Cli {
    /// JSON config file; the same schema serves every subcommand, and each
    /// reads only the sections it needs.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the seed (scenario seed for synth/pipeline, shuffle seed for
    /// classify).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Report per-stage progress on stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a two-receiver capture: half-band IQ files, the full-band
    /// stream, and a truth table.
    Synth {
        /// Directory for lower.data, upper.data, merged.data, and truth.csv.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Merge two half-band captures into one full-band stream.
    Merge {
        #[arg(long, value_name = "FILE")]
        lower: PathBuf,
        #[arg(long, value_name = "FILE")]
        upper: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Samples the upper capture started late by (negative: the lower
        /// one did).
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        offset: i64,
        /// Sample rate of the lower capture, Hz (overrides its sidecar).
        #[arg(long, value_name = "HZ")]
        lower_rate: Option<f64>,
        /// Center frequency of the lower capture, Hz (overrides its sidecar).
        #[arg(long, value_name = "HZ")]
        lower_center: Option<f64>,
        /// Sample rate of the upper capture, Hz (overrides its sidecar).
        #[arg(long, value_name = "HZ")]
        upper_rate: Option<f64>,
        /// Center frequency of the upper capture, Hz (overrides its sidecar).
        #[arg(long, value_name = "HZ")]
        upper_center: Option<f64>,
    },
    /// Detect bursts in a merged stream, assign channels, and dehop each to
    /// baseband.
    Extract {
        /// Merged full-band IQ file.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Directory for the burst set (burst_NNNN.data + index.json).
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Sample rate, Hz (overrides the sidecar).
        #[arg(long, value_name = "HZ")]
        rate: Option<f64>,
        /// Center frequency, Hz (overrides the sidecar).
        #[arg(long, value_name = "HZ")]
        center: Option<f64>,
        /// Channel plan: classic or ble.
        #[arg(long, default_value = "classic")]
        standard: Standard,
    },
    /// Reduce a burst set to fingerprints; label them from a truth table if
    /// one is given.
    Fingerprint {
        /// Burst set directory written by `extract`.
        #[arg(long, value_name = "DIR")]
        bursts: PathBuf,
        /// Output CSV path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Reduction variant: literal or symmetric.
        #[arg(long)]
        variant: Option<Variant>,
        /// Truth table for labeling bursts by interval overlap.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
    },
    /// Split labeled fingerprints, fit the k-NN model, and score it.
    Classify {
        /// Labeled fingerprint CSV.
        #[arg(long, value_name = "FILE")]
        fingerprints: PathBuf,
        /// Directory for metrics.json and the confusion CSVs.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Neighbors to vote.
        #[arg(long)]
        k: Option<usize>,
        /// Per-class fraction held out for testing.
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Draw the fingerprint scatter plot from a fingerprint CSV.
    Report {
        /// Fingerprint CSV (labeled or not).
        #[arg(long, value_name = "FILE")]
        fingerprints: PathBuf,
        /// Output SVG path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Run the whole chain — synth, merge, extract, fingerprint, classify,
    /// report — into one directory.
    Pipeline {
        /// Output directory (overrides the config's output_dir; default
        /// hopprint-out).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

/// The pipeline config schema with every section optional, so stage
/// subcommands can read just their slice of a shared config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PartialConfig {
    scenario: Option<CaptureScenario>,
    detector: DetectorConfig,
    fingerprint: FingerprintSection,
    classifier: KnnConfig,
    output_dir: Option<PathBuf>,
}

fn load_partial(path: Option<&PathBuf>) -> Result<PartialConfig> {
    match path {
        None => Ok(PartialConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::format(format!("{}: {e}", p.display())))
        }
    }
}

fn stream_meta(stream: &IqStream, description: &str) -> IqMeta {
    IqMeta {
        sample_rate_hz: stream.sample_rate_hz,
        center_freq_hz: stream.center_freq_hz,
        description: description.to_string(),
    }
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code. The first argv element is the program name, as with
/// `std::env::args_os`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let stage = match &cli.command {
        Command::Synth { .. } => "synth",
        Command::Merge { .. } => "merge",
        Command::Extract { .. } => "extract",
        Command::Fingerprint { .. } => "fingerprint",
        Command::Classify { .. } => "classify",
        Command::Report { .. } => "report",
        Command::Pipeline { .. } => "pipeline",
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hopprint {stage}: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let partial = load_partial(cli.config.as_ref())?;
    let verbose = cli.verbose;
    match cli.command {
        Command::Synth { out } => {
            let mut scenario = partial.scenario.unwrap_or_else(|| CaptureScenario::demo(0));
            if let Some(seed) = cli.seed {
                scenario.seed = seed;
            }
            fs::create_dir_all(&out)?;
            if verbose {
                eprintln!(
                    "synthesizing {} devices × {} packets (seed {})",
                    scenario.profiles.len(),
                    scenario.packets_per_device,
                    scenario.seed
                );
            }
            let capture = generate_capture(&scenario)?;
            for (stream, name, what) in [
                (&capture.lower, "lower.data", "lower half-band capture"),
                (&capture.upper, "upper.data", "upper half-band capture"),
                (&capture.merged, "merged.data", "full-band stream"),
            ] {
                let path = out.join(name);
                write_iq(stream, &path)?;
                write_meta(&path, &stream_meta(stream, what))?;
            }
            write_truth_csv(&capture.truth, &out.join("truth.csv"))?;
            println!(
                "wrote {} bursts over {:.1} ms to {}",
                capture.truth.len(),
                capture.merged.duration_s() * 1e3,
                out.display()
            );
        }
        Command::Merge {
            lower,
            upper,
            out,
            offset,
            lower_rate,
            lower_center,
            upper_rate,
            upper_center,
        } => {
            let lower =
                read_iq_auto(&lower, lower_rate, lower_center, (HALF_RATE_HZ, LOWER_CENTER_HZ))?;
            let upper =
                read_iq_auto(&upper, upper_rate, upper_center, (HALF_RATE_HZ, UPPER_CENTER_HZ))?;
            if verbose {
                eprintln!(
                    "merging {} + {} samples at {} Hz, offset {offset}",
                    lower.len(),
                    upper.len(),
                    lower.sample_rate_hz
                );
            }
            let merged = merge_streams(lower, upper, offset)?;
            write_iq(&merged, &out)?;
            write_meta(&out, &stream_meta(&merged, "merged full-band stream"))?;
            println!(
                "merged {} samples at {:.0} MHz around {:.1} MHz into {}",
                merged.len(),
                merged.sample_rate_hz / 1e6,
                merged.center_freq_hz / 1e6,
                out.display()
            );
        }
        Command::Extract { input, out, rate, center, standard } => {
            let stream = read_iq_auto(&input, rate, center, (MERGED_RATE_HZ, MERGED_CENTER_HZ))?;
            let plan = ChannelPlan::for_standard(standard);
            if verbose {
                eprintln!(
                    "scanning {} samples ({:.1} ms) over {} channels",
                    stream.len(),
                    stream.duration_s() * 1e3,
                    plan.num_channels()
                );
            }
            let bursts = extract_packets(&stream, &plan, &partial.detector)?;
            save_bursts(&out, &bursts)?;
            println!("extracted {} bursts into {}", bursts.len(), out.display());
        }
        Command::Fingerprint { bursts, out, variant, truth } => {
            let set = load_bursts(&bursts)?;
            let variant = variant.unwrap_or(partial.fingerprint.variant);
            let labels = match truth {
                Some(path) => label_bursts(&set, &read_truth_csv(&path)?),
                None => vec![None; set.len()],
            };
            let mut fingerprints: Vec<Fingerprint> = Vec::with_capacity(set.len());
            let mut skipped = 0usize;
            for (burst, label) in set.iter().zip(labels) {
                match extract_fingerprint(burst, variant, &partial.fingerprint.config) {
                    Ok(mut fp) => {
                        fp.label = label;
                        fingerprints.push(fp);
                    }
                    Err(e) => {
                        skipped += 1;
                        if verbose {
                            eprintln!("skipping burst at {}: {e}", burst.start_sample);
                        }
                    }
                }
            }
            write_fingerprints_csv(&fingerprints, &out)?;
            let labeled = fingerprints.iter().filter(|f| f.label.is_some()).count();
            println!(
                "fingerprinted {} bursts ({labeled} labeled, {skipped} skipped) into {}",
                fingerprints.len(),
                out.display()
            );
        }
        Command::Classify { fingerprints, out, k, test_fraction } => {
            let all = read_fingerprints_csv(&fingerprints)?;
            let labeled: Vec<Fingerprint> =
                all.into_iter().filter(|f| f.label.is_some()).collect();
            let mut knn = partial.classifier;
            if let Some(k) = k {
                knn.k = k;
            }
            if let Some(f) = test_fraction {
                knn.test_fraction = f;
            }
            if let Some(seed) = cli.seed {
                knn.seed = seed;
            }
            let dataset = LabeledDataset::from_fingerprints(&labeled)?;
            let (train, test) = split_stratified(&dataset, knn.test_fraction, knn.seed)?;
            if verbose {
                eprintln!(
                    "fitting k = {} on {} rows, scoring {}",
                    knn.k,
                    train.len(),
                    test.len()
                );
            }
            let model = KnnModel::fit(&train, knn.k)?;
            let report = model.evaluate(&test)?;
            fs::create_dir_all(&out)?;
            emit_metrics_json(&out.join("metrics.json"), &report)?;
            emit_confusion_csv(&out.join("confusion.csv"), &report.labels, &report.confusion)?;
            emit_confusion_normalized_csv(
                &out.join("confusion_normalized.csv"),
                &report.labels,
                &report.confusion,
            )?;
            println!(
                "accuracy {:.4}, precision {:.4}, recall {:.4}, F1 {:.4} over {} test rows → {}",
                report.accuracy,
                report.precision,
                report.recall,
                report.f1,
                test.len(),
                out.display()
            );
        }
        Command::Report { fingerprints, out } => {
            let fps = read_fingerprints_csv(&fingerprints)?;
            emit_scatter_svg(&out, &fps)?;
            let mut classes: Vec<_> =
                fps.iter().map(|f| f.label.as_deref().unwrap_or("(unlabeled)")).collect();
            classes.sort_unstable();
            classes.dedup();
            println!(
                "plotted {} fingerprints across {} classes into {}",
                fps.len(),
                classes.len(),
                out.display()
            );
        }
        Command::Pipeline { out } => {
            let mut config = match &cli.config {
                Some(path) => {
                    let text = fs::read_to_string(path)?;
                    PipelineConfig::from_json(&text)?
                }
                None => PipelineConfig::demo(cli.seed.unwrap_or(0)),
            };
            if let Some(seed) = cli.seed {
                config.scenario.seed = seed;
            }
            let out = out
                .or_else(|| config.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("hopprint-out"));
            if verbose {
                eprintln!(
                    "pipeline: {} devices × {} packets, variant {}, k = {}",
                    config.scenario.profiles.len(),
                    config.scenario.packets_per_device,
                    config.fingerprint.variant,
                    config.classifier.k
                );
            }
            let summary = run_pipeline(&config, &out)?;
            println!(
                "detected {} bursts ({} labeled, {} unmatched, {} skipped)",
                summary.detected, summary.labeled, summary.unmatched, summary.skipped
            );
            println!(
                "accuracy {:.4}, precision {:.4}, recall {:.4}, F1 {:.4} → {}",
                summary.report.accuracy,
                summary.report.precision,
                summary.report.recall,
                summary.report.f1,
                out.display()
            );
        }
    }
    Ok(())
}
