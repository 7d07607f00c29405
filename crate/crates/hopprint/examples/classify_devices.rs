//! Runs the classification stage end to end: label fingerprints with the
//! generator's truth, hold out a stratified test split, fit k-NN, and print
//! the confusion matrix with per-class metrics.
//!
//! Run with:
//!
//! ```text
//! cargo run --example classify_devices
//! ```

use hopprint::pipeline::label_bursts;
use hopprint::prelude::*;

fn main() -> Result<()> {
    let mut scenario = CaptureScenario::demo(11);
    scenario.packets_per_device = 25;
    let capture = generate_capture(&scenario)?;

    let bursts =
        extract_packets(&capture.merged, &ChannelPlan::classic(), &DetectorConfig::default())?;
    let labels = label_bursts(&bursts, &capture.truth);

    let config = FingerprintConfig::default();
    let mut fingerprints = Vec::new();
    for (burst, label) in bursts.iter().zip(&labels) {
        let Some(label) = label else { continue };
        if let Ok(mut fp) = extract_fingerprint(burst, Variant::Symmetric, &config) {
            fp.label = Some(label.clone());
            fingerprints.push(fp);
        }
    }
    println!("{} labeled fingerprints from {} bursts", fingerprints.len(), bursts.len());

    let dataset = LabeledDataset::from_fingerprints(&fingerprints)?;
    let knn = KnnConfig { k: 5, test_fraction: 0.2, seed: 0 };
    let (train, test) = split_stratified(&dataset, knn.test_fraction, knn.seed)?;
    let model = KnnModel::fit(&train, knn.k)?;
    let report = model.evaluate(&test)?;

    println!("\nconfusion (rows = truth, columns = prediction):");
    print!("{:>12}", "");
    for label in &report.labels {
        print!("{label:>12}");
    }
    println!();
    for (label, row) in report.labels.iter().zip(&report.confusion) {
        print!("{label:>12}");
        for &n in row {
            print!("{n:>12}");
        }
        println!();
    }

    println!("\naccuracy {:.3}", report.accuracy);
    println!("weighted precision {:.3}, recall {:.3}, F1 {:.3}", report.precision, report.recall, report.f1);
    for metrics in &report.per_class {
        println!(
            "  {:<12} precision {:.3}  recall {:.3}  F1 {:.3}  ({} test rows)",
            metrics.label, metrics.precision, metrics.recall, metrics.f1, metrics.support
        );
    }
    println!(
        "\nthe separated devices classify cleanly; mouse-e and earbuds-f share \
         overlapping offsets by construction, so their errors stay between them"
    );
    Ok(())
}
