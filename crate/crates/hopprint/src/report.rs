//! Evaluation artifacts: metrics JSON, confusion CSVs, and a fingerprint
//! scatter plot.
//!
//! Every writer here is deterministic — same inputs, same bytes. No
//! timestamps, no hash-ordered iteration, fixed float formatting. That makes
//! repeated pipeline runs diffable and lets tests compare whole files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::classify::{ClassMetrics, EvalReport};
use crate::fingerprint::Fingerprint;
use crate::{Error, Result};

#[derive(Serialize)]
struct MetricsDoc<'a> {
    #[serde(rename = "Accuracy")]
    accuracy: f64,
    #[serde(rename = "Precision")]
    precision: f64,
    #[serde(rename = "Recall")]
    recall: f64,
    #[serde(rename = "F1 score")]
    f1: f64,
    per_class: &'a [ClassMetrics],
}

/// Writes the aggregate metrics as pretty-printed JSON. Top-level keys are
/// exactly `Accuracy`, `Precision`, `Recall`, `F1 score`, and `per_class`.
pub fn emit_metrics_json(path: &Path, report: &EvalReport) -> Result<()> {
    let doc = MetricsDoc {
        accuracy: report.accuracy,
        precision: report.precision,
        recall: report.recall,
        f1: report.f1,
        per_class: &report.per_class,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn check_confusion(labels: &[String], confusion: &[Vec<usize>]) -> Result<()> {
    let n = labels.len();
    if n == 0 || confusion.len() != n || confusion.iter().any(|r| r.len() != n) {
        return Err(Error::parameter(format!(
            "confusion matrix must be {n}×{n} to match {n} labels"
        )));
    }
    Ok(())
}

/// Writes raw confusion counts as CSV: header `label,<class>,...`, one row
/// per true class.
pub fn emit_confusion_csv(path: &Path, labels: &[String], confusion: &[Vec<usize>]) -> Result<()> {
    check_confusion(labels, confusion)?;
    let mut text = String::from("label");
    for l in labels {
        write!(text, ",{l}").expect("string write");
    }
    text.push('\n');
    for (l, row) in labels.iter().zip(confusion) {
        write!(text, "{l}").expect("string write");
        for v in row {
            write!(text, ",{v}").expect("string write");
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Splits `row` into six-decimal fixed-point fractions of its sum that sum
/// to exactly 1.000000: integer division gives each cell its floor in
/// millionths, and the leftover millionths go to the cells with the largest
/// remainders (ties broken toward lower indices).
fn largest_remainder_millionths(row: &[usize]) -> Vec<u64> {
    const SCALE: u64 = 1_000_000;
    let sum: u64 = row.iter().map(|&v| v as u64).sum();
    if sum == 0 {
        return vec![0; row.len()];
    }
    let mut cells: Vec<u64> = Vec::with_capacity(row.len());
    let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(row.len());
    for (i, &v) in row.iter().enumerate() {
        let scaled = v as u64 * SCALE;
        cells.push(scaled / sum);
        remainders.push((scaled % sum, i));
    }
    let assigned: u64 = cells.iter().sum();
    let deficit = (SCALE - assigned) as usize;
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(deficit) {
        cells[i] += 1;
    }
    cells
}

/// Writes the row-normalized confusion matrix with six-decimal cells. Each
/// nonzero row sums to exactly 1.000000; all-zero rows stay all zero.
pub fn emit_confusion_normalized_csv(
    path: &Path,
    labels: &[String],
    confusion: &[Vec<usize>],
) -> Result<()> {
    check_confusion(labels, confusion)?;
    let mut text = String::from("label");
    for l in labels {
        write!(text, ",{l}").expect("string write");
    }
    text.push('\n');
    for (l, row) in labels.iter().zip(confusion) {
        write!(text, "{l}").expect("string write");
        for cell in largest_remainder_millionths(row) {
            write!(text, ",{}.{:06}", cell / 1_000_000, cell % 1_000_000).expect("string write");
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

const PLOT_COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

const SVG_WIDTH: f64 = 720.0;
const SVG_HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn svg_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Draws the fingerprint plane — CFO against scaling factor, both in kHz —
/// as a self-contained SVG, one color per label in sorted label order.
/// Unlabeled fingerprints plot as `(unlabeled)`. The output is byte-stable
/// across runs.
pub fn emit_scatter_svg(path: &Path, fingerprints: &[Fingerprint]) -> Result<()> {
    if fingerprints.is_empty() {
        return Err(Error::parameter("nothing to plot: no fingerprints"));
    }
    let mut groups: std::collections::BTreeMap<String, Vec<(f64, f64)>> =
        std::collections::BTreeMap::new();
    for fp in fingerprints {
        let label = fp.label.clone().unwrap_or_else(|| "(unlabeled)".to_string());
        groups
            .entry(label)
            .or_default()
            .push((fp.cfo_hz / 1e3, fp.scaling_factor / 1e3));
    }

    let xs: Vec<f64> = groups.values().flatten().map(|p| p.0).collect();
    let ys: Vec<f64> = groups.values().flatten().map(|p| p.1).collect();
    let bound = |vals: &[f64]| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = (0.05 * (hi - lo)).max(1.0);
        (lo - pad, hi + pad)
    };
    let (x_lo, x_hi) = bound(&xs);
    let (y_lo, y_hi) = bound(&ys);

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |v: f64| MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let to_y = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">"
    )
    .expect("string write");
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>"
    )
    .expect("string write");

    // Five ticks per axis with grid lines.
    for t in 0..=4 {
        let frac = t as f64 / 4.0;
        let xv = x_lo + frac * (x_hi - x_lo);
        let yv = y_lo + frac * (y_hi - y_lo);
        let xp = to_x(xv);
        let yp = to_y(yv);
        writeln!(
            svg,
            "<line x1=\"{xp:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{xp:.2}\" y2=\"{:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>",
            MARGIN_TOP + plot_h
        )
        .expect("string write");
        writeln!(
            svg,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>",
            MARGIN_LEFT + plot_w
        )
        .expect("string write");
        writeln!(
            svg,
            "<text x=\"{xp:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\" fill=\"#333\">{xv:.1}</text>",
            MARGIN_TOP + plot_h + 16.0
        )
        .expect("string write");
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\" fill=\"#333\">{yv:.1}</text>",
            MARGIN_LEFT - 6.0,
            yp + 4.0
        )
        .expect("string write");
    }
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" fill=\"#000\">carrier frequency offset (kHz)</text>",
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" fill=\"#000\" transform=\"rotate(-90 16 {:.2})\">scaling factor (kHz)</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )
    .expect("string write");

    for (g, (label, points)) in groups.iter().enumerate() {
        let color = PLOT_COLORS[g % PLOT_COLORS.len()];
        for (x, y) in points {
            writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
                to_x(*x),
                to_y(*y)
            )
            .expect("string write");
        }
        let ly = MARGIN_TOP + 14.0 + 20.0 * g as f64;
        writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{ly:.2}\" r=\"4\" fill=\"{color}\"/>",
            SVG_WIDTH - MARGIN_RIGHT + 16.0
        )
        .expect("string write");
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"#000\">{} ({})</text>",
            SVG_WIDTH - MARGIN_RIGHT + 26.0,
            ly + 4.0,
            svg_escape(label),
            points.len()
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::metrics_from_confusion;
    use crate::fingerprint::Variant;

    fn sample_report() -> EvalReport {
        metrics_from_confusion(
            vec!["a".into(), "b".into()],
            vec![vec![1, 1], vec![0, 2]],
        )
        .unwrap()
    }

    #[test]
    fn metrics_json_has_exactly_the_named_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.json");
        emit_metrics_json(&path, &sample_report()).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = doc.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
        let mut expected = vec!["Accuracy", "Precision", "Recall", "F1 score", "per_class"];
        // Key order in the emitted text matters (readers diff these files);
        // check it on the raw bytes since Value reorders object keys.
        let byte_pos: Vec<usize> =
            expected.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(byte_pos.windows(2).all(|w| w[0] < w[1]), "key order {byte_pos:?}");
        expected.sort_unstable();
        assert_eq!(keys, expected);
        assert_eq!(obj["Accuracy"].as_f64().unwrap(), 0.75);
        assert_eq!(obj["Recall"].as_f64().unwrap(), 0.75);
        assert!((obj["Precision"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(obj["per_class"].as_array().unwrap().len(), 2);
        assert_eq!(obj["per_class"][0]["label"], "a");
        assert_eq!(obj["per_class"][0]["support"], 2);
    }

    #[test]
    fn confusion_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("confusion.csv");
        let report = sample_report();
        emit_confusion_csv(&path, &report.labels, &report.confusion).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "label,a,b\na,1,1\nb,0,2\n");
    }

    #[test]
    fn normalized_rows_sum_to_exactly_one_million_micro() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("confusion_normalized.csv");
        let labels: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        // 1/3 splits and a zero row — the awkward cases.
        let confusion = vec![vec![1, 1, 1], vec![0, 0, 0], vec![1, 2, 0]];
        emit_confusion_normalized_csv(&path, &labels, &confusion).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "label,a,b,c");
        assert_eq!(lines.next().unwrap(), "a,0.333334,0.333333,0.333333");
        assert_eq!(lines.next().unwrap(), "b,0.000000,0.000000,0.000000");
        assert_eq!(lines.next().unwrap(), "c,0.333333,0.666667,0.000000");

        for line in text.lines().skip(1) {
            let cells: Vec<u64> = line
                .split(',')
                .skip(1)
                .map(|c| c.replace('.', "").parse::<u64>().unwrap())
                .collect();
            let total: u64 = cells.iter().sum();
            assert!(total == 1_000_000 || total == 0, "row '{line}' sums to {total}");
        }
    }

    #[test]
    fn largest_remainder_is_exact_on_random_rows() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let n = rng.gen_range(1..8);
            let row: Vec<usize> = (0..n).map(|_| rng.gen_range(0..50)).collect();
            let cells = largest_remainder_millionths(&row);
            let sum: usize = row.iter().sum();
            let total: u64 = cells.iter().sum();
            assert_eq!(total, if sum == 0 { 0 } else { 1_000_000 });
            // Each cell is within one millionth of the exact fraction.
            if sum > 0 {
                for (&c, &v) in cells.iter().zip(&row) {
                    let exact = v as f64 / sum as f64 * 1e6;
                    assert!((c as f64 - exact).abs() < 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn scatter_svg_is_deterministic_and_labeled() {
        let fps: Vec<Fingerprint> = (0..20)
            .map(|i| Fingerprint {
                label: Some(if i % 2 == 0 { "watch-a" } else { "mouse-e" }.to_string()),
                channel_index: i,
                start_sample: 100 * i,
                cfo_hz: -45e3 + 300.0 * i as f64,
                scaling_factor: 160e3 + 100.0 * i as f64,
                variant: Variant::Symmetric,
            })
            .collect();

        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("one.svg");
        let p2 = dir.path().join("two.svg");
        emit_scatter_svg(&p1, &fps).unwrap();
        emit_scatter_svg(&p2, &fps).unwrap();

        let a = fs::read(&p1).unwrap();
        let b = fs::read(&p2).unwrap();
        assert_eq!(a, b);

        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("watch-a (10)"));
        assert!(text.contains("mouse-e (10)"));
        assert!(text.contains("carrier frequency offset (kHz)"));
        assert!(text.contains("scaling factor (kHz)"));
        assert_eq!(text.matches("<circle").count(), 20 + 2); // points + legend dots
    }

    #[test]
    fn scatter_svg_escapes_labels_and_handles_unlabeled() {
        let fps = vec![
            Fingerprint {
                label: Some("a<b&c".into()),
                channel_index: 0,
                start_sample: 0,
                cfo_hz: 1e3,
                scaling_factor: 2e3,
                variant: Variant::Literal,
            },
            Fingerprint {
                label: None,
                channel_index: 1,
                start_sample: 5,
                cfo_hz: -1e3,
                scaling_factor: 3e3,
                variant: Variant::Literal,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scatter.svg");
        emit_scatter_svg(&path, &fps).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("a&lt;b&amp;c"));
        assert!(text.contains("(unlabeled)"));
        assert!(!text.contains("a<b"));
    }

    #[test]
    fn emitters_reject_mismatched_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let labels: Vec<String> = vec!["a".into(), "b".into()];
        let bad = vec![vec![1, 2, 3], vec![0, 1, 0]];
        assert!(emit_confusion_csv(&dir.path().join("x.csv"), &labels, &bad).is_err());
        assert!(emit_scatter_svg(&dir.path().join("x.svg"), &[]).is_err());
    }
}
