//! k-nearest-neighbor device classification and its evaluation metrics.
//!
//! Fingerprints are low-dimensional, datasets are a few hundred points per
//! device, and the feature axes have wildly different units (Hz of CFO vs Hz
//! of deviation), so the classifier is deliberately plain: z-score each
//! feature with training statistics, brute-force Euclidean distances,
//! majority vote over the k nearest with deterministic tie-breaks. Every
//! choice that could depend on iteration order — neighbor ties, vote ties,
//! stratified splitting — is pinned so repeated runs agree bit for bit.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fingerprint::Fingerprint;
use crate::{Error, Result};

/// Classifier settings as they appear in pipeline config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    /// Fraction of each class held out for evaluation.
    pub test_fraction: f64,
    /// Seed for the stratified shuffle.
    pub seed: u64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 10, test_fraction: 0.2, seed: 0 }
    }
}

/// Feature rows with one label per row. Rows share a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::parameter(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.is_empty() {
            return Err(Error::parameter("dataset must contain at least one row"));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::parameter("feature rows must have at least one column"));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::parameter(format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::parameter(format!("row {i} contains a non-finite feature")));
            }
        }
        Ok(Self { features, labels })
    }

    /// Builds a `(cfo, scaling factor)` dataset from labeled fingerprints.
    /// Fails if any fingerprint lacks a label.
    pub fn from_fingerprints(fingerprints: &[Fingerprint]) -> Result<Self> {
        let mut features = Vec::with_capacity(fingerprints.len());
        let mut labels = Vec::with_capacity(fingerprints.len());
        for fp in fingerprints {
            let Some(label) = &fp.label else {
                return Err(Error::parameter(format!(
                    "fingerprint at sample {} has no device label",
                    fp.start_sample
                )));
            };
            features.push(vec![fp.cfo_hz, fp.scaling_factor]);
            labels.push(label.clone());
        }
        Self::new(features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        let mut classes: Vec<String> = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        classes
    }
}

/// Splits per class: each class's rows are shuffled with the seed and
/// `round(count · test_fraction)` of them go to the test set. Errors if any
/// class would be left without training rows.
pub fn split_stratified(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::parameter(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in data.classes() {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test >= idx.len() {
            return Err(Error::parameter(format!(
                "class '{class}' would keep no training rows ({} rows, fraction {test_fraction})",
                idx.len()
            )));
        }
        test_idx.extend_from_slice(&idx[..n_test]);
        train_idx.extend_from_slice(&idx[n_test..]);
    }
    let take = |idx: &[usize]| {
        LabeledDataset::new(
            idx.iter().map(|&i| data.features[i].clone()).collect(),
            idx.iter().map(|&i| data.labels[i].clone()).collect(),
        )
    };
    if test_idx.is_empty() {
        return Err(Error::parameter(format!(
            "test fraction {test_fraction} keeps no rows from any class"
        )));
    }
    Ok((take(&train_idx)?, take(&test_idx)?))
}

/// A fitted k-NN model: z-scored training rows plus the feature statistics
/// needed to project queries into the same space.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    means: Vec<f64>,
    sds: Vec<f64>,
    /// Features with zero training variance carry no information and are
    /// excluded from distances (their z-score would be 0/0).
    constant: Vec<bool>,
    points: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl KnnModel {
    /// Fits on a training set: records per-feature mean and population
    /// standard deviation, stores every row z-scored.
    pub fn fit(train: &LabeledDataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::parameter("k must be at least 1"));
        }
        if k > train.len() {
            return Err(Error::parameter(format!(
                "k = {k} exceeds the {} training rows",
                train.len()
            )));
        }
        let dim = train.dim();
        let n = train.len() as f64;
        let mut means = vec![0.0; dim];
        for row in &train.features {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; dim];
        for row in &train.features {
            for ((var, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *var += (v - m) * (v - m);
            }
        }
        let constant: Vec<bool> = vars.iter().map(|v| *v == 0.0).collect();
        let sds: Vec<f64> = vars
            .iter()
            .map(|v| if *v == 0.0 { 1.0 } else { (*v / n).sqrt() })
            .collect();

        let zscore = |row: &[f64]| -> Vec<f64> {
            row.iter()
                .enumerate()
                .map(|(j, v)| if constant[j] { 0.0 } else { (v - means[j]) / sds[j] })
                .collect()
        };
        let points = train.features.iter().map(|r| zscore(r)).collect();
        Ok(Self { k, means, sds, constant, points, labels: train.labels.clone() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Labels the training set was fitted on, sorted and deduplicated.
    pub fn classes(&self) -> Vec<String> {
        let mut classes = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        classes
    }

    fn zscore(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| if self.constant[j] { 0.0 } else { (v - self.means[j]) / self.sds[j] })
            .collect()
    }

    /// Predicts one query row. Neighbor ties at equal distance go to the
    /// lower training index; vote ties go to the lexicographically smallest
    /// label.
    pub fn predict(&self, features: &[f64]) -> Result<String> {
        if features.len() != self.dim() {
            return Err(Error::parameter(format!(
                "query has {} features, model expects {}",
                features.len(),
                self.dim()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("query contains a non-finite feature"));
        }
        let q = self.zscore(features);
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, i) in &order[..self.k] {
            *votes.entry(self.labels[*i].as_str()).or_insert(0) += 1;
        }
        // BTreeMap iterates labels in sorted order, so the first strict
        // maximum is the lexicographically smallest winner.
        let mut best: Option<(&str, usize)> = None;
        for (label, count) in votes {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((label, count));
            }
        }
        Ok(best.expect("k ≥ 1 guarantees at least one vote").0.to_string())
    }

    /// Predicts every test row and scores the result. Confusion rows are
    /// truth, columns are predictions, classes sorted over the union of
    /// training and test labels.
    pub fn evaluate(&self, test: &LabeledDataset) -> Result<EvalReport> {
        let mut classes = self.classes();
        classes.extend(test.classes());
        classes.sort_unstable();
        classes.dedup();
        let index: BTreeMap<&str, usize> =
            classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();

        let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
        for (row, truth) in test.features.iter().zip(&test.labels) {
            let predicted = self.predict(row)?;
            confusion[index[truth.as_str()]][index[predicted.as_str()]] += 1;
        }
        metrics_from_confusion(classes, confusion)
    }
}

/// Per-class precision, recall, F1, and row count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// A scored evaluation: the confusion matrix and the support-weighted
/// aggregate metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sorted class labels; index i names row/column i of `confusion`.
    pub labels: Vec<String>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    /// Support-weighted mean of per-class precision.
    pub precision: f64,
    /// Support-weighted mean of per-class recall. Algebraically this is the
    /// accuracy, and it is computed as such, so the two fields are always
    /// bit-identical.
    pub recall: f64,
    /// Support-weighted mean of per-class F1.
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Scores a confusion matrix (rows = truth, columns = predicted).
///
/// Per-class precision is 0 when nothing was predicted as that class, recall
/// is 0 for empty classes, F1 is 0 when precision + recall is. Weighted
/// metrics average per-class values with support weights; classes with no
/// test rows therefore contribute nothing.
pub fn metrics_from_confusion(
    labels: Vec<String>,
    confusion: Vec<Vec<usize>>,
) -> Result<EvalReport> {
    let n = labels.len();
    if n == 0 || confusion.len() != n || confusion.iter().any(|r| r.len() != n) {
        return Err(Error::parameter(format!(
            "confusion matrix must be {n}×{n} to match {n} labels"
        )));
    }
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(Error::parameter("confusion matrix has no entries"));
    }

    let mut per_class = Vec::with_capacity(n);
    for (i, label) in labels.iter().enumerate() {
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        let hit = confusion[i][i];
        let precision = if predicted > 0 { hit as f64 / predicted as f64 } else { 0.0 };
        let recall = if support > 0 { hit as f64 / support as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics { label: label.clone(), precision, recall, f1, support });
    }

    let weighted = |metric: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|c| c.support as f64 * metric(c)).sum::<f64>() / total as f64
    };
    let trace: usize = (0..n).map(|i| confusion[i][i]).sum();
    let accuracy = trace as f64 / total as f64;

    Ok(EvalReport {
        labels,
        confusion,
        accuracy,
        precision: weighted(|c| c.precision),
        // Weighted recall telescopes to trace/total; computing it that way
        // keeps it bit-identical to the accuracy instead of merely close.
        recall: accuracy,
        f1: weighted(|c| c.f1),
        per_class,
    })
}

/// Divides each confusion row by its sum. Rows that sum to zero are left as
/// zeros and their indices reported alongside.
pub fn confusion_normalize(confusion: &[Vec<usize>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut zero_rows = Vec::new();
    let rows = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let sum: usize = row.iter().sum();
            if sum == 0 {
                zero_rows.push(i);
                vec![0.0; row.len()]
            } else {
                row.iter().map(|&v| v as f64 / sum as f64).collect()
            }
        })
        .collect();
    (rows, zero_rows)
}
