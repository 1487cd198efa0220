//! Layout-side evaluation metrics.
//!
//! All kernels are pure and generic over [`Scalar`]. Precision and recall
//! are micro-averaged over records: counts are summed first, then divided.

pub mod benchmark;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmark::{parse_dataset, run_benchmark, run_benchmark_records, BenchmarkConfig, DatasetRecord, MetricsReport};

use crate::layout::{box_iou, max_pairwise_iou, BoxLtrb, Layout};
use crate::num::{harmonic_mean, ratio_or_zero, Scalar};
use crate::tokenizer::{composed_length, EncodeOptions, TokenizeError, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset parse error at line {line}: {message}")]
    DatasetParseError { line: usize, message: String },
    #[error("cannot read dataset {path}: {message}")]
    Io { path: String, message: String },
    #[error("IoU threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(String),
    #[error("record {record}: {source}")]
    Tokenize { record: usize, source: TokenizeError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeywordMetrics<S> {
    pub accuracy: S,
    pub precision: S,
    pub recall: S,
    pub f_measure: S,
}

/// Prompt, reference keywords and the predicted layout for one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkRecord {
    pub prompt: String,
    pub gt_keywords: Vec<String>,
    pub pred_layout: Layout,
}

/// Match counts behind a precision/recall pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub matched: usize,
    pub predicted: usize,
    pub ground_truth: usize,
}

impl std::ops::Add for MatchCounts {
    type Output = MatchCounts;

    fn add(self, other: MatchCounts) -> MatchCounts {
        MatchCounts {
            matched: self.matched + other.matched,
            predicted: self.predicted + other.predicted,
            ground_truth: self.ground_truth + other.ground_truth,
        }
    }
}

impl MatchCounts {
    pub fn precision<S: Scalar>(&self) -> S {
        ratio_or_zero(self.matched, self.predicted)
    }

    pub fn recall<S: Scalar>(&self) -> S {
        ratio_or_zero(self.matched, self.ground_truth)
    }
}

fn keyword_key(k: &str, case_sensitive: bool) -> String {
    if case_sensitive {
        k.to_string()
    } else {
        k.to_lowercase()
    }
}

fn multiset(words: impl IntoIterator<Item = String>) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for w in words {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Keyword match counts for one record, plus whether the multisets agree.
pub fn keyword_counts(pred: &[String], gt: &[String], case_sensitive: bool) -> (MatchCounts, bool) {
    let p = multiset(pred.iter().map(|k| keyword_key(k, case_sensitive)));
    let g = multiset(gt.iter().map(|k| keyword_key(k, case_sensitive)));
    let matched = p.iter().map(|(k, n)| (*n).min(g.get(k).copied().unwrap_or(0))).sum();
    (MatchCounts { matched, predicted: pred.len(), ground_truth: gt.len() }, p == g)
}

/// Predicted keywords of a layout: its line contents in order.
pub fn predicted_keywords(layout: &Layout) -> Vec<String> {
    layout.lines.iter().map(|l| l.content.clone()).collect()
}

/// Keyword accuracy, precision, recall and F-measure over `records`.
///
/// Matching is exact string equality over multisets, case-insensitive
/// unless `case_sensitive`. Accuracy is the share of records whose
/// predicted multiset equals the reference multiset.
pub fn keyword_metrics<S: Scalar>(records: &[BenchmarkRecord], case_sensitive: bool) -> Result<KeywordMetrics<S>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut total = MatchCounts::default();
    let mut exact = 0usize;
    for r in records {
        let (counts, same) = keyword_counts(&predicted_keywords(&r.pred_layout), &r.gt_keywords, case_sensitive);
        total = total + counts;
        exact += same as usize;
    }
    let precision = total.precision::<S>();
    let recall = total.recall::<S>();
    Ok(KeywordMetrics {
        accuracy: ratio_or_zero(exact, records.len()),
        precision,
        recall,
        f_measure: harmonic_mean(precision, recall),
    })
}

/// Mean of the per-layout maximum pairwise IoU over layouts with at least
/// two lines. `None` when no layout qualifies.
pub fn overlap_metric<S: Scalar>(layouts: &[Layout]) -> Option<S> {
    let values: Vec<S> = layouts.iter().filter_map(max_pairwise_iou::<S>).collect();
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().fold(S::zero(), |acc, v| acc + *v);
    Some(sum / S::from_i64(values.len() as i64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics<S> {
    pub precision: S,
    pub recall: S,
    pub f_measure: S,
    pub counts: MatchCounts,
}

impl<S: Scalar> DetectionMetrics<S> {
    pub fn from_counts(counts: MatchCounts) -> Self {
        let precision = counts.precision::<S>();
        let recall = counts.recall::<S>();
        Self { precision, recall, f_measure: harmonic_mean(precision, recall), counts }
    }
}

fn check_threshold<S: Scalar>(threshold: S) -> Result<(), EvalError> {
    if threshold > S::zero() && threshold <= S::one() {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(format!("{threshold:?}")))
    }
}

/// One-to-one matching of predicted to reference boxes.
///
/// Candidate pairs with IoU at or above `threshold` are taken greedily in
/// descending IoU order. Ties are broken by box geometry, then by index, so
/// the number of matches does not depend on list order.
pub fn greedy_box_matching<S: Scalar>(pred: &[BoxLtrb], gt: &[BoxLtrb], threshold: S) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(S, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let iou = box_iou::<S>(p, g);
            if iou >= threshold {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| pred[a.1].to_array().cmp(&pred[b.1].to_array()))
            .then_with(|| gt[a.2].to_array().cmp(&gt[b.2].to_array()))
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gt.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Detection-style precision, recall and F-measure for one image.
pub fn detection_match_metrics<S: Scalar>(pred: &[BoxLtrb], gt: &[BoxLtrb], threshold: S) -> Result<DetectionMetrics<S>, EvalError> {
    check_threshold(threshold)?;
    let matched = greedy_box_matching(pred, gt, threshold).len();
    Ok(DetectionMetrics::from_counts(MatchCounts { matched, predicted: pred.len(), ground_truth: gt.len() }))
}

/// Covered fraction of a corpus at one maximum length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthCoverage<S> {
    #[serde(rename = "L")]
    pub max_len: usize,
    pub coverage: S,
}

/// Fraction of `lengths` at or below each value of `max_lens`, in the
/// order given.
pub fn coverage_of_lengths<S: Scalar>(lengths: &[usize], max_lens: &[usize]) -> Result<Vec<LengthCoverage<S>>, EvalError> {
    if lengths.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    Ok(max_lens
        .iter()
        .map(|&l| LengthCoverage { max_len: l, coverage: ratio_or_zero(sorted.partition_point(|&x| x <= l), sorted.len()) })
        .collect())
}

/// Cumulative distribution of composed sequence lengths over a corpus.
pub fn length_coverage<S: Scalar>(
    corpus: &[(String, Layout)],
    vocab: &Vocabulary,
    opts: EncodeOptions,
    max_lens: &[usize],
) -> Result<Vec<LengthCoverage<S>>, EvalError> {
    let lengths = corpus
        .iter()
        .enumerate()
        .map(|(record, (prompt, layout))| {
            composed_length(prompt, layout, vocab, opts).map_err(|source| EvalError::Tokenize { record, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    coverage_of_lengths(&lengths, max_lens)
}
