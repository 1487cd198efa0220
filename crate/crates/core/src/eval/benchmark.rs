//! Benchmark harness over a line-delimited dataset.
//!
//! Each dataset line is a layout record (the predicted layout) with the
//! reference keywords and, optionally, reference boxes:
//!
//! ```json
//! {"prompt": "a sign", "lines": [{"text": "STOP", "box": [10, 20, 60, 35]}], "gt_keywords": ["STOP"], "gt_boxes": [[10, 20, 60, 34]]}
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    coverage_of_lengths, detection_match_metrics, keyword_counts, keyword_metrics, overlap_metric, predicted_keywords,
    BenchmarkRecord, DetectionMetrics, EvalError, KeywordMetrics, LengthCoverage, MatchCounts,
};
use crate::layout::{max_pairwise_iou, BoxLtrb, Layout};
use crate::record::LayoutRecord;
use crate::tokenizer::{composed_length, EncodeOptions, TokenizationLevel, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(flatten)]
    pub layout: LayoutRecord,
    pub gt_keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_boxes: Option<Vec<[i32; 4]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub iou_threshold: f64,
    pub case_sensitive: bool,
    pub lengths: Vec<usize>,
    pub level: TokenizationLevel,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { iou_threshold: 0.5, case_sensitive: false, lengths: vec![64, 128, 256], level: TokenizationLevel::Char }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDiagnostics {
    pub index: usize,
    pub prompt: String,
    pub predicted: Vec<String>,
    pub keywords: MatchCounts,
    pub exact: bool,
    pub max_iou: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<MatchCounts>,
    pub composed_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub records: usize,
    pub averaging: String,
    pub case_sensitive: bool,
    pub iou_threshold: f64,
    pub keyword: KeywordMetrics<f64>,
    pub overlap_iou: Option<f64>,
    pub overlap_samples: usize,
    pub detection: Option<DetectionMetrics<f64>>,
    pub length_coverage: Vec<LengthCoverage<f64>>,
    pub per_record: Vec<RecordDiagnostics>,
}

/// Parses a line-delimited dataset. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_error = |message: String| EvalError::DatasetParseError { line: i + 1, message };
        let record: DatasetRecord = serde_json::from_str(line).map_err(|e| parse_error(e.to_string()))?;
        record.layout.to_layout().map_err(|e| parse_error(e.to_string()))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    Ok(out)
}

/// Reads and evaluates a dataset file.
pub fn run_benchmark(path: &Path, config: &BenchmarkConfig, vocab: &Vocabulary) -> Result<MetricsReport, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Io { path: path.display().to_string(), message: e.to_string() })?;
    run_benchmark_records(&parse_dataset(&text)?, config, vocab)
}

/// Evaluates parsed records. Every metric is computed per record and
/// reduced with order-independent sums.
pub fn run_benchmark_records(records: &[DatasetRecord], config: &BenchmarkConfig, vocab: &Vocabulary) -> Result<MetricsReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let threshold = config.iou_threshold;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(EvalError::InvalidThreshold(threshold.to_string()));
    }
    let mut bench = Vec::with_capacity(records.len());
    let mut layouts: Vec<Layout> = Vec::with_capacity(records.len());
    let mut per_record = Vec::with_capacity(records.len());
    let mut lengths = Vec::with_capacity(records.len());
    let mut detection: Option<MatchCounts> = None;

    for (index, r) in records.iter().enumerate() {
        let parse_error = |message: String| EvalError::DatasetParseError { line: index + 1, message };
        let layout = r.layout.to_layout().map_err(|e| parse_error(e.to_string()))?;
        let predicted = predicted_keywords(&layout);
        let (keywords, exact) = keyword_counts(&predicted, &r.gt_keywords, config.case_sensitive);
        let opts = EncodeOptions { level: config.level, variant: r.layout.repr };
        let length = composed_length(&r.layout.prompt, &layout, vocab, opts)
            .map_err(|source| EvalError::Tokenize { record: index, source })?;
        let det = match &r.gt_boxes {
            Some(gt) => {
                let gt: Vec<BoxLtrb> = gt.iter().map(|b| BoxLtrb::new(b[0], b[1], b[2], b[3])).collect();
                let pred: Vec<BoxLtrb> = layout.lines.iter().map(|l| l.bbox.bounding_box()).collect();
                let m = detection_match_metrics::<f64>(&pred, &gt, threshold)?;
                detection = Some(detection.unwrap_or_default() + m.counts);
                Some(m.counts)
            }
            None => None,
        };
        per_record.push(RecordDiagnostics {
            index,
            prompt: r.layout.prompt.clone(),
            predicted,
            keywords,
            exact,
            max_iou: max_pairwise_iou::<f64>(&layout),
            detection: det,
            composed_length: length,
        });
        lengths.push(length);
        bench.push(BenchmarkRecord { prompt: r.layout.prompt.clone(), gt_keywords: r.gt_keywords.clone(), pred_layout: layout.clone() });
        layouts.push(layout);
    }

    Ok(MetricsReport {
        records: records.len(),
        averaging: "micro".into(),
        case_sensitive: config.case_sensitive,
        iou_threshold: threshold,
        keyword: keyword_metrics::<f64>(&bench, config.case_sensitive)?,
        overlap_iou: overlap_metric::<f64>(&layouts),
        overlap_samples: layouts.iter().filter(|l| l.len() >= 2).count(),
        detection: detection.map(DetectionMetrics::from_counts),
        length_coverage: coverage_of_lengths(&lengths, &config.lengths)?,
        per_record,
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let case = if self.case_sensitive { "case-sensitive" } else { "case-insensitive" };
        writeln!(f, "records: {} ({} averaging, {case} keyword matching)", self.records, self.averaging)?;
        let k = &self.keyword;
        writeln!(
            f,
            "keywords: accuracy {:.4}  precision {:.4}  recall {:.4}  f-measure {:.4}",
            k.accuracy, k.precision, k.recall, k.f_measure
        )?;
        match self.overlap_iou {
            Some(v) => writeln!(f, "overlap IoU: {v:.4} over {} layout(s) with 2+ lines", self.overlap_samples)?,
            None => writeln!(f, "overlap IoU: n/a (no layout with 2+ lines)")?,
        }
        match &self.detection {
            Some(d) => writeln!(
                f,
                "detection @ IoU {}: precision {:.4}  recall {:.4}  f-measure {:.4}",
                self.iou_threshold, d.precision, d.recall, d.f_measure
            )?,
            None => writeln!(f, "detection: n/a (no reference boxes)")?,
        }
        let cdf: Vec<String> = self.length_coverage.iter().map(|c| format!("L={}: {:.4}", c.max_len, c.coverage)).collect();
        write!(f, "length coverage: {}", cdf.join("  "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"prompt":"a sign","lines":[{"text":"STOP","box":[10,20,60,35]}],"gt_keywords":["stop"],"gt_boxes":[[10,20,60,35]]}
{"prompt":"two words","lines":[{"text":"A","box":[0,0,10,10]},{"text":"B","box":[5,5,15,15]}],"gt_keywords":["A","C"]}

{"prompt":"nothing","lines":[],"gt_keywords":["X"],"gt_boxes":[[0,0,4,4]]}
"#;

    #[test]
    fn hand_computed_fixture() {
        let records = parse_dataset(FIXTURE).unwrap();
        let report = run_benchmark_records(&records, &BenchmarkConfig::default(), &Vocabulary::default_with(false)).unwrap();
        // matched 1 + 1 + 0 of predicted 1 + 2 + 0 and reference 1 + 2 + 1.
        assert_eq!(report.records, 3);
        assert!((report.keyword.accuracy - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.keyword.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.keyword.recall - 2.0 / 4.0).abs() < 1e-12);
        assert!((report.keyword.f_measure - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(report.overlap_samples, 1);
        assert!((report.overlap_iou.unwrap() - 1.0 / 7.0).abs() < 1e-12);
        let det = report.detection.unwrap();
        assert_eq!(det.counts, MatchCounts { matched: 1, predicted: 1, ground_truth: 2 });
        assert_eq!(report.length_coverage.len(), 3);
        let text = report.to_string();
        assert!(text.contains("micro averaging"));
    }

    #[test]
    fn dataset_errors() {
        assert_eq!(parse_dataset(""), Err(EvalError::EmptyDataset));
        let bad = "{\"prompt\":\"a\",\"lines\":[],\"gt_keywords\":[]}\n{not json}\n";
        assert!(matches!(parse_dataset(bad), Err(EvalError::DatasetParseError { line: 2, .. })));
        let arity = "{\"prompt\":\"a\",\"lines\":[{\"text\":\"A\",\"box\":[1,2,3]}],\"gt_keywords\":[]}";
        assert!(matches!(parse_dataset(arity), Err(EvalError::DatasetParseError { line: 1, .. })));
    }
}
