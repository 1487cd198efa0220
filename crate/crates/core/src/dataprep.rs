//! Caption + OCR annotations to instruction-tuning pairs.
//!
//! Input records:
//!
//! ```json
//! {"caption": "a sale poster", "ocr": [{"text": "SALE", "box": [256, 128, 384, 192]}], "image_side": 512}
//! ```
//!
//! Each sample yields two pairs with the same target: one whose input has
//! no keywords and one listing every OCR text as a keyword.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{build_planner_prompt, serialize_layout, PlannerPrompt, ReprVariant, FORMAT_VERSION};
use crate::layout::{canonicalize_content, is_alphabet_symbol, normalize_box_xy, BoxLtrb, Canvas, Layout, TextLine};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcrLine {
    pub text: String,
    #[serde(rename = "box")]
    pub bbox: [i64; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcrSample {
    pub caption: String,
    pub ocr: Vec<OcrLine>,
    pub image_side: i64,
    /// Overrides `image_side` on the horizontal axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<i64>,
    /// Overrides `image_side` on the vertical axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionPair {
    pub input: String,
    pub target: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DataprepError {
    #[error("sample has no OCR lines")]
    NoOcrLines,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("OCR line {line}: symbol {symbol:?} is outside the alphabet")]
    NonAlphabetText { line: usize, symbol: char },
    #[error("splits need {required} samples but only {available} are usable")]
    InsufficientSamples { required: usize, available: usize },
    #[error("split size {0} requested twice")]
    DuplicateSplit(usize),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> DataprepError {
    DataprepError::Io { path: path.display().to_string(), message: e.to_string() }
}

impl OcrSample {
    pub fn source_size(&self) -> (i64, i64) {
        (self.width.unwrap_or(self.image_side), self.height.unwrap_or(self.image_side))
    }

    /// The sample's layout on `canvas`, in source order.
    pub fn to_layout(&self, canvas: Canvas) -> Result<Layout, DataprepError> {
        let (w, h) = self.source_size();
        if w <= 0 || h <= 0 {
            return Err(DataprepError::InvalidSample(format!("image size {w}x{h} is not positive")));
        }
        let lines = self
            .ocr
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let text = canonicalize_content(&l.text);
                if text.is_empty() {
                    return Err(DataprepError::InvalidSample(format!("OCR line {i} has empty text")));
                }
                if let Some(symbol) = text.chars().find(|c| !is_alphabet_symbol(*c)) {
                    return Err(DataprepError::NonAlphabetText { line: i, symbol });
                }
                let [left, top, right, bottom] = l.bbox;
                let inside = 0 <= left && left <= right && right <= w && 0 <= top && top <= bottom && bottom <= h;
                if !inside {
                    return Err(DataprepError::InvalidSample(format!("OCR line {i} box {:?} is outside {w}x{h}", l.bbox)));
                }
                let pixel = BoxLtrb::new(left as i32, top as i32, right as i32, bottom as i32);
                let bbox = normalize_box_xy(pixel, w, h, canvas).map_err(|e| DataprepError::InvalidSample(e.to_string()))?;
                Ok(TextLine::new(text, bbox))
            })
            .collect::<Result<_, _>>()?;
        Ok(Layout::new(lines, canvas))
    }
}

/// Pair A (no keywords) and pair B (all OCR texts as keywords).
///
/// Samples without OCR lines are rejected unless `keep_empty`, in which
/// case both targets are empty.
pub fn sample_to_pairs(sample: &OcrSample, canvas: Canvas, keep_empty: bool) -> Result<[InstructionPair; 2], DataprepError> {
    if sample.ocr.is_empty() && !keep_empty {
        return Err(DataprepError::NoOcrLines);
    }
    let layout = sample.to_layout(canvas)?;
    let target = serialize_layout(&layout, ReprVariant::Ltrb).map_err(|e| DataprepError::InvalidSample(e.to_string()))?;
    let keywords = layout.lines.iter().map(|l| l.content.clone()).collect();
    let without = build_planner_prompt(&PlannerPrompt::new(sample.caption.clone(), None));
    let with = build_planner_prompt(&PlannerPrompt::new(sample.caption.clone(), Some(keywords)));
    Ok([InstructionPair { input: without, target: target.clone() }, InstructionPair { input: with, target }])
}

/// Reads line-delimited samples. Blank lines are skipped.
pub fn parse_samples(text: &str) -> Result<Vec<OcrSample>, DataprepError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| DataprepError::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn load_samples(path: &Path) -> Result<Vec<OcrSample>, DataprepError> {
    parse_samples(&fs::read_to_string(path).map_err(|e| io_error(path, e))?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportConfig {
    /// Samples per split; each sample contributes two records.
    pub split_sizes: Vec<usize>,
    pub seed: u64,
    /// Draw every split from the full pool (nested prefixes) instead of
    /// disjoint slices.
    pub allow_overlap: bool,
    pub keep_empty: bool,
    pub canvas: Canvas,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self { split_sizes: vec![5000], seed: 0, allow_overlap: false, keep_empty: false, canvas: Canvas::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub samples: usize,
    pub records: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub format_version: String,
    pub seed: u64,
    pub allow_overlap: bool,
    pub canvas: i64,
    pub pool: usize,
    pub rejected: usize,
    pub splits: Vec<SplitManifest>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn split_file_name(size: usize) -> String {
    format!("split_{size}.jsonl")
}

/// Writes one `split_<size>.jsonl` per split plus `manifest.json` into
/// `out_dir`. Samples that fail conversion are skipped and counted.
pub fn export_dataset(samples: &[OcrSample], out_dir: &Path, config: &ExportConfig) -> Result<ExportManifest, DataprepError> {
    for (i, s) in config.split_sizes.iter().enumerate() {
        if config.split_sizes[..i].contains(s) {
            return Err(DataprepError::DuplicateSplit(*s));
        }
    }
    let mut pool: Vec<[InstructionPair; 2]> = samples
        .iter()
        .filter_map(|s| sample_to_pairs(s, config.canvas, config.keep_empty).ok())
        .collect();
    let rejected = samples.len() - pool.len();
    let required = if config.allow_overlap {
        config.split_sizes.iter().copied().max().unwrap_or(0)
    } else {
        config.split_sizes.iter().sum()
    };
    if required > pool.len() {
        return Err(DataprepError::InsufficientSamples { required, available: pool.len() });
    }
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut splits = Vec::new();
    let mut offset = 0;
    for &size in &config.split_sizes {
        let start = if config.allow_overlap { 0 } else { offset };
        offset += size;
        let name = split_file_name(size);
        let path: PathBuf = out_dir.join(&name);
        let mut out = String::new();
        for pair in pool[start..start + size].iter().flatten() {
            out.push_str(&serde_json::to_string(pair).expect("pairs serialize"));
            out.push('\n');
        }
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| io_error(&path, e))?;
        splits.push(SplitManifest { samples: size, records: 2 * size, file: name });
    }
    let manifest = ExportManifest {
        format_version: FORMAT_VERSION.to_string(),
        seed: config.seed,
        allow_overlap: config.allow_overlap,
        canvas: config.canvas.side() as i64,
        pool: pool.len(),
        rejected,
        splits,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
    Ok(manifest)
}
