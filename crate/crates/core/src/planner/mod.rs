//! Layout planning: a deterministic heuristic and a remote-model backend.

pub mod backend;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    plan_via_backend, BackendConfig, BackendPlan, BackendPlanner, ChatMessage, ChatRequest, ChatResponse, ChatTransport,
    Exchange, TransportError,
};

use crate::layout::{canonicalize_content, is_alphabet_symbol, BoxLtrb, Canvas, Layout, TextLine};

/// Smallest vertical pitch a row may take; bounds the row count.
pub const MIN_ROW_PITCH: i32 = 6;
/// Minimum vertical gap between rows.
pub const MIN_ROW_GAP: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
}

impl PlanRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self { prompt: prompt.into(), keywords: None, seed: 0 }
    }

    pub fn with_keywords(mut self, keywords: Vec<String>) -> Self {
        self.keywords = Some(keywords);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.prompt.trim().is_empty() {
            return Err(PlanError::InvalidRequest("prompt is empty".into()));
        }
        if let Some(k) = &self.keywords {
            if let Some(i) = k.iter().position(|k| k.trim().is_empty()) {
                return Err(PlanError::InvalidRequest(format!("keyword {i} is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("invalid plan request: {0}")]
    InvalidRequest(String),
    #[error("keyword {index} contains symbol {symbol:?} outside the alphabet")]
    InvalidKeyword { index: usize, symbol: char },
    #[error("{rows} rows do not fit on a canvas of side {side} (at most {capacity})")]
    LayoutInfeasible { rows: usize, side: i32, capacity: usize },
    #[error("planner backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("planner backend returned malformed output after {attempts} attempt(s): {last_error}")]
    BackendMalformed { attempts: u32, last_error: String },
    #[error("planner backend timed out")]
    Timeout,
}

/// Anything that turns a request into a layout.
pub trait LayoutPlanner: Send + Sync {
    fn plan(&self, request: &PlanRequest, canvas: Canvas) -> Result<PlanOutcome, PlanError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOutcome {
    pub layout: Layout,
    pub warnings: Vec<String>,
    pub transcript: Vec<Exchange>,
}

impl From<Layout> for PlanOutcome {
    fn from(layout: Layout) -> Self {
        Self { layout, warnings: Vec::new(), transcript: Vec::new() }
    }
}

const OPEN_CLOSE_QUOTES: [(char, char); 4] = [('"', '"'), ('\'', '\''), ('\u{201C}', '\u{201D}'), ('\u{2018}', '\u{2019}')];

fn quoted_spans(prompt: &str) -> Vec<String> {
    let chars: Vec<char> = prompt.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let opening = OPEN_CLOSE_QUOTES.iter().find(|(o, _)| *o == chars[i]);
        // An apostrophe inside a word (don't) does not open a quote.
        let word_internal = i > 0 && chars[i - 1].is_alphanumeric();
        if let (Some(&(_, close)), false) = (opening, word_internal) {
            let end = (i + 1..chars.len())
                .find(|&j| chars[j] == close && chars.get(j + 1).is_none_or(|c| !c.is_alphanumeric()));
            if let Some(end) = end {
                let span: String = chars[i + 1..end].iter().collect();
                let span = span.trim();
                if !span.is_empty() {
                    spans.push(span.to_string());
                }
                i = end + 1;
                continue;
            }
        }
        i += 1;
    }
    spans
}

fn is_caps_word(word: &str) -> bool {
    word.chars().count() >= 2
        && word.chars().any(|c| c.is_uppercase())
        && !word.chars().any(|c| c.is_lowercase())
}

fn caps_runs(prompt: &str) -> Vec<String> {
    let mut runs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for raw in prompt.split_whitespace() {
        let word = raw.trim_matches(|c: char| c.is_ascii_punctuation());
        if is_caps_word(word) {
            current.push(word);
        } else if !current.is_empty() {
            runs.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        runs.push(current.join(" "));
    }
    runs
}

/// Guesses the text to render from a prompt: quoted spans if any, else runs
/// of all-caps words, else nothing.
pub fn extract_keywords(prompt: &str) -> Vec<String> {
    let quoted = quoted_spans(prompt);
    if !quoted.is_empty() {
        return quoted;
    }
    caps_runs(prompt)
}

/// Rows a canvas can hold.
pub fn row_capacity(canvas: Canvas) -> usize {
    (canvas.side() / MIN_ROW_PITCH) as usize
}

/// Row height used when `rows` rows share the canvas.
pub fn row_height(canvas: Canvas, rows: usize) -> i32 {
    (canvas.side() / (2 * rows.max(2) as i32)).max(1)
}

/// Width of a row holding `chars` symbols at height `height`, with the
/// parity chosen so the row centers exactly.
pub fn row_width(canvas: Canvas, chars: usize, height: i32) -> i32 {
    let side = canvas.side();
    let cap = (side * 9 / 10).max(1);
    let natural = ((chars as i64 * height as i64 * 3 + 4) / 5).max(height as i64).max(1);
    let mut width = natural.min(cap as i64) as i32;
    if (side - width) % 2 != 0 {
        width = if width > 1 { width - 1 } else { width + 1 };
    }
    width.min(side)
}

/// Centered row box at vertical offset `top`.
pub fn centered_row(canvas: Canvas, content: &str, top: i32, height: i32) -> BoxLtrb {
    let width = row_width(canvas, content.chars().count(), height);
    let left = (canvas.side() - width) / 2;
    BoxLtrb::new(left, top, left + width, top + height)
}

fn clean_keywords(request: &PlanRequest) -> Result<Vec<String>, PlanError> {
    match &request.keywords {
        Some(keywords) => keywords
            .iter()
            .enumerate()
            .map(|(index, k)| {
                let k = canonicalize_content(k);
                match k.chars().find(|c| !is_alphabet_symbol(*c)) {
                    Some(symbol) => Err(PlanError::InvalidKeyword { index, symbol }),
                    None => Ok(k.to_string()),
                }
            })
            .collect(),
        None => Ok(extract_keywords(&request.prompt)
            .into_iter()
            .map(|k| k.chars().filter(|c| is_alphabet_symbol(*c)).collect::<String>().trim().to_string())
            .filter(|k| !k.is_empty())
            .collect()),
    }
}

/// Stacks one centered row per keyword.
///
/// Row height is `side / (2 * max(rows, 2))`, rows are separated by at least
/// [`MIN_ROW_GAP`], and the block is vertically centered with a
/// seed-dependent jitter. The result is non-overlapping and valid.
pub fn plan_layout(request: &PlanRequest, canvas: Canvas) -> Result<Layout, PlanError> {
    request.validate()?;
    let keywords = clean_keywords(request)?;
    let rows = keywords.len();
    if rows == 0 {
        return Ok(Layout::empty(canvas));
    }
    let capacity = row_capacity(canvas);
    if rows > capacity {
        return Err(PlanError::LayoutInfeasible { rows, side: canvas.side(), capacity });
    }
    let side = canvas.side();
    let height = row_height(canvas, rows);
    let remaining = side - rows as i32 * height;
    let gap = if rows > 1 { (remaining / (rows as i32 + 1)).min(height).max(MIN_ROW_GAP) } else { 0 };
    let block = rows as i32 * height + (rows as i32 - 1) * gap;
    let slack = (side - block).max(0);
    let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
    let jitter = slack / 4;
    let top0 = (slack / 2 + rng.random_range(-jitter..=jitter)).clamp(0, slack);

    let lines = keywords
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            let top = top0 + i as i32 * (height + gap);
            let bbox = centered_row(canvas, &k, top, height);
            TextLine::new(k, bbox)
        })
        .collect();
    Ok(Layout::new(lines, canvas))
}

/// [`plan_layout`] as a [`LayoutPlanner`].
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPlanner;

impl LayoutPlanner for HeuristicPlanner {
    fn plan(&self, request: &PlanRequest, canvas: Canvas) -> Result<PlanOutcome, PlanError> {
        plan_layout(request, canvas).map(PlanOutcome::from)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::layout::{max_pairwise_iou, validate_layout};

    fn kw(words: &[&str]) -> PlanRequest {
        PlanRequest::new("a poster").with_keywords(words.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn extraction_rules() {
        assert_eq!(extract_keywords("a poster of \"WILD LIFE\""), vec!["WILD LIFE"]);
        assert_eq!(extract_keywords("a sign that says STOP NOW"), vec!["STOP NOW"]);
        assert!(extract_keywords("a photo of a cat").is_empty());
        assert_eq!(extract_keywords("a mug with 'Coffee' and \"Tea\""), vec!["Coffee", "Tea"]);
        assert_eq!(extract_keywords("don't say 'HI' now"), vec!["HI"]);
        assert_eq!(extract_keywords("A cat says HELLO, and BYE BYE."), vec!["HELLO", "BYE BYE"]);
        assert_eq!(extract_keywords("\"A\" and \"A\""), vec!["A", "A"]);
        assert_eq!(extract_keywords("a book titled \u{201C}Deep Sea\u{201D}"), vec!["Deep Sea"]);
    }

    #[test]
    fn single_keyword_is_centered() {
        let layout = plan_layout(&kw(&["HELLO"]), Canvas::default()).unwrap();
        assert_eq!(layout.len(), 1);
        let b = layout.lines[0].bbox.bounding_box();
        assert_eq!(b.left, 128 - b.right);
        assert!(validate_layout(&layout).is_ok());
    }

    #[test]
    fn row_width_rule() {
        let c = Canvas::default();
        // ceil(4 * 32 * 3 / 5) = 77, trimmed to 76 so the margins are equal.
        assert_eq!(row_width(c, 4, 32), 76);
        assert_eq!(row_width(c, 1, 32), 32);
        assert_eq!(row_width(c, 40, 32), 114);
        assert_eq!(centered_row(c, "WILD", 48, 32), BoxLtrb::new(26, 48, 102, 80));
    }

    #[test]
    fn no_keywords_is_empty() {
        assert!(plan_layout(&kw(&[]), Canvas::default()).unwrap().is_empty());
        assert!(plan_layout(&PlanRequest::new("a photo of a cat"), Canvas::default()).unwrap().is_empty());
    }

    #[test]
    fn capacity_rule() {
        let thirty: Vec<String> = (0..30).map(|i| ((b'a' + (i % 26) as u8) as char).to_string()).collect();
        let req = PlanRequest::new("p").with_keywords(thirty);
        assert_eq!(
            plan_layout(&req, Canvas::default()),
            Err(PlanError::LayoutInfeasible { rows: 30, side: 128, capacity: 21 })
        );
        let twenty_one: Vec<String> = (0..21).map(|i| format!("k{i}")).collect();
        let layout = plan_layout(&PlanRequest::new("p").with_keywords(twenty_one), Canvas::default()).unwrap();
        assert_eq!(layout.len(), 21);
        assert_eq!(max_pairwise_iou::<f64>(&layout), Some(0.0));
        assert!(validate_layout(&layout).is_ok());
    }

    #[test]
    fn invalid_requests() {
        assert!(matches!(plan_layout(&PlanRequest::new("  "), Canvas::default()), Err(PlanError::InvalidRequest(_))));
        assert!(matches!(plan_layout(&kw(&["ok", ""]), Canvas::default()), Err(PlanError::InvalidRequest(_))));
        assert_eq!(
            plan_layout(&kw(&["caf\u{e9}"]), Canvas::default()),
            Err(PlanError::InvalidKeyword { index: 0, symbol: '\u{e9}' })
        );
    }

    #[test]
    fn case_preserved() {
        let layout = plan_layout(&kw(&["hello World"]), Canvas::default()).unwrap();
        assert_eq!(layout.lines[0].content, "hello World");
    }

    proptest! {
        #[test]
        fn plans_are_valid_and_disjoint(
            words in prop::collection::vec("[ -~]{1,30}", 0..24),
            seed in any::<u64>(),
            side in 1i64..400,
        ) {
            let canvas = Canvas::new(side).unwrap();
            let words: Vec<String> = words.into_iter().filter(|w| !w.trim().is_empty()).collect();
            let req = PlanRequest::new("prompt").with_keywords(words.clone()).with_seed(seed);
            match plan_layout(&req, canvas) {
                Ok(layout) => {
                    prop_assert_eq!(layout.len(), words.len());
                    prop_assert!(validate_layout(&layout).is_ok(), "{:?}", validate_layout(&layout));
                    prop_assert!(layout.lines.iter().all(|l| !l.bbox.bounding_box().is_degenerate()));
                    let iou = max_pairwise_iou::<f64>(&layout);
                    prop_assert!(iou.is_none() || iou == Some(0.0));
                    prop_assert_eq!(plan_layout(&req, canvas).unwrap(), layout);
                }
                Err(PlanError::LayoutInfeasible { rows, capacity, .. }) => prop_assert!(rows > capacity),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}
