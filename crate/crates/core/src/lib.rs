//! Language-model-facing machinery for two-stage text rendering.
//!
//! The crate covers the whole layout side of the pipeline:
//!
//! - [`layout`]: the canonical layout model on a square grid canvas, box
//!   normalization and IoU.
//! - [`grammar`]: the `content l,t,r,b` line format exchanged with planner
//!   models and the planner prompt template.
//! - [`tokenizer`]: hybrid-granularity encoding of a prompt plus a layout
//!   into a fixed-length id sequence (subword prompt, character keywords,
//!   coordinate tokens, `<eos>`/`<pad>`).
//! - [`planner`]: a deterministic heuristic planner and a remote chat-model
//!   backend speaking the line format.
//! - [`session`]: multi-round layout editing with history and undo.
//! - [`eval`]: keyword, overlap, detection and length-coverage metrics.
//! - [`dataprep`]: caption + OCR annotations to instruction-tuning pairs.
//!
//! Metric kernels are generic over [`Scalar`] so the same code runs in
//! `f32`, `f64` or exact rational arithmetic.

pub mod dataprep;
pub mod eval;
pub mod grammar;
pub mod layout;
pub mod num;
pub mod planner;
pub mod record;
pub mod session;
pub mod tokenizer;

pub use grammar::{ParseMode, ReprVariant};
pub use layout::{BoxLtrb, BoxRepr, Canvas, Layout, TextLine};
pub use num::Scalar;

/// Exact rational scalar used by oracle-style checks.
pub type Exact = num_rational::Ratio<i64>;

/// Keyword metrics in double precision.
pub type KeywordMetricsF64 = eval::KeywordMetrics<f64>;
/// Keyword metrics in exact arithmetic.
pub type KeywordMetricsExact = eval::KeywordMetrics<Exact>;
/// Detection metrics in double precision.
pub type DetectionMetricsF64 = eval::DetectionMetrics<f64>;
/// Detection metrics in exact arithmetic.
pub type DetectionMetricsExact = eval::DetectionMetrics<Exact>;
