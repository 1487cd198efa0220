//! The line-delimited JSON layout record shared by every tool.
//!
//! ```json
//! {"prompt": "a sign", "lines": [{"text": "STOP", "box": [10, 20, 60, 35]}], "repr": "ltrb", "canvas": 128}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{convert_box, ReprVariant};
use crate::layout::{Canvas, Layout, TextLine, DEFAULT_CANVAS_SIDE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRecord {
    pub text: String,
    #[serde(rename = "box")]
    pub coords: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRecord {
    #[serde(default)]
    pub prompt: String,
    pub lines: Vec<LineRecord>,
    #[serde(default)]
    pub repr: ReprVariant,
    #[serde(default = "default_canvas")]
    pub canvas: i64,
}

fn default_canvas() -> i64 {
    DEFAULT_CANVAS_SIDE as i64
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("line {line}: expected {expected} box values for {repr}, found {found}")]
    Arity { line: usize, repr: ReprVariant, expected: usize, found: usize },
    #[error("line {line}: cannot express box as {repr}")]
    Inconvertible { line: usize, repr: ReprVariant },
    #[error("invalid canvas side {0}")]
    Canvas(i64),
}

impl LayoutRecord {
    /// Record for `layout`, with every box expressed in `repr`.
    pub fn from_layout(prompt: impl Into<String>, layout: &Layout, repr: ReprVariant) -> Result<Self, RecordError> {
        let lines = layout
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let bbox = convert_box(&l.bbox, repr).ok_or(RecordError::Inconvertible { line: i, repr })?;
                Ok(LineRecord { text: l.content.clone(), coords: bbox.coordinates() })
            })
            .collect::<Result<_, RecordError>>()?;
        Ok(Self { prompt: prompt.into(), lines, repr, canvas: layout.canvas.side() as i64 })
    }

    /// The layout described by this record. Structural checks only; use
    /// [`crate::layout::validate_layout`] for invariants.
    pub fn to_layout(&self) -> Result<Layout, RecordError> {
        let canvas = Canvas::new(self.canvas).map_err(|_| RecordError::Canvas(self.canvas))?;
        let lines = self
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let bbox = self.repr.make_box(&l.coords).ok_or(RecordError::Arity {
                    line: i,
                    repr: self.repr,
                    expected: self.repr.arity(),
                    found: l.coords.len(),
                })?;
                Ok(TextLine { content: l.text.clone(), bbox })
            })
            .collect::<Result<_, RecordError>>()?;
        Ok(Layout::new(lines, canvas))
    }
}
