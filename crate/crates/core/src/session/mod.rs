//! Multi-round layout editing with history and undo.
//!
//! A [`Session`] starts from a planned layout and applies structured
//! [`EditCommand`]s. Every successful command appends one history entry;
//! a failed command leaves the session untouched. `history[0]` is always
//! the initial plan, and the current layout is the last entry's layout.

pub mod command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use command::{parse_command, CommandParseError, SessionCommand, USAGE};

use crate::grammar::{convert_box, ReprVariant};
use crate::layout::{canonicalize_content, is_alphabet_symbol, validate_layout, BoxLtrb, BoxRepr, Canvas, Layout, TextLine};
use crate::planner::{row_height, centered_row, LayoutPlanner, PlanError, PlanRequest, MIN_ROW_GAP};
use crate::record::{LayoutRecord, RecordError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditCommand {
    Regenerate { seed: u64 },
    AddText { content: String, bbox: Option<BoxLtrb> },
    RemoveText { index: usize },
    MoveBox { index: usize, dx: i32, dy: i32 },
    ResizeBox { index: usize, bbox: BoxLtrb },
    SetText { index: usize, content: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("line index {index} out of range for {len} line(s)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("text content is empty")]
    EmptyContent,
    #[error("symbol {0:?} is outside the alphabet")]
    InvalidContent(char),
    #[error("no free row for a new line")]
    NoSpace,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub command: EditCommand,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    id: String,
    request: PlanRequest,
    variant: ReprVariant,
    history: Vec<HistoryEntry>,
}

fn check_content(content: &str) -> Result<String, SessionError> {
    let content = canonicalize_content(content);
    if content.is_empty() {
        return Err(SessionError::EmptyContent);
    }
    if let Some(c) = content.chars().find(|c| !is_alphabet_symbol(*c)) {
        return Err(SessionError::InvalidContent(c));
    }
    Ok(content.to_string())
}

fn check_box(b: &BoxLtrb, canvas: Canvas) -> Result<(), SessionError> {
    let side = canvas.side();
    let in_range = |v: i32| (0..=side).contains(&v);
    if ![b.left, b.top, b.right, b.bottom].into_iter().all(in_range) {
        return Err(SessionError::InvalidBox(format!("{b} leaves the canvas [0, {side}]")));
    }
    if b.left > b.right || b.top > b.bottom {
        return Err(SessionError::InvalidBox(format!("{b} has reversed corners")));
    }
    Ok(())
}

/// Offset that keeps `[lo, hi]` inside `[0, side]` after moving by `delta`,
/// changing `delta` as little as possible.
fn clamped_shift(lo: i32, hi: i32, delta: i32, side: i32) -> i64 {
    let (lo, hi, delta, side) = (lo as i64, hi as i64, delta as i64, side as i64);
    if hi - lo >= side {
        return -lo;
    }
    let mut d = delta;
    if lo + d < 0 {
        d = -lo;
    }
    if hi + d > side {
        d = side - hi;
    }
    d
}

/// Translates `bbox` by `(dx, dy)`, shifting back minimally so it stays on
/// the canvas. A box wider than the canvas is pinned to `[0, side]`.
pub fn move_box(bbox: &BoxRepr, dx: i32, dy: i32, canvas: Canvas) -> BoxRepr {
    let side = canvas.side();
    let r = bbox.bounding_box();
    let sx = clamped_shift(r.left, r.right, dx, side);
    let sy = clamped_shift(r.top, r.bottom, dy, side);
    let moved = bbox.map_coords(|x| (x as i64 + sx) as i32, |y| (y as i64 + sy) as i32);
    if r.right - r.left > side || r.bottom - r.top > side {
        let fit = |v: i32| v.clamp(0, side);
        moved.map_coords(fit, fit)
    } else {
        moved
    }
}

impl Session {
    /// Plans the initial layout and opens a session on it.
    pub fn create(request: PlanRequest, planner: &dyn LayoutPlanner, canvas: Canvas) -> Result<Self, SessionError> {
        let outcome = planner.plan(&request, canvas)?;
        let variant = outcome.layout.lines.first().map(|l| ReprVariant::of(&l.bbox)).unwrap_or_default();
        let seed = request.seed;
        Ok(Self {
            id: uuid::Uuid::new_v4().to_string(),
            request,
            variant,
            history: vec![HistoryEntry { command: EditCommand::Regenerate { seed }, layout: outcome.layout }],
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn request(&self) -> &PlanRequest {
        &self.request
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn current(&self) -> &Layout {
        &self.history.last().expect("history is never empty").layout
    }

    pub fn canvas(&self) -> Canvas {
        self.current().canvas
    }

    /// Seed of the most recent regeneration.
    pub fn current_seed(&self) -> u64 {
        self.history
            .iter()
            .rev()
            .find_map(|h| match h.command {
                EditCommand::Regenerate { seed } => Some(seed),
                _ => None,
            })
            .unwrap_or(self.request.seed)
    }

    fn line_index(&self, index: usize) -> Result<usize, SessionError> {
        let len = self.current().len();
        if index < len {
            Ok(index)
        } else {
            Err(SessionError::IndexOutOfRange { index, len })
        }
    }

    fn to_variant(&self, b: BoxLtrb) -> BoxRepr {
        convert_box(&BoxRepr::Ltrb(b), self.variant).expect("ltrb converts to every variant")
    }

    fn insertion_row(&self, content: &str) -> Result<BoxLtrb, SessionError> {
        let layout = self.current();
        let canvas = layout.canvas;
        let side = canvas.side();
        let height = row_height(canvas, layout.len() + 1);
        let rects: Vec<BoxLtrb> = layout.lines.iter().map(|l| l.bbox.bounding_box()).collect();
        let top = match (rects.iter().map(|r| r.bottom).max(), rects.iter().map(|r| r.top).min()) {
            (None, _) | (_, None) => (side - height) / 2,
            (Some(lowest), Some(highest)) => {
                if lowest + MIN_ROW_GAP + height <= side {
                    lowest + MIN_ROW_GAP
                } else if highest - MIN_ROW_GAP - height >= 0 {
                    highest - MIN_ROW_GAP - height
                } else {
                    return Err(SessionError::NoSpace);
                }
            }
        };
        Ok(centered_row(canvas, content, top, height))
    }

    fn edited_layout(&self, cmd: &EditCommand, planner: &dyn LayoutPlanner) -> Result<(Layout, Vec<String>), SessionError> {
        let mut layout = self.current().clone();
        let canvas = layout.canvas;
        let mut warnings = Vec::new();
        match cmd {
            EditCommand::Regenerate { seed } => {
                let request = self.request.clone().with_seed(*seed);
                let outcome = planner.plan(&request, canvas)?;
                warnings = outcome.warnings;
                layout = outcome.layout;
            }
            EditCommand::AddText { content, bbox } => {
                let content = check_content(content)?;
                let b = match bbox {
                    Some(b) => {
                        check_box(b, canvas)?;
                        *b
                    }
                    None => self.insertion_row(&content)?,
                };
                layout.lines.push(TextLine::new(content, self.to_variant(b)));
            }
            EditCommand::RemoveText { index } => {
                layout.lines.remove(self.line_index(*index)?);
            }
            EditCommand::MoveBox { index, dx, dy } => {
                let i = self.line_index(*index)?;
                layout.lines[i].bbox = move_box(&layout.lines[i].bbox, *dx, *dy, canvas);
            }
            EditCommand::ResizeBox { index, bbox } => {
                let i = self.line_index(*index)?;
                check_box(bbox, canvas)?;
                layout.lines[i].bbox = match layout.lines[i].bbox {
                    BoxRepr::LtrbAngle { angle, .. } => BoxRepr::LtrbAngle { bbox: *bbox, angle },
                    _ => self.to_variant(*bbox),
                };
            }
            EditCommand::SetText { index, content } => {
                let i = self.line_index(*index)?;
                layout.lines[i].content = check_content(content)?;
            }
        }
        let report = validate_layout(&layout);
        if let Some(v) = report.errors().next() {
            return Err(SessionError::InvalidBox(v.to_string()));
        }
        Ok((layout, warnings))
    }

    /// Applies `cmd`. On error the session is unchanged. Returns warnings
    /// from the planner, if any.
    pub fn apply_edit(&mut self, cmd: EditCommand, planner: &dyn LayoutPlanner) -> Result<Vec<String>, SessionError> {
        let (layout, warnings) = self.edited_layout(&cmd, planner)?;
        self.history.push(HistoryEntry { command: cmd, layout });
        Ok(warnings)
    }

    /// Applies a parsed chat-box command, undo included.
    pub fn apply_command(&mut self, cmd: SessionCommand, planner: &dyn LayoutPlanner) -> Result<Vec<String>, SessionError> {
        match cmd {
            SessionCommand::Edit(edit) => self.apply_edit(edit, planner),
            SessionCommand::RegenerateNext => {
                let seed = self.current_seed().wrapping_add(1);
                self.apply_edit(EditCommand::Regenerate { seed }, planner)
            }
            SessionCommand::Undo => self.undo().map(|_| Vec::new()),
        }
    }

    pub fn undo(&mut self) -> Result<&Layout, SessionError> {
        if self.history.len() < 2 {
            return Err(SessionError::NothingToUndo);
        }
        self.history.pop();
        Ok(self.current())
    }

    pub fn to_state(&self) -> Result<SessionState, RecordError> {
        let record = |layout: &Layout| LayoutRecord::from_layout(self.request.prompt.clone(), layout, self.variant);
        let current = record(self.current())?;
        let history = self
            .history
            .iter()
            .map(|h| {
                let r = record(&h.layout)?;
                Ok(HistoryRecord { command: h.command.to_string(), lines: r.lines })
            })
            .collect::<Result<_, RecordError>>()?;
        Ok(SessionState {
            session_id: self.id.clone(),
            prompt: current.prompt,
            keywords: self.request.keywords.clone(),
            seed: self.request.seed,
            lines: current.lines,
            repr: current.repr,
            canvas: current.canvas,
            history,
        })
    }

    pub fn from_state(state: &SessionState) -> Result<Self, String> {
        let request = PlanRequest { prompt: state.prompt.clone(), keywords: state.keywords.clone(), seed: state.seed };
        let history = state
            .history
            .iter()
            .map(|h| {
                let command = match parse_command(&h.command).map_err(|e| e.to_string())? {
                    SessionCommand::Edit(c) => c,
                    other => return Err(format!("history entry is not an edit: {other:?}")),
                };
                let record = LayoutRecord {
                    prompt: state.prompt.clone(),
                    lines: h.lines.clone(),
                    repr: state.repr,
                    canvas: state.canvas,
                };
                let layout = record.to_layout().map_err(|e| e.to_string())?;
                Ok(HistoryEntry { command, layout })
            })
            .collect::<Result<Vec<_>, String>>()?;
        if history.is_empty() {
            return Err("session history is empty".into());
        }
        Ok(Self { id: state.session_id.clone(), request, variant: state.repr, history })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub command: String,
    pub lines: Vec<crate::record::LineRecord>,
}

/// Serialized session: the layout record of the current state plus the
/// request and history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<String>>,
    pub seed: u64,
    pub lines: Vec<crate::record::LineRecord>,
    pub repr: ReprVariant,
    pub canvas: i64,
    pub history: Vec<HistoryRecord>,
}
