//! The line-oriented layout language spoken with planner models.
//!
//! Each text line serializes as its content, one space, then a
//! comma-separated coordinate group:
//!
//! ```text
//! WILD 10,20,60,35
//! SALE 50 5,5,100,30
//! ```
//!
//! The group is anchored at the end of the line, so content may contain
//! spaces and digits. Its arity depends on the [`ReprVariant`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{
    canonicalize_content, is_alphabet_symbol, BoxLtrb, BoxRepr, Canvas, Layout, Point, TextLine, ANGLE_RANGE,
};

/// Fixed task description placed before every planner prompt.
pub const TASK_DESCRIPTION: &str = include_str!("../resources/task_description.v1.txt");

/// Version tag of [`TASK_DESCRIPTION`] and of the line format.
pub const FORMAT_VERSION: &str = "layout-text/v1";

/// Box representation used when serializing or tokenizing a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprVariant {
    #[default]
    Ltrb,
    Center,
    #[serde(rename = "lt")]
    TopLeft,
    LtrbAngle,
    Quad,
}

impl ReprVariant {
    pub const ALL: [ReprVariant; 5] =
        [ReprVariant::Ltrb, ReprVariant::Center, ReprVariant::TopLeft, ReprVariant::LtrbAngle, ReprVariant::Quad];

    /// Number of integers in one coordinate group.
    pub fn arity(self) -> usize {
        match self {
            ReprVariant::Ltrb => 4,
            ReprVariant::Center | ReprVariant::TopLeft => 2,
            ReprVariant::LtrbAngle => 5,
            ReprVariant::Quad => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReprVariant::Ltrb => "ltrb",
            ReprVariant::Center => "center",
            ReprVariant::TopLeft => "lt",
            ReprVariant::LtrbAngle => "ltrb_angle",
            ReprVariant::Quad => "quad",
        }
    }

    pub fn of(bbox: &BoxRepr) -> ReprVariant {
        match bbox {
            BoxRepr::Ltrb(_) => ReprVariant::Ltrb,
            BoxRepr::Center { .. } => ReprVariant::Center,
            BoxRepr::TopLeft { .. } => ReprVariant::TopLeft,
            BoxRepr::LtrbAngle { .. } => ReprVariant::LtrbAngle,
            BoxRepr::Quad(_) => ReprVariant::Quad,
        }
    }

    /// Builds a box from exactly [`arity`](Self::arity) values.
    pub fn make_box(self, v: &[i32]) -> Option<BoxRepr> {
        if v.len() != self.arity() {
            return None;
        }
        Some(match self {
            ReprVariant::Ltrb => BoxRepr::Ltrb(BoxLtrb::new(v[0], v[1], v[2], v[3])),
            ReprVariant::Center => BoxRepr::Center { x: v[0], y: v[1] },
            ReprVariant::TopLeft => BoxRepr::TopLeft { x: v[0], y: v[1] },
            ReprVariant::LtrbAngle => BoxRepr::LtrbAngle { bbox: BoxLtrb::new(v[0], v[1], v[2], v[3]), angle: v[4] },
            ReprVariant::Quad => BoxRepr::Quad([
                Point::new(v[0], v[1]),
                Point::new(v[2], v[3]),
                Point::new(v[4], v[5]),
                Point::new(v[6], v[7]),
            ]),
        })
    }

    /// Indices in the coordinate group that hold y values (the rest are x,
    /// except the angle slot).
    pub fn is_y_slot(self, index: usize) -> bool {
        !(self == ReprVariant::LtrbAngle && index == 4) && index % 2 == 1
    }

    pub fn is_angle_slot(self, index: usize) -> bool {
        self == ReprVariant::LtrbAngle && index == 4
    }
}

impl fmt::Display for ReprVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReprVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReprVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown representation {s:?}; expected one of ltrb, center, lt, ltrb_angle, quad"))
    }
}

/// Converts `bbox` into `variant`. Boxes convert to their own variant, and
/// LTRB boxes (or angle-0 / axis-aligned shapes) convert to every variant.
pub fn convert_box(bbox: &BoxRepr, variant: ReprVariant) -> Option<BoxRepr> {
    if ReprVariant::of(bbox) == variant {
        return Some(*bbox);
    }
    let rect = match *bbox {
        BoxRepr::Ltrb(b) => b,
        BoxRepr::LtrbAngle { bbox, angle: 0 } => bbox,
        BoxRepr::Quad(pts) => {
            let r = bbox.bounding_box();
            let expected = [
                Point::new(r.left, r.top),
                Point::new(r.right, r.top),
                Point::new(r.right, r.bottom),
                Point::new(r.left, r.bottom),
            ];
            if pts != expected {
                return None;
            }
            r
        }
        _ => return None,
    };
    let half_up = |a: i32, b: i32| ((a as i64 + b as i64 + 1).div_euclid(2)) as i32;
    Some(match variant {
        ReprVariant::Ltrb => BoxRepr::Ltrb(rect),
        ReprVariant::Center => BoxRepr::Center { x: half_up(rect.left, rect.right), y: half_up(rect.top, rect.bottom) },
        ReprVariant::TopLeft => BoxRepr::TopLeft { x: rect.left, y: rect.top },
        ReprVariant::LtrbAngle => BoxRepr::LtrbAngle { bbox: rect, angle: 0 },
        ReprVariant::Quad => BoxRepr::Quad([
            Point::new(rect.left, rect.top),
            Point::new(rect.right, rect.top),
            Point::new(rect.right, rect.bottom),
            Point::new(rect.left, rect.bottom),
        ]),
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SerializeError {
    #[error("line {0}: content is empty")]
    EmptyContent(usize),
    #[error("line {0}: content contains a newline")]
    MultilineContent(usize),
    #[error("line {line}: cannot express a {from} box as {to}")]
    Inconvertible { line: usize, from: ReprVariant, to: ReprVariant },
}

/// Serializes `layout` one line per text line, without a trailing newline.
pub fn serialize_layout(layout: &Layout, variant: ReprVariant) -> Result<String, SerializeError> {
    let mut out = String::new();
    for (i, line) in layout.lines.iter().enumerate() {
        let content = canonicalize_content(&line.content);
        if content.is_empty() {
            return Err(SerializeError::EmptyContent(i));
        }
        if content.contains(['\n', '\r']) {
            return Err(SerializeError::MultilineContent(i));
        }
        let bbox = convert_box(&line.bbox, variant).ok_or(SerializeError::Inconvertible {
            line: i,
            from: ReprVariant::of(&line.bbox),
            to: variant,
        })?;
        if i > 0 {
            out.push('\n');
        }
        out.push_str(content);
        out.push(' ');
        let coords: Vec<String> = bbox.coordinates().iter().map(i32::to_string).collect();
        out.push_str(&coords.join(","));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Unparseable lines become warnings and are skipped.
    #[default]
    Lenient,
    /// The first unparseable line aborts with an error.
    Strict,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed line {index}: {reason}")]
    MalformedLine { index: usize, reason: String },
    #[error("line {index}: angle {angle} outside [-90, 90]")]
    AngleOutOfRange { index: usize, angle: i64 },
}

/// Non-fatal findings from [`parse_layout`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub index: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.index, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLayout {
    pub layout: Layout,
    pub warnings: Vec<ParseWarning>,
}

/// Finds the maximal trailing run of comma-joined integers in `line`.
/// Returns the content prefix and the integers. With `spaced`, whitespace
/// is tolerated after each comma.
fn split_trailing_group(line: &str, spaced: bool) -> Option<(&str, Vec<i64>)> {
    let bytes = line.as_bytes();
    let mut end = bytes.len();
    let mut group_start = end;
    let mut values = Vec::new();
    loop {
        let mut start = end;
        while start > 0 && bytes[start - 1].is_ascii_digit() {
            start -= 1;
        }
        if start == end {
            break;
        }
        if start > 0 && matches!(bytes[start - 1], b'-' | b'+') && (start == 1 || !bytes[start - 2].is_ascii_alphanumeric()) {
            start -= 1;
        }
        // Overflowing integers make the group unusable.
        let value: i64 = line[start..end].parse().ok()?;
        values.push(value);
        group_start = start;
        let mut sep = start;
        if spaced {
            while sep > 0 && matches!(bytes[sep - 1], b' ' | b'\t') {
                sep -= 1;
            }
        }
        if sep > 0 && bytes[sep - 1] == b',' {
            end = sep - 1;
            continue;
        }
        break;
    }
    if values.is_empty() {
        return None;
    }
    values.reverse();
    Some((&line[..group_start], values))
}

fn parse_line(
    raw: &str,
    index: usize,
    variant: ReprVariant,
    canvas: Canvas,
    spaced: bool,
    warnings: &mut Vec<ParseWarning>,
) -> Result<TextLine, ParseError> {
    let line = raw.trim();
    let malformed = |reason: String| ParseError::MalformedLine { index, reason };
    let n = variant.arity();
    let (prefix, values) =
        split_trailing_group(line, spaced).ok_or_else(|| malformed("no trailing coordinate group".into()))?;
    if values.len() != n {
        return Err(malformed(format!("expected {n} coordinates, found {}", values.len())));
    }
    if !prefix.is_empty() && !prefix.ends_with([' ', '\t']) {
        return Err(malformed("coordinate group must be preceded by whitespace".into()));
    }
    let content = canonicalize_content(prefix);
    if content.is_empty() {
        return Err(malformed("empty content".into()));
    }
    if let Some(c) = content.chars().find(|c| !is_alphabet_symbol(*c)) {
        return Err(malformed(format!("symbol {c:?} outside the alphabet")));
    }
    let side = canvas.side() as i64;
    let mut coords = Vec::with_capacity(n);
    for (slot, &v) in values.iter().enumerate() {
        if variant.is_angle_slot(slot) {
            if !(*ANGLE_RANGE.start() as i64..=*ANGLE_RANGE.end() as i64).contains(&v) {
                return Err(ParseError::AngleOutOfRange { index, angle: v });
            }
            coords.push(v as i32);
        } else {
            let clamped = v.clamp(0, side);
            if clamped != v {
                warnings.push(ParseWarning { index, message: format!("coordinate {v} clamped to {clamped}") });
            }
            coords.push(clamped as i32);
        }
    }
    let mut bbox = variant.make_box(&coords).expect("arity checked");
    // Reversed corners are reordered rather than rejected.
    let fix = |b: BoxLtrb| BoxLtrb::new(b.left.min(b.right), b.top.min(b.bottom), b.left.max(b.right), b.top.max(b.bottom));
    match &mut bbox {
        BoxRepr::Ltrb(b) | BoxRepr::LtrbAngle { bbox: b, .. } => {
            if *b != fix(*b) {
                warnings.push(ParseWarning { index, message: "box corners reordered".into() });
                *b = fix(*b);
            }
        }
        BoxRepr::Quad(pts) if crate::layout::quad_signed_area2(pts) < 0 => {
            warnings.push(ParseWarning { index, message: "quad vertices reordered clockwise".into() });
            pts.swap(1, 3);
        }
        _ => {}
    }
    Ok(TextLine { content: content.to_string(), bbox })
}

/// Parses model output in the line format.
///
/// Blank lines and markdown fences are skipped. Out-of-range coordinates
/// are clamped into the canvas and reported as warnings. In lenient mode a
/// line that fails to parse becomes a warning; in strict mode it is an
/// error. Line indices count every input line, starting at zero.
pub fn parse_layout(text: &str, variant: ReprVariant, canvas: Canvas, mode: ParseMode) -> Result<ParsedLayout, ParseError> {
    let mut lines = Vec::new();
    let mut warnings = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with("```") {
            continue;
        }
        let mut line_warnings = Vec::new();
        let mut result = parse_line(raw, index, variant, canvas, false, &mut line_warnings);
        if result.is_err() && mode == ParseMode::Lenient {
            let mut spaced_warnings = Vec::new();
            if let Ok(line) = parse_line(raw, index, variant, canvas, true, &mut spaced_warnings) {
                line_warnings = spaced_warnings;
                result = Ok(line);
            }
        }
        match result {
            Ok(line) => {
                warnings.extend(line_warnings);
                lines.push(line);
            }
            Err(e) if mode == ParseMode::Lenient => warnings.push(ParseWarning { index, message: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    Ok(ParsedLayout { layout: Layout::new(lines, canvas), warnings })
}

/// Planner input: task description, user prompt and optional keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerPrompt {
    pub description: String,
    pub prompt: String,
    pub keywords: Option<Vec<String>>,
}

impl PlannerPrompt {
    pub fn new(prompt: impl Into<String>, keywords: Option<Vec<String>>) -> Self {
        Self { description: TASK_DESCRIPTION.to_string(), prompt: prompt.into(), keywords }
    }

    /// The part after the description: `Prompt: ...[ Keywords: ...]`.
    pub fn body(&self) -> String {
        let mut out = format!("Prompt: {}", self.prompt);
        if let Some(keywords) = &self.keywords {
            out.push_str(" Keywords: ");
            out.push_str(&keywords.join(", "));
        }
        out
    }
}

/// `<description> Prompt: <prompt>[ Keywords: <k1, k2, ...>]`
pub fn build_planner_prompt(request: &PlannerPrompt) -> String {
    format!("{} {}", request.description, request.body())
}
