//! Layout data model, coordinate normalization and box geometry.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

/// Side of the default grid canvas.
pub const DEFAULT_CANVAS_SIDE: i32 = 128;

/// Number of symbols in the text alphabet (printable ASCII, codes 32..=126).
pub const ALPHABET_SIZE: usize = 95;

/// Inclusive angle range accepted by [`BoxRepr::LtrbAngle`], in degrees.
pub const ANGLE_RANGE: std::ops::RangeInclusive<i32> = -90..=90;

/// Returns true for the 95 printable ASCII symbols, space included.
pub fn is_alphabet_symbol(c: char) -> bool {
    (' '..='~').contains(&c)
}

/// The alphabet in code-point order.
pub fn alphabet() -> impl Iterator<Item = char> {
    ' '..='~'
}

/// Canonical form of line content: surrounding whitespace removed.
pub fn canonicalize_content(content: &str) -> &str {
    content.trim()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("canvas side must be positive, got {0}")]
    InvalidCanvas(i64),
    #[error("source side must be positive, got {0}")]
    InvalidSourceSide(i64),
}

/// Square grid canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Canvas {
    side: i32,
}

impl Canvas {
    pub fn new(side: i64) -> Result<Self, LayoutError> {
        if side <= 0 || side > i32::MAX as i64 {
            return Err(LayoutError::InvalidCanvas(side));
        }
        Ok(Self { side: side as i32 })
    }

    pub fn side(&self) -> i32 {
        self.side
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Self { side: DEFAULT_CANVAS_SIDE }
    }
}

impl TryFrom<i64> for Canvas {
    type Error = LayoutError;

    fn try_from(side: i64) -> Result<Self, Self::Error> {
        Self::new(side)
    }
}

impl From<Canvas> for i64 {
    fn from(canvas: Canvas) -> i64 {
        canvas.side as i64
    }
}

/// Axis-aligned box by its top-left and bottom-right corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxLtrb {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl BoxLtrb {
    pub const fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Self { left, top, right, bottom }
    }

    pub fn width(&self) -> i64 {
        (self.right as i64 - self.left as i64).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.bottom as i64 - self.top as i64).max(0)
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.left == self.right || self.top == self.bottom
    }

    pub fn to_array(self) -> [i32; 4] {
        [self.left, self.top, self.right, self.bottom]
    }

    /// Area shared with `other`, zero when disjoint or touching.
    pub fn intersection_area(&self, other: &BoxLtrb) -> i64 {
        let left = self.left.max(other.left) as i64;
        let top = self.top.max(other.top) as i64;
        let right = self.right.min(other.right) as i64;
        let bottom = self.bottom.min(other.bottom) as i64;
        if right <= left || bottom <= top {
            0
        } else {
            (right - left) * (bottom - top)
        }
    }
}

impl fmt::Display for BoxLtrb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.left, self.top, self.right, self.bottom)
    }
}

/// A vertex of a quadrilateral box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Position of a text line in one of the supported representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxRepr {
    Ltrb(BoxLtrb),
    Center { x: i32, y: i32 },
    TopLeft { x: i32, y: i32 },
    LtrbAngle { bbox: BoxLtrb, angle: i32 },
    /// Vertices from top-left, clockwise.
    Quad([Point; 4]),
}

impl BoxRepr {
    /// Flat coordinate list, in the order used by the text and token formats.
    pub fn coordinates(&self) -> Vec<i32> {
        match *self {
            BoxRepr::Ltrb(b) => b.to_array().to_vec(),
            BoxRepr::Center { x, y } | BoxRepr::TopLeft { x, y } => vec![x, y],
            BoxRepr::LtrbAngle { bbox, angle } => {
                let mut v = bbox.to_array().to_vec();
                v.push(angle);
                v
            }
            BoxRepr::Quad(pts) => pts.iter().flat_map(|p| [p.x, p.y]).collect(),
        }
    }

    /// Axis-aligned bounding rectangle. Point representations map to a
    /// zero-area box at the point.
    pub fn bounding_box(&self) -> BoxLtrb {
        match *self {
            BoxRepr::Ltrb(b) | BoxRepr::LtrbAngle { bbox: b, .. } => b,
            BoxRepr::Center { x, y } | BoxRepr::TopLeft { x, y } => BoxLtrb::new(x, y, x, y),
            BoxRepr::Quad(pts) => {
                let xs = pts.iter().map(|p| p.x);
                let ys = pts.iter().map(|p| p.y);
                BoxLtrb::new(
                    xs.clone().min().unwrap_or(0),
                    ys.clone().min().unwrap_or(0),
                    xs.max().unwrap_or(0),
                    ys.max().unwrap_or(0),
                )
            }
        }
    }

    /// Applies `f` to every x coordinate and `g` to every y coordinate.
    pub fn map_coords(&self, f: impl Fn(i32) -> i32, g: impl Fn(i32) -> i32) -> BoxRepr {
        let map_box = |b: BoxLtrb| BoxLtrb::new(f(b.left), g(b.top), f(b.right), g(b.bottom));
        match *self {
            BoxRepr::Ltrb(b) => BoxRepr::Ltrb(map_box(b)),
            BoxRepr::Center { x, y } => BoxRepr::Center { x: f(x), y: g(y) },
            BoxRepr::TopLeft { x, y } => BoxRepr::TopLeft { x: f(x), y: g(y) },
            BoxRepr::LtrbAngle { bbox, angle } => BoxRepr::LtrbAngle { bbox: map_box(bbox), angle },
            BoxRepr::Quad(pts) => BoxRepr::Quad(pts.map(|p| Point::new(f(p.x), g(p.y)))),
        }
    }
}

impl From<BoxLtrb> for BoxRepr {
    fn from(b: BoxLtrb) -> Self {
        BoxRepr::Ltrb(b)
    }
}

/// One line of text and where it goes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TextLine {
    pub content: String,
    pub bbox: BoxRepr,
}

impl TextLine {
    pub fn new(content: impl Into<String>, bbox: impl Into<BoxRepr>) -> Self {
        Self { content: content.into(), bbox: bbox.into() }
    }
}

/// Ordered text lines on a canvas. Order is reading order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Layout {
    pub lines: Vec<TextLine>,
    pub canvas: Canvas,
}

impl Layout {
    pub fn new(lines: Vec<TextLine>, canvas: Canvas) -> Self {
        Self { lines, canvas }
    }

    pub fn empty(canvas: Canvas) -> Self {
        Self { lines: Vec::new(), canvas }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_layout(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub line: usize,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}", self.message, self.line)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// True when no error-severity violation was found. Warnings do not
    /// make a layout invalid.
    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Warning)
    }
}

struct Checker<'a> {
    side: i32,
    line: usize,
    out: &'a mut Vec<Violation>,
}

impl Checker<'_> {
    fn error(&mut self, message: impl Into<String>) {
        self.out.push(Violation { line: self.line, severity: Severity::Error, message: message.into() });
    }

    fn warn(&mut self, message: impl Into<String>) {
        self.out.push(Violation { line: self.line, severity: Severity::Warning, message: message.into() });
    }

    fn coord(&mut self, name: &str, value: i32) {
        if value < 0 {
            self.error(format!("{name} below zero"));
        } else if value > self.side {
            self.error(format!("{name} exceeds canvas"));
        }
    }

    fn ltrb(&mut self, b: &BoxLtrb) {
        self.coord("left", b.left);
        self.coord("top", b.top);
        self.coord("right", b.right);
        self.coord("bottom", b.bottom);
        if b.left > b.right {
            self.error("left > right");
        }
        if b.top > b.bottom {
            self.error("top > bottom");
        }
        if b.left <= b.right && b.top <= b.bottom && b.is_degenerate() {
            self.warn("zero-area box");
        }
    }

    fn content(&mut self, content: &str) {
        if content.is_empty() {
            self.error("empty content");
            return;
        }
        if canonicalize_content(content) != content {
            self.error("content has leading or trailing whitespace");
        }
        if let Some((pos, c)) = content.chars().enumerate().find(|(_, c)| !is_alphabet_symbol(*c)) {
            self.error(format!("symbol {c:?} outside the alphabet at position {pos}"));
        }
    }

    fn repr(&mut self, bbox: &BoxRepr) {
        match bbox {
            BoxRepr::Ltrb(b) => self.ltrb(b),
            BoxRepr::Center { x, y } | BoxRepr::TopLeft { x, y } => {
                self.coord("x", *x);
                self.coord("y", *y);
            }
            BoxRepr::LtrbAngle { bbox, angle } => {
                self.ltrb(bbox);
                if !ANGLE_RANGE.contains(angle) {
                    self.error(format!("angle {angle} outside [-90, 90]"));
                }
            }
            BoxRepr::Quad(pts) => {
                for (i, p) in pts.iter().enumerate() {
                    self.coord(&format!("x{i}"), p.x);
                    self.coord(&format!("y{i}"), p.y);
                }
                let area2 = quad_signed_area2(pts);
                if area2 < 0 {
                    self.error("quad vertices not clockwise");
                } else if area2 == 0 {
                    self.warn("zero-area box");
                }
            }
        }
    }
}

/// Twice the signed area of a quad in y-down screen coordinates; positive
/// for clockwise vertex order.
pub fn quad_signed_area2(pts: &[Point; 4]) -> i64 {
    (0..4)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % 4]);
            a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64
        })
        .sum()
}

/// Checks every layout invariant. Violations are reported as data.
pub fn validate_layout(layout: &Layout) -> ValidationReport {
    let mut violations = Vec::new();
    for (line, text) in layout.lines.iter().enumerate() {
        let mut checker = Checker { side: layout.canvas.side(), line, out: &mut violations };
        checker.content(&text.content);
        checker.repr(&text.bbox);
    }
    ValidationReport { violations }
}

/// Half-up rounding of `numer / denom` for non-negative denominators.
fn div_round_half_up(numer: i64, denom: i64) -> i64 {
    (2 * numer + denom).div_euclid(2 * denom)
}

fn scale_coord(value: i32, source: i64, side: i32) -> i32 {
    let scaled = div_round_half_up(value as i64 * side as i64, source);
    scaled.clamp(0, side as i64) as i32
}

/// Maps a box in source-image pixels onto the grid canvas.
pub fn normalize_box(pixel_box: BoxLtrb, source_side: i64, canvas: Canvas) -> Result<BoxLtrb, LayoutError> {
    normalize_box_xy(pixel_box, source_side, source_side, canvas)
}

/// [`normalize_box`] for non-square sources; each axis scales by its own side.
pub fn normalize_box_xy(
    pixel_box: BoxLtrb,
    source_width: i64,
    source_height: i64,
    canvas: Canvas,
) -> Result<BoxLtrb, LayoutError> {
    if source_width <= 0 {
        return Err(LayoutError::InvalidSourceSide(source_width));
    }
    if source_height <= 0 {
        return Err(LayoutError::InvalidSourceSide(source_height));
    }
    let side = canvas.side();
    let l = scale_coord(pixel_box.left, source_width, side);
    let r = scale_coord(pixel_box.right, source_width, side);
    let t = scale_coord(pixel_box.top, source_height, side);
    let b = scale_coord(pixel_box.bottom, source_height, side);
    Ok(BoxLtrb::new(l.min(r), t.min(b), l.max(r), t.max(b)))
}

/// Intersection over union of two closed rectangles; zero when the union
/// has no area.
pub fn box_iou<S: Scalar>(a: &BoxLtrb, b: &BoxLtrb) -> S {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union == 0 {
        S::zero()
    } else {
        S::from_ratio(inter, union)
    }
}

/// Largest IoU over all unordered pairs of lines, using each line's
/// bounding rectangle. `None` for fewer than two lines.
pub fn max_pairwise_iou<S: Scalar>(layout: &Layout) -> Option<S> {
    let boxes: Vec<BoxLtrb> = layout.lines.iter().map(|l| l.bbox.bounding_box()).collect();
    let mut best: Option<S> = None;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let iou = box_iou::<S>(&boxes[i], &boxes[j]);
            best = Some(match best {
                Some(b) if b >= iou => b,
                _ => iou,
            });
        }
    }
    best
}
