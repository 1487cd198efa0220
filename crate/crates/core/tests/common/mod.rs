#![allow(dead_code)]

pub mod oracle;

use glyphplan_core::layout::Point;
use glyphplan_core::{BoxLtrb, BoxRepr, Canvas, Layout, ReprVariant, TextLine};
use proptest::prelude::*;

/// Canonical line content: printable ASCII, no surrounding spaces. Biased
/// towards digits, commas and spaces so it can resemble a coordinate group.
pub fn arb_content() -> impl Strategy<Value = String> {
    let tricky = prop_oneof!["[0-9, -]{1,8}", "[ -~]{1,12}", "[A-Z]{1,6}( [0-9,]{1,6})?"];
    tricky.prop_filter_map("needs non-blank content", |s| {
        let t = s.trim();
        (!t.is_empty()).then(|| t.to_string())
    })
}

pub fn arb_ltrb(max: i32) -> impl Strategy<Value = BoxLtrb> {
    (0..=max, 0..=max, 0..=max, 0..=max).prop_map(|(a, b, c, d)| BoxLtrb::new(a.min(c), b.min(d), a.max(c), b.max(d)))
}

/// Clockwise quad inside `[0, max]`: a rectangle with each corner pulled
/// inwards by less than a quarter of its size.
pub fn arb_quad(max: i32) -> impl Strategy<Value = [Point; 4]> {
    (arb_ltrb(max), prop::array::uniform8(0i32..1000)).prop_map(|(r, j)| {
        let jx = |k: i32| if r.width() >= 4 { k % (r.width() as i32 / 4) } else { 0 };
        let jy = |k: i32| if r.height() >= 4 { k % (r.height() as i32 / 4) } else { 0 };
        [
            Point::new(r.left + jx(j[0]), r.top + jy(j[1])),
            Point::new(r.right - jx(j[2]), r.top + jy(j[3])),
            Point::new(r.right - jx(j[4]), r.bottom - jy(j[5])),
            Point::new(r.left + jx(j[6]), r.bottom - jy(j[7])),
        ]
    })
}

pub fn arb_box(variant: ReprVariant, max: i32) -> BoxedStrategy<BoxRepr> {
    match variant {
        ReprVariant::Ltrb => arb_ltrb(max).prop_map(BoxRepr::Ltrb).boxed(),
        ReprVariant::Center => (0..=max, 0..=max).prop_map(|(x, y)| BoxRepr::Center { x, y }).boxed(),
        ReprVariant::TopLeft => (0..=max, 0..=max).prop_map(|(x, y)| BoxRepr::TopLeft { x, y }).boxed(),
        ReprVariant::LtrbAngle => (arb_ltrb(max), -90i32..=90).prop_map(|(bbox, angle)| BoxRepr::LtrbAngle { bbox, angle }).boxed(),
        ReprVariant::Quad => arb_quad(max).prop_map(BoxRepr::Quad).boxed(),
    }
}

pub fn arb_layout(variant: ReprVariant, max: i32, lines: usize) -> impl Strategy<Value = Layout> {
    prop::collection::vec((arb_content(), arb_box(variant, max)), 0..=lines)
        .prop_map(|v| Layout::new(v.into_iter().map(|(c, b)| TextLine::new(c, b)).collect(), Canvas::default()))
}

/// Prompt text including non-alphabet symbols, which the subword model
/// covers through byte fallback.
pub fn arb_prompt() -> impl Strategy<Value = String> {
    prop_oneof![4 => "[ -~]{0,40}", 1 => "[a-z ]{0,10}[\u{e9}\u{2581}\u{4e2d}\t\n]{0,3}[a-z ]{0,10}"]
}
