//! Metric kernels against independent brute-force oracles.

mod common;

use common::arb_ltrb;
use common::oracle::{best_keyword_pairing, cell_iou, lexmax_matching};
use glyphplan_core::eval::{
    coverage_of_lengths, detection_match_metrics, greedy_box_matching, keyword_metrics, overlap_metric, BenchmarkRecord,
};
use glyphplan_core::layout::{box_iou, normalize_box};
use glyphplan_core::num::harmonic_mean;
use glyphplan_core::{BoxLtrb, Canvas, Exact, Layout, TextLine};
use proptest::prelude::*;

#[test]
fn iou_fixture_is_exact() {
    let a = BoxLtrb::new(0, 0, 10, 10);
    let b = BoxLtrb::new(5, 5, 15, 15);
    assert_eq!(box_iou::<Exact>(&a, &b), Exact::new(25, 175));
    assert_eq!(box_iou::<f64>(&a, &b), 25.0 / 175.0);
    assert_eq!(cell_iou(&a, &b), Exact::new(1, 7));
}

#[test]
fn normalization_fixture() {
    let b = normalize_box(BoxLtrb::new(256, 128, 384, 192), 512, Canvas::default()).unwrap();
    assert_eq!(b, BoxLtrb::new(64, 32, 96, 48));
}

fn arb_words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "A", "b", "B", "sale", "SALE", "c"]).prop_map(String::from), 0..=6)
}

fn words_layout(words: &[String]) -> Layout {
    let lines = words.iter().enumerate().map(|(i, w)| TextLine::new(w.clone(), BoxLtrb::new(0, i as i32, 1, i as i32 + 1)));
    Layout::new(lines.collect(), Canvas::default())
}

fn small_box() -> impl Strategy<Value = BoxLtrb> {
    arb_ltrb(12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn iou_matches_cell_counting(a in arb_ltrb(128), b in arb_ltrb(128)) {
        let exact = box_iou::<Exact>(&a, &b);
        prop_assert_eq!(exact, cell_iou(&a, &b));
        let f = box_iou::<f64>(&a, &b);
        prop_assert!((f - *exact.numer() as f64 / *exact.denom() as f64).abs() < 1e-9);
        prop_assert_eq!(exact, box_iou::<Exact>(&b, &a));
    }

    #[test]
    fn keyword_metrics_match_exhaustive_pairing(
        records in prop::collection::vec((arb_words(), arb_words()), 1..5),
        case_sensitive in any::<bool>(),
    ) {
        let fold = |w: &[String]| -> Vec<String> {
            w.iter().map(|s| if case_sensitive { s.clone() } else { s.to_lowercase() }).collect()
        };
        let (mut matched, mut predicted, mut reference, mut exact) = (0usize, 0usize, 0usize, 0usize);
        for (gt, pred) in &records {
            let (g, p) = (fold(gt), fold(pred));
            matched += best_keyword_pairing(&p, &g);
            predicted += p.len();
            reference += g.len();
            let (mut gs, mut ps) = (g.clone(), p.clone());
            gs.sort();
            ps.sort();
            exact += (gs == ps) as usize;
        }
        let ratio = |n: usize, d: usize| if d == 0 { Exact::from_integer(0) } else { Exact::new(n as i64, d as i64) };
        let bench: Vec<BenchmarkRecord> = records
            .iter()
            .map(|(gt, pred)| BenchmarkRecord { prompt: String::new(), gt_keywords: gt.clone(), pred_layout: words_layout(pred) })
            .collect();
        let m = keyword_metrics::<Exact>(&bench, case_sensitive).unwrap();
        prop_assert_eq!(m.precision, ratio(matched, predicted));
        prop_assert_eq!(m.recall, ratio(matched, reference));
        prop_assert_eq!(m.accuracy, ratio(exact, records.len()));
        prop_assert_eq!(m.f_measure, harmonic_mean(m.precision, m.recall));
    }

    #[test]
    fn detection_matches_exhaustive_lexmax(
        pred in prop::collection::vec(small_box(), 0..=6),
        gt in prop::collection::vec(small_box(), 0..=6),
        t_num in 1i64..=10,
    ) {
        let t = Exact::new(t_num, 10);
        let mut greedy = greedy_box_matching::<Exact>(&pred, &gt, t);
        greedy.sort();
        prop_assert_eq!(&greedy, &lexmax_matching(&pred, &gt, t));
        let m = detection_match_metrics::<Exact>(&pred, &gt, t).unwrap();
        let zero = Exact::from_integer(0);
        let one = Exact::from_integer(1);
        for v in [m.precision, m.recall, m.f_measure] {
            prop_assert!(v >= zero && v <= one);
        }
        prop_assert_eq!(m.f_measure, harmonic_mean(m.precision, m.recall));
    }

    #[test]
    fn overlap_matches_brute_force(layouts in prop::collection::vec(prop::collection::vec(arb_ltrb(20), 0..4), 0..6)) {
        let layouts: Vec<Layout> = layouts
            .iter()
            .map(|boxes| Layout::new(boxes.iter().map(|b| TextLine::new("x", *b)).collect(), Canvas::default()))
            .collect();
        let mut maxima = Vec::new();
        for l in &layouts {
            let boxes: Vec<BoxLtrb> = l.lines.iter().map(|t| t.bbox.bounding_box()).collect();
            let mut best = None;
            for i in 0..boxes.len() {
                for j in 0..boxes.len() {
                    if i != j {
                        let v = cell_iou(&boxes[i], &boxes[j]);
                        best = Some(best.map_or(v, |b: Exact| b.max(v)));
                    }
                }
            }
            maxima.extend(best);
        }
        let expected = (!maxima.is_empty())
            .then(|| maxima.iter().fold(Exact::from_integer(0), |a, b| a + b) / Exact::from_integer(maxima.len() as i64));
        prop_assert_eq!(overlap_metric::<Exact>(&layouts), expected);
    }

    #[test]
    fn coverage_matches_direct_count(lengths in prop::collection::vec(0usize..400, 1..60), ls in prop::collection::vec(0usize..400, 1..8)) {
        let table = coverage_of_lengths::<Exact>(&lengths, &ls).unwrap();
        for (row, l) in table.iter().zip(&ls) {
            let covered = lengths.iter().filter(|&&x| x <= *l).count();
            prop_assert_eq!(row.coverage, Exact::new(covered as i64, lengths.len() as i64));
        }
    }
}
