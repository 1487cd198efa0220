//! Brute-force reference implementations shared by oracle tests.

use std::cmp::{Ordering, Reverse};

use glyphplan_core::{BoxLtrb, Exact};

/// Cells `[x, x+1)` covered along one axis, as a bit mask.
fn row_mask(lo: i32, hi: i32) -> u128 {
    (lo.max(0)..hi.min(128)).fold(0u128, |m, x| m | 1 << x)
}

/// IoU by counting unit cells `[x, x+1) x [y, y+1)` covered by each box.
pub fn cell_iou(a: &BoxLtrb, b: &BoxLtrb) -> Exact {
    let (ma, mb) = (row_mask(a.left, a.right), row_mask(b.left, b.right));
    let (mut inter, mut union) = (0i64, 0i64);
    for y in 0..128 {
        let ra = if y >= a.top && y < a.bottom { ma } else { 0 };
        let rb = if y >= b.top && y < b.bottom { mb } else { 0 };
        inter += (ra & rb).count_ones() as i64;
        union += (ra | rb).count_ones() as i64;
    }
    if union == 0 {
        Exact::from_integer(0)
    } else {
        Exact::new(inter, union)
    }
}

/// Largest number of equal-string pairs over all one-to-one pairings.
pub fn best_keyword_pairing(pred: &[String], gt: &[String]) -> usize {
    fn rec(pred: &[String], gt: &[String], used: &mut Vec<bool>, i: usize) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = rec(pred, gt, used, i + 1);
        for j in 0..gt.len() {
            if !used[j] && pred[i] == gt[j] {
                used[j] = true;
                best = best.max(1 + rec(pred, gt, used, i + 1));
                used[j] = false;
            }
        }
        best
    }
    rec(pred, gt, &mut vec![false; gt.len()], 0)
}

type Key = (Reverse<Exact>, [i32; 4], [i32; 4], usize, usize);

/// Smaller keys are better edges; a longer list wins over its prefix.
fn better(candidate: &[Key], best: &[Key]) -> bool {
    for (x, y) in candidate.iter().zip(best) {
        match x.cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    candidate.len() > best.len()
}

/// Enumerates every matching of predicted to reference boxes at or above
/// the threshold, each as a sorted list of edge keys, and returns the
/// lexicographically best one as sorted index pairs.
pub fn lexmax_matching(pred: &[BoxLtrb], gt: &[BoxLtrb], t: Exact) -> Vec<(usize, usize)> {
    let iou: Vec<Vec<Exact>> = pred.iter().map(|p| gt.iter().map(|g| cell_iou(p, g)).collect()).collect();
    #[allow(clippy::too_many_arguments)]
    fn rec(pred: &[BoxLtrb], gt: &[BoxLtrb], iou: &[Vec<Exact>], t: Exact, i: usize, used: &mut Vec<bool>, cur: &mut Vec<Key>, best: &mut Option<Vec<Key>>) {
        if i == pred.len() {
            let mut sorted = cur.clone();
            sorted.sort();
            if best.as_ref().is_none_or(|b| better(&sorted, b)) {
                *best = Some(sorted);
            }
            return;
        }
        rec(pred, gt, iou, t, i + 1, used, cur, best);
        for j in 0..gt.len() {
            if !used[j] && iou[i][j] >= t {
                used[j] = true;
                cur.push((Reverse(iou[i][j]), pred[i].to_array(), gt[j].to_array(), i, j));
                rec(pred, gt, iou, t, i + 1, used, cur, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = None;
    rec(pred, gt, &iou, t, 0, &mut vec![false; gt.len()], &mut Vec::new(), &mut best);
    let mut pairs: Vec<(usize, usize)> = best.unwrap_or_default().into_iter().map(|k| (k.3, k.4)).collect();
    pairs.sort();
    pairs
}
