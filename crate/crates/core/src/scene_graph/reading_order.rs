use super::SceneGraphError;
use crate::geometry::BBox;
use crate::layout::Page;

/// Horizontal slack allowed when deciding that one box sits left of another.
pub const NEIGHBOR_EPSILON_PX: f64 = 2.0;

/// `candidate` is a left-neighbor of `of`: the y-intervals share a positive
/// length, `candidate` ends no later than `of` starts (within epsilon), and
/// `candidate` starts strictly further left.
///
/// The last condition makes the relation acyclic, which is what bounds the
/// swap loop below.
pub fn is_left_neighbor(candidate: &BBox, of: &BBox) -> bool {
    candidate.y_overlap(of) > 0.0
        && candidate.x1 <= of.x0 + NEIGHBOR_EPSILON_PX
        && candidate.x0 < of.x0
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderOutcome<K> {
    pub order: Vec<K>,
    /// Full passes run, including the final pass that made no swap.
    pub passes: usize,
}

/// Pass cap for `n` items.
pub fn pass_cap(n: usize) -> usize {
    (n * n).max(1)
}

/// Order keyed boxes the way a reader scans a page.
///
/// Boxes are first sorted by top edge (then left edge, then key). Passes then
/// move every box that has a left-neighbor further down the list behind that
/// neighbor, until a pass makes no exchange.
pub fn order_boxes<K: Ord + Clone>(items: &[(K, BBox)]) -> Result<OrderOutcome<K>, SceneGraphError> {
    let n = items.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (ka, ba) = &items[a];
        let (kb, bb) = &items[b];
        ba.y0
            .total_cmp(&bb.y0)
            .then(ba.x0.total_cmp(&bb.x0))
            .then_with(|| ka.cmp(kb))
    });

    let cap = pass_cap(n);
    for pass in 1..=cap {
        let mut swapped = false;
        for i in 0..n {
            let mut j = i + 1;
            while j < n {
                if is_left_neighbor(&items[idx[j]].1, &items[idx[i]].1) {
                    idx.swap(i, j);
                    swapped = true;
                    j = i + 1;
                } else {
                    j += 1;
                }
            }
        }
        if !swapped {
            return Ok(OrderOutcome {
                order: idx.into_iter().map(|i| items[i].0.clone()).collect(),
                passes: pass,
            });
        }
    }
    Err(SceneGraphError::NonConvergence { passes: cap })
}

/// Reading order of a page as a list of segment ids.
pub fn compute_reading_order(page: &Page) -> Result<Vec<String>, SceneGraphError> {
    reading_order_outcome(page).map(|o| o.order)
}

pub fn reading_order_outcome(page: &Page) -> Result<OrderOutcome<String>, SceneGraphError> {
    let items: Vec<(String, BBox)> = page
        .segments
        .iter()
        .map(|s| (s.id.clone(), s.bbox))
        .collect();
    order_boxes(&items)
}
