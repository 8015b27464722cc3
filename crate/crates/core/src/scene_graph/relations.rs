use std::collections::HashMap;

use super::refine::caption_assignments;
use super::{EdgeKind, GapTable, RelationEdge};
use crate::geometry::relative_position;
use crate::layout::{Category, Page};

/// Parent-of edges for a refined page.
///
/// Rules, highest precedence first; a segment that already has a parent is
/// skipped by later rules:
/// 1. a table/figure is the parent of its caption,
/// 2. a text or title is the parent of the lists that directly follow it,
/// 3. a title is the parent of every text and list up to the next title.
pub fn derive_parent_child(
    page: &Page,
    order: &[String],
    gaps: &GapTable,
    max_gap_frac: f64,
) -> Vec<RelationEdge> {
    let category: HashMap<&str, Category> =
        page.segments.iter().map(|s| (s.id.as_str(), s.category)).collect();
    let mut parent: HashMap<String, String> = HashMap::new();

    for a in caption_assignments(page, order, gaps, max_gap_frac) {
        if category[a.caption.as_str()].is_caption() {
            parent.insert(a.caption, a.owner);
        }
    }
    // Captions that did not come out of refinement fall back to the nearest
    // owner of the matching kind.
    let rank: HashMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    for cap in page.segments.iter().filter(|s| s.category.is_caption()) {
        if parent.contains_key(&cap.id) {
            continue;
        }
        let owner = page
            .segments
            .iter()
            .filter(|o| o.category.caption_kind() == Some(cap.category))
            .min_by(|a, b| {
                gaps.get(&cap.id, &a.id)
                    .total_cmp(&gaps.get(&cap.id, &b.id))
                    .then(rank.get(a.id.as_str()).cmp(&rank.get(b.id.as_str())))
                    .then(a.id.cmp(&b.id))
            });
        if let Some(owner) = owner {
            parent.insert(cap.id.clone(), owner.id.clone());
        }
    }

    for (i, id) in order.iter().enumerate() {
        if category[id.as_str()] != Category::List || parent.contains_key(id) {
            continue;
        }
        let head = order[..i]
            .iter()
            .rev()
            .find(|prev| category[prev.as_str()] != Category::List);
        if let Some(head) = head {
            if matches!(category[head.as_str()], Category::Text | Category::Title) {
                parent.insert(id.clone(), head.clone());
            }
        }
    }

    let mut current_title: Option<&String> = None;
    for id in order {
        match category[id.as_str()] {
            Category::Title => current_title = Some(id),
            Category::Text | Category::List => {
                if let Some(title) = current_title {
                    parent.entry(id.clone()).or_insert_with(|| title.clone());
                }
            }
            _ => {}
        }
    }

    let mut edges: Vec<RelationEdge> = parent
        .into_iter()
        .map(|(child, parent)| RelationEdge {
            kind: EdgeKind::ParentOf,
            from: parent,
            to: child,
            value: None,
        })
        .collect();
    edges.sort();
    edges
}

/// One relative-position edge per unordered pair, oriented from the
/// lexicographically smaller id.
pub fn relative_edges(page: &Page) -> Vec<RelationEdge> {
    let mut segs: Vec<_> = page.segments.iter().collect();
    segs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges = Vec::with_capacity(segs.len() * segs.len().saturating_sub(1) / 2);
    for (i, a) in segs.iter().enumerate() {
        for b in &segs[i + 1..] {
            edges.push(RelationEdge {
                kind: EdgeKind::Relative,
                from: a.id.clone(),
                to: b.id.clone(),
                value: Some(relative_position(&a.bbox, &b.bbox)),
            });
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::Segment;
    use crate::scene_graph::compute_gaps;

    fn page(rows: &[(&str, Category, f64)]) -> (Page, Vec<String>) {
        // Stack segments vertically, one per 20px row, in the given order.
        let segments = rows
            .iter()
            .map(|&(id, category, y)| Segment {
                id: id.into(),
                category,
                bbox: BBox::new(0.0, y, 100.0, y + 10.0).unwrap(),
                text: String::new(),
                score: 1.0,
            })
            .collect();
        let order = rows.iter().map(|s| s.0.to_string()).collect();
        (
            Page {
                page_id: "p".into(),
                width: 100.0,
                height: 1000.0,
                segments,
            },
            order,
        )
    }

    fn parents(rows: &[(&str, Category, f64)]) -> Vec<(String, String)> {
        let (p, order) = page(rows);
        let gaps = compute_gaps(&p);
        derive_parent_child(&p, &order, &gaps, 0.15)
            .into_iter()
            .map(|e| (e.from, e.to))
            .collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn titles_own_their_span() {
        use Category::*;
        let got = parents(&[
            ("title1", Title, 0.),
            ("textA", Text, 20.),
            ("textB", Text, 40.),
            ("title2", Title, 60.),
            ("textC", Text, 80.),
        ]);
        assert_eq!(
            got,
            vec![
                pair("title1", "textA"),
                pair("title1", "textB"),
                pair("title2", "textC")
            ]
        );
    }

    #[test]
    fn text_owns_following_lists() {
        use Category::*;
        let got = parents(&[
            ("textA", Text, 0.),
            ("list1", List, 20.),
            ("list2", List, 40.),
            ("title1", Title, 60.),
        ]);
        assert_eq!(got, vec![pair("textA", "list1"), pair("textA", "list2")]);
    }

    #[test]
    fn list_rule_beats_title_rule() {
        use Category::*;
        let got = parents(&[
            ("t", Title, 0.),
            ("x", Text, 20.),
            ("l", List, 40.),
        ]);
        assert_eq!(got, vec![pair("t", "x"), pair("x", "l")]);
    }

    #[test]
    fn figures_do_not_end_a_title_span() {
        use Category::*;
        let got = parents(&[
            ("t", Title, 0.),
            ("f", Figure, 20.),
            ("x", Text, 200.),
        ]);
        assert_eq!(got, vec![pair("t", "x")]);
    }

    #[test]
    fn caption_parent_comes_first() {
        use Category::*;
        let got = parents(&[
            ("t", Title, 0.),
            ("f", Figure, 20.),
            ("c", FigureCaption, 32.),
        ]);
        assert_eq!(got, vec![pair("f", "c")]);
    }

    #[test]
    fn relative_edges_cover_each_pair_once() {
        use Category::*;
        let (p, _) = page(&[("b", Text, 0.), ("a", Text, 20.), ("c", Text, 40.)]);
        let edges = relative_edges(&p);
        let got: Vec<_> = edges
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str(), e.value.unwrap().as_str()))
            .collect();
        assert_eq!(
            got,
            vec![("a", "b", "bottom"), ("a", "c", "top"), ("b", "c", "top")]
        );
    }
}
