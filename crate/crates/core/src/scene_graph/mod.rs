//! Per-page scene graphs: reading order, gap distances, caption refinement,
//! parent-child structure and pairwise relative positions.

mod codec;
mod reading_order;
mod refine;
mod relations;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{gap_distance, RelativePosition};
use crate::layout::{Category, Page, Segment};

pub use codec::{parse_scene_graph, parse_scene_graphs, serialize_scene_graph, serialize_scene_graphs};
pub use reading_order::{
    compute_reading_order, is_left_neighbor, order_boxes, pass_cap, reading_order_outcome,
    OrderOutcome, NEIGHBOR_EPSILON_PX,
};
pub use refine::{caption_assignments, refine_categories, CaptionAssignment, DEFAULT_MAX_CAPTION_GAP_FRAC};
pub use relations::{derive_parent_child, relative_edges};

#[derive(Debug, thiserror::Error)]
pub enum SceneGraphError {
    #[error("reading-order non-convergence after {passes} passes")]
    NonConvergence { passes: usize },
    #[error("malformed scene graph JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("invalid scene graph for page `{page_id}`: {message}")]
    Invalid { page_id: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ParentOf,
    Relative,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::ParentOf => "parent_of",
            EdgeKind::Relative => "relative",
        })
    }
}

/// A typed edge between two segments. `value` is set only for relative edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationEdge {
    pub kind: EdgeKind,
    pub from: String,
    pub to: String,
    pub value: Option<RelativePosition>,
}

/// Symmetric pairwise gap distances, keyed once per unordered pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapTable {
    entries: BTreeMap<(String, String), f64>,
}

impl GapTable {
    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_owned(), b.to_owned())
        } else {
            (b.to_owned(), a.to_owned())
        }
    }

    pub fn insert(&mut self, a: &str, b: &str, d: f64) {
        if a != b {
            self.entries.insert(Self::key(a, b), d);
        }
    }

    /// Distance between two ids; 0 on the diagonal, `+inf` when unknown.
    pub fn get(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        self.entries
            .get(&Self::key(a, b))
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries as `(a, b, d)` with `a < b`, sorted.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries.iter().map(|((a, b), d)| (a.as_str(), b.as_str(), *d))
    }
}

pub fn compute_gaps(page: &Page) -> GapTable {
    let mut gaps = GapTable::default();
    for (i, a) in page.segments.iter().enumerate() {
        for b in &page.segments[i + 1..] {
            gaps.insert(&a.id, &b.id, gap_distance(&a.bbox, &b.bbox));
        }
    }
    gaps
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGraphConfig {
    pub max_caption_gap_frac: f64,
}

impl Default for SceneGraphConfig {
    fn default() -> Self {
        Self {
            max_caption_gap_frac: DEFAULT_MAX_CAPTION_GAP_FRAC,
        }
    }
}

/// Scene graph of one page. `page.segments` is stored in reading order and
/// carries refined categories.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub page: Page,
    pub reading_order: Vec<String>,
    pub edges: Vec<RelationEdge>,
    pub gaps: GapTable,
}

impl SceneGraph {
    pub fn page_id(&self) -> &str {
        &self.page.page_id
    }

    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.page.segment(id)
    }

    /// Segments in reading order.
    pub fn segments(&self) -> &[Segment] {
        &self.page.segments
    }

    pub fn parent_edges(&self) -> impl Iterator<Item = &RelationEdge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::ParentOf)
    }

    pub fn parent_of(&self, child: &str) -> Option<&str> {
        self.parent_edges().find(|e| e.to == child).map(|e| e.from.as_str())
    }

    /// The caption child of a table or figure, if it has one.
    pub fn caption_of(&self, owner: &str) -> Option<&Segment> {
        self.parent_edges()
            .filter(|e| e.from == owner)
            .filter_map(|e| self.segment(&e.to))
            .find(|s| s.category.is_caption())
    }

    pub fn relative(&self, a: &str, b: &str) -> Option<RelativePosition> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Relative)
            .find_map(|e| {
                if e.from == a && e.to == b {
                    e.value
                } else if e.from == b && e.to == a {
                    e.value.map(RelativePosition::mirror)
                } else {
                    None
                }
            })
    }

    pub fn count(&self, category: Category) -> usize {
        self.segments().iter().filter(|s| s.category == category).count()
    }
}

/// Run the full pipeline on one page.
pub fn build_scene_graph(page: &Page, config: &SceneGraphConfig) -> Result<SceneGraph, SceneGraphError> {
    let reading_order = compute_reading_order(page)?;
    let gaps = compute_gaps(page);
    let mut refined = refine_categories(page, &reading_order, &gaps, config.max_caption_gap_frac);
    let mut edges = derive_parent_child(&refined, &reading_order, &gaps, config.max_caption_gap_frac);
    edges.extend(relative_edges(&refined));
    edges.sort();

    let rank: std::collections::HashMap<&str, usize> = reading_order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    refined.segments.sort_by_key(|s| rank[s.id.as_str()]);

    Ok(SceneGraph {
        page: refined,
        reading_order,
        edges,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn seg(id: &str, category: Category, c: [f64; 4]) -> Segment {
        Segment {
            id: id.into(),
            category,
            bbox: BBox::new(c[0], c[1], c[2], c[3]).unwrap(),
            text: format!("{id} text"),
            score: 1.0,
        }
    }

    #[test]
    fn empty_page() {
        let p = Page {
            page_id: "empty".into(),
            width: 10.0,
            height: 10.0,
            segments: vec![],
        };
        let g = build_scene_graph(&p, &SceneGraphConfig::default()).unwrap();
        assert!(g.reading_order.is_empty() && g.edges.is_empty() && g.gaps.is_empty());
    }

    #[test]
    fn title_above_text() {
        let p = Page {
            page_id: "p".into(),
            width: 200.0,
            height: 200.0,
            segments: vec![
                seg("body", Category::Text, [10., 40., 190., 120.]),
                seg("head", Category::Title, [10., 10., 190., 30.]),
            ],
        };
        let g = build_scene_graph(&p, &SceneGraphConfig::default()).unwrap();
        assert_eq!(g.reading_order, ["head", "body"]);
        assert_eq!(g.parent_of("body"), Some("head"));
        assert_eq!(g.relative("head", "body"), Some(RelativePosition::Top));
        assert_eq!(g.relative("body", "head"), Some(RelativePosition::Bottom));
        assert_eq!(g.gaps.get("body", "head"), 10.0);
        assert_eq!(g.segments()[0].id, "head");
    }

    #[test]
    fn gap_table_is_symmetric() {
        let mut t = GapTable::default();
        t.insert("b", "a", 3.0);
        assert_eq!(t.get("a", "b"), 3.0);
        assert_eq!(t.get("b", "a"), 3.0);
        assert_eq!(t.get("a", "a"), 0.0);
        assert_eq!(t.iter().next(), Some(("a", "b", 3.0)));
    }
}
