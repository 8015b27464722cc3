//! Canonical JSON for scene graphs.
//!
//! Keys are emitted in sorted order, segments follow the reading order, edges
//! are sorted by `(kind, from, to)` and gaps by `(a, b)` with `a < b`. Gap
//! values are rounded to 4 decimals.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{EdgeKind, GapTable, RelationEdge, SceneGraph, SceneGraphError};
use crate::geometry::{BBox, RelativePosition};
use crate::layout::{json_offset, Page, Segment, SegmentRecord};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    edges: Vec<EdgeRecord>,
    gaps: Vec<GapRecord>,
    height: f64,
    page_id: String,
    reading_order: Vec<String>,
    segments: Vec<SegmentRecord>,
    width: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    from: String,
    kind: EdgeKind,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<RelativePosition>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GapRecord {
    a: String,
    b: String,
    d: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphCollection {
    scene_graphs: Vec<GraphRecord>,
}

fn round4(d: f64) -> f64 {
    (d * 1e4).round() / 1e4
}

fn to_record(g: &SceneGraph) -> GraphRecord {
    let mut edges: Vec<&RelationEdge> = g.edges.iter().collect();
    edges.sort();
    GraphRecord {
        edges: edges
            .into_iter()
            .map(|e| EdgeRecord {
                from: e.from.clone(),
                kind: e.kind,
                to: e.to.clone(),
                value: e.value,
            })
            .collect(),
        gaps: g
            .gaps
            .iter()
            .map(|(a, b, d)| GapRecord {
                a: a.to_owned(),
                b: b.to_owned(),
                d: round4(d),
            })
            .collect(),
        height: g.page.height,
        page_id: g.page.page_id.clone(),
        reading_order: g.reading_order.clone(),
        segments: g.page.segments.iter().map(SegmentRecord::from).collect(),
        width: g.page.width,
    }
}

fn from_record(r: GraphRecord) -> Result<SceneGraph, SceneGraphError> {
    let invalid = |message: String| SceneGraphError::Invalid {
        page_id: r.page_id.clone(),
        message,
    };

    let mut ids = HashSet::new();
    let mut segments = Vec::with_capacity(r.segments.len());
    for s in &r.segments {
        if !ids.insert(s.id.as_str()) {
            return Err(invalid(format!("duplicate segment id `{}`", s.id)));
        }
        let bbox = BBox::try_from(s.bbox).map_err(|e| invalid(format!("segment `{}`: {e}", s.id)))?;
        segments.push(Segment {
            id: s.id.clone(),
            category: s.category,
            bbox,
            text: s.text.clone(),
            score: s.score,
        });
    }

    let order_set: HashSet<&str> = r.reading_order.iter().map(String::as_str).collect();
    if order_set.len() != r.reading_order.len() || order_set != ids {
        return Err(invalid("reading_order is not a permutation of segment ids".into()));
    }

    let mut edges = Vec::with_capacity(r.edges.len());
    for e in &r.edges {
        if !ids.contains(e.from.as_str()) || !ids.contains(e.to.as_str()) || e.from == e.to {
            return Err(invalid(format!("bad edge endpoints `{}` -> `{}`", e.from, e.to)));
        }
        if (e.kind == EdgeKind::Relative) != e.value.is_some() {
            return Err(invalid(format!("edge `{}` -> `{}`: value must be set only on relative edges", e.from, e.to)));
        }
        edges.push(RelationEdge {
            kind: e.kind,
            from: e.from.clone(),
            to: e.to.clone(),
            value: e.value,
        });
    }
    edges.sort();

    let mut gaps = GapTable::default();
    for g in &r.gaps {
        if !ids.contains(g.a.as_str()) || !ids.contains(g.b.as_str()) || g.d.is_nan() || g.d < 0.0 {
            return Err(invalid(format!("bad gap entry `{}`/`{}`", g.a, g.b)));
        }
        gaps.insert(&g.a, &g.b, g.d);
    }

    Ok(SceneGraph {
        page: Page {
            page_id: r.page_id.clone(),
            width: r.width,
            height: r.height,
            segments,
        },
        reading_order: r.reading_order.clone(),
        edges,
        gaps,
    })
}

fn json_err(bytes: &[u8], e: serde_json::Error) -> SceneGraphError {
    SceneGraphError::Json {
        offset: json_offset(bytes, &e),
        message: e.to_string(),
    }
}

pub fn serialize_scene_graph(g: &SceneGraph) -> Vec<u8> {
    serde_json::to_vec(&to_record(g)).expect("scene graph serialization is infallible")
}

pub fn parse_scene_graph(bytes: &[u8]) -> Result<SceneGraph, SceneGraphError> {
    let record: GraphRecord = serde_json::from_slice(bytes).map_err(|e| json_err(bytes, e))?;
    from_record(record)
}

/// Multi-page file: `{"scene_graphs":[...]}`.
pub fn serialize_scene_graphs(graphs: &[SceneGraph]) -> Vec<u8> {
    let doc = GraphCollection {
        scene_graphs: graphs.iter().map(to_record).collect(),
    };
    serde_json::to_vec(&doc).expect("scene graph serialization is infallible")
}

pub fn parse_scene_graphs(bytes: &[u8]) -> Result<Vec<SceneGraph>, SceneGraphError> {
    let doc: GraphCollection = serde_json::from_slice(bytes).map_err(|e| json_err(bytes, e))?;
    doc.scene_graphs.into_iter().map(from_record).collect()
}
