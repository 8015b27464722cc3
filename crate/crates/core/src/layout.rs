//! Layout-detector output: categories, segments, pages, and the layout JSON
//! reader/writer.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;

/// Bboxes may overshoot the page by this many pixels before being rejected.
pub const CLAMP_TOLERANCE_PX: f64 = 2.0;

/// Segment category. The first five come straight from the detector; the
/// caption classes are only ever produced by refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Text,
    Title,
    List,
    Table,
    Figure,
    TableCaption,
    FigureCaption,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Self::Text,
        Self::Title,
        Self::List,
        Self::Table,
        Self::Figure,
        Self::TableCaption,
        Self::FigureCaption,
    ];

    pub const DETECTOR: [Category; 5] = [
        Self::Text,
        Self::Title,
        Self::List,
        Self::Table,
        Self::Figure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Text => "text",
            Category::Title => "title",
            Category::List => "list",
            Category::Table => "table",
            Category::Figure => "figure",
            Category::TableCaption => "table_caption",
            Category::FigureCaption => "figure_caption",
        }
    }

    /// Human-readable noun used when realizing question text.
    pub fn noun(self) -> &'static str {
        match self {
            Category::TableCaption => "table caption",
            Category::FigureCaption => "figure caption",
            other => other.as_str(),
        }
    }

    pub fn is_caption(self) -> bool {
        matches!(self, Category::TableCaption | Category::FigureCaption)
    }

    /// Caption class owned by a table or figure.
    pub fn caption_kind(self) -> Option<Category> {
        match self {
            Category::Table => Some(Category::TableCaption),
            Category::Figure => Some(Category::FigureCaption),
            _ => None,
        }
    }

    /// Parse a category as it may appear in raw detector input.
    pub fn parse_detector(s: &str) -> Result<Category, String> {
        match s.parse::<Category>() {
            Ok(c) if Self::DETECTOR.contains(&c) => Ok(c),
            Ok(c) => Err(format!("category `{c}` cannot appear in raw detector input")),
            Err(e) => Err(e),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub category: Category,
    pub bbox: BBox,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub page_id: String,
    pub width: f64,
    pub height: f64,
    pub segments: Vec<Segment>,
}

impl Page {
    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("page `{page_id}`{}: {message}", segment_suffix(.segment_id))]
    Validation {
        page_id: String,
        segment_id: Option<String>,
        message: String,
    },
    #[error("entity {entity_id}: {message}")]
    Entity { entity_id: i64, message: String },
}

fn segment_suffix(id: &Option<String>) -> String {
    id.as_ref()
        .map(|id| format!(", segment `{id}`"))
        .unwrap_or_default()
}

impl IngestError {
    pub(crate) fn from_json(bytes: &[u8], err: serde_json::Error) -> Self {
        IngestError::Json {
            offset: json_offset(bytes, &err),
            message: err.to_string(),
        }
    }
}

pub(crate) fn json_offset(bytes: &[u8], err: &serde_json::Error) -> usize {
    byte_offset(bytes, err.line(), err.column())
}

/// serde_json reports 1-based line/column; turn that back into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .nth(line.saturating_sub(2))
        .map(|(i, _)| i + 1)
        .filter(|_| line > 1)
        .unwrap_or(0);
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    pages: Vec<RawPage>,
}

#[derive(Deserialize)]
struct RawPage {
    page_id: String,
    width: f64,
    height: f64,
    #[serde(default)]
    segments: Vec<RawSegment>,
}

#[derive(Deserialize)]
struct RawSegment {
    id: String,
    category: String,
    #[serde(default)]
    score: Option<f64>,
    bbox: [f64; 4],
    #[serde(default)]
    text: String,
}

/// Parse layout JSON into validated pages. Segment order is kept as given.
pub fn parse_layout_file(bytes: &[u8]) -> Result<Vec<Page>, IngestError> {
    let raw: RawLayout =
        serde_json::from_slice(bytes).map_err(|e| IngestError::from_json(bytes, e))?;
    raw.pages.into_iter().map(validate_page).collect()
}

fn validate_page(raw: RawPage) -> Result<Page, IngestError> {
    let page_err = |segment_id: Option<&str>, message: String| IngestError::Validation {
        page_id: raw.page_id.clone(),
        segment_id: segment_id.map(str::to_owned),
        message,
    };
    if !(raw.width.is_finite() && raw.width > 0.0 && raw.height.is_finite() && raw.height > 0.0)
    {
        return Err(page_err(None, "width and height must be positive".into()));
    }
    let mut seen = HashSet::new();
    let mut segments = Vec::with_capacity(raw.segments.len());
    for seg in &raw.segments {
        let id = seg.id.as_str();
        if !seen.insert(id) {
            return Err(page_err(Some(id), "duplicate segment id".into()));
        }
        let category = Category::parse_detector(&seg.category).map_err(|m| page_err(Some(id), m))?;
        let score = seg.score.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&score) {
            return Err(page_err(Some(id), format!("score {score} outside [0, 1]")));
        }
        let bbox = clamp_to_page(seg.bbox, raw.width, raw.height).map_err(|m| page_err(Some(id), m))?;
        segments.push(Segment {
            id: seg.id.clone(),
            category,
            bbox,
            text: normalize_text(&seg.text),
            score,
        });
    }
    Ok(Page {
        page_id: raw.page_id,
        width: raw.width,
        height: raw.height,
        segments,
    })
}

fn clamp_to_page(c: [f64; 4], width: f64, height: f64) -> Result<BBox, String> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    if c[0] >= c[2] {
        return Err("x0 ≥ x1".into());
    }
    if c[1] >= c[3] {
        return Err("y0 ≥ y1".into());
    }
    let clamp = |v: f64, max: f64| -> Result<f64, String> {
        if v < -CLAMP_TOLERANCE_PX || v > max + CLAMP_TOLERANCE_PX {
            Err(format!("coordinate {v} outside page bounds [0, {max}]"))
        } else {
            Ok(v.clamp(0.0, max))
        }
    };
    let x0 = clamp(c[0], width)?;
    let y0 = clamp(c[1], height)?;
    let x1 = clamp(c[2], width)?;
    let y1 = clamp(c[3], height)?;
    BBox::new(x0, y0, x1, y1).map_err(|e| format!("{e} after clamping to page"))
}

#[derive(Serialize)]
struct OutLayout<'a> {
    pages: Vec<OutPage<'a>>,
}

#[derive(Serialize)]
struct OutPage<'a> {
    height: f64,
    page_id: &'a str,
    segments: Vec<SegmentRecord>,
    width: f64,
}

/// Serialized form of a segment, shared with the scene-graph file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SegmentRecord {
    pub bbox: [f64; 4],
    pub category: Category,
    pub id: String,
    pub score: f64,
    pub text: String,
}

impl From<&Segment> for SegmentRecord {
    fn from(s: &Segment) -> Self {
        SegmentRecord {
            bbox: s.bbox.to_array(),
            category: s.category,
            id: s.id.clone(),
            score: s.score,
            text: s.text.clone(),
        }
    }
}

/// Write pages back out as layout JSON.
pub fn serialize_layout(pages: &[Page]) -> Vec<u8> {
    let doc = OutLayout {
        pages: pages
            .iter()
            .map(|p| OutPage {
                height: p.height,
                page_id: &p.page_id,
                segments: p.segments.iter().map(SegmentRecord::from).collect(),
                width: p.width,
            })
            .collect(),
    };
    serde_json::to_vec(&doc).expect("layout serialization is infallible")
}
