//! Axis-aligned box geometry in image coordinates (origin top-left, y down).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An axis-aligned bounding box in pixel coordinates.
///
/// Constructed through [`BBox::new`], which enforces `x0 < x1`, `y0 < y1`
/// and finite, non-negative coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BBoxError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("negative coordinate")]
    Negative,
    #[error("x0 ≥ x1")]
    InvertedX,
    #[error("y0 ≥ y1")]
    InvertedY,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, BBoxError> {
        let coords = [x0, y0, x1, y1];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(BBoxError::NonFinite);
        }
        if coords.iter().any(|&c| c < 0.0) {
            return Err(BBoxError::Negative);
        }
        if x0 >= x1 {
            return Err(BBoxError::InvertedX);
        }
        if y0 >= y1 {
            return Err(BBoxError::InvertedY);
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Signed length of the shared x-interval; positive only when the
    /// projections genuinely overlap.
    pub fn x_overlap(&self, other: &BBox) -> f64 {
        self.x1.min(other.x1) - self.x0.max(other.x0)
    }

    pub fn y_overlap(&self, other: &BBox) -> f64 {
        self.y1.min(other.y1) - self.y0.max(other.y0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = BBoxError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

/// Shortest distance between two boxes.
///
/// Overlapping or touching boxes are at distance 0. When the projections
/// intersect on one axis the distance is the gap between the facing sides;
/// otherwise it is the distance between the two closest corners.
pub fn gap_distance(a: &BBox, b: &BBox) -> f64 {
    let x_meet = a.x_overlap(b) >= 0.0;
    let y_meet = a.y_overlap(b) >= 0.0;
    match (x_meet, y_meet) {
        (true, true) => 0.0,
        (true, false) => {
            if a.y1 < b.y0 {
                b.y0 - a.y1
            } else {
                a.y0 - b.y1
            }
        }
        (false, true) => {
            if a.x1 < b.x0 {
                b.x0 - a.x1
            } else {
                a.x0 - b.x1
            }
        }
        (false, false) => {
            let (ax, bx) = if a.x1 < b.x0 { (a.x1, b.x0) } else { (a.x0, b.x1) };
            let (ay, by) = if a.y1 < b.y0 { (a.y1, b.y0) } else { (a.y0, b.y1) };
            (bx - ax).hypot(by - ay)
        }
    }
}

/// Where one box sits relative to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativePosition {
    Left,
    Right,
    Top,
    Bottom,
    LeftTop,
    RightTop,
    LeftBottom,
    RightBottom,
    Overlapping,
}

impl RelativePosition {
    pub const ALL: [RelativePosition; 9] = [
        Self::Left,
        Self::Right,
        Self::Top,
        Self::Bottom,
        Self::LeftTop,
        Self::RightTop,
        Self::LeftBottom,
        Self::RightBottom,
        Self::Overlapping,
    ];

    pub fn mirror(self) -> Self {
        use RelativePosition::*;
        match self {
            Left => Right,
            Right => Left,
            Top => Bottom,
            Bottom => Top,
            LeftTop => RightBottom,
            RightBottom => LeftTop,
            RightTop => LeftBottom,
            LeftBottom => RightTop,
            Overlapping => Overlapping,
        }
    }

    pub fn as_str(self) -> &'static str {
        use RelativePosition::*;
        match self {
            Left => "left",
            Right => "right",
            Top => "top",
            Bottom => "bottom",
            LeftTop => "left_top",
            RightTop => "right_top",
            LeftBottom => "left_bottom",
            RightBottom => "right_bottom",
            Overlapping => "overlapping",
        }
    }

    /// True when this position lies in the half-plane named by `dir`
    /// (diagonals count toward both of their sides).
    pub fn projects_onto(self, dir: Direction) -> bool {
        use RelativePosition::*;
        match dir {
            Direction::Left => matches!(self, Left | LeftTop | LeftBottom),
            Direction::Right => matches!(self, Right | RightTop | RightBottom),
            Direction::Top => matches!(self, Top | LeftTop | RightTop),
            Direction::Bottom => matches!(self, Bottom | LeftBottom | RightBottom),
        }
    }
}

impl fmt::Display for RelativePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelativePosition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown relative position `{s}`"))
    }
}

/// One of the four sides a question can ask about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
    Top,
    Bottom,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Self::Left, Self::Right, Self::Top, Self::Bottom];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Top => "top",
            Direction::Bottom => "bottom",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown direction `{s}`"))
    }
}

/// Position of `a` relative to `b`.
///
/// Axes "coincide" only when the projections share a positive length, so
/// touching edges count as separated.
pub fn relative_position(a: &BBox, b: &BBox) -> RelativePosition {
    use RelativePosition::*;
    let x_coincide = a.x_overlap(b) > 0.0;
    let y_coincide = a.y_overlap(b) > 0.0;
    let leftward = a.x1 <= b.x0;
    let upward = a.y1 <= b.y0;
    match (x_coincide, y_coincide) {
        (true, true) => Overlapping,
        (false, true) => {
            if leftward {
                Left
            } else {
                Right
            }
        }
        (true, false) => {
            if upward {
                Top
            } else {
                Bottom
            }
        }
        (false, false) => match (leftward, upward) {
            (true, true) => LeftTop,
            (true, false) => LeftBottom,
            (false, true) => RightTop,
            (false, false) => RightBottom,
        },
    }
}
