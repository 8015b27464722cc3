//! Layout scene graphs and templated question generation for document pages.
//!
//! The pipeline reads detector output ([`layout`]), orders and relates the
//! segments of each page ([`scene_graph`]), generates closed-vocabulary
//! questions by running small programs over the graph ([`question`]),
//! derives extractive pairs from linked form annotations ([`funsd_qa`]) and
//! scores predictions ([`metrics`]).

pub mod cli;
pub mod funsd;
pub mod funsd_qa;
pub mod geometry;
pub mod layout;
pub mod metrics;
pub mod question;
pub mod scene_graph;

pub use geometry::{gap_distance, relative_position, BBox, Direction, RelativePosition};
pub use layout::{parse_layout_file, Category, IngestError, Page, Segment};
pub use scene_graph::{build_scene_graph, SceneGraph, SceneGraphConfig, SceneGraphError};
