//! Extractive (span) QA pairs from linked form annotations.
//!
//! Entities are serialized in reading order (the same algorithm used for
//! layout segments, applied to entity boxes), words within an entity in
//! annotation order. Spans are `[start, end)` token indices into that stream.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::funsd::Form;
use crate::geometry::BBox;
use crate::layout::normalize_text;
use crate::question::{question_id, seeded_stream, Split, SplitRatios};
use crate::scene_graph::{order_boxes, SceneGraphError};

pub const SPAN_CONVENTION: &str = "start-inclusive,end-exclusive";
pub const TOKEN_ORDER: &str = "entity-reading-order";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    pub bbox: BBox,
    pub entity: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenStream {
    pub page_id: String,
    pub tokens: Vec<Token>,
}

impl TokenStream {
    /// Tokens `[start, end)` joined with single spaces.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        self.tokens[start..end]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractiveQAPair {
    pub answer_text: String,
    pub end: usize,
    pub page_id: String,
    pub question: String,
    pub question_id: String,
    pub split: Split,
    pub start: usize,
}

/// A link that produced no pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkippedLink {
    pub answer_id: i64,
    pub page_id: String,
    pub question_id: i64,
    pub reason: String,
}

pub fn serialize_tokens(page_id: &str, form: &Form) -> Result<TokenStream, SceneGraphError> {
    let boxes: Vec<(i64, BBox)> = form.entities.iter().map(|e| (e.id, e.bbox)).collect();
    let order = order_boxes(&boxes)?.order;
    let mut tokens = Vec::new();
    for id in order {
        let entity = form.entity(id).expect("ordered ids come from the form");
        tokens.extend(
            entity
                .words
                .iter()
                .filter(|w| !w.text.is_empty())
                .map(|w| Token {
                    bbox: w.bbox,
                    entity: id,
                    text: w.text.clone(),
                }),
        );
    }
    Ok(TokenStream {
        page_id: page_id.to_owned(),
        tokens,
    })
}

/// One pair per canonical question→answer link. Splits are left as train.
pub fn derive_pairs(form: &Form, stream: &TokenStream) -> (Vec<ExtractiveQAPair>, Vec<SkippedLink>) {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (q, a) in form.question_answer_links() {
        let question = form.entity(q).expect("link endpoints are validated");
        let positions: Vec<usize> = stream
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.entity == a)
            .map(|(i, _)| i)
            .collect();
        let (Some(&start), Some(&last)) = (positions.first(), positions.last()) else {
            skipped.push(SkippedLink {
                answer_id: a,
                page_id: stream.page_id.clone(),
                question_id: q,
                reason: "answer entity has no words".into(),
            });
            continue;
        };
        pairs.push(ExtractiveQAPair {
            answer_text: normalize_text(&stream.span_text(start, last + 1)),
            end: last + 1,
            page_id: stream.page_id.clone(),
            question: question.text.clone(),
            question_id: question_id(&stream.page_id, pairs.len()),
            split: Split::Train,
            start,
        });
    }
    (pairs, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunsdInfo {
    pub ratios: BTreeMap<String, f64>,
    pub seed: u64,
    pub span_convention: String,
    pub token_order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunsdDataset {
    pub contexts: Vec<TokenStream>,
    pub info: FunsdInfo,
    pub questions: Vec<ExtractiveQAPair>,
    pub warnings: Vec<SkippedLink>,
}

impl FunsdDataset {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("dataset serialization is infallible");
        bytes.push(b'\n');
        bytes
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FunsdQaError {
    #[error("duplicate page id `{0}`")]
    DuplicatePage(String),
    #[error(transparent)]
    Order(#[from] SceneGraphError),
}

/// Build the extractive dataset. Pages are shuffled with the seed and then
/// each goes to the split furthest below its share of the total pair count,
/// so all pairs from a page share a split.
pub fn emit_funsd_dataset(
    pages: &[(String, Form)],
    ratios: &SplitRatios,
    seed: u64,
) -> Result<FunsdDataset, FunsdQaError> {
    let mut sorted: Vec<&(String, Form)> = pages.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(FunsdQaError::DuplicatePage(w[0].0.clone()));
        }
    }

    let mut derived = Vec::with_capacity(sorted.len());
    for (page_id, form) in &sorted {
        let stream = serialize_tokens(page_id, form)?;
        let (pairs, skipped) = derive_pairs(form, &stream);
        derived.push((stream, pairs, skipped));
    }

    let total_pairs: usize = derived.iter().map(|d| d.1.len()).sum();
    let mut order: Vec<usize> = (0..derived.len()).collect();
    order.shuffle(&mut seeded_stream(seed, b"\x00split"));
    let mut assigned = vec![0usize; ratios.entries().len()];
    let mut split_of = vec![Split::Train; derived.len()];
    for i in order {
        let k = (0..assigned.len())
            .max_by(|&a, &b| {
                let da = ratios.entries()[a].1 * total_pairs as f64 - assigned[a] as f64;
                let db = ratios.entries()[b].1 * total_pairs as f64 - assigned[b] as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("at least one split");
        assigned[k] += derived[i].1.len();
        split_of[i] = ratios.entries()[k].0;
    }

    let mut contexts = Vec::with_capacity(derived.len());
    let mut questions = Vec::with_capacity(total_pairs);
    let mut warnings = Vec::new();
    for ((stream, pairs, skipped), split) in derived.into_iter().zip(split_of) {
        questions.extend(pairs.into_iter().map(|mut p| {
            p.split = split;
            p
        }));
        warnings.extend(skipped);
        contexts.push(stream);
    }

    Ok(FunsdDataset {
        contexts,
        info: FunsdInfo {
            ratios: ratios.to_map(),
            seed,
            span_convention: SPAN_CONVENTION.into(),
            token_order: TOKEN_ORDER.into(),
        },
        questions,
        warnings,
    })
}

/// Count of links a form should yield pairs for.
pub fn canonical_link_count(form: &Form) -> usize {
    form.question_answer_links().count()
}
