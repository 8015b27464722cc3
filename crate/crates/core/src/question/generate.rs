use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::program::{execute, Answer, TraceStep};
use super::template::{QType, QuestionTemplate, SlotName, SlotValue, TemplateBank};
use super::Split;
use crate::scene_graph::SceneGraph;

/// Resamples allowed per requested question before giving up on it.
pub const DEFAULT_RETRY_CAP: usize = 50;

/// Random stream derived from the root seed and a stream label.
pub fn seeded_stream(root_seed: u64, label: &[u8]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(root_seed.to_le_bytes());
    hasher.update(label);
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Per-page stream: depends only on the root seed and the page id.
pub fn page_stream(root_seed: u64, page_id: &str) -> ChaCha8Rng {
    seeded_stream(root_seed, page_id.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QAPair {
    pub answer: Answer,
    /// Slot values the question was realized with.
    pub bindings: BTreeMap<String, String>,
    pub page_id: String,
    pub qtype: QType,
    pub question: String,
    pub question_id: String,
    pub split: Split,
    pub template_id: String,
    pub trace: Vec<TraceStep>,
}

impl QAPair {
    /// Per-page counter encoded in the question id.
    pub fn counter(&self) -> usize {
        self.question_id
            .rsplit('#')
            .next()
            .and_then(|c| c.parse().ok())
            .unwrap_or(usize::MAX)
    }
}

pub fn question_id(page_id: &str, counter: usize) -> String {
    format!("{page_id}#{counter}")
}

/// Substitute slot values into a skeleton.
pub fn realize(skeleton: &str, bindings: &BTreeMap<SlotName, SlotValue>) -> String {
    bindings.iter().fold(skeleton.to_owned(), |text, (name, value)| {
        text.replace(&name.placeholder(), value.word())
    })
}

fn sample_bindings<R: Rng + ?Sized>(template: &QuestionTemplate, rng: &mut R) -> BTreeMap<SlotName, SlotValue> {
    template
        .slots
        .iter()
        .map(|slot| (slot.name, slot.domain[rng.random_range(0..slot.domain.len())]))
        .collect()
}

/// Generate up to `quota` questions for one page.
///
/// Every pair is labeled [`Split::Train`]; dataset emission assigns the
/// real split.
pub fn generate_for_page(
    graph: &SceneGraph,
    bank: &TemplateBank,
    quota: usize,
    seed: u64,
    retry_cap: usize,
) -> Vec<QAPair> {
    let mut out = Vec::with_capacity(quota);
    if bank.is_empty() {
        return out;
    }
    let mut rng = page_stream(seed, graph.page_id());
    for _ in 0..quota {
        for _ in 0..retry_cap.max(1) {
            let template = &bank.templates[rng.random_range(0..bank.templates.len())];
            let skeleton = &template.skeletons[rng.random_range(0..template.skeletons.len())];
            let bindings = sample_bindings(template, &mut rng);
            let Ok(run) = execute(template, &bindings, graph, &mut rng) else {
                continue;
            };
            out.push(QAPair {
                answer: run.answer,
                bindings: bindings
                    .iter()
                    .map(|(k, v)| (k.as_str().to_owned(), v.as_str().to_owned()))
                    .collect(),
                page_id: graph.page_id().to_owned(),
                qtype: template.qtype,
                question: realize(skeleton, &bindings),
                question_id: question_id(graph.page_id(), out.len()),
                split: Split::Train,
                template_id: template.template_id.clone(),
                trace: run.trace,
            });
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, Direction};
    use crate::layout::{Category, Page};
    use crate::scene_graph::{build_scene_graph, SceneGraphConfig};

    fn empty_graph() -> SceneGraph {
        let page = Page {
            page_id: "blank".into(),
            width: 100.0,
            height: 100.0,
            segments: vec![],
        };
        build_scene_graph(&page, &SceneGraphConfig::default()).unwrap()
    }

    #[test]
    fn blank_page_yields_existence_no() {
        let pairs = generate_for_page(&empty_graph(), &TemplateBank::default(), 5, 1, DEFAULT_RETRY_CAP);
        assert_eq!(pairs.len(), 5);
        for (i, p) in pairs.iter().enumerate() {
            assert_eq!(p.qtype, QType::Existence);
            assert_eq!(p.answer, Answer::No);
            assert_eq!(p.question_id, format!("blank#{i}"));
            assert_eq!(p.counter(), i);
        }
    }

    #[test]
    fn zero_quota() {
        assert!(generate_for_page(&empty_graph(), &TemplateBank::default(), 0, 1, 50).is_empty());
    }

    #[test]
    fn realize_fills_all_slots() {
        let bindings = BTreeMap::from([
            (SlotName::E1, SlotValue::Category(Category::FigureCaption)),
            (SlotName::E2, SlotValue::Category(Category::Table)),
            (SlotName::R, SlotValue::Direction(Direction::Left)),
        ]);
        assert_eq!(
            realize("How many <E1> objects are located at the <R> side of <E2>?", &bindings),
            "How many figure caption objects are located at the left side of table?"
        );
    }

    #[test]
    fn streams_depend_on_seed_and_page() {
        let a: u64 = page_stream(1, "p").random();
        let b: u64 = page_stream(1, "p").random();
        let c: u64 = page_stream(2, "p").random();
        let d: u64 = page_stream(1, "q").random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn generation_is_deterministic() {
        let page = Page {
            page_id: "p".into(),
            width: 200.0,
            height: 200.0,
            segments: (0..6)
                .map(|i| crate::layout::Segment {
                    id: format!("s{i}"),
                    category: [Category::Title, Category::Text, Category::Figure][i % 3],
                    bbox: BBox::new((i % 2) as f64 * 100.0, (i / 2) as f64 * 60.0, (i % 2) as f64 * 100.0 + 90.0, (i / 2) as f64 * 60.0 + 50.0).unwrap(),
                    text: String::new(),
                    score: 1.0,
                })
                .collect(),
        };
        let g = build_scene_graph(&page, &SceneGraphConfig::default()).unwrap();
        let bank = TemplateBank::default();
        let a = generate_for_page(&g, &bank, 8, 42, 50);
        let b = generate_for_page(&g, &bank, 8, 42, 50);
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
    }
}
