//! Functional-program primitives evaluated over a scene graph.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::template::{ProgramStep, QuestionTemplate, SlotName, SlotValue, StepArg};
use crate::geometry::{relative_position, Direction, RelativePosition};
use crate::layout::{Category, Segment};
use crate::scene_graph::SceneGraph;

/// Closed answer vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Yes,
    No,
    Top,
    Bottom,
    Count(u8),
}

/// Largest count representable in the vocabulary.
pub const MAX_COUNT: usize = 4;

pub const ANSWER_VOCAB: [&str; 9] = ["yes", "no", "top", "bottom", "0", "1", "2", "3", "4"];

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Top => "top",
            Answer::Bottom => "bottom",
            Answer::Count(n) => ANSWER_VOCAB[4 + n as usize],
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Answer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "yes" => Ok(Answer::Yes),
            "no" => Ok(Answer::No),
            "top" => Ok(Answer::Top),
            "bottom" => Ok(Answer::Bottom),
            other => other
                .parse::<u8>()
                .ok()
                .filter(|&n| n as usize <= MAX_COUNT)
                .map(Answer::Count)
                .ok_or_else(|| format!("`{s}` is not in the answer vocabulary")),
        }
    }
}

impl Serialize for Answer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A question instance was abandoned; the generator resamples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectSample {
    EmptySet,
    CountOutOfVocab(usize),
    NoCaption,
    CaptionBeside(RelativePosition),
    Unbound(SlotName),
}

impl fmt::Display for RejectSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectSample::EmptySet => write!(f, "unique over an empty set"),
            RejectSample::CountOutOfVocab(n) => write!(f, "count {n} exceeds the answer vocabulary"),
            RejectSample::NoCaption => write!(f, "target has no caption"),
            RejectSample::CaptionBeside(p) => write!(f, "caption is `{p}` of its target"),
            RejectSample::Unbound(s) => write!(f, "slot `{}` is unbound", s.as_str()),
        }
    }
}

pub fn exec_filter_category<'g>(segments: &[&'g Segment], category: Category) -> Vec<&'g Segment> {
    segments.iter().copied().filter(|s| s.category == category).collect()
}

/// Uniform pick from the stream.
pub fn exec_unique<'g, R: Rng + ?Sized>(segments: &[&'g Segment], rng: &mut R) -> Result<&'g Segment, RejectSample> {
    match segments.len() {
        0 => Err(RejectSample::EmptySet),
        1 => Ok(segments[0]),
        n => Ok(segments[rng.random_range(0..n)]),
    }
}

/// Segments other than `anchor` lying in the half-plane `direction` of it.
pub fn exec_relate<'g>(anchor: &Segment, direction: Direction, graph: &'g SceneGraph) -> Vec<&'g Segment> {
    graph
        .segments()
        .iter()
        .filter(|s| s.id != anchor.id)
        .filter(|s| relative_position(&s.bbox, &anchor.bbox).projects_onto(direction))
        .collect()
}

pub fn exec_count(segments: &[&Segment]) -> Result<Answer, RejectSample> {
    let n = segments.len();
    if n > MAX_COUNT {
        Err(RejectSample::CountOutOfVocab(n))
    } else {
        Ok(Answer::Count(n as u8))
    }
}

pub fn exec_exist(segments: &[&Segment]) -> Answer {
    if segments.is_empty() {
        Answer::No
    } else {
        Answer::Yes
    }
}

/// Which side of `target` its caption sits on.
pub fn exec_caption_position(target: &Segment, graph: &SceneGraph) -> Result<Answer, RejectSample> {
    let caption = graph.caption_of(&target.id).ok_or(RejectSample::NoCaption)?;
    let pos = relative_position(&caption.bbox, &target.bbox);
    if pos.projects_onto(Direction::Top) {
        Ok(Answer::Top)
    } else if pos.projects_onto(Direction::Bottom) {
        Ok(Answer::Bottom)
    } else {
        Err(RejectSample::CaptionBeside(pos))
    }
}

/// One executed step, kept for auditing generated answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg: Option<String>,
    /// Segment ids produced by the step, or the answer token.
    pub output: Vec<String>,
    pub step: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub answer: Answer,
    pub trace: Vec<TraceStep>,
}

enum Value<'g> {
    Segments(Vec<&'g Segment>),
    Segment(&'g Segment),
    Answer(Answer),
}

fn ids(segs: &[&Segment]) -> Vec<String> {
    segs.iter().map(|s| s.id.clone()).collect()
}

/// Run a template's program against a graph with the given slot bindings.
///
/// Steps must already be well typed (templates are checked on load).
pub fn execute<R: Rng + ?Sized>(
    template: &QuestionTemplate,
    bindings: &BTreeMap<SlotName, SlotValue>,
    graph: &SceneGraph,
    rng: &mut R,
) -> Result<Execution, RejectSample> {
    let resolve = |arg: StepArg| -> Result<SlotValue, RejectSample> {
        match arg {
            StepArg::Literal(v) => Ok(v),
            StepArg::Slot(name) => bindings.get(&name).copied().ok_or(RejectSample::Unbound(name)),
        }
    };

    let mut value = Value::Segments(graph.segments().iter().collect());
    let mut trace = Vec::with_capacity(template.program.len());
    for step in &template.program {
        let arg = step.arg().map(resolve).transpose()?;
        value = match (step, value, arg) {
            (ProgramStep::FilterCategory(_), Value::Segments(set), Some(SlotValue::Category(c))) => {
                Value::Segments(exec_filter_category(&set, c))
            }
            (ProgramStep::Unique, Value::Segments(set), _) => Value::Segment(exec_unique(&set, rng)?),
            (ProgramStep::Relate(_), Value::Segment(anchor), Some(SlotValue::Direction(d))) => {
                Value::Segments(exec_relate(anchor, d, graph))
            }
            (ProgramStep::Count, Value::Segments(set), _) => Value::Answer(exec_count(&set)?),
            (ProgramStep::Exist, Value::Segments(set), _) => Value::Answer(exec_exist(&set)),
            (ProgramStep::CaptionPosition, Value::Segment(target), _) => {
                Value::Answer(exec_caption_position(target, graph)?)
            }
            _ => unreachable!("template `{}` passed type checking", template.template_id),
        };
        trace.push(TraceStep {
            arg: arg.map(|a| a.as_str().to_owned()),
            output: match &value {
                Value::Segments(set) => ids(set),
                Value::Segment(s) => vec![s.id.clone()],
                Value::Answer(a) => vec![a.as_str().to_owned()],
            },
            step: step.name().to_owned(),
        });
    }
    match value {
        Value::Answer(answer) => Ok(Execution { answer, trace }),
        _ => unreachable!("programs end in an answer step"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::Page;
    use crate::scene_graph::{build_scene_graph, SceneGraphConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seg(id: &str, category: Category, c: [f64; 4]) -> Segment {
        Segment {
            id: id.into(),
            category,
            bbox: BBox::new(c[0], c[1], c[2], c[3]).unwrap(),
            text: String::new(),
            score: 1.0,
        }
    }

    fn graph(segments: Vec<Segment>) -> SceneGraph {
        let page = Page {
            page_id: "p".into(),
            width: 1000.0,
            height: 1000.0,
            segments,
        };
        build_scene_graph(&page, &SceneGraphConfig::default()).unwrap()
    }

    #[test]
    fn vocab_has_nine_tokens() {
        assert_eq!(ANSWER_VOCAB.len(), 9);
        for tok in ANSWER_VOCAB {
            assert_eq!(tok.parse::<Answer>().unwrap().as_str(), tok);
        }
        assert!("5".parse::<Answer>().is_err());
        assert_eq!("YES".parse::<Answer>().unwrap(), Answer::Yes);
    }

    #[test]
    fn filter_by_category() {
        let g = graph(vec![
            seg("a", Category::Title, [0., 0., 10., 10.]),
            seg("b", Category::Text, [0., 20., 10., 30.]),
            seg("c", Category::Text, [0., 40., 10., 50.]),
        ]);
        let all: Vec<&Segment> = g.segments().iter().collect();
        assert_eq!(exec_filter_category(&all, Category::Text).len(), 2);
        assert!(exec_filter_category(&all, Category::Table).is_empty());
    }

    #[test]
    fn unique_rules() {
        let a = seg("a", Category::Text, [0., 0., 1., 1.]);
        let b = seg("b", Category::Text, [0., 0., 1., 1.]);
        let c = seg("c", Category::Text, [0., 0., 1., 1.]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(exec_unique(&[&a], &mut rng).unwrap().id, "a");
        assert_eq!(exec_unique(&[], &mut rng), Err(RejectSample::EmptySet));
        let pick = |seed| exec_unique(&[&a, &b, &c], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().id.clone();
        assert_eq!(pick(3), pick(3));
    }

    #[test]
    fn relate_uses_half_planes() {
        let g = graph(vec![
            seg("anchor", Category::Text, [40., 40., 60., 60.]),
            seg("left", Category::Text, [0., 40., 20., 60.]),
            seg("top", Category::Text, [40., 0., 60., 20.]),
            seg("rt", Category::Text, [80., 0., 100., 20.]),
        ]);
        let anchor = g.segment("anchor").unwrap();
        let left: Vec<_> = exec_relate(anchor, Direction::Left, &g).iter().map(|s| s.id.as_str()).collect();
        assert_eq!(left, ["left"]);
        let mut top: Vec<_> = exec_relate(anchor, Direction::Top, &g).iter().map(|s| s.id.as_str()).collect();
        top.sort();
        assert_eq!(top, ["rt", "top"]);

        let lonely = graph(vec![seg("x", Category::Text, [0., 0., 5., 5.])]);
        for d in Direction::ALL {
            assert!(exec_relate(lonely.segment("x").unwrap(), d, &lonely).is_empty());
        }
    }

    #[test]
    fn count_and_exist() {
        let s = seg("s", Category::Text, [0., 0., 1., 1.]);
        assert_eq!(exec_count(&[]).unwrap().as_str(), "0");
        assert_eq!(exec_count(&[&s, &s, &s]).unwrap().as_str(), "3");
        assert_eq!(exec_count(&[&s; 7]), Err(RejectSample::CountOutOfVocab(7)));
        assert_eq!(exec_exist(&[]), Answer::No);
        assert_eq!(exec_exist(&[&s]), Answer::Yes);
    }

    #[test]
    fn caption_sides() {
        let below = graph(vec![
            seg("f", Category::Figure, [0., 0., 100., 100.]),
            seg("c", Category::Text, [0., 110., 100., 120.]),
        ]);
        assert_eq!(exec_caption_position(below.segment("f").unwrap(), &below), Ok(Answer::Bottom));

        let above = graph(vec![
            seg("c", Category::Text, [0., 0., 100., 10.]),
            seg("f", Category::Figure, [0., 20., 100., 120.]),
        ]);
        assert_eq!(exec_caption_position(above.segment("f").unwrap(), &above), Ok(Answer::Top));

        let bare = graph(vec![seg("f", Category::Figure, [0., 0., 100., 100.])]);
        assert_eq!(
            exec_caption_position(bare.segment("f").unwrap(), &bare),
            Err(RejectSample::NoCaption)
        );
    }

    #[test]
    fn existence_program_on_two_titles() {
        let g = graph(vec![
            seg("t1", Category::Title, [0., 0., 100., 10.]),
            seg("t2", Category::Title, [0., 50., 100., 60.]),
        ]);
        let bank = super::super::TemplateBank::default();
        let t = bank.get("existence_title").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = execute(t, &BTreeMap::new(), &g, &mut rng).unwrap();
        assert_eq!(run.answer, Answer::Yes);
        assert_eq!(run.trace[0].output, ["t1", "t2"]);
    }
}
