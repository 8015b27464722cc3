//! Question templates: skeleton strings with slots plus a functional program.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QuestionError;
use crate::geometry::Direction;
use crate::layout::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QType {
    Position,
    Counting,
    Existence,
}

impl QType {
    pub fn as_str(self) -> &'static str {
        match self {
            QType::Position => "position",
            QType::Counting => "counting",
            QType::Existence => "existence",
        }
    }
}

impl fmt::Display for QType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    TopBottom,
    Number,
    YesNo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotName {
    E,
    E1,
    E2,
    R,
}

impl SlotName {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotName::E => "E",
            SlotName::E1 => "E1",
            SlotName::E2 => "E2",
            SlotName::R => "R",
        }
    }

    pub fn placeholder(self) -> String {
        format!("<{}>", self.as_str())
    }
}

impl FromStr for SlotName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E" => Ok(SlotName::E),
            "E1" => Ok(SlotName::E1),
            "E2" => Ok(SlotName::E2),
            "R" => Ok(SlotName::R),
            _ => Err(format!("unknown slot `{s}`")),
        }
    }
}

/// A value a slot can be bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotValue {
    Category(Category),
    Direction(Direction),
}

impl SlotValue {
    /// Wording substituted into question text.
    pub fn word(self) -> &'static str {
        match self {
            SlotValue::Category(c) => c.noun(),
            SlotValue::Direction(d) => d.as_str(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SlotValue::Category(c) => c.as_str(),
            SlotValue::Direction(d) => d.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: SlotName,
    pub domain: Vec<SlotValue>,
}

/// Argument of a program step: a slot reference or a literal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepArg {
    Slot(SlotName),
    Literal(SlotValue),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramStep {
    FilterCategory(StepArg),
    Unique,
    Relate(StepArg),
    Count,
    Exist,
    CaptionPosition,
}

impl ProgramStep {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramStep::FilterCategory(_) => "filter_category",
            ProgramStep::Unique => "unique",
            ProgramStep::Relate(_) => "relate",
            ProgramStep::Count => "count",
            ProgramStep::Exist => "exist",
            ProgramStep::CaptionPosition => "caption_position",
        }
    }

    pub fn arg(&self) -> Option<StepArg> {
        match self {
            ProgramStep::FilterCategory(a) | ProgramStep::Relate(a) => Some(*a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionTemplate {
    pub template_id: String,
    pub qtype: QType,
    pub skeletons: Vec<String>,
    pub slots: Vec<Slot>,
    pub program: Vec<ProgramStep>,
    pub answer_type: AnswerType,
}

impl QuestionTemplate {
    pub fn slot(&self, name: SlotName) -> Option<&Slot> {
        self.slots.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateBank {
    pub templates: Vec<QuestionTemplate>,
}

// ---------------------------------------------------------------------------
// file format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BankRecord {
    templates: Vec<TemplateRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateRecord {
    template_id: String,
    qtype: QType,
    skeletons: Vec<String>,
    #[serde(default)]
    slots: Vec<SlotRecord>,
    program: Vec<StepRecord>,
    answer_type: AnswerType,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotRecord {
    name: String,
    domain: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRecord {
    step: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arg: Option<String>,
}

/// Kinds of values flowing between program steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Segments,
    Segment,
    Answer,
}

impl TemplateBank {
    pub fn parse(bytes: &[u8]) -> Result<Self, QuestionError> {
        let record: BankRecord = serde_json::from_slice(bytes)
            .map_err(|e| QuestionError::Template(format!("template bank: {e}")))?;
        let mut ids = HashSet::new();
        let mut templates = Vec::with_capacity(record.templates.len());
        for t in record.templates {
            if !ids.insert(t.template_id.clone()) {
                return Err(QuestionError::Template(format!(
                    "duplicate template id `{}`",
                    t.template_id
                )));
            }
            templates.push(build_template(t)?);
        }
        Ok(TemplateBank { templates })
    }

    pub fn to_json(&self) -> Vec<u8> {
        let record = BankRecord {
            templates: self.templates.iter().map(template_record).collect(),
        };
        serde_json::to_vec_pretty(&record).expect("template bank serialization is infallible")
    }

    pub fn get(&self, template_id: &str) -> Option<&QuestionTemplate> {
        self.templates.iter().find(|t| t.template_id == template_id)
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

impl Default for TemplateBank {
    /// The built-in bank: one template per question type, two skeletons each.
    fn default() -> Self {
        TemplateBank::parse(DEFAULT_BANK.as_bytes()).expect("built-in template bank is valid")
    }
}

pub const DEFAULT_BANK: &str = r#"{
  "templates": [
    {
      "template_id": "position_caption",
      "qtype": "position",
      "skeletons": [
        "Where is the caption of the <E> located at?",
        "The caption is on which side of the <E>?"
      ],
      "slots": [{"name": "E", "domain": ["table", "figure"]}],
      "program": [
        {"step": "filter_category", "arg": "E"},
        {"step": "unique"},
        {"step": "caption_position"}
      ],
      "answer_type": "top_bottom"
    },
    {
      "template_id": "counting_relate",
      "qtype": "counting",
      "skeletons": [
        "How many <E1> objects are located at the <R> side of <E2>?",
        "For <E2>, how many <E1> objects are located at its <R> side?"
      ],
      "slots": [
        {"name": "E1", "domain": ["text", "title", "list", "table", "figure", "table_caption", "figure_caption"]},
        {"name": "E2", "domain": ["text", "title", "list", "table", "figure", "table_caption", "figure_caption"]},
        {"name": "R", "domain": ["left", "right", "top", "bottom"]}
      ],
      "program": [
        {"step": "filter_category", "arg": "E2"},
        {"step": "unique"},
        {"step": "relate", "arg": "R"},
        {"step": "filter_category", "arg": "E1"},
        {"step": "count"}
      ],
      "answer_type": "number"
    },
    {
      "template_id": "existence_title",
      "qtype": "existence",
      "skeletons": [
        "Do title objects exist on this page?",
        "Are there any titles that exist?"
      ],
      "slots": [],
      "program": [
        {"step": "filter_category", "arg": "title"},
        {"step": "exist"}
      ],
      "answer_type": "yes_no"
    }
  ]
}"#;

fn template_err(id: &str, msg: impl fmt::Display) -> QuestionError {
    QuestionError::Template(format!("template `{id}`: {msg}"))
}

fn build_template(t: TemplateRecord) -> Result<QuestionTemplate, QuestionError> {
    let id = t.template_id.as_str();
    if t.skeletons.is_empty() {
        return Err(template_err(id, "needs at least one skeleton"));
    }

    let mut slots: Vec<Slot> = Vec::with_capacity(t.slots.len());
    for s in &t.slots {
        let name: SlotName = s.name.parse().map_err(|e| template_err(id, e))?;
        if slots.iter().any(|x| x.name == name) {
            return Err(template_err(id, format!("slot `{}` declared twice", s.name)));
        }
        if s.domain.is_empty() {
            return Err(template_err(id, format!("slot `{}` has an empty domain", s.name)));
        }
        let domain = s
            .domain
            .iter()
            .map(|v| match name {
                SlotName::R => v.parse::<Direction>().map(SlotValue::Direction),
                _ => v.parse::<Category>().map(SlotValue::Category),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| template_err(id, e))?;
        slots.push(Slot { name, domain });
    }

    for skeleton in &t.skeletons {
        for placeholder in placeholders(skeleton) {
            let name: SlotName = placeholder
                .parse()
                .map_err(|_| template_err(id, format!("unknown placeholder `<{placeholder}>`")))?;
            if !slots.iter().any(|s| s.name == name) {
                return Err(template_err(id, format!("placeholder `<{placeholder}>` has no slot")));
            }
        }
    }

    let resolve = |arg: &Option<String>, step: &str| -> Result<StepArg, QuestionError> {
        let raw = arg
            .as_deref()
            .ok_or_else(|| template_err(id, format!("step `{step}` needs an argument")))?;
        if let Ok(name) = raw.parse::<SlotName>() {
            if slots.iter().any(|s| s.name == name) {
                return Ok(StepArg::Slot(name));
            }
            return Err(template_err(id, format!("step `{step}` references undeclared slot `{raw}`")));
        }
        if let Ok(c) = raw.parse::<Category>() {
            return Ok(StepArg::Literal(SlotValue::Category(c)));
        }
        if let Ok(d) = raw.parse::<Direction>() {
            return Ok(StepArg::Literal(SlotValue::Direction(d)));
        }
        Err(template_err(id, format!("step `{step}`: cannot resolve argument `{raw}`")))
    };

    let mut program = Vec::with_capacity(t.program.len());
    for s in &t.program {
        let step = match s.step.as_str() {
            "filter_category" => ProgramStep::FilterCategory(resolve(&s.arg, &s.step)?),
            "relate" => ProgramStep::Relate(resolve(&s.arg, &s.step)?),
            "unique" => ProgramStep::Unique,
            "count" => ProgramStep::Count,
            "exist" => ProgramStep::Exist,
            "caption_position" => ProgramStep::CaptionPosition,
            other => return Err(template_err(id, format!("unknown step `{other}`"))),
        };
        if !matches!(step, ProgramStep::FilterCategory(_) | ProgramStep::Relate(_)) && s.arg.is_some() {
            return Err(template_err(id, format!("step `{}` takes no argument", s.step)));
        }
        program.push(step);
    }

    let template = QuestionTemplate {
        template_id: t.template_id.clone(),
        qtype: t.qtype,
        skeletons: t.skeletons.clone(),
        slots,
        program,
        answer_type: t.answer_type,
    };
    typecheck(&template)?;
    Ok(template)
}

fn arg_is(template: &QuestionTemplate, arg: StepArg, want_category: bool) -> bool {
    let is_cat = |v: &SlotValue| matches!(v, SlotValue::Category(_));
    match arg {
        StepArg::Literal(v) => is_cat(&v) == want_category,
        StepArg::Slot(name) => template
            .slot(name)
            .is_some_and(|s| s.domain.iter().all(|v| is_cat(v) == want_category)),
    }
}

fn typecheck(t: &QuestionTemplate) -> Result<(), QuestionError> {
    let id = t.template_id.as_str();
    let mut kind = Kind::Segments;
    for step in &t.program {
        let (input, output) = match step {
            ProgramStep::FilterCategory(arg) => {
                if !arg_is(t, *arg, true) {
                    return Err(template_err(id, "filter_category needs a category argument"));
                }
                (Kind::Segments, Kind::Segments)
            }
            ProgramStep::Relate(arg) => {
                if !arg_is(t, *arg, false) {
                    return Err(template_err(id, "relate needs a direction argument"));
                }
                (Kind::Segment, Kind::Segments)
            }
            ProgramStep::Unique => (Kind::Segments, Kind::Segment),
            ProgramStep::Count | ProgramStep::Exist => (Kind::Segments, Kind::Answer),
            ProgramStep::CaptionPosition => (Kind::Segment, Kind::Answer),
        };
        if kind != input {
            return Err(template_err(
                id,
                format!("step `{}` expects {input:?} but receives {kind:?}", step.name()),
            ));
        }
        kind = output;
    }
    let expected = match t.program.last() {
        Some(ProgramStep::Count) => AnswerType::Number,
        Some(ProgramStep::Exist) => AnswerType::YesNo,
        Some(ProgramStep::CaptionPosition) => AnswerType::TopBottom,
        _ => return Err(template_err(id, "program must end in count, exist or caption_position")),
    };
    if kind != Kind::Answer || expected != t.answer_type {
        return Err(template_err(id, "answer_type does not match the final program step"));
    }
    Ok(())
}

/// Names inside `<...>` in a skeleton.
pub fn placeholders(skeleton: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = skeleton;
    while let Some(start) = rest.find('<') {
        let tail = &rest[start + 1..];
        match tail.find('>') {
            Some(end) => {
                out.push(&tail[..end]);
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    out
}

fn template_record(t: &QuestionTemplate) -> TemplateRecord {
    let arg_str = |a: StepArg| match a {
        StepArg::Slot(n) => n.as_str().to_owned(),
        StepArg::Literal(v) => v.as_str().to_owned(),
    };
    TemplateRecord {
        template_id: t.template_id.clone(),
        qtype: t.qtype,
        skeletons: t.skeletons.clone(),
        slots: t
            .slots
            .iter()
            .map(|s| SlotRecord {
                name: s.name.as_str().to_owned(),
                domain: s.domain.iter().map(|v| v.as_str().to_owned()).collect(),
            })
            .collect(),
        program: t
            .program
            .iter()
            .map(|s| StepRecord {
                step: s.name().to_owned(),
                arg: s.arg().map(arg_str),
            })
            .collect(),
        answer_type: t.answer_type,
    }
}
