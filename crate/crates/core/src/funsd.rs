//! FUNSD form annotations: entities, words and question/answer links.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Deserialize;

use crate::geometry::BBox;
use crate::layout::{normalize_text, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormLabel {
    Question,
    Answer,
    Header,
    Other,
}

impl FormLabel {
    fn parse(s: &str) -> Option<Self> {
        match s.to_lowercase().as_str() {
            "question" => Some(Self::Question),
            "answer" => Some(Self::Answer),
            "header" => Some(Self::Header),
            "other" => Some(Self::Other),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Question => "question",
            Self::Answer => "answer",
            Self::Header => "header",
            Self::Other => "other",
        }
    }
}

impl fmt::Display for FormLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub text: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormEntity {
    pub id: i64,
    pub label: FormLabel,
    pub text: String,
    pub bbox: BBox,
    pub words: Vec<Word>,
    /// Links exactly as annotated on this entity (validated, not deduplicated).
    pub links: Vec<(i64, i64)>,
}

/// A parsed annotation page.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Form {
    pub entities: Vec<FormEntity>,
    /// Deduplicated links. Question/answer links are oriented
    /// `(question, answer)`; any other pair is stored as `(min, max)`.
    pub links: Vec<(i64, i64)>,
}

impl Form {
    pub fn entity(&self, id: i64) -> Option<&FormEntity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Canonical links whose endpoints are a question and an answer.
    pub fn question_answer_links(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.links.iter().copied().filter(|&(q, a)| {
            matches!(
                (self.entity(q).map(|e| e.label), self.entity(a).map(|e| e.label)),
                (Some(FormLabel::Question), Some(FormLabel::Answer))
            )
        })
    }
}

#[derive(Deserialize)]
struct RawForm {
    form: Vec<RawEntity>,
}

#[derive(Deserialize)]
struct RawEntity {
    id: i64,
    label: String,
    #[serde(default)]
    text: String,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    #[serde(default)]
    words: Vec<RawWord>,
    #[serde(default)]
    linking: Vec<[i64; 2]>,
}

#[derive(Deserialize)]
struct RawWord {
    text: String,
    #[serde(rename = "box")]
    bbox: [f64; 4],
}

pub fn parse_funsd_file(bytes: &[u8]) -> Result<Form, IngestError> {
    let raw: RawForm = serde_json::from_slice(bytes).map_err(|e| IngestError::from_json(bytes, e))?;

    let mut labels = HashMap::new();
    for e in &raw.form {
        if labels.insert(e.id, ()).is_some() {
            return Err(entity_err(e.id, "duplicate entity id"));
        }
    }

    let mut entities = Vec::with_capacity(raw.form.len());
    for e in raw.form {
        let label = FormLabel::parse(&e.label)
            .ok_or_else(|| entity_err(e.id, format!("unknown label `{}`", e.label)))?;
        let bbox = BBox::try_from(e.bbox).map_err(|err| entity_err(e.id, err.to_string()))?;
        let mut words = Vec::with_capacity(e.words.len());
        for w in e.words {
            let bbox = BBox::try_from(w.bbox)
                .map_err(|err| entity_err(e.id, format!("word `{}`: {err}", w.text)))?;
            words.push(Word {
                text: normalize_text(&w.text),
                bbox,
            });
        }
        let text = normalize_text(&e.text);
        let joined = normalize_text(
            &words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" "),
        );
        if joined != text {
            return Err(entity_err(
                e.id,
                format!("words `{joined}` do not match entity text `{text}`"),
            ));
        }
        for &[from, to] in &e.linking {
            for end in [from, to] {
                if !labels.contains_key(&end) {
                    return Err(entity_err(e.id, format!("link references missing entity {end}")));
                }
            }
        }
        entities.push(FormEntity {
            id: e.id,
            label,
            text,
            bbox,
            words,
            links: e.linking.iter().map(|&[a, b]| (a, b)).collect(),
        });
    }

    let label_of: HashMap<i64, FormLabel> = entities.iter().map(|e| (e.id, e.label)).collect();
    let mut canonical = BTreeSet::new();
    for e in &entities {
        for &(a, b) in &e.links {
            if a == b {
                return Err(entity_err(e.id, "self link"));
            }
            let link = match (label_of[&a], label_of[&b]) {
                (FormLabel::Answer, FormLabel::Question) => (b, a),
                (FormLabel::Question, FormLabel::Answer) => (a, b),
                _ => (a.min(b), a.max(b)),
            };
            canonical.insert(link);
        }
    }

    Ok(Form {
        entities,
        links: canonical.into_iter().collect(),
    })
}

fn entity_err(entity_id: i64, message: impl Into<String>) -> IngestError {
    IngestError::Entity {
        entity_id,
        message: message.into(),
    }
}
