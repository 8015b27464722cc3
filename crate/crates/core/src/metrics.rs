//! Scoring predictions against generated datasets.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::funsd_qa::FunsdDataset;
use crate::question::{Dataset, QType, ANSWER_VOCAB};

pub const BLEU_VARIANT: &str =
    "sentence BLEU-4, uniform weights, brevity penalty, add-one smoothing on zero-match n>=2 precisions, scale 0-100";
pub const ACCURACY_VARIANT: &str = "case-insensitive exact match, scale 0-100, missing predictions count as wrong";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("reference sentence is empty")]
    EmptyReference,
    #[error("duplicate prediction for `{0}`")]
    DuplicatePrediction(String),
    #[error("prediction for unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("predictions line {line}: {message}")]
    BadPrediction { line: usize, message: String },
}

/// Lowercase, split on whitespace, and split punctuation off into its own
/// tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut current = String::new();
        for c in word.chars() {
            if c.is_alphanumeric() {
                current.extend(c.to_lowercase());
            } else {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_lowercase().collect());
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts
                .entry(w.iter().map(AsRef::as_ref).collect())
                .or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU-4 on a 0-100 scale.
///
/// Unigram precision is unsmoothed, so a hypothesis sharing no token with
/// the reference scores 0. Higher orders with no clipped match use
/// `(0 + 1) / (candidates + 1)`.
pub fn sentence_bleu<T: AsRef<str>>(reference: &[T], hypothesis: &[T]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let hyp = ngram_counts(hypothesis, n);
        let refc = ngram_counts(reference, n);
        let candidates: usize = hyp.values().sum();
        let matched: usize = hyp
            .iter()
            .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if matched > 0 {
            matched as f64 / candidates as f64
        } else if n == 1 {
            return Ok(0.0);
        } else {
            1.0 / (candidates as f64 + 1.0)
        };
        log_sum += 0.25 * precision.ln();
    }
    let (c, r) = (hypothesis.len() as f64, reference.len() as f64);
    let brevity = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(100.0 * brevity * log_sum.exp())
}

/// Predictions file: one `{"question_id": .., "prediction": ..}` per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub question_id: String,
    pub prediction: String,
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>, MetricError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MetricError::BadPrediction {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub count_scored: usize,
    pub count_skipped: usize,
    pub corpus_score: f64,
    pub metric: String,
    pub per_question: Vec<QuestionScore>,
    pub variant: String,
}

impl MetricReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serialization is infallible");
        bytes.push(b'\n');
        bytes
    }
}

fn index_predictions<'p>(
    predictions: &'p [PredictionRecord],
    known: &HashSet<&str>,
) -> Result<HashMap<&'p str, &'p str>, MetricError> {
    let mut map = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !known.contains(p.question_id.as_str()) {
            return Err(MetricError::UnknownQuestion(p.question_id.clone()));
        }
        if map.insert(p.question_id.as_str(), p.prediction.as_str()).is_some() {
            return Err(MetricError::DuplicatePrediction(p.question_id.clone()));
        }
    }
    Ok(map)
}

fn report(metric: &str, variant: &str, per_question: Vec<QuestionScore>, skipped: usize) -> MetricReport {
    let corpus_score = if per_question.is_empty() {
        0.0
    } else {
        per_question.iter().map(|q| q.value).sum::<f64>() / per_question.len() as f64
    };
    MetricReport {
        count_scored: per_question.len(),
        count_skipped: skipped,
        corpus_score,
        metric: metric.into(),
        per_question,
        variant: variant.into(),
    }
}

/// Exact-match accuracy over every reference question. Missing predictions
/// score 0 and are counted as skipped.
pub fn exact_match_accuracy(
    references: &Dataset,
    predictions: &[PredictionRecord],
) -> Result<MetricReport, MetricError> {
    let known: HashSet<&str> = references.questions.iter().map(|q| q.question_id.as_str()).collect();
    let preds = index_predictions(predictions, &known)?;
    let mut skipped = 0;
    let per_question = references
        .questions
        .iter()
        .map(|q| {
            let value = match preds.get(q.question_id.as_str()) {
                Some(p) if p.trim().eq_ignore_ascii_case(q.answer.as_str()) => 100.0,
                Some(_) => 0.0,
                None => {
                    skipped += 1;
                    0.0
                }
            };
            QuestionScore {
                question_id: q.question_id.clone(),
                value,
            }
        })
        .collect();
    Ok(report("exact_match_accuracy", ACCURACY_VARIANT, per_question, skipped))
}

/// Average sentence BLEU of predicted spans against reference answer text.
pub fn average_bleu(references: &FunsdDataset, predictions: &[PredictionRecord]) -> Result<MetricReport, MetricError> {
    let known: HashSet<&str> = references.questions.iter().map(|q| q.question_id.as_str()).collect();
    let preds = index_predictions(predictions, &known)?;
    let mut skipped = 0;
    let mut per_question = Vec::with_capacity(references.questions.len());
    for q in &references.questions {
        let value = match preds.get(q.question_id.as_str()) {
            Some(p) => sentence_bleu(&tokenize(&q.answer_text), &tokenize(p))?,
            None => {
                skipped += 1;
                0.0
            }
        };
        per_question.push(QuestionScore {
            question_id: q.question_id.clone(),
            value,
        });
    }
    Ok(report("sentence_bleu", BLEU_VARIANT, per_question, skipped))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub answers: BTreeMap<String, usize>,
    pub qtypes: BTreeMap<String, usize>,
    pub splits: BTreeMap<String, usize>,
    pub templates: BTreeMap<String, usize>,
    pub total: usize,
}

impl DatasetStats {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("stats serialization is infallible");
        bytes.push(b'\n');
        bytes
    }
}

fn zeroed<'a>(keys: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    keys.into_iter().map(|k| (k.to_owned(), 0)).collect()
}

const SPLITS: [&str; 3] = ["train", "val", "test"];

/// Per-split, per-type, per-template and per-answer counts. Every split,
/// question type and vocabulary token is listed even when its count is 0.
pub fn dataset_stats(dataset: &Dataset) -> DatasetStats {
    let mut stats = DatasetStats {
        answers: zeroed(ANSWER_VOCAB),
        qtypes: zeroed([QType::Position, QType::Counting, QType::Existence].map(QType::as_str)),
        splits: zeroed(SPLITS),
        templates: BTreeMap::new(),
        total: dataset.questions.len(),
    };
    for q in &dataset.questions {
        *stats.splits.entry(q.split.as_str().into()).or_default() += 1;
        *stats.qtypes.entry(q.qtype.as_str().into()).or_default() += 1;
        *stats.templates.entry(q.template_id.clone()).or_default() += 1;
        *stats.answers.entry(q.answer.as_str().into()).or_default() += 1;
    }
    stats
}

/// Split counts for an extractive dataset; it has no answer vocabulary.
pub fn funsd_stats(dataset: &FunsdDataset) -> DatasetStats {
    let mut stats = DatasetStats {
        splits: zeroed(SPLITS),
        total: dataset.questions.len(),
        ..Default::default()
    };
    for q in &dataset.questions {
        *stats.splits.entry(q.split.as_str().into()).or_default() += 1;
    }
    stats
}
