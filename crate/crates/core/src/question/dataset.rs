//! Dataset emission: page-level split assignment and exact split sizes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::generate::{generate_for_page, seeded_stream, QAPair};
use super::template::TemplateBank;
use super::QuestionError;
use crate::scene_graph::SceneGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split `{s}`")),
        }
    }
}

/// Split ratios, positive and summing to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRatios(Vec<(Split, f64)>);

impl SplitRatios {
    pub fn new(ratios: Vec<(Split, f64)>) -> Result<Self, String> {
        if ratios.is_empty() {
            return Err("no split ratios given".into());
        }
        for (split, r) in &ratios {
            if !(r.is_finite() && *r > 0.0) {
                return Err(format!("ratio for {split} must be positive, got {r}"));
            }
        }
        for (i, (a, _)) in ratios.iter().enumerate() {
            if ratios[..i].iter().any(|(b, _)| a == b) {
                return Err(format!("split {a} given twice"));
            }
        }
        let sum: f64 = ratios.iter().map(|(_, r)| r).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("ratios sum to {sum}, expected 1"));
        }
        Ok(SplitRatios(ratios))
    }

    /// `[train, val, test]` or `[train, test]`.
    pub fn from_values(values: &[f64]) -> Result<Self, String> {
        match values {
            [train, val, test] => Self::new(vec![(Split::Train, *train), (Split::Val, *val), (Split::Test, *test)]),
            [train, test] => Self::new(vec![(Split::Train, *train), (Split::Test, *test)]),
            _ => Err(format!("expected 2 or 3 ratios, got {}", values.len())),
        }
    }

    pub fn entries(&self) -> &[(Split, f64)] {
        &self.0
    }

    /// Apportion `total` items across splits by largest remainder; ties go to
    /// the split listed first.
    pub fn apportion(&self, total: usize) -> Vec<(Split, usize)> {
        let exact: Vec<f64> = self.0.iter().map(|(_, r)| r * total as f64).collect();
        // Nudge against representation error such as 1800 * 0.7 = 1259.9999...
        let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut by_frac: Vec<usize> = (0..counts.len()).collect();
        by_frac.sort_by(|&a, &b| {
            let fa = exact[a] - counts[a] as f64;
            let fb = exact[b] - counts[b] as f64;
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in by_frac.iter().take(total.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        self.0.iter().map(|(s, _)| *s).zip(counts).collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.0.iter().map(|(s, r)| (s.as_str().to_owned(), *r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitConfig {
    pub total: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
    /// Questions generated per page.
    pub quota: usize,
    pub retry_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub quota: usize,
    pub ratios: BTreeMap<String, f64>,
    pub retry_cap: usize,
    pub seed: u64,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub info: DatasetInfo,
    pub questions: Vec<QAPair>,
}

impl Dataset {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("dataset serialization is infallible");
        bytes.push(b'\n');
        bytes
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, QuestionError> {
        serde_json::from_slice(bytes).map_err(|e| QuestionError::Dataset(e.to_string()))
    }
}

/// Assign pages to splits in proportion to the split targets.
fn allocate_pages(n_pages: usize, targets: &[(Split, usize)]) -> Vec<usize> {
    let total: usize = targets.iter().map(|t| t.1).sum();
    if total == 0 || n_pages == 0 {
        return vec![0; targets.len()];
    }
    let weights = SplitRatios(
        targets
            .iter()
            .map(|(s, t)| (*s, *t as f64 / total as f64))
            .collect(),
    );
    let mut counts: Vec<usize> = weights.apportion(n_pages).into_iter().map(|(_, c)| c).collect();
    // Every split with a positive target needs at least one page if possible.
    for i in 0..counts.len() {
        if targets[i].1 > 0 && counts[i] == 0 {
            let donor = (0..counts.len())
                .filter(|&j| counts[j] > 1)
                .max_by_key(|&j| (counts[j], std::cmp::Reverse(j)));
            if let Some(j) = donor {
                counts[j] -= 1;
                counts[i] += 1;
            }
        }
    }
    counts
}

/// Build a dataset of exactly `config.total` questions.
///
/// Pages are shuffled with the root seed and divided among splits, so all
/// questions from one page share a split. Each split then takes questions
/// round-robin across its pages until it reaches its target.
pub fn emit_dataset(
    graphs: &[SceneGraph],
    bank: &TemplateBank,
    config: &EmitConfig,
) -> Result<Dataset, QuestionError> {
    let targets = config.ratios.apportion(config.total);

    let mut pages: Vec<&SceneGraph> = graphs.iter().collect();
    pages.sort_by(|a, b| a.page_id().cmp(b.page_id()));
    for w in pages.windows(2) {
        if w[0].page_id() == w[1].page_id() {
            return Err(QuestionError::Dataset(format!("duplicate page id `{}`", w[0].page_id())));
        }
    }
    pages.shuffle(&mut seeded_stream(config.seed, b"\x00split"));

    let allocation = allocate_pages(pages.len(), &targets);
    let mut questions = Vec::with_capacity(config.total);
    let mut shortfalls = Vec::new();
    let mut cursor = 0;
    for (&(split, target), &n) in targets.iter().zip(&allocation) {
        let mut members = pages[cursor..cursor + n].to_vec();
        cursor += n;
        members.sort_by(|a, b| a.page_id().cmp(b.page_id()));

        let generated: Vec<Vec<QAPair>> = members
            .iter()
            .map(|g| generate_for_page(g, bank, config.quota, config.seed, config.retry_cap))
            .collect();

        let mut taken = 0;
        'rounds: for round in 0..config.quota {
            for page in &generated {
                if taken == target {
                    break 'rounds;
                }
                if let Some(q) = page.get(round) {
                    let mut q = q.clone();
                    q.split = split;
                    questions.push(q);
                    taken += 1;
                }
            }
        }
        if taken < target {
            let mut by_qtype = BTreeMap::new();
            for q in generated.iter().flatten() {
                *by_qtype.entry(q.qtype.as_str().to_owned()).or_insert(0) += 1;
            }
            shortfalls.push(Shortfall {
                split,
                requested: target,
                available: taken,
                pages: members.len(),
                by_qtype,
            });
        }
    }
    if !shortfalls.is_empty() {
        return Err(QuestionError::Shortfall(shortfalls));
    }

    questions.sort_by(|a, b| a.page_id.cmp(&b.page_id).then(a.counter().cmp(&b.counter())));
    Ok(Dataset {
        info: DatasetInfo {
            quota: config.quota,
            ratios: config.ratios.to_map(),
            retry_cap: config.retry_cap,
            seed: config.seed,
            total: config.total,
        },
        questions,
    })
}

/// A split that could not be filled.
#[derive(Debug, Clone, PartialEq)]
pub struct Shortfall {
    pub split: Split,
    pub requested: usize,
    pub available: usize,
    pub pages: usize,
    /// Valid questions generated for this split, per question type.
    pub by_qtype: BTreeMap<String, usize>,
}

impl fmt::Display for Shortfall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: requested {}, available {} from {} pages (",
            self.split, self.requested, self.available, self.pages
        )?;
        let parts: Vec<String> = self.by_qtype.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{})", parts.join(", "))
    }
}
