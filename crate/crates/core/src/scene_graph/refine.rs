use std::collections::{BTreeMap, HashMap};

use super::GapTable;
use crate::layout::{Category, Page, Segment};

/// Default cap on caption distance, as a fraction of page height.
pub const DEFAULT_MAX_CAPTION_GAP_FRAC: f64 = 0.15;

/// A table or figure together with the segment chosen as its caption.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionAssignment {
    pub owner: String,
    pub caption: String,
    pub gap: f64,
}

fn rank_map(order: &[String]) -> HashMap<&str, usize> {
    order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

fn is_candidate(s: &Segment) -> bool {
    s.category == Category::Text || s.category.is_caption()
}

/// Decide which text segment captions which table or figure.
///
/// Each table/figure claims its nearest candidate within the gap cap (ties by
/// reading order, then id). A candidate claimed more than once goes to the
/// closest claimant (then reading order, then id); losing claimants stay
/// captionless. Segments already labeled as captions are candidates too,
/// so a refined page yields the same assignment as the raw page it came from.
pub fn caption_assignments(
    page: &Page,
    order: &[String],
    gaps: &GapTable,
    max_gap_frac: f64,
) -> Vec<CaptionAssignment> {
    let rank = rank_map(order);
    let rank_of = |id: &str| rank.get(id).copied().unwrap_or(usize::MAX);
    let limit = max_gap_frac * page.height;

    let mut claims: BTreeMap<&str, Vec<(f64, usize, &str)>> = BTreeMap::new();
    for owner in page
        .segments
        .iter()
        .filter(|s| s.category.caption_kind().is_some())
    {
        let best = page
            .segments
            .iter()
            .filter(|c| is_candidate(c))
            .map(|c| (gaps.get(&owner.id, &c.id), rank_of(&c.id), c.id.as_str()))
            .filter(|(gap, _, _)| *gap <= limit)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)));
        if let Some((gap, _, caption)) = best {
            claims
                .entry(caption)
                .or_default()
                .push((gap, rank_of(&owner.id), owner.id.as_str()));
        }
    }

    let mut out: Vec<CaptionAssignment> = claims
        .into_iter()
        .filter_map(|(caption, claimants)| {
            claimants
                .into_iter()
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)))
                .map(|(gap, _, owner)| CaptionAssignment {
                    owner: owner.to_owned(),
                    caption: caption.to_owned(),
                    gap,
                })
        })
        .collect();
    out.sort_by(|a, b| rank_of(&a.owner).cmp(&rank_of(&b.owner)).then(a.owner.cmp(&b.owner)));
    out
}

/// Relabel caption text next to tables and figures. Idempotent.
pub fn refine_categories(page: &Page, order: &[String], gaps: &GapTable, max_gap_frac: f64) -> Page {
    let kinds: HashMap<&str, Category> = page.segments.iter().map(|s| (s.id.as_str(), s.category)).collect();
    let relabel: HashMap<String, Category> = caption_assignments(page, order, gaps, max_gap_frac)
        .into_iter()
        .filter_map(|a| {
            let kind = kinds[a.owner.as_str()].caption_kind()?;
            Some((a.caption, kind))
        })
        .collect();

    let mut refined = page.clone();
    for seg in &mut refined.segments {
        if let Some(&kind) = relabel.get(&seg.id) {
            seg.category = kind;
        }
    }
    refined
}
