//! Items, best/worst votes, and the mean-score difficulty scale.
//!
//! Each vote scores the item picked as easiest with 1, the hardest with 3
//! and every other item in the task with 2. An item's position on the
//! scale is the mean of all scores it received, so it lies in `[1, 3]`.
//! Rank 1 is the easiest item (lowest mean); equal means are ordered by
//! ascending item id.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::Scalar;

/// Score given to the item chosen as easiest.
pub const BEST_SCORE: u8 = 1;
/// Score given to items that were not chosen.
pub const UNRATED_SCORE: u8 = 2;
/// Score given to the item chosen as hardest.
pub const WORST_SCORE: u8 = 3;

/// Ordinal proficiency level, `A1 < A2 < B1 < B2 < C1 < C2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CefrLevel {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl CefrLevel {
    pub const ALL: [CefrLevel; 6] =
        [CefrLevel::A1, CefrLevel::A2, CefrLevel::B1, CefrLevel::B2, CefrLevel::C1, CefrLevel::C2];

    /// Zero-based position on the ordinal scale.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CefrLevel::A1 => "A1",
            CefrLevel::A2 => "A2",
            CefrLevel::B1 => "B1",
            CefrLevel::B2 => "B2",
            CefrLevel::C1 => "C1",
            CefrLevel::C2 => "C2",
        }
    }
}

impl fmt::Display for CefrLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CefrLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        CefrLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::InvalidLabel(s.to_string()))
    }
}

impl TryFrom<String> for CefrLevel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CefrLevel> for String {
    fn from(l: CefrLevel) -> String {
        l.as_str().to_string()
    }
}

/// One rankable expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub definition: String,
    /// Only consulted by analysis, never by aggregation.
    #[serde(default)]
    pub reference_label: Option<CefrLevel>,
}

impl Item {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Item { id: id.into(), text: text.into(), definition: String::new(), reference_label: None }
    }
}

/// Checks that item ids are unique and texts non-empty.
pub fn check_items(items: &[Item]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(items.len());
    for item in items {
        if item.id.is_empty() {
            return Err(Error::InvalidInput("item id must not be empty".into()));
        }
        if item.text.trim().is_empty() {
            return Err(Error::InvalidInput(format!("item {:?} has empty text", item.id)));
        }
        if !seen.insert(item.id.as_str()) {
            return Err(Error::DuplicateItem(item.id.clone()));
        }
    }
    Ok(())
}

/// One annotator's best/worst judgment on a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub task_index: usize,
    pub annotator_id: String,
    pub group: String,
    /// Item judged easiest.
    pub best: String,
    /// Item judged hardest.
    pub worst: String,
    pub elapsed_seconds: f64,
    pub submitted_at: DateTime<Utc>,
}

/// `easier` is known to be easier than `harder`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub easier: String,
    pub harder: String,
}

impl Relation {
    fn new(easier: &str, harder: &str) -> Self {
        Relation { easier: easier.to_string(), harder: harder.to_string() }
    }
}

/// Reasons a best/worst selection is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationError {
    #[error("no value selected")]
    NoValue,
    #[error("only one column is selected")]
    OneColumn,
    #[error("same value in both columns")]
    SameValue,
    #[error("selected item is not part of the task")]
    NotInTask,
}

impl ValidationError {
    pub fn code(self) -> &'static str {
        match self {
            ValidationError::NoValue => "NO_VALUE",
            ValidationError::OneColumn => "ONE_COLUMN",
            ValidationError::SameValue => "SAME_VALUE",
            ValidationError::NotInTask => "NOT_IN_TASK",
        }
    }
}

/// Checks a possibly incomplete selection against a task.
pub fn validate_vote<T: AsRef<str>>(
    task_items: &[T],
    best: Option<&str>,
    worst: Option<&str>,
) -> Result<(), ValidationError> {
    let (best, worst) = match (best, worst) {
        (None, None) => return Err(ValidationError::NoValue),
        (Some(_), None) | (None, Some(_)) => return Err(ValidationError::OneColumn),
        (Some(b), Some(w)) => (b, w),
    };
    if best == worst {
        return Err(ValidationError::SameValue);
    }
    let contains = |id: &str| task_items.iter().any(|t| t.as_ref() == id);
    if !contains(best) || !contains(worst) {
        return Err(ValidationError::NotInTask);
    }
    Ok(())
}

/// Pairwise relations implied by one best/worst judgment.
///
/// The best item is easier than every other item and the worst item harder
/// than every remaining one; pairs of unrated items stay unknown. For four
/// items that is five of the six pairs.
pub fn infer_relations<T: AsRef<str>>(task_items: &[T], best: &str, worst: &str) -> Result<Vec<Relation>> {
    validate_vote(task_items, Some(best), Some(worst))?;
    let mut out = Vec::with_capacity(2 * task_items.len() - 3);
    out.push(Relation::new(best, worst));
    let others: Vec<&str> = task_items.iter().map(AsRef::as_ref).filter(|&i| i != best && i != worst).collect();
    out.extend(others.iter().map(|o| Relation::new(best, o)));
    out.extend(others.iter().map(|o| Relation::new(o, worst)));
    Ok(out)
}

/// Per-item scores for one judgment: best 1, worst 3, others 2.
pub fn score_vote<T: AsRef<str>>(task_items: &[T], best: &str, worst: &str) -> Result<BTreeMap<String, u8>> {
    validate_vote(task_items, Some(best), Some(worst))?;
    Ok(task_items
        .iter()
        .map(|t| {
            let id = t.as_ref();
            let score = if id == best {
                BEST_SCORE
            } else if id == worst {
                WORST_SCORE
            } else {
                UNRATED_SCORE
            };
            (id.to_string(), score)
        })
        .collect())
}

/// One item's position on the scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry<S> {
    pub rank: usize,
    pub item_id: String,
    pub mean_score: S,
    pub vote_count: u64,
    /// Sum of integer scores; `score_sum / vote_count` is the exact mean.
    pub score_sum: u64,
}

impl<S> ScaleEntry<S> {
    /// Compares exact means without going through floating point.
    pub fn cmp_mean(&self, other: &Self) -> Ordering {
        let lhs = u128::from(self.score_sum) * u128::from(other.vote_count);
        let rhs = u128::from(other.score_sum) * u128::from(self.vote_count);
        lhs.cmp(&rhs)
    }
}

/// Items ordered from easiest (rank 1) to hardest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScale<S> {
    pub entries: Vec<ScaleEntry<S>>,
    /// Items that received no votes, in item order.
    #[serde(default)]
    pub unvoted: Vec<String>,
}

impl<S: Scalar> RankedScale<S> {
    /// Builds a scale from per-item score sums and counts; items with a zero
    /// count go to `unvoted`.
    pub fn from_sums<I, T>(sums: I) -> Self
    where
        I: IntoIterator<Item = (T, u64, u64)>,
        T: Into<String>,
    {
        let mut entries = Vec::new();
        let mut unvoted = Vec::new();
        for (id, score_sum, vote_count) in sums {
            let item_id = id.into();
            if vote_count == 0 {
                unvoted.push(item_id);
                continue;
            }
            let mean_score = S::from_u64(score_sum).expect("score sum fits the scalar")
                / S::from_u64(vote_count).expect("vote count fits the scalar");
            entries.push(ScaleEntry { rank: 0, item_id, mean_score, vote_count, score_sum });
        }
        entries.sort_by(|a, b| a.cmp_mean(b).then_with(|| a.item_id.cmp(&b.item_id)));
        for (i, e) in entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
        RankedScale { entries, unvoted }
    }
}

impl<S> RankedScale<S> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Item ids from rank 1 upwards.
    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.item_id.as_str()).collect()
    }

    pub fn entry(&self, item_id: &str) -> Option<&ScaleEntry<S>> {
        self.entries.iter().find(|e| e.item_id == item_id)
    }

    pub fn rank_of(&self, item_id: &str) -> Option<usize> {
        self.entry(item_id).map(|e| e.rank)
    }
}

/// Aggregates votes into a ranked scale.
///
/// `items[i]` is the item behind design index `i`. Every vote is checked
/// against its task before it is counted.
pub fn aggregate_scale<S: Scalar>(design: &Design, items: &[Item], votes: &[Vote]) -> Result<RankedScale<S>> {
    if items.len() != design.n_items() {
        return Err(Error::InvalidInput(format!(
            "design has {} items but {} were supplied",
            design.n_items(),
            items.len()
        )));
    }
    let mut sums = vec![0u64; items.len()];
    let mut counts = vec![0u64; items.len()];
    let mut task_ids: Vec<&str> = Vec::with_capacity(design.block_size());
    for vote in votes {
        let task = design
            .task(vote.task_index)
            .ok_or_else(|| Error::InvalidVote(format!("unknown task index {}", vote.task_index)))?;
        task_ids.clear();
        task_ids.extend(task.iter().map(|&i| items[i].id.as_str()));
        validate_vote(&task_ids, Some(&vote.best), Some(&vote.worst))?;
        for &i in task {
            let id = items[i].id.as_str();
            let score = if id == vote.best {
                BEST_SCORE
            } else if id == vote.worst {
                WORST_SCORE
            } else {
                UNRATED_SCORE
            };
            sums[i] += u64::from(score);
            counts[i] += 1;
        }
    }
    Ok(RankedScale::from_sums(
        items.iter().zip(sums.iter().zip(&counts)).map(|(item, (&s, &c))| (item.id.clone(), s, c)),
    ))
}
