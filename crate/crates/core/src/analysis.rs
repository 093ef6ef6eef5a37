//! Comparing rankings and labelings.
//!
//! Rank lists are slices of item ids ordered from rank 1 upwards. Scales
//! additionally carry exact mean scores, which lets [`spearman_rho`] give
//! tied items their average rank.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::{generate_design, Design};
use crate::error::{Error, Result};
use crate::judgments::{aggregate_scale, CefrLevel, Item, RankedScale, Vote};
use crate::Scalar;

/// Largest tolerance reported in [`RankingComparison::same_rank_by_d`].
pub const MAX_REPORTED_TOLERANCE: usize = 5;

/// Summary of how far two rankings of the same items diverge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingComparison<S> {
    /// Sum of absolute rank differences.
    pub m_oop: u64,
    pub spearman_rho: S,
    /// For each `d` in `0..=5`, items whose ranks differ by at most `d`.
    pub same_rank_by_d: BTreeMap<usize, usize>,
}

/// Pairs each item's 1-based rank in `a` with its rank in `b`, in `a` order.
fn paired_ranks<T: AsRef<str>, U: AsRef<str>>(a: &[T], b: &[U]) -> Result<Vec<(usize, usize)>> {
    if a.len() != b.len() {
        return Err(Error::IncomparableScales(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    let mut in_b: HashMap<&str, usize> = HashMap::with_capacity(b.len());
    for (pos, id) in b.iter().enumerate() {
        if in_b.insert(id.as_ref(), pos + 1).is_some() {
            return Err(Error::IncomparableScales(format!("item {:?} listed twice", id.as_ref())));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(a.len());
    a.iter()
        .enumerate()
        .map(|(pos, id)| {
            let id = id.as_ref();
            if !seen.insert(id) {
                return Err(Error::IncomparableScales(format!("item {id:?} listed twice")));
            }
            in_b.get(id)
                .map(|&rb| (pos + 1, rb))
                .ok_or_else(|| Error::IncomparableScales(format!("item {id:?} missing from second ranking")))
        })
        .collect()
}

/// Out-of-place distance: the sum over items of `|rank_a - rank_b|`.
pub fn out_of_place<T: AsRef<str>, U: AsRef<str>>(a: &[T], b: &[U]) -> Result<u64> {
    Ok(paired_ranks(a, b)?.into_iter().map(|(ra, rb)| ra.abs_diff(rb) as u64).sum())
}

/// Number of items whose two ranks differ by at most `d`.
pub fn same_rank_within<T: AsRef<str>, U: AsRef<str>>(a: &[T], b: &[U], d: usize) -> Result<usize> {
    Ok(paired_ranks(a, b)?.into_iter().filter(|(ra, rb)| ra.abs_diff(*rb) <= d).count())
}

/// Pearson correlation, which on rank vectors is Spearman's coefficient.
pub fn pearson<S: Scalar>(x: &[S], y: &[S]) -> Result<S> {
    if x.len() != y.len() {
        return Err(Error::IncomparableScales(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("correlation needs at least two items".into()));
    }
    let n = S::from_usize(x.len()).expect("length fits the scalar");
    let mx = x.iter().copied().sum::<S>() / n;
    let my = y.iter().copied().sum::<S>() / n;
    let (mut sxx, mut syy, mut sxy) = (S::zero(), S::zero(), S::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx == S::zero() || syy == S::zero() {
        return Err(Error::InvalidInput("correlation is undefined for a constant ranking".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-S::one()).min(S::one()))
}

/// Pearson correlation of doubled ranks, computed in integers so that
/// identical or reversed rankings give exactly 1 or -1.
fn rank_correlation<S: Scalar>(pairs: &[(u64, u64)]) -> Result<S> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("correlation needs at least two items".into()));
    }
    let n = pairs.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for &(x, y) in pairs {
        let (x, y) = (x as i128, y as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    let cov = n * sxy - sx * sy;
    if vx == 0 || vy == 0 {
        return Err(Error::InvalidInput("correlation is undefined for a constant ranking".into()));
    }
    let to_s = |v: i128| S::from_i128(v).expect("rank sums fit the scalar");
    let denominator = if vx == vy { to_s(vx) } else { to_s(vx).sqrt() * to_s(vy).sqrt() };
    Ok((to_s(cov) / denominator).max(-S::one()).min(S::one()))
}

/// Spearman's coefficient between two rank lists without ties.
pub fn spearman_lists<S: Scalar, T: AsRef<str>, U: AsRef<str>>(a: &[T], b: &[U]) -> Result<S> {
    let pairs: Vec<(u64, u64)> = paired_ranks(a, b)?.into_iter().map(|(ra, rb)| (2 * ra as u64, 2 * rb as u64)).collect();
    rank_correlation(&pairs)
}

/// Twice the average rank of every item, so ties stay integral.
fn doubled_average_ranks<S: Scalar>(scale: &RankedScale<S>) -> Vec<(&str, u64)> {
    let entries = &scale.entries;
    let mut out = Vec::with_capacity(entries.len());
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end].cmp_mean(&entries[start]).is_eq() {
            end += 1;
        }
        // Positions start+1 ..= end.
        let doubled = (start + 1 + end) as u64;
        out.extend(entries[start..end].iter().map(|e| (e.item_id.as_str(), doubled)));
        start = end;
    }
    out
}

/// Ranks with items of equal mean score sharing the average of their positions.
pub fn average_ranks<S: Scalar>(scale: &RankedScale<S>) -> Vec<(&str, S)> {
    let two = S::from_u8(2).unwrap();
    doubled_average_ranks(scale).into_iter().map(|(id, d)| (id, S::from_u64(d).unwrap() / two)).collect()
}

/// Spearman's coefficient between two scales over the same items.
pub fn spearman_rho<S: Scalar>(a: &RankedScale<S>, b: &RankedScale<S>) -> Result<S> {
    let ra = doubled_average_ranks(a);
    let rb: HashMap<&str, u64> = doubled_average_ranks(b).into_iter().collect();
    if ra.len() != rb.len() {
        return Err(Error::IncomparableScales(format!("scales rank {} and {} items", ra.len(), rb.len())));
    }
    let pairs = ra
        .into_iter()
        .map(|(id, r)| {
            rb.get(id)
                .map(|&other| (r, other))
                .ok_or_else(|| Error::IncomparableScales(format!("item {id:?} missing from second scale")))
        })
        .collect::<Result<Vec<_>>>()?;
    rank_correlation(&pairs)
}

fn same_rank_profile(pairs: &[(usize, usize)]) -> BTreeMap<usize, usize> {
    (0..=MAX_REPORTED_TOLERANCE)
        .map(|d| (d, pairs.iter().filter(|(ra, rb)| ra.abs_diff(*rb) <= d).count()))
        .collect()
}

/// Out-of-place distance, Spearman's coefficient and same-rank counts.
pub fn compare_scales<S: Scalar>(a: &RankedScale<S>, b: &RankedScale<S>) -> Result<RankingComparison<S>> {
    let pairs = paired_ranks(&a.order(), &b.order())?;
    Ok(RankingComparison {
        m_oop: pairs.iter().map(|(ra, rb)| ra.abs_diff(*rb) as u64).sum(),
        spearman_rho: spearman_rho(a, b)?,
        same_rank_by_d: same_rank_profile(&pairs),
    })
}

/// [`compare_scales`] for plain rank lists.
pub fn compare_lists<S: Scalar, T: AsRef<str>, U: AsRef<str>>(a: &[T], b: &[U]) -> Result<RankingComparison<S>> {
    let pairs = paired_ranks(a, b)?;
    Ok(RankingComparison {
        m_oop: pairs.iter().map(|(ra, rb)| ra.abs_diff(*rb) as u64).sum(),
        spearman_rho: spearman_lists(a, b)?,
        same_rank_by_d: same_rank_profile(&pairs),
    })
}

fn parse_labels(labels: &BTreeMap<String, String>) -> Result<BTreeMap<&str, CefrLevel>> {
    labels.iter().map(|(id, l)| Ok((id.as_str(), l.parse()?))).collect()
}

/// Percentage of items whose levels differ by at most `tolerance` steps.
pub fn level_agreement<S: Scalar, K: Ord + std::fmt::Debug>(
    a: &BTreeMap<K, CefrLevel>,
    b: &BTreeMap<K, CefrLevel>,
    tolerance: usize,
) -> Result<S> {
    if a.is_empty() {
        return Err(Error::InvalidInput("agreement needs at least one item".into()));
    }
    if a.len() != b.len() {
        return Err(Error::IncomparableScales(format!("labelings cover {} and {} items", a.len(), b.len())));
    }
    let mut agreeing = 0usize;
    for (id, la) in a {
        let lb = b.get(id).ok_or_else(|| Error::IncomparableScales(format!("item {id:?} missing from second labeling")))?;
        if la.ordinal().abs_diff(lb.ordinal()) <= tolerance {
            agreeing += 1;
        }
    }
    let hundred = S::from_u8(100).unwrap();
    Ok(hundred * S::from_usize(agreeing).unwrap() / S::from_usize(a.len()).unwrap())
}

/// [`level_agreement`] over raw label strings such as `"B1"`.
pub fn categorical_agreement<S: Scalar>(
    a: &BTreeMap<String, String>,
    b: &BTreeMap<String, String>,
    tolerance: usize,
) -> Result<S> {
    level_agreement(&parse_labels(a)?, &parse_labels(b)?, tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement<S> {
    pub first: String,
    pub second: String,
    pub percent: S,
}

/// Agreement among two or more labelings at one tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport<S> {
    pub tolerance: usize,
    pub percent_agreement: S,
    /// How `percent_agreement` pools the pairwise values.
    pub pooling: String,
    pub pairwise: Vec<PairAgreement<S>>,
}

pub const POOLING_MEAN_PAIRWISE: &str = "mean_pairwise";

/// Pairwise agreement for every pair of labelings plus their mean.
pub fn agreement_report<S: Scalar>(
    labelings: &[(String, BTreeMap<String, String>)],
    tolerance: usize,
) -> Result<AgreementReport<S>> {
    if labelings.len() < 2 {
        return Err(Error::InvalidInput("agreement needs at least two labelings".into()));
    }
    let parsed: Vec<BTreeMap<&str, CefrLevel>> = labelings.iter().map(|(_, l)| parse_labels(l)).collect::<Result<_>>()?;
    let mut pairwise = Vec::new();
    for i in 0..labelings.len() {
        for j in i + 1..labelings.len() {
            pairwise.push(PairAgreement {
                first: labelings[i].0.clone(),
                second: labelings[j].0.clone(),
                percent: level_agreement(&parsed[i], &parsed[j], tolerance)?,
            });
        }
    }
    let mean = pairwise.iter().map(|p| p.percent).sum::<S>() / S::from_usize(pairwise.len()).unwrap();
    Ok(AgreementReport { tolerance, percent_agreement: mean, pooling: POOLING_MEAN_PAIRWISE.into(), pairwise })
}

/// Which votes take part in sampling.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GroupSelection {
    /// Votes from every group, pooled per task.
    #[default]
    Mixed,
    Group(String),
}

impl GroupSelection {
    pub fn from_flag(group: Option<&str>) -> Self {
        match group {
            None => GroupSelection::Mixed,
            Some(g) if g.eq_ignore_ascii_case("mixed") => GroupSelection::Mixed,
            Some(g) => GroupSelection::Group(g.to_string()),
        }
    }

    pub fn admits(&self, vote: &Vote) -> bool {
        match self {
            GroupSelection::Mixed => true,
            GroupSelection::Group(g) => vote.group == *g,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            GroupSelection::Mixed => "Mixed",
            GroupSelection::Group(g) => g,
        }
    }
}

/// Keeps a seeded uniform sample of at most `per_task` votes for every task.
///
/// Votes outside `selection` are dropped first. The result keeps the input
/// order.
pub fn subsample_votes(votes: &[Vote], per_task: usize, seed: u64, selection: &GroupSelection) -> Result<Vec<Vote>> {
    if per_task == 0 {
        return Err(Error::InvalidInput("per-task sample size must be at least 1".into()));
    }
    let mut by_task: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, v) in votes.iter().enumerate() {
        if selection.admits(v) {
            by_task.entry(v.task_index).or_default().push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for indices in by_task.values() {
        if indices.len() <= per_task {
            keep.extend_from_slice(indices);
        } else {
            keep.extend(index::sample(&mut rng, indices.len(), per_task).into_iter().map(|j| indices[j]));
        }
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| votes[i].clone()).collect())
}

/// Compares the scale from a per-task vote sample with the scale from every
/// selected vote.
pub fn subsample_report<S: Scalar>(
    design: &Design,
    items: &[Item],
    votes: &[Vote],
    per_task: usize,
    seed: u64,
    selection: &GroupSelection,
) -> Result<RankingComparison<S>> {
    let selected: Vec<Vote> = votes.iter().filter(|v| selection.admits(v)).cloned().collect();
    let full: RankedScale<S> = aggregate_scale(design, items, &selected)?;
    let sample = subsample_votes(&selected, per_task, seed, &GroupSelection::Mixed)?;
    let partial: RankedScale<S> = aggregate_scale(design, items, &sample)?;
    compare_scales(&partial, &full)
}

/// Mean, minimum and maximum seconds per task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl TimeStats {
    fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(TimeStats { count: values.len(), mean: values.iter().sum::<f64>() / values.len() as f64, min, max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGrouping {
    #[default]
    Group,
    Annotator,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeReport {
    pub grouping: TimeGrouping,
    pub by_key: BTreeMap<String, TimeStats>,
    pub overall: Option<TimeStats>,
}

/// Timing statistics per group (or annotator) and overall.
pub fn time_stats(votes: &[Vote], grouping: TimeGrouping) -> TimeReport {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for v in votes {
        let key = match grouping {
            TimeGrouping::Group => &v.group,
            TimeGrouping::Annotator => &v.annotator_id,
        };
        buckets.entry(key.clone()).or_default().push(v.elapsed_seconds);
    }
    let all: Vec<f64> = votes.iter().map(|v| v.elapsed_seconds).collect();
    TimeReport {
        grouping,
        by_key: buckets.into_iter().filter_map(|(k, vals)| TimeStats::from_values(&vals).map(|s| (k, s))).collect(),
        overall: TimeStats::from_values(&all),
    }
}

/// Minutes each worker spends collecting `votes_per_task` votes on every task.
///
/// No worker sees a task twice, so at least `votes_per_task` workers are needed.
pub fn workload_minutes<S: Scalar>(task_count: usize, votes_per_task: usize, mean_seconds: S, workers: usize) -> Result<S> {
    if votes_per_task == 0 {
        return Err(Error::InvalidInput("votes per task must be at least 1".into()));
    }
    if !(mean_seconds >= S::zero()) {
        return Err(Error::InvalidInput(format!("mean seconds must be non-negative, got {mean_seconds}")));
    }
    if workers < votes_per_task {
        return Err(Error::InfeasibleStaffing { workers, votes_per_task });
    }
    let total_seconds = S::from_usize(task_count * votes_per_task).unwrap() * mean_seconds;
    Ok(total_seconds / S::from_usize(workers).unwrap() / S::from_u8(60).unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProjection<S> {
    pub n_items: usize,
    pub block_size: usize,
    pub task_count: usize,
    pub votes_per_task: usize,
    pub mean_seconds: S,
    pub workers: usize,
    pub minutes_per_worker: S,
}

/// [`workload_minutes`] with the task count taken from a generated design.
pub fn workload_projection<S: Scalar>(
    n_items: usize,
    block_size: usize,
    votes_per_task: usize,
    mean_seconds: S,
    workers: usize,
    seed: u64,
) -> Result<WorkloadProjection<S>> {
    // Fail on staffing before paying for the design.
    workload_minutes(0, votes_per_task, mean_seconds, workers)?;
    let task_count = generate_design(n_items, block_size, seed)?.len();
    Ok(WorkloadProjection {
        n_items,
        block_size,
        task_count,
        votes_per_task,
        mean_seconds,
        workers,
        minutes_per_worker: workload_minutes(task_count, votes_per_task, mean_seconds, workers)?,
    })
}
