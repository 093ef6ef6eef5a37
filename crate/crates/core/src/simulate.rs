//! Synthetic annotators with known latent difficulties.
//!
//! Each annotator perceives an item's difficulty as its latent value plus
//! Gaussian noise drawn afresh per item and vote, then picks the lowest
//! perceived value as easiest and the highest as hardest. With zero noise
//! the aggregated scale must reproduce the latent order exactly.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::judgments::{Item, Vote};
use crate::Scalar;

/// Timestamp of the first simulated vote; later votes follow one second apart.
pub fn simulation_epoch() -> DateTime<Utc> {
    DateTime::from_timestamp(1_577_836_800, 0).expect("valid epoch") // 2020-01-01T00:00:00Z
}

/// Median of the simulated response-time distribution.
pub const MEDIAN_SECONDS: f64 = 30.0;

/// Latent difficulty for every item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentWorld<S> {
    pub difficulty: BTreeMap<String, S>,
    pub seed: u64,
}

impl<S: Scalar> LatentWorld<S> {
    /// Difficulties `1, 2, ..., n` in item order.
    pub fn evenly_spaced(items: &[Item], seed: u64) -> Self {
        let difficulty = items.iter().enumerate().map(|(i, it)| (it.id.clone(), S::from_usize(i + 1).unwrap())).collect();
        LatentWorld { difficulty, seed }
    }

    /// Difference between the largest and smallest latent value.
    pub fn range(&self) -> S {
        let mut values = self.difficulty.values().copied();
        let Some(first) = values.next() else { return S::zero() };
        let (lo, hi) = values.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Item ids from easiest to hardest, ties by id.
    pub fn latent_order(&self) -> Vec<&str> {
        let mut ids: Vec<(&str, S)> = self.difficulty.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        ids.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite difficulties").then_with(|| a.0.cmp(b.0)));
        ids.into_iter().map(|(id, _)| id).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAnnotator<S> {
    pub annotator_id: String,
    /// Standard deviation of perception noise.
    pub noise_sigma: S,
    pub group: String,
}

impl<S: Scalar> SyntheticAnnotator<S> {
    pub fn new(annotator_id: impl Into<String>, noise_sigma: S, group: impl Into<String>) -> Result<Self> {
        if !(noise_sigma >= S::zero()) {
            return Err(Error::InvalidInput(format!("noise sigma must be non-negative, got {noise_sigma}")));
        }
        Ok(SyntheticAnnotator { annotator_id: annotator_id.into(), noise_sigma, group: group.into() })
    }

    /// `count` annotators named `sim-000`, `sim-001`, ... sharing one noise level.
    pub fn panel(count: usize, noise_sigma: S, group: &str) -> Result<Vec<Self>> {
        (0..count).map(|i| Self::new(format!("sim-{i:03}"), noise_sigma, group)).collect()
    }
}

// SplitMix64 finalizer; decorrelates nearby seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One synthetic judgment on `task_items`.
///
/// Deterministic in `(world.seed, draw_seed)`. Equal perceived values
/// resolve to the smaller item id for both best and worst.
pub fn simulate_vote<S, T>(
    world: &LatentWorld<S>,
    annotator: &SyntheticAnnotator<S>,
    task_index: usize,
    task_items: &[T],
    draw_seed: u64,
) -> Result<Vote>
where
    S: Scalar,
    T: AsRef<str>,
    StandardNormal: Distribution<S>,
{
    if task_items.len() < 2 {
        return Err(Error::InvalidInput("a task needs at least two items".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(world.seed ^ mix(draw_seed)));
    let mut perceived: Vec<(&str, S)> = Vec::with_capacity(task_items.len());
    for item in task_items {
        let id = item.as_ref();
        let latent = *world
            .difficulty
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("item {id:?} has no latent difficulty")))?;
        let z: S = StandardNormal.sample(&mut rng);
        perceived.push((id, latent + annotator.noise_sigma * z));
    }
    let by_value = |a: &(&str, S), b: &(&str, S)| a.1.partial_cmp(&b.1).expect("finite perception").then_with(|| a.0.cmp(b.0));
    let best = perceived.iter().min_by(|a, b| by_value(a, b)).unwrap().0;
    // Hardest: largest value, smaller id on ties.
    let worst = perceived
        .iter()
        .filter(|p| p.0 != best)
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite perception").then_with(|| b.0.cmp(a.0)))
        .unwrap()
        .0;
    let z = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
    Ok(Vote {
        task_index,
        annotator_id: annotator.annotator_id.clone(),
        group: annotator.group.clone(),
        best: best.to_string(),
        worst: worst.to_string(),
        elapsed_seconds: MEDIAN_SECONDS * (0.5 * z).exp(),
        submitted_at: simulation_epoch(),
    })
}

/// Collects `votes_per_task` votes from distinct annotators on every task.
///
/// Votes are ordered by task, then by draw; timestamps advance one second
/// per vote from [`simulation_epoch`].
pub fn run_campaign<S>(
    design: &Design,
    items: &[Item],
    world: &LatentWorld<S>,
    annotators: &[SyntheticAnnotator<S>],
    votes_per_task: usize,
    seed: u64,
) -> Result<Vec<Vote>>
where
    S: Scalar,
    StandardNormal: Distribution<S>,
{
    if votes_per_task == 0 {
        return Err(Error::InvalidInput("votes per task must be at least 1".into()));
    }
    if annotators.len() < votes_per_task {
        return Err(Error::InfeasibleStaffing { workers: annotators.len(), votes_per_task });
    }
    if items.len() != design.n_items() {
        return Err(Error::InvalidInput(format!(
            "design has {} items but {} were supplied",
            design.n_items(),
            items.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed));
    let mut votes = Vec::with_capacity(design.len() * votes_per_task);
    let epoch = simulation_epoch();
    for (t, task) in design.tasks().iter().enumerate() {
        let ids: Vec<&str> = task.iter().map(|&i| items[i].id.as_str()).collect();
        let mut chosen = index::sample(&mut rng, annotators.len(), votes_per_task).into_vec();
        chosen.sort_unstable();
        for a in chosen {
            let draw_seed = rng.random::<u64>();
            let mut vote = simulate_vote(world, &annotators[a], t, &ids, draw_seed)?;
            vote.submitted_at = epoch + Duration::seconds(votes.len() as i64);
            votes.push(vote);
        }
    }
    Ok(votes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(values: &[(&str, f64)], seed: u64) -> LatentWorld<f64> {
        LatentWorld { difficulty: values.iter().map(|&(k, v)| (k.to_string(), v)).collect(), seed }
    }

    #[test]
    fn noiseless_vote_picks_extremes() {
        let w = world(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 4.0)], 0);
        let ann = SyntheticAnnotator::new("x", 0.0, "g").unwrap();
        for draw in 0..20 {
            let v = simulate_vote(&w, &ann, 0, &["C", "A", "D", "B"], draw).unwrap();
            assert_eq!((v.best.as_str(), v.worst.as_str()), ("A", "D"));
        }
    }

    #[test]
    fn noiseless_ties_break_by_id() {
        let w = world(&[("A", 1.0), ("B", 1.0), ("C", 2.0), ("D", 2.0)], 0);
        let ann = SyntheticAnnotator::new("x", 0.0, "g").unwrap();
        let v = simulate_vote(&w, &ann, 0, &["D", "C", "B", "A"], 5).unwrap();
        assert_eq!((v.best.as_str(), v.worst.as_str()), ("A", "C"));
        let flat = world(&[("A", 1.0), ("B", 1.0), ("C", 1.0), ("D", 1.0)], 0);
        let v = simulate_vote(&flat, &ann, 0, &["D", "C", "B", "A"], 5).unwrap();
        assert_eq!((v.best.as_str(), v.worst.as_str()), ("A", "B"));
    }

    #[test]
    fn noisy_vote_is_deterministic() {
        let w = world(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 4.0)], 7);
        let ann = SyntheticAnnotator::new("x", 3.0, "g").unwrap();
        let a = simulate_vote(&w, &ann, 0, &["A", "B", "C", "D"], 99).unwrap();
        let b = simulate_vote(&w, &ann, 0, &["A", "B", "C", "D"], 99).unwrap();
        assert_eq!(a, b);
        assert!(a.elapsed_seconds > 0.0);
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(SyntheticAnnotator::new("x", -0.1f64, "g").is_err());
    }

    #[test]
    fn campaign_staffing() {
        let items: Vec<Item> = (0..5).map(|i| Item::new(format!("i{i}"), "t")).collect();
        let design = crate::generate_design(5, 4, 1).unwrap();
        let w = LatentWorld::<f64>::evenly_spaced(&items, 1);
        let panel = SyntheticAnnotator::panel(2, 0.0, "g").unwrap();
        assert!(matches!(run_campaign(&design, &items, &w, &panel, 3, 1), Err(Error::InfeasibleStaffing { .. })));
        let panel = SyntheticAnnotator::panel(3, 0.0, "g").unwrap();
        let votes = run_campaign(&design, &items, &w, &panel, 3, 1).unwrap();
        assert_eq!(votes.len(), design.len() * 3);
        for a in &panel {
            let mine: Vec<usize> = votes.iter().filter(|v| v.annotator_id == a.annotator_id).map(|v| v.task_index).collect();
            assert_eq!(mine, (0..design.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn latent_helpers() {
        let w = world(&[("b", 2.0), ("a", 2.0), ("c", -1.0)], 0);
        assert_eq!(w.latent_order(), vec!["c", "a", "b"]);
        assert_eq!(w.range(), 3.0);
    }
}
