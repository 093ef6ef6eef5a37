//! Brute-force oracles checked against the library routines.

use std::collections::{BTreeMap, BTreeSet};

use bwsrank_core::analysis::{compare_lists, out_of_place, same_rank_within, spearman_lists, spearman_rho};
use bwsrank_core::judgments::{RankedScale, Vote};
use bwsrank_core::{aggregate_scale, infer_relations, score_vote, Design, Item};
use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn ids(perm: &[usize]) -> Vec<String> {
    perm.iter().map(|i| format!("x{i}")).collect()
}

/// Rank of `id` by linear scan, 1-based.
fn naive_rank(list: &[String], id: &str) -> i64 {
    list.iter().position(|x| x == id).unwrap() as i64 + 1
}

fn naive_oop(a: &[String], b: &[String]) -> u64 {
    a.iter().map(|id| (naive_rank(a, id) - naive_rank(b, id)).unsigned_abs()).sum()
}

/// Textbook formula for untied ranks: 1 - 6 sum d^2 / (n (n^2 - 1)).
fn naive_spearman(a: &[String], b: &[String]) -> f64 {
    let n = a.len() as f64;
    let d2: i64 = a.iter().map(|id| (naive_rank(a, id) - naive_rank(b, id)).pow(2)).sum();
    1.0 - 6.0 * d2 as f64 / (n * (n * n - 1.0))
}

/// Scale whose order is `list`, built from distinct integer score sums.
fn scale_from_list(list: &[String]) -> RankedScale<f64> {
    RankedScale::from_sums(list.iter().enumerate().map(|(i, id)| (id.clone(), 100 + i as u64, 100)))
}

#[test]
fn metrics_match_brute_force_on_all_small_permutations() {
    for n in 2..=6 {
        let perms = permutations(n);
        for p in &perms {
            for q in &perms {
                let (a, b) = (ids(p), ids(q));
                assert_eq!(out_of_place(&a, &b).unwrap(), naive_oop(&a, &b));
                assert_eq!(out_of_place(&b, &a).unwrap(), naive_oop(&a, &b));
                let want = naive_spearman(&a, &b);
                let got: f64 = spearman_lists(&a, &b).unwrap();
                assert!((got - want).abs() < 1e-12, "{a:?} {b:?}: {got} vs {want}");
                let via_scale = spearman_rho(&scale_from_list(&a), &scale_from_list(&b)).unwrap();
                assert!((via_scale - want).abs() < 1e-12);
                for d in 0..n {
                    let naive = a.iter().filter(|id| (naive_rank(&a, id) - naive_rank(&b, id)).abs() <= d as i64).count();
                    assert_eq!(same_rank_within(&a, &b, d).unwrap(), naive);
                }
            }
        }
    }
    assert_eq!(permutations(6).len(), 720);
}

#[test]
fn metrics_match_brute_force_on_random_length_60() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let base: Vec<usize> = (0..60).collect();
    for _ in 0..1000 {
        let mut p = base.clone();
        let mut q = base.clone();
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        let (a, b) = (ids(&p), ids(&q));
        let cmp = compare_lists::<f64, _, _>(&a, &b).unwrap();
        assert_eq!(cmp.m_oop, naive_oop(&a, &b));
        assert!((cmp.spearman_rho - naive_spearman(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn figure_example() {
    let l1 = ["A", "B", "C", "D"];
    let l2 = ["D", "A", "C", "B"];
    assert_eq!(out_of_place(&l1, &l2).unwrap(), 6);
    assert_eq!(same_rank_within(&l1, &l2, 1).unwrap(), 2);
    assert_eq!(same_rank_within(&l1, &l2, 3).unwrap(), 4);
}

/// True if the relation set admits a topological order (no cycles).
fn acyclic(rel: &[(String, String)]) -> bool {
    let mut nodes: BTreeSet<&str> = rel.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect();
    let mut edges: Vec<(&str, &str)> = rel.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    while !nodes.is_empty() {
        let Some(&src) = nodes.iter().find(|n| !edges.iter().any(|(_, h)| h == *n)) else { return false };
        nodes.remove(src);
        edges.retain(|(e, _)| *e != src);
    }
    true
}

#[test]
fn relation_inference_over_every_best_worst_pair() {
    let task = ["A", "B", "C", "D"];
    let mut cases = 0;
    for best in task {
        for worst in task {
            if best == worst {
                continue;
            }
            cases += 1;
            let rel: Vec<(String, String)> =
                infer_relations(&task, best, worst).unwrap().into_iter().map(|r| (r.easier, r.harder)).collect();
            assert_eq!(rel.len(), 5);
            assert!(acyclic(&rel));
            let pairs: BTreeSet<BTreeSet<&str>> = rel.iter().map(|(a, b)| BTreeSet::from([a.as_str(), b.as_str()])).collect();
            assert_eq!(pairs.len(), 5);
            let unrated: BTreeSet<&str> = task.iter().copied().filter(|&t| t != best && t != worst).collect();
            assert!(!pairs.contains(&unrated), "the two unrated items stay unrelated");
        }
    }
    assert_eq!(cases, 12);
}

fn vote(task_index: usize, best: &str, worst: &str) -> Vote {
    Vote {
        task_index,
        annotator_id: "a".into(),
        group: "g".into(),
        best: best.into(),
        worst: worst.into(),
        elapsed_seconds: 0.0,
        submitted_at: DateTime::<Utc>::UNIX_EPOCH,
    }
}

#[test]
fn aggregation_matches_per_vote_scoring() {
    let design = bwsrank_core::generate_design(9, 4, 4).unwrap();
    let items: Vec<Item> = (0..9).map(|i| Item::new(format!("i{i}"), "t")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut votes = Vec::new();
    for (t, task) in design.tasks().iter().enumerate() {
        for _ in 0..3 {
            let mut picks = task.clone();
            picks.shuffle(&mut rng);
            votes.push(vote(t, &items[picks[0]].id, &items[picks[1]].id));
        }
    }
    let mut scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for v in &votes {
        let task: Vec<&str> = design.tasks()[v.task_index].iter().map(|&i| items[i].id.as_str()).collect();
        for (id, s) in score_vote(&task, &v.best, &v.worst).unwrap() {
            scores.entry(id).or_default().push(f64::from(s));
        }
    }
    let scale: RankedScale<f64> = aggregate_scale(&design, &items, &votes).unwrap();
    for (id, xs) in &scores {
        let want = xs.iter().sum::<f64>() / xs.len() as f64;
        let e = scale.entry(id).unwrap();
        assert!((e.mean_score - want).abs() < 1e-12);
        assert_eq!(e.vote_count as usize, xs.len());
        assert!((1.0..=3.0).contains(&e.mean_score));
    }
    let ranks: BTreeSet<usize> = scale.entries.iter().map(|e| e.rank).collect();
    assert_eq!(ranks, (1..=9).collect());
    for w in scale.entries.windows(2) {
        assert!(w[0].mean_score <= w[1].mean_score);
    }
}

#[test]
fn five_items_cannot_be_covered_by_two_tasks() {
    let subsets: Vec<Vec<usize>> = (0..5).map(|skip| (0..5).filter(|&i| i != skip).collect()).collect();
    for a in &subsets {
        for b in &subsets {
            assert!(Design::from_tasks(5, 4, 0, vec![a.clone(), b.clone()]).is_err());
        }
    }
    let mut three_work = false;
    for a in &subsets {
        for b in &subsets {
            for c in &subsets {
                three_work |= Design::from_tasks(5, 4, 0, vec![a.clone(), b.clone(), c.clone()]).is_ok();
            }
        }
    }
    assert!(three_work);
    assert_eq!(bwsrank_core::generate_design(5, 4, 0).unwrap().len(), 3);
}
