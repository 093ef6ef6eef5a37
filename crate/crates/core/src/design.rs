//! Pair-covering task designs.
//!
//! A [`Design`] is a list of `k`-item tasks over `n` items in which every
//! unordered item pair appears together in at least one task. With `k = 4`
//! a single best/worst judgment settles five of the six pairs in a task, so
//! covering every pair once is the minimum needed to relate all items.
//!
//! Generation is greedy: at every step the candidate task covering the most
//! still-uncovered pairs wins. Candidates come from a seeded random pool
//! (or every `k`-subset when there are few enough), and once fewer than
//! [`ENDGAME_UNCOVERED`] pairs remain the pool is replaced by every subset
//! containing an uncovered pair. A final sweep drops tasks that became
//! fully redundant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block size used when none is given.
pub const DEFAULT_BLOCK_SIZE: usize = 4;

/// Upper bound on seeded random candidates drawn per greedy step.
pub const CANDIDATE_POOL: usize = 5000;

/// Below this many uncovered pairs the pool switches to pair-driven candidates.
pub const ENDGAME_UNCOVERED: usize = 50;

/// Candidates grown from uncovered pairs per greedy step, on top of the random pool.
pub const CONSTRUCTED_CANDIDATES: usize = 8;

/// Local-search step budget, per item pair.
pub const LOCAL_SEARCH_STEPS_PER_PAIR: usize = 500;

const ANNEAL_TEMPERATURE: f64 = 0.25;

// Cap on pair-driven candidates per uncovered pair; only matters for large k.
const ENDGAME_PER_PAIR_CAP: u128 = 20_000;

/// Number of unordered pairs among `n` items.
pub fn pair_count(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("pair count needs at least 2 items, got {n}")));
    }
    Ok(n * (n - 1) / 2)
}

/// Binomial coefficient `C(n, k)` in exact integer arithmetic.
pub fn combination_count(n: usize, k: usize) -> Result<u128> {
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("combination count needs 1 <= k <= n, got n={n}, k={k}")));
    }
    Ok(binomial(n as u128, k as u128))
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // Each partial product is itself a binomial coefficient, so the division is exact.
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Dense index of the unordered pair `{a, b}` among `n` items.
#[inline]
fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Set of `k`-item tasks covering every item pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDesign")]
pub struct Design {
    n_items: usize,
    block_size: usize,
    seed: u64,
    tasks: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawDesign {
    n_items: usize,
    block_size: usize,
    seed: u64,
    tasks: Vec<Vec<usize>>,
}

impl TryFrom<RawDesign> for Design {
    type Error = Error;

    fn try_from(raw: RawDesign) -> Result<Self> {
        Design::from_tasks(raw.n_items, raw.block_size, raw.seed, raw.tasks)
    }
}

impl Design {
    /// Builds a design from explicit tasks, checking every invariant.
    pub fn from_tasks(n_items: usize, block_size: usize, seed: u64, tasks: Vec<Vec<usize>>) -> Result<Self> {
        if block_size < 2 || n_items < block_size {
            return Err(Error::InvalidInput(format!(
                "design needs n >= k >= 2, got n={n_items}, k={block_size}"
            )));
        }
        let mut covered = vec![false; n_items * (n_items - 1) / 2];
        for (t, task) in tasks.iter().enumerate() {
            if task.len() != block_size {
                return Err(Error::InvalidInput(format!(
                    "task {t} has {} items, expected {block_size}",
                    task.len()
                )));
            }
            if let Some(&a) = task.iter().find(|&&a| a >= n_items) {
                return Err(Error::InvalidInput(format!("task {t} references item {a} outside 0..{n_items}")));
            }
            for (x, &a) in task.iter().enumerate() {
                for &b in &task[x + 1..] {
                    if a == b {
                        return Err(Error::InvalidInput(format!("task {t} repeats item {a}")));
                    }
                    covered[pair_index(n_items, a, b)] = true;
                }
            }
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            let (a, b) = pair_from_index(n_items, missing);
            return Err(Error::InvalidInput(format!("pair {{{a}, {b}}} is not covered by any task")));
        }
        Ok(Design { n_items, block_size, seed, tasks })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tasks(&self) -> &[Vec<usize>] {
        &self.tasks
    }

    pub fn task(&self, index: usize) -> Option<&[usize]> {
        self.tasks.get(index).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// One task per line, item indices separated by tabs.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for task in &self.tasks {
            let line: Vec<String> = task.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join("\t"));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - i - 1;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

/// Greedy state shared by the candidate sources.
struct Coverage {
    n: usize,
    counts: Vec<u32>,
    appearances: Vec<u32>,
    uncovered: usize,
}

impl Coverage {
    fn new(n: usize) -> Self {
        Coverage { n, counts: vec![0; n * (n - 1) / 2], appearances: vec![0; n], uncovered: n * (n - 1) / 2 }
    }

    fn gain(&self, task: &[usize]) -> usize {
        let mut gain = 0;
        for (x, &a) in task.iter().enumerate() {
            for &b in &task[x + 1..] {
                if self.counts[pair_index(self.n, a, b)] == 0 {
                    gain += 1;
                }
            }
        }
        gain
    }

    fn load(&self, task: &[usize]) -> u64 {
        task.iter().map(|&i| u64::from(self.appearances[i])).sum()
    }

    fn add(&mut self, task: &[usize]) {
        for (x, &a) in task.iter().enumerate() {
            self.appearances[a] += 1;
            for &b in &task[x + 1..] {
                let c = &mut self.counts[pair_index(self.n, a, b)];
                if *c == 0 {
                    self.uncovered -= 1;
                }
                *c += 1;
            }
        }
    }

    fn uncovered_pairs(&self) -> Vec<(usize, usize)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(idx, _)| pair_from_index(self.n, idx))
            .collect()
    }
}

/// Best candidate so far under (max gain, min load, min sorted tuple).
struct Best {
    gain: usize,
    load: u64,
    task: Vec<usize>,
}

impl Best {
    fn offer(slot: &mut Option<Best>, cov: &Coverage, sorted: &[usize]) {
        let gain = cov.gain(sorted);
        if gain == 0 {
            return;
        }
        let load = cov.load(sorted);
        let better = match slot {
            None => true,
            Some(b) => {
                gain > b.gain
                    || (gain == b.gain && (load < b.load || (load == b.load && sorted < b.task.as_slice())))
            }
        };
        if better {
            *slot = Some(Best { gain, load, task: sorted.to_vec() });
        }
    }
}

/// Calls `f` with every sorted `k`-subset of `pool`, in lexicographic order.
fn for_each_subset(pool: &[usize], k: usize, f: &mut impl FnMut(&[usize])) {
    let m = pool.len();
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (slot, &i) in buf.iter_mut().zip(&idx) {
            *slot = pool[i];
        }
        f(&buf);
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == pos - 1 + m - k {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        pos -= 1;
        idx[pos] += 1;
        for later in pos + 1..k {
            idx[later] = idx[later - 1] + 1;
        }
    }
}

/// Generates a pair-covering design of `k`-item tasks over `n` items.
///
/// Deterministic in `(n, k, seed)`.
pub fn generate_design(n: usize, k: usize, seed: u64) -> Result<Design> {
    if k < 2 || n < k {
        return Err(Error::InvalidInput(format!("design needs n >= k >= 2, got n={n}, k={k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cov = Coverage::new(n);
    let mut tasks: Vec<Vec<usize>> = Vec::new();
    let exhaustive = binomial(n as u128, k as u128) <= CANDIDATE_POOL as u128;
    let all_items: Vec<usize> = (0..n).collect();
    let mut shuffle_buf: Vec<usize> = (0..n).collect();
    let mut sample = vec![0usize; k];

    while cov.uncovered > 0 {
        let mut best: Option<Best> = None;
        if exhaustive {
            for_each_subset(&all_items, k, &mut |s| Best::offer(&mut best, &cov, s));
        } else if cov.uncovered < ENDGAME_UNCOVERED {
            endgame_candidates(&cov, k, &mut rng, &mut |s| Best::offer(&mut best, &cov, s));
        } else {
            for _ in 0..CANDIDATE_POOL {
                // Partial Fisher-Yates over a persistent permutation buffer.
                for i in 0..k {
                    let j = rng.random_range(i..n);
                    shuffle_buf.swap(i, j);
                }
                sample.copy_from_slice(&shuffle_buf[..k]);
                sample.sort_unstable();
                Best::offer(&mut best, &cov, &sample);
            }
            constructed_candidates(&cov, k, &mut rng, &mut |s| Best::offer(&mut best, &cov, s));
        }
        let chosen = match best {
            Some(b) => b.task,
            // Every candidate in a random pool can miss the remaining pairs; fall back to them.
            None => {
                let mut fallback = None;
                endgame_candidates(&cov, k, &mut rng, &mut |s| Best::offer(&mut fallback, &cov, s));
                fallback.expect("an uncovered pair always yields a candidate").task
            }
        };
        cov.add(&chosen);
        tasks.push(chosen);
    }

    prune_redundant(n, &mut tasks);
    let budget = LOCAL_SEARCH_STEPS_PER_PAIR * cov.counts.len();
    let tasks = shrink(n, tasks, &mut rng, budget);
    Design::from_tasks(n, k, seed, tasks)
}

/// Offers candidates grown from random uncovered pairs: starting from the
/// pair, repeatedly add the item completing the most uncovered pairs with
/// the items already chosen.
fn constructed_candidates(cov: &Coverage, k: usize, rng: &mut ChaCha8Rng, f: &mut impl FnMut(&[usize])) {
    let n = cov.n;
    let mut task = Vec::with_capacity(k);
    let mut sorted = Vec::with_capacity(k);
    for _ in 0..CONSTRUCTED_CANDIDATES {
        // Rejection-sample an uncovered pair; coverage is still sparse here.
        let (a, b) = loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && cov.counts[pair_index(n, a, b)] == 0 {
                break (a, b);
            }
        };
        task.clear();
        task.push(a);
        task.push(b);
        while task.len() < k {
            let mut pick: Option<(usize, u32, usize)> = None;
            for c in 0..n {
                if task.contains(&c) {
                    continue;
                }
                let gain = task.iter().filter(|&&t| cov.counts[pair_index(n, t, c)] == 0).count();
                let load = cov.appearances[c];
                let better = match pick {
                    None => true,
                    Some((g, l, _)) => gain > g || (gain == g && load < l),
                };
                if better {
                    pick = Some((gain, load, c));
                }
            }
            task.push(pick.expect("n >= k leaves a free item").2);
        }
        sorted.clear();
        sorted.extend_from_slice(&task);
        sorted.sort_unstable();
        f(&sorted);
    }
}

/// Offers every `k`-subset containing some uncovered pair.
fn endgame_candidates(cov: &Coverage, k: usize, rng: &mut ChaCha8Rng, f: &mut impl FnMut(&[usize])) {
    let n = cov.n;
    let completions = binomial((n - 2) as u128, (k - 2) as u128);
    let mut buf = Vec::with_capacity(k);
    for (a, b) in cov.uncovered_pairs() {
        let rest: Vec<usize> = (0..n).filter(|&i| i != a && i != b).collect();
        let mut emit = |others: &[usize]| {
            buf.clear();
            buf.extend_from_slice(others);
            buf.push(a);
            buf.push(b);
            buf.sort_unstable();
            f(&buf);
        };
        if completions <= ENDGAME_PER_PAIR_CAP {
            for_each_subset(&rest, k - 2, &mut emit);
        } else {
            let mut perm = rest.clone();
            let mut others = vec![0; k - 2];
            for _ in 0..ENDGAME_PER_PAIR_CAP {
                for i in 0..k - 2 {
                    let j = rng.random_range(i..perm.len());
                    perm.swap(i, j);
                }
                others.copy_from_slice(&perm[..k - 2]);
                emit(&others);
            }
        }
    }
}

/// Repeatedly removes the most redundant task and repairs coverage by
/// single-item swaps, keeping the last design that covers every pair.
fn shrink(n: usize, tasks: Vec<Vec<usize>>, rng: &mut ChaCha8Rng, budget: usize) -> Vec<Vec<usize>> {
    let mut best = tasks;
    let mut remaining = budget;
    while remaining > 0 && best.len() > 1 {
        let mut candidate = best.clone();
        let drop = most_redundant_task(n, &candidate);
        candidate.remove(drop);
        let mut repair = Repair::new(n, candidate);
        let (covered, used) = repair.anneal(rng, remaining);
        remaining -= used;
        if !covered {
            break;
        }
        let mut tasks = repair.tasks;
        for t in &mut tasks {
            t.sort_unstable();
        }
        best = tasks;
    }
    best
}

/// Index of the task whose removal uncovers the fewest pairs; latest on ties.
fn most_redundant_task(n: usize, tasks: &[Vec<usize>]) -> usize {
    let mut counts = vec![0u32; n * (n - 1) / 2];
    for task in tasks {
        for (x, &a) in task.iter().enumerate() {
            for &b in &task[x + 1..] {
                counts[pair_index(n, a, b)] += 1;
            }
        }
    }
    let mut best = (usize::MAX, 0);
    for (t, task) in tasks.iter().enumerate() {
        let sole = task
            .iter()
            .enumerate()
            .flat_map(|(x, &a)| task[x + 1..].iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| counts[pair_index(n, a, b)] == 1)
            .count();
        if sole <= best.0 {
            best = (sole, t);
        }
    }
    best.1
}

/// Local-search state: tasks plus pair counts and the uncovered-pair set.
struct Repair {
    n: usize,
    tasks: Vec<Vec<usize>>,
    counts: Vec<u32>,
    uncovered: Vec<usize>,
    // Position of each pair in `uncovered`, or usize::MAX.
    slot: Vec<usize>,
    item_tasks: Vec<Vec<usize>>,
}

impl Repair {
    fn new(n: usize, tasks: Vec<Vec<usize>>) -> Self {
        let pairs = n * (n - 1) / 2;
        let mut counts = vec![0u32; pairs];
        let mut item_tasks = vec![Vec::new(); n];
        for (t, task) in tasks.iter().enumerate() {
            for (x, &a) in task.iter().enumerate() {
                item_tasks[a].push(t);
                for &b in &task[x + 1..] {
                    counts[pair_index(n, a, b)] += 1;
                }
            }
        }
        let mut uncovered = Vec::new();
        let mut slot = vec![usize::MAX; pairs];
        for (p, &c) in counts.iter().enumerate() {
            if c == 0 {
                slot[p] = uncovered.len();
                uncovered.push(p);
            }
        }
        Repair { n, tasks, counts, uncovered, slot, item_tasks }
    }

    fn inc(&mut self, p: usize) {
        if self.counts[p] == 0 {
            let at = self.slot[p];
            let last = *self.uncovered.last().expect("pair is listed as uncovered");
            self.uncovered.swap_remove(at);
            if last != p {
                self.slot[last] = at;
            }
            self.slot[p] = usize::MAX;
        }
        self.counts[p] += 1;
    }

    fn dec(&mut self, p: usize) {
        self.counts[p] -= 1;
        if self.counts[p] == 0 {
            self.slot[p] = self.uncovered.len();
            self.uncovered.push(p);
        }
    }

    /// Change in the number of uncovered pairs if `tasks[t][pos]` became `item`.
    fn delta(&self, t: usize, pos: usize, item: usize) -> i64 {
        let task = &self.tasks[t];
        let old = task[pos];
        let mut d = 0i64;
        for (x, &other) in task.iter().enumerate() {
            if x == pos {
                continue;
            }
            if self.counts[pair_index(self.n, old, other)] == 1 {
                d += 1;
            }
            if self.counts[pair_index(self.n, item, other)] == 0 {
                d -= 1;
            }
        }
        d
    }

    fn replace(&mut self, t: usize, pos: usize, item: usize) {
        let old = self.tasks[t][pos];
        for x in 0..self.tasks[t].len() {
            if x != pos {
                let other = self.tasks[t][x];
                self.dec(pair_index(self.n, old, other));
                self.inc(pair_index(self.n, item, other));
            }
        }
        self.tasks[t][pos] = item;
        let list = &mut self.item_tasks[old];
        let i = list.iter().position(|&x| x == t).expect("task listed under its item");
        list.swap_remove(i);
        self.item_tasks[item].push(t);
    }

    /// Swaps items until every pair is covered or `max_steps` run out.
    /// Returns whether coverage was reached and the steps used.
    fn anneal(&mut self, rng: &mut ChaCha8Rng, max_steps: usize) -> (bool, usize) {
        for step in 0..max_steps {
            if self.uncovered.is_empty() {
                return (true, step);
            }
            let p = self.uncovered[rng.random_range(0..self.uncovered.len())];
            let (a, b) = pair_from_index(self.n, p);
            let (keep, bring) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            let hosts = &self.item_tasks[keep];
            if hosts.is_empty() {
                continue;
            }
            let t = hosts[rng.random_range(0..hosts.len())];
            let mut choice: Option<(i64, usize)> = None;
            for pos in 0..self.tasks[t].len() {
                if self.tasks[t][pos] == keep {
                    continue;
                }
                let d = self.delta(t, pos, bring);
                if choice.is_none_or(|(best, _)| d < best) {
                    choice = Some((d, pos));
                }
            }
            let Some((d, pos)) = choice else { continue };
            if d <= 0 || rng.random::<f64>() < (-(d as f64) / ANNEAL_TEMPERATURE).exp() {
                self.replace(t, pos, bring);
            }
        }
        (self.uncovered.is_empty(), max_steps)
    }
}

/// Drops, latest first, tasks whose every pair is also covered elsewhere.
fn prune_redundant(n: usize, tasks: &mut Vec<Vec<usize>>) {
    let mut counts = vec![0u32; n * (n - 1) / 2];
    for task in tasks.iter() {
        for (x, &a) in task.iter().enumerate() {
            for &b in &task[x + 1..] {
                counts[pair_index(n, a, b)] += 1;
            }
        }
    }
    let mut keep = vec![true; tasks.len()];
    for t in (0..tasks.len()).rev() {
        let task = &tasks[t];
        let removable = task
            .iter()
            .enumerate()
            .all(|(x, &a)| task[x + 1..].iter().all(|&b| counts[pair_index(n, a, b)] >= 2));
        if removable {
            keep[t] = false;
            for (x, &a) in task.iter().enumerate() {
                for &b in &task[x + 1..] {
                    counts[pair_index(n, a, b)] -= 1;
                }
            }
        }
    }
    let mut it = keep.into_iter();
    tasks.retain(|_| it.next().unwrap_or(true));
}

/// Coverage accounting for a design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub total_pairs: usize,
    /// `tasks * C(k, 2)`.
    pub pair_slots: usize,
    /// Pairs that occur in exactly one task.
    pub pairs_covered_once: usize,
    /// Maps `r`, the number of a task's pairs already covered by earlier
    /// tasks, to how many tasks have that `r`.
    pub tasks_by_known_relations: BTreeMap<usize, usize>,
}

impl RedundancyReport {
    pub fn covered_once_fraction(&self) -> f64 {
        self.pairs_covered_once as f64 / self.total_pairs as f64
    }

    /// Pair slots in tasks none of whose pairs were seen before.
    pub fn non_repetitive_pairs(&self, block_size: usize) -> usize {
        self.tasks_by_known_relations.get(&0).copied().unwrap_or(0) * block_size * (block_size - 1) / 2
    }

    /// Sum of `r * count` over the histogram: slots spent on already-known pairs.
    pub fn redundant_slots(&self) -> usize {
        self.tasks_by_known_relations.iter().map(|(r, c)| r * c).sum()
    }
}

pub fn redundancy_report(design: &Design) -> RedundancyReport {
    let n = design.n_items;
    let k = design.block_size;
    let mut counts = vec![0u32; n * (n - 1) / 2];
    let mut histogram = BTreeMap::new();
    for task in &design.tasks {
        let mut known = 0;
        for (x, &a) in task.iter().enumerate() {
            for &b in &task[x + 1..] {
                let c = &mut counts[pair_index(n, a, b)];
                if *c > 0 {
                    known += 1;
                }
                *c += 1;
            }
        }
        *histogram.entry(known).or_insert(0) += 1;
    }
    RedundancyReport {
        total_pairs: counts.len(),
        pair_slots: design.tasks.len() * k * (k - 1) / 2,
        pairs_covered_once: counts.iter().filter(|&&c| c == 1).count(),
        tasks_by_known_relations: histogram,
    }
}
