//! Task counts and redundancy for 20..=60 items, four per task.

use std::time::Instant;

use bwsrank_core::{generate_design, pair_count, redundancy_report};

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    println!("items\tlower_bound\tseed\ttasks\tcovered_once\tnon_repetitive\tmillis");
    for n in (20..=60).step_by(5) {
        let bound = pair_count(n).unwrap().div_ceil(6);
        for seed in 0..seeds {
            let start = Instant::now();
            let design = generate_design(n, 4, seed).unwrap();
            let ms = start.elapsed().as_millis();
            let r = redundancy_report(&design);
            println!(
                "{n}\t{bound}\t{seed}\t{}\t{:.3}\t{}\t{ms}",
                design.len(),
                r.covered_once_fraction(),
                r.non_repetitive_pairs(4)
            );
        }
    }
}
