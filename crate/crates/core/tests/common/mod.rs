#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treeproj::{Signal, TreeTopology};

/// Every k-subset of `1..=N` that contains the root and is parent-closed,
/// found by filtering all bitmasks. Independent of the recursive enumerator.
pub fn subset_filter_trees(t: &TreeTopology, k: usize) -> Vec<Vec<usize>> {
    let n = t.len();
    assert!(n <= 16, "subset filter is exponential");
    let d = t.order();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k || mask & 1 == 0 {
            continue;
        }
        let has = |i: usize| mask & (1 << (i - 1)) != 0;
        let closed = (2..=n).filter(|&i| has(i)).all(|i| {
            // parent: the root owns 2..=d, node p owns d(p-1)+1..=dp
            let parent = if i <= d { 1 } else { i.div_ceil(d) };
            has(parent)
        });
        if closed {
            out.push((1..=n).filter(|&i| has(i)).collect());
        }
    }
    out.sort();
    out
}

/// Gaussian magnitudes sorted in decreasing order and laid out in node-id
/// order, so every parent carries at least its children's magnitude.
pub fn monotone_signal(t: &TreeTopology, seed: u64) -> Signal {
    let g = Signal::gaussian(t.len(), seed).into_values();
    let mut mags: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut signs: Vec<f64> = g.iter().map(|v| v.signum()).collect();
    signs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    Signal::new(mags.iter().zip(&signs).map(|(m, s)| m * s).collect()).unwrap()
}

pub fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs())
}

/// Small topologies with N <= 64.
pub fn small_topologies() -> Vec<TreeTopology> {
    [
        (2, 2),
        (2, 3),
        (2, 4),
        (2, 5),
        (2, 6),
        (3, 2),
        (3, 3),
        (4, 2),
        (4, 3),
        (8, 2),
    ]
    .into_iter()
    .map(|(d, j)| TreeTopology::new(d, j).unwrap())
    .collect()
}
