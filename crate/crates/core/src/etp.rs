//! Exact tree projection by dynamic programming.
//!
//! The forward pass walks the tree from the finest level to the root. For
//! every node `i` and cardinality `l` it records `F(i, l)`, the largest
//! energy of a subtree rooted at `i` with `l` nodes, together with `G(i, l)`,
//! how many of those nodes come from each child. Children are merged one at
//! a time; each merge writes into scratch rows and then overwrites the
//! node's row. Cardinalities are capped per level by
//! [`TreeTopology::cardinality_cap`], so the tables stay proportional to the
//! operation bound. The backward pass then reads `G` from the root down to
//! recover the optimal support for any cardinality up to the one the tables
//! were built for.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::signal::Signal;
use crate::topology::{Support, TreeTopology};

/// Additions and comparisons performed by a projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub additions: u64,
    pub comparisons: u64,
    /// `G_r > 0` tests made while backtracking.
    pub pass2_comparisons: u64,
}

impl OpCounter {
    /// Forward-pass operations only.
    pub fn pass1(&self) -> u64 {
        self.additions + self.comparisons
    }

    pub fn total(&self) -> u64 {
        self.pass1() + self.pass2_comparisons
    }
}

impl Add for OpCounter {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            additions: self.additions + rhs.additions,
            comparisons: self.comparisons + rhs.comparisons,
            pass2_comparisons: self.pass2_comparisons + rhs.pass2_comparisons,
        }
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// A tree-sparse approximation together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// Input coefficients on the support, zero elsewhere.
    pub projection: Vec<f64>,
    pub support: Support,
    /// Sum of squared coefficients over the support.
    pub energy: f64,
    pub ops: OpCounter,
}

impl ProjectionResult {
    pub(crate) fn assemble(values: &[f64], support: Support, ops: OpCounter) -> Self {
        Self {
            projection: support.restrict(values),
            energy: support.energy(values),
            support,
            ops,
        }
    }
}

/// Per-level slab of DP rows. Every node on a level shares the same cap, so
/// row `o` (the node's offset within the level) starts at `o * (cap + 1)`.
#[derive(Debug, Clone)]
struct LevelTable {
    first: usize,
    cap: usize,
    energy: Vec<f64>,
    // `width` child slots per cell; zero on the leaf level.
    alloc: Vec<u32>,
    width: usize,
}

impl LevelTable {
    fn new(first: usize, count: usize, cap: usize, width: usize) -> Self {
        Self {
            first,
            cap,
            energy: vec![f64::NEG_INFINITY; count * (cap + 1)],
            alloc: vec![0; count * (cap + 1) * width],
            width,
        }
    }

    fn energy_row(&self, offset: usize) -> &[f64] {
        let stride = self.cap + 1;
        &self.energy[offset * stride..(offset + 1) * stride]
    }

    fn alloc_cell(&self, offset: usize, l: usize) -> &[u32] {
        let at = (offset * (self.cap + 1) + l) * self.width;
        &self.alloc[at..at + self.width]
    }
}

/// Energy (`F`) and child-allocation (`G`) tables from the forward pass.
#[derive(Debug, Clone)]
pub struct DpTables {
    topology: TreeTopology,
    k: usize,
    // Indexed by level, 0 (root) through J.
    levels: Vec<LevelTable>,
    ops: OpCounter,
}

/// Support recovered from the tables for one cardinality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backtrack {
    pub support: Support,
    /// Subtree cardinality assigned to each node; index 0 unused.
    budgets: Vec<usize>,
    pub pass2_comparisons: u64,
}

impl Backtrack {
    /// Cardinality `Γ_i` assigned to the subtree at `node`, zero if unselected.
    pub fn budget(&self, node: usize) -> usize {
        self.budgets.get(node).copied().unwrap_or(0)
    }
}

impl DpTables {
    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    /// Largest cardinality the tables were built for.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Forward-pass operation counts (`pass2_comparisons` is zero).
    pub fn ops(&self) -> OpCounter {
        self.ops
    }

    fn locate(&self, node: usize) -> Option<(&LevelTable, usize)> {
        let level = self.topology.level_of(node).ok()?;
        let table = &self.levels[level as usize];
        Some((table, node - table.first))
    }

    /// Row length minus one: the largest cardinality stored for `node`.
    pub fn cap(&self, node: usize) -> Option<usize> {
        self.locate(node).map(|(t, _)| t.cap)
    }

    /// `F(node, l)`, if that cell exists.
    pub fn energy(&self, node: usize, l: usize) -> Option<f64> {
        let (table, offset) = self.locate(node)?;
        (l <= table.cap).then(|| table.energy_row(offset)[l])
    }

    /// `G(node, l)`: slot `r - 1` holds the share of child `r`. At the root,
    /// whose children are `r = 2..=d`, slot 0 is always zero.
    pub fn allocation(&self, node: usize, l: usize) -> Option<&[u32]> {
        let (table, offset) = self.locate(node)?;
        (l <= table.cap && table.width > 0).then(|| table.alloc_cell(offset, l))
    }

    /// Recovers the optimal support of cardinality `k_sub <= self.k()`.
    pub fn backtrack(&self, k_sub: usize) -> Result<Backtrack> {
        if k_sub == 0 || k_sub > self.k {
            return Err(Error::CardinalityOutOfRange {
                k: k_sub,
                max: self.k,
            });
        }
        let t = &self.topology;
        let d = t.order();
        let mut budgets = vec![0usize; t.len() + 1];
        let mut pass2 = 0u64;
        budgets[1] = k_sub;

        let root = self.levels[0].alloc_cell(0, k_sub);
        for r in 2..=d {
            pass2 += 1;
            if root[r - 1] > 0 {
                budgets[r] = root[r - 1] as usize;
            }
        }
        for level in 1..t.levels() {
            let table = &self.levels[level as usize];
            for i in t.level_nodes(level) {
                if budgets[i] == 0 {
                    continue;
                }
                let cell = table.alloc_cell(i - table.first, budgets[i]);
                for r in 1..=d {
                    pass2 += 1;
                    if cell[r - 1] > 0 {
                        budgets[d * (i - 1) + r] = cell[r - 1] as usize;
                    }
                }
            }
        }

        let support = Support::from_sorted(
            budgets
                .iter()
                .enumerate()
                .filter(|&(_, &b)| b > 0)
                .map(|(i, _)| i)
                .collect(),
        );
        Ok(Backtrack {
            support,
            budgets,
            pass2_comparisons: pass2,
        })
    }
}

fn check_cardinality(t: &TreeTopology, k: usize) -> Result<()> {
    if k == 0 || k > t.len() {
        return Err(Error::CardinalityOutOfRange { k, max: t.len() });
    }
    Ok(())
}

#[derive(Default)]
struct Scratch {
    energy: Vec<f64>,
    alloc: Vec<u32>,
}

/// Fills one node's row by merging its children in order.
///
/// `children` yields `(slot, child_energy_row)`; each child row covers
/// cardinalities `0..=child_cap`. For the child being merged, a share `s`
/// is feasible when `l - s` fits in what the earlier children already cover
/// (`filled`). `s = 0` keeps the pre-merge value, so it costs a comparison
/// but no addition. Ties go to the smallest `s`.
#[allow(clippy::too_many_arguments)]
fn fill_row<'a>(
    own_energy: f64,
    cap: usize,
    width: usize,
    children: impl Iterator<Item = (usize, &'a [f64])>,
    child_cap: usize,
    energy: &mut [f64],
    alloc: &mut [u32],
    scratch: &mut Scratch,
) -> OpCounter {
    let mut ops = OpCounter::default();
    energy.fill(f64::NEG_INFINITY);
    alloc.fill(0);
    energy[0] = 0.0;
    if cap == 0 {
        return ops;
    }
    energy[1] = own_energy;

    scratch.energy.resize(cap + 1, 0.0);
    scratch.alloc.resize((cap + 1) * width, 0);

    let mut filled = 1usize;
    for (slot, child) in children {
        let hi = cap.min(filled + child_cap);
        for l in 2..=hi {
            let s_lo = l.saturating_sub(filled);
            let s_hi = (l - 1).min(child_cap);
            let mut best = f64::NEG_INFINITY;
            let mut best_s = usize::MAX;
            for s in s_lo..=s_hi {
                let candidate = if s == 0 {
                    energy[l]
                } else {
                    ops.additions += 1;
                    child[s] + energy[l - s]
                };
                ops.comparisons += 1;
                if best_s == usize::MAX || candidate > best {
                    best = candidate;
                    best_s = s;
                }
            }
            scratch.energy[l] = best;
            let (dst, src) = (l * width, (l - best_s) * width);
            scratch.alloc[dst..dst + width].copy_from_slice(&alloc[src..src + width]);
            scratch.alloc[dst + slot] = best_s as u32;
        }
        if hi >= 2 {
            energy[2..=hi].copy_from_slice(&scratch.energy[2..=hi]);
            alloc[2 * width..(hi + 1) * width]
                .copy_from_slice(&scratch.alloc[2 * width..(hi + 1) * width]);
        }
        filled = filled.max(hi);
    }
    debug_assert_eq!(filled, cap, "row not fully covered by children");
    ops
}

/// Runs `fill` over every row of `table`, in parallel when allowed.
fn fill_level<F>(exec: Execution, table: &mut LevelTable, fill: F) -> OpCounter
where
    F: Fn(usize, &mut [f64], &mut [u32], &mut Scratch) -> OpCounter + Sync + Send,
{
    let stride = table.cap + 1;
    let alloc_stride = stride * table.width;
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return table
            .energy
            .par_chunks_mut(stride)
            .zip(table.alloc.par_chunks_mut(alloc_stride))
            .enumerate()
            .with_min_len(16)
            .map_init(Scratch::default, |scratch, (offset, (e, a))| {
                fill(offset, e, a, scratch)
            })
            .reduce(OpCounter::default, |a, b| a + b);
    }
    let _ = exec;
    let mut scratch = Scratch::default();
    table
        .energy
        .chunks_mut(stride)
        .zip(table.alloc.chunks_mut(alloc_stride))
        .enumerate()
        .map(|(offset, (e, a))| fill(offset, e, a, &mut scratch))
        .fold(OpCounter::default(), |a, b| a + b)
}

/// Builds the `F`/`G` tables for all cardinalities up to `k`.
pub fn forward_pass(t: &TreeTopology, y: &Signal, k: usize) -> Result<DpTables> {
    forward_pass_with(t, y, k, Execution::default())
}

pub fn forward_pass_with(
    t: &TreeTopology,
    y: &Signal,
    k: usize,
    exec: Execution,
) -> Result<DpTables> {
    check_cardinality(t, k)?;
    y.check_len(t)?;
    let d = t.order();
    let depth = t.levels();
    let sq = |node: usize| {
        let v = y.values()[node - 1];
        v * v
    };

    let mut levels: Vec<Option<LevelTable>> = vec![None; depth as usize + 1];
    let mut ops = OpCounter::default();

    let leaf_cap = t.cap_unchecked(k, depth);
    let leaves = t.level_nodes(depth);
    let mut leaf = LevelTable::new(*leaves.start(), t.level_size(depth), leaf_cap, 0);
    for (offset, node) in leaves.enumerate() {
        let row = &mut leaf.energy[offset * (leaf_cap + 1)..(offset + 1) * (leaf_cap + 1)];
        row[0] = 0.0;
        if leaf_cap >= 1 {
            row[1] = sq(node);
        }
    }
    levels[depth as usize] = Some(leaf);

    for level in (1..depth).rev() {
        let cap = t.cap_unchecked(k, level);
        let first = *t.level_nodes(level).start();
        let mut table = LevelTable::new(first, t.level_size(level), cap, d);
        let below = levels[level as usize + 1]
            .as_ref()
            .expect("child level built");
        let child_cap = below.cap;
        ops += fill_level(exec, &mut table, |offset, e, a, scratch| {
            let children = (1..=d).map(|r| (r - 1, below.energy_row(d * offset + r - 1)));
            fill_row(
                sq(first + offset),
                cap,
                d,
                children,
                child_cap,
                e,
                a,
                scratch,
            )
        });
        levels[level as usize] = Some(table);
    }

    let mut root = LevelTable::new(1, 1, k, d);
    let first_level = levels[1].as_ref().expect("level 1 built");
    let children = (2..=d).map(|r| (r - 1, first_level.energy_row(r - 2)));
    ops += fill_row(
        sq(1),
        k,
        d,
        children,
        first_level.cap,
        &mut root.energy,
        &mut root.alloc,
        &mut Scratch::default(),
    );
    levels[0] = Some(root);

    Ok(DpTables {
        topology: *t,
        k,
        levels: levels
            .into_iter()
            .map(|l| l.expect("all levels built"))
            .collect(),
        ops,
    })
}

/// Euclidean projection of `y` onto vectors supported on a rooted tree of
/// cardinality `k`.
pub fn project(t: &TreeTopology, y: &Signal, k: usize) -> Result<ProjectionResult> {
    project_with(t, y, k, Execution::default())
}

pub fn project_with(
    t: &TreeTopology,
    y: &Signal,
    k: usize,
    exec: Execution,
) -> Result<ProjectionResult> {
    let tables = forward_pass_with(t, y, k, exec)?;
    let bt = tables.backtrack(k)?;
    let ops = OpCounter {
        pass2_comparisons: bt.pass2_comparisons,
        ..tables.ops()
    };
    Ok(ProjectionResult::assemble(y.values(), bt.support, ops))
}

/// Projects many independent signals; parallelism is across signals.
pub fn project_batch(
    t: &TreeTopology,
    signals: &[Signal],
    k: usize,
    exec: Execution,
) -> Result<Vec<ProjectionResult>> {
    crate::exec::map_collect(exec, signals, |y| {
        project_with(t, y, k, Execution::Sequential)
    })
    .into_iter()
    .collect()
}

/// `3 d^2 N k + N`, the worst-case count of additions and comparisons.
pub fn complexity_bound(d: usize, n: usize, k: usize) -> Result<u64> {
    let overflow = Error::BoundOverflow { d, n, k };
    let (d, n, k) = (d as u64, n as u64, k as u64);
    3u64.checked_mul(d)
        .and_then(|x| x.checked_mul(d))
        .and_then(|x| x.checked_mul(n))
        .and_then(|x| x.checked_mul(k))
        .and_then(|x| x.checked_add(n))
        .ok_or(overflow)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(d: usize, levels: u32) -> TreeTopology {
        TreeTopology::new(d, levels).unwrap()
    }

    fn signal(v: &[f64]) -> Signal {
        Signal::new(v.to_vec()).unwrap()
    }

    // y^2 = (0, 1, 16, 4, 0, 0, 25, 9)
    const WORKED: [f64; 8] = [0.0, 1.0, 4.0, 2.0, 0.0, 0.0, 5.0, 3.0];

    #[test]
    fn worked_example_tables() {
        let t = topo(2, 3);
        let tables = forward_pass(&t, &signal(&WORKED), 4).unwrap();
        assert_eq!(tables.energy(4, 2), Some(29.0));
        assert_eq!(tables.allocation(4, 2), Some(&[1, 0][..]));
        assert_eq!(tables.energy(1, 4), Some(30.0));
        assert_eq!(tables.energy(1, 1), Some(0.0));
        assert_eq!(tables.cap(1), Some(4));
        assert_eq!(tables.cap(2), Some(3));
        assert_eq!(tables.cap(4), Some(2));
        assert_eq!(tables.cap(8), Some(1));
    }

    #[test]
    fn small_tree_tables() {
        let t = topo(2, 2);
        let tables = forward_pass(&t, &signal(&[1.0, 2.0, 3.0, 4.0]), 3).unwrap();
        assert_eq!(tables.energy(2, 2), Some(20.0));
        assert_eq!(tables.allocation(2, 2), Some(&[0, 1][..]));
        assert_eq!(tables.energy(1, 1), Some(1.0));
    }

    #[test]
    fn worked_example_backtrack() {
        let t = topo(2, 3);
        let tables = forward_pass(&t, &signal(&WORKED), 4).unwrap();
        let bt = tables.backtrack(4).unwrap();
        assert_eq!(bt.support.nodes(), &[1, 2, 4, 7]);
        assert_eq!(bt.budget(1), 4);
        assert_eq!(bt.budget(2), 3);
        assert_eq!(bt.budget(4), 2);
        assert_eq!(bt.budget(7), 1);
        assert_eq!(bt.budget(3), 0);
        assert_eq!(tables.backtrack(1).unwrap().support.nodes(), &[1]);
        assert!(tables.backtrack(0).is_err());
        assert!(tables.backtrack(5).is_err());
    }

    #[test]
    fn small_tree_backtrack() {
        let t = topo(2, 2);
        let tables = forward_pass(&t, &signal(&[1.0, 2.0, 3.0, 4.0]), 3).unwrap();
        assert_eq!(tables.backtrack(3).unwrap().support.nodes(), &[1, 2, 4]);
    }

    #[test]
    fn projection_examples() {
        let r = project(&topo(2, 3), &signal(&WORKED), 4).unwrap();
        assert_eq!(r.support.nodes(), &[1, 2, 4, 7]);
        assert_eq!(r.projection, vec![0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 5.0, 0.0]);
        assert_eq!(r.energy, 30.0);

        let y = [1.0, 2.0, 3.0, 4.0];
        let full = project(&topo(2, 2), &signal(&y), 4).unwrap();
        assert_eq!(full.projection, y.to_vec());
        assert_eq!(full.energy, 30.0);

        let two = project(&topo(2, 2), &signal(&y), 2).unwrap();
        assert_eq!(two.support.nodes(), &[1, 2]);
        assert_eq!(two.energy, 5.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = topo(2, 2);
        let y = signal(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            project(&t, &y, 0),
            Err(Error::CardinalityOutOfRange { .. })
        ));
        assert!(matches!(
            project(&t, &y, 5),
            Err(Error::CardinalityOutOfRange { .. })
        ));
        assert_eq!(
            project(&t, &signal(&[1.0; 8]), 2).unwrap_err(),
            Error::LengthMismatch {
                expected: 4,
                found: 8
            }
        );
    }

    #[test]
    fn all_zero_signal_is_deterministic() {
        let t = topo(3, 2);
        let y = signal(&[0.0; 9]);
        let a = project(&t, &y, 5).unwrap();
        let b = project(&t, &y, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.support.len(), 5);
        assert!(t.is_rooted_tree(&a.support).unwrap());
    }

    #[test]
    fn bound_formula() {
        assert_eq!(complexity_bound(2, 8, 4).unwrap(), 392);
        assert_eq!(complexity_bound(2, 16, 1).unwrap(), 208);
        assert_eq!(complexity_bound(3, 9, 3).unwrap(), 738);
        assert_eq!(complexity_bound(2, 1024, 32).unwrap(), 394_240);
        assert!(matches!(
            complexity_bound(1 << 20, 1 << 20, 1 << 20),
            Err(Error::BoundOverflow { .. })
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let t = topo(3, 4);
        let y = Signal::gaussian(t.len(), 11);
        for k in [1, 2, 9, 40, 81] {
            let a = project_with(&t, &y, k, Execution::Sequential).unwrap();
            let b = project_with(&t, &y, k, Execution::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn batch_matches_single() {
        let t = topo(2, 5);
        let signals: Vec<_> = (0..8).map(|s| Signal::gaussian(t.len(), s)).collect();
        let batch = project_batch(&t, &signals, 7, Execution::Parallel).unwrap();
        for (y, r) in signals.iter().zip(&batch) {
            assert_eq!(&project(&t, y, 7).unwrap(), r);
        }
    }
}
