//! Brute-force ground truth for small trees.
//!
//! Every rooted tree of cardinality `k` is listed explicitly and scored, so
//! the result is optimal by exhaustion. Only meant for trees small enough
//! that the enumeration stays below [`DEFAULT_ENUMERATION_LIMIT`].

use crate::error::{Error, Result};
use crate::etp::{OpCounter, ProjectionResult};
use crate::exec::{self, Execution};
use crate::signal::Signal;
use crate::topology::{Support, TreeTopology};

pub const DEFAULT_ENUMERATION_LIMIT: u128 = 10_000_000;

/// 0/1 indicator of a support, one entry per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionVector(Vec<u8>);

impl DecisionVector {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if let Some(index) = entries.iter().position(|&v| v > 1) {
            return Err(Error::InvalidDecisionEntry {
                index,
                value: entries[index],
            });
        }
        Ok(Self(entries))
    }

    pub fn from_support(support: &Support, n: usize) -> Result<Self> {
        let mut entries = vec![0u8; n];
        for &node in support.nodes() {
            if node == 0 || node > n {
                return Err(Error::NodeOutOfRange { node, n });
            }
            entries[node - 1] = 1;
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn to_support(&self) -> Support {
        Support::from_sorted(
            self.0
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v == 1)
                .map(|(i, _)| i + 1)
                .collect(),
        )
    }
}

/// Feasibility for the integer program: `tau` is binary, never exceeds its
/// parent's value, sums to `k`, and selects the root.
pub fn is_valid_decision(t: &TreeTopology, tau: &DecisionVector, k: usize) -> Result<bool> {
    let tau = tau.entries();
    if tau.len() != t.len() {
        return Err(Error::LengthMismatch {
            expected: t.len(),
            found: tau.len(),
        });
    }
    let d = t.order();
    let nonincreasing = (2..=t.len()).all(|i| tau[i - 1] <= tau[(i - 1) / d]);
    let sum: usize = tau.iter().map(|&v| v as usize).sum();
    Ok(tau.iter().all(|&v| v <= 1) && nonincreasing && sum == k && tau[0] == 1)
}

/// Number of rooted trees of cardinality `k`, saturating at `u128::MAX`.
pub fn count_rooted_trees(t: &TreeTopology, k: usize) -> Result<u128> {
    if k == 0 || k > t.len() {
        return Err(Error::CardinalityOutOfRange { k, max: t.len() });
    }
    // counts[i][l]: subtrees rooted at i with l nodes, truncated at k.
    let n = t.len();
    let mut counts: Vec<Vec<u128>> = vec![Vec::new(); n + 1];
    for i in (1..=n).rev() {
        let mut poly = vec![0u128, 1];
        for c in t.children_of(i)? {
            let child = std::mem::take(&mut counts[c]);
            let len = (poly.len() + child.len() - 1).min(k + 1);
            let mut merged = vec![0u128; len];
            for (a, &pa) in poly.iter().enumerate() {
                if pa == 0 {
                    continue;
                }
                for (b, &cb) in child.iter().enumerate().take(len - a) {
                    let term = pa.saturating_mul(cb);
                    merged[a + b] = merged[a + b].saturating_add(term);
                }
            }
            poly = merged;
        }
        poly.truncate(k + 1);
        // Empty subtree: one way to contribute nothing.
        poly[0] = 1;
        counts[i] = poly;
    }
    Ok(counts[1].get(k).copied().unwrap_or(0))
}

/// All rooted trees of cardinality `k` in lexicographic order, refusing
/// when there would be more than `limit` of them.
pub fn enumerate_rooted_trees_with_limit(
    t: &TreeTopology,
    k: usize,
    limit: u128,
) -> Result<Vec<Support>> {
    let count = count_rooted_trees(t, k)?;
    if count > limit {
        return Err(Error::EnumerationTooLarge { count, limit });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut chosen = vec![1usize];
    extend(t, k, &mut chosen, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

pub fn enumerate_rooted_trees(t: &TreeTopology, k: usize) -> Result<Vec<Support>> {
    enumerate_rooted_trees_with_limit(t, k, DEFAULT_ENUMERATION_LIMIT)
}

// Grows `chosen` in increasing id order. A parent always has a smaller id
// than its child, so every rooted tree is reached exactly once, through its
// sorted node list, and the lists come out in lexicographic order.
fn extend(t: &TreeTopology, k: usize, chosen: &mut Vec<usize>, out: &mut Vec<Support>) {
    if chosen.len() == k {
        out.push(Support::from_sorted(chosen.clone()));
        return;
    }
    let last = *chosen.last().expect("root always chosen");
    let mut frontier: Vec<usize> = chosen
        .iter()
        .flat_map(|&c| t.children_of(c).expect("chosen nodes are valid"))
        .filter(|&c| c > last)
        .collect();
    frontier.sort_unstable();
    for next in frontier {
        chosen.push(next);
        extend(t, k, chosen, out);
        chosen.pop();
    }
}

/// Exact projection by exhaustion; ties go to the lexicographically
/// smallest support. Operation counts are left at zero.
pub fn brute_force_project(t: &TreeTopology, y: &Signal, k: usize) -> Result<ProjectionResult> {
    brute_force_project_with(t, y, k, DEFAULT_ENUMERATION_LIMIT, Execution::default())
}

pub fn brute_force_project_with(
    t: &TreeTopology,
    y: &Signal,
    k: usize,
    limit: u128,
    exec: Execution,
) -> Result<ProjectionResult> {
    y.check_len(t)?;
    let supports = enumerate_rooted_trees_with_limit(t, k, limit)?;
    let values = y.values();
    let energies = exec::map_collect(exec, &supports, |s| s.energy(values));
    let mut best = 0;
    for (idx, &e) in energies.iter().enumerate() {
        if e > energies[best] {
            best = idx;
        }
    }
    let support = supports.into_iter().nth(best).expect("at least one tree");
    Ok(ProjectionResult::assemble(
        values,
        support,
        OpCounter::default(),
    ))
}
