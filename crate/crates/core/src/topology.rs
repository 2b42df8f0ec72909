//! Canonical d-ary wavelet tree numbering.
//!
//! Nodes are numbered `1..=N` from coarse to fine. The root (node 1) sits at
//! level 0 and has `d - 1` children `2..=d`. Every other node `i <= N/d` has
//! the `d` children `d(i-1)+1 ..= d*i`; nodes in the finest level `J` are
//! leaves. Level `j >= 1` holds nodes `d^(j-1)+1 ..= d^j`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a canonical d-ary tree with `N = d^J` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeTopology {
    d: usize,
    levels: u32,
    n: usize,
}

impl TreeTopology {
    pub fn new(d: usize, levels: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidOrder(d));
        }
        if levels < 2 {
            return Err(Error::InvalidDepth(levels));
        }
        // Keep d^(J+1) representable: the cardinality cap at level 1 needs it.
        let n = d
            .checked_pow(levels)
            .filter(|n| n.checked_mul(d).is_some())
            .ok_or(Error::TopologyTooLarge { d, levels })?;
        Ok(Self { d, levels, n })
    }

    /// Recovers `J` from a coefficient count, requiring `len = d^J` with `J >= 2`.
    pub fn from_len(d: usize, len: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidOrder(d));
        }
        let mut levels = 0u32;
        let mut size = 1usize;
        while size < len {
            size = match size.checked_mul(d) {
                Some(s) => s,
                None => break,
            };
            levels += 1;
        }
        if size != len {
            return Err(Error::NotAPower { len, d });
        }
        Self::new(d, levels)
    }

    /// Tree order: maximum number of children per node.
    pub fn order(&self) -> usize {
        self.d
    }

    /// Number of levels below the root (`J`).
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Total node count `N = d^J`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node == 0 || node > self.n {
            return Err(Error::NodeOutOfRange { node, n: self.n });
        }
        Ok(())
    }

    /// Node ids belonging to level `j`, for `0 <= j <= J`.
    pub fn level_nodes(&self, level: u32) -> RangeInclusive<usize> {
        assert!(level <= self.levels, "level {level} beyond tree depth");
        if level == 0 {
            1..=1
        } else {
            self.d.pow(level - 1) + 1..=self.d.pow(level)
        }
    }

    /// Number of nodes at level `j`: 1 at the root, `(d-1) d^(j-1)` below.
    pub fn level_size(&self, level: u32) -> usize {
        if level == 0 {
            1
        } else {
            (self.d - 1) * self.d.pow(level - 1)
        }
    }

    pub fn level_of(&self, node: usize) -> Result<u32> {
        self.check_node(node)?;
        let mut level = 0;
        let mut last = 1;
        while node > last {
            last *= self.d;
            level += 1;
        }
        Ok(level)
    }

    pub fn children_of(&self, node: usize) -> Result<RangeInclusive<usize>> {
        self.check_node(node)?;
        Ok(if node == 1 {
            2..=self.d
        } else if node <= self.n / self.d {
            self.d * (node - 1) + 1..=self.d * node
        } else {
            #[allow(clippy::reversed_empty_ranges)]
            {
                1..=0
            }
        })
    }

    pub fn parent_of(&self, node: usize) -> Result<Option<usize>> {
        self.check_node(node)?;
        Ok((node > 1).then(|| (node - 1) / self.d + 1))
    }

    /// Largest subtree cardinality at level `j >= 1` that can contribute to a
    /// rooted tree of cardinality `k`:
    /// `max(0, min((d^(J+1-j) - 1)/(d - 1), k - j))`. Any `k >= 1` is
    /// accepted; for `k > N` the subtree-size term binds.
    pub fn cardinality_cap(&self, k: usize, level: u32) -> Result<usize> {
        if level == 0 || level > self.levels {
            return Err(Error::LevelOutOfRange {
                level,
                levels: self.levels,
            });
        }
        if k == 0 {
            return Err(Error::CardinalityOutOfRange { k, max: self.n });
        }
        Ok(self.cap_unchecked(k, level))
    }

    pub(crate) fn cap_unchecked(&self, k: usize, level: u32) -> usize {
        let full_subtree = (self.d.pow(self.levels + 1 - level) - 1) / (self.d - 1);
        full_subtree.min(k.saturating_sub(level as usize))
    }

    /// True iff `support` contains the root and is closed under taking parents.
    pub fn is_rooted_tree(&self, support: &Support) -> Result<bool> {
        let mut member = vec![false; self.n + 1];
        for &node in support.nodes() {
            self.check_node(node)?;
            member[node] = true;
        }
        if !member[1] {
            return Ok(false);
        }
        Ok(support
            .nodes()
            .iter()
            .filter(|&&node| node != 1)
            .all(|&node| member[(node - 1) / self.d + 1]))
    }
}

/// A set of 1-based node ids, kept sorted ascending without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Support(Vec<usize>);

impl Support {
    /// Sorts `nodes`; rejects duplicates.
    pub fn new(mut nodes: Vec<usize>) -> Result<Self> {
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateNode(w[0]));
        }
        Ok(Self(nodes))
    }

    pub(crate) fn from_sorted(nodes: Vec<usize>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        Self(nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    /// Sum of squared coefficients over the support, accumulated in id order.
    pub fn energy(&self, values: &[f64]) -> f64 {
        self.0.iter().map(|&i| values[i - 1] * values[i - 1]).sum()
    }

    /// Keeps `values` on the support and zeroes everything else.
    pub fn restrict(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        for &i in &self.0 {
            out[i - 1] = values[i - 1];
        }
        out
    }
}

impl From<Support> for Vec<usize> {
    fn from(s: Support) -> Self {
        s.0
    }
}
