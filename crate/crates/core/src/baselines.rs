//! Greedy tree approximation (GTA).
//!
//! Grows the support from the root, each step adding the frontier node with
//! the largest squared coefficient (smallest id on ties). Exact when squared
//! magnitudes never increase along a branch, suboptimal in general.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::etp::{OpCounter, ProjectionResult};
use crate::signal::Signal;
use crate::topology::{Support, TreeTopology};

#[derive(Debug, PartialEq)]
struct Candidate {
    energy: f64,
    node: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.energy
            .total_cmp(&other.energy)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn gta_project(t: &TreeTopology, y: &Signal, k: usize) -> Result<ProjectionResult> {
    if k == 0 || k > t.len() {
        return Err(Error::CardinalityOutOfRange { k, max: t.len() });
    }
    y.check_len(t)?;
    let values = y.values();
    let push_children = |frontier: &mut BinaryHeap<Candidate>, node: usize| {
        for c in t.children_of(node).expect("selected nodes are valid") {
            let v = values[c - 1];
            frontier.push(Candidate {
                energy: v * v,
                node: c,
            });
        }
    };

    let mut selected = vec![1usize];
    let mut frontier = BinaryHeap::new();
    push_children(&mut frontier, 1);
    while selected.len() < k {
        let next = frontier.pop().expect("frontier nonempty while k <= N").node;
        selected.push(next);
        push_children(&mut frontier, next);
    }
    selected.sort_unstable();
    Ok(ProjectionResult::assemble(
        values,
        Support::from_sorted(selected),
        OpCounter::default(),
    ))
}
