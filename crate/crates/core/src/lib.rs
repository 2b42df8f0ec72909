//! Exact tree projection for wavelet coefficient trees.
//!
//! Given coefficients `y` on a canonical d-ary tree, [`etp::project`] finds
//! the rooted subtree of `k` nodes carrying the most energy and returns `y`
//! restricted to it, which is the closest tree-sparse vector in Euclidean
//! norm. [`oracle`] checks it by exhaustion on small trees and
//! [`baselines`] provides the greedy alternative.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod etp;
pub mod exec;
pub mod oracle;
pub mod signal;
pub mod topology;

pub use baselines::gta_project;
pub use error::{Error, Result};
pub use etp::{
    complexity_bound, forward_pass, forward_pass_with, project, project_batch, project_with,
    Backtrack, DpTables, OpCounter, ProjectionResult,
};
pub use exec::Execution;
pub use oracle::{
    brute_force_project, count_rooted_trees, enumerate_rooted_trees, is_valid_decision,
    DecisionVector,
};
pub use signal::Signal;
pub use topology::{Support, TreeTopology};
