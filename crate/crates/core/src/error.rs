use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("tree order d must be at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("number of levels J must be at least 2, got {0}")]
    InvalidDepth(u32),
    #[error("tree with d={d}, J={levels} is too large to index")]
    TopologyTooLarge { d: usize, levels: u32 },
    #[error("node {node} is outside 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("level {level} is outside 1..={levels}")]
    LevelOutOfRange { level: u32, levels: u32 },
    #[error("cardinality {k} is outside 1..={max}")]
    CardinalityOutOfRange { k: usize, max: usize },
    #[error("signal length {found} does not match tree size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("node {0} appears more than once")]
    DuplicateNode(usize),
    #[error("decision entry {index} is {value}, expected 0 or 1")]
    InvalidDecisionEntry { index: usize, value: u8 },
    #[error("enumeration would produce {count} supports, above the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },
    #[error("operation bound 3*d^2*N*k + N overflows for d={d}, N={n}, k={k}")]
    BoundOverflow { d: usize, n: usize, k: usize },
    #[error("length {len} is not a power of {d}")]
    NotAPower { len: usize, d: usize },
}
