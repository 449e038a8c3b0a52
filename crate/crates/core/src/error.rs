use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("priorities must be distinct integers: {0}")]
    InvalidPriorities(String),
    #[error("malformed list: {0}")]
    MalformedList(String),
    #[error("invalid swap target H[{index}] = {target}")]
    InvalidSwapTarget { index: usize, target: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("query ({i}, {j}) out of range for length {len}")]
    OutOfRange { i: usize, j: usize, len: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("leaf {0} is the final surviving leaf and cannot be raked")]
    FinalLeaf(usize),
    #[error("rank {rank} outside 1..={total}")]
    RankOutOfRange { rank: usize, total: usize },
    #[error("deadlock: {0}")]
    Deadlock(String),
}

pub type Result<T> = std::result::Result<T, Error>;
