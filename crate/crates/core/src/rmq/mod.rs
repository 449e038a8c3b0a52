//! Constant-time range queries over static arrays.

mod chunked;
mod sparse;

pub use chunked::{build_chunked, ChunkedRmq};
pub use sparse::{build_sparse, SparseTable, QUERY_UNITS};
