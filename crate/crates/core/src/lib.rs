//! Algorithms for the binary-forking model of parallel computation, with
//! exact work/span instrumentation and sequential oracles.

mod error;
pub mod listcontract;
pub mod primitives;
pub mod randperm;
pub mod rmq;
pub mod sort;
pub mod runtime;
pub mod treecontract;
pub mod sets;

pub use error::{Error, Result};
pub use runtime::{Ctx, Mode};
