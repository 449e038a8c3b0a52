//! Shared parallel building blocks: scans, pack, and tree flatten/rebuild.

mod pack;
mod scan;
mod tree;

pub use pack::{filter, pack};
pub use scan::{prefix_scan, Bounded, Direction, ScanSpec};
pub use tree::{build_balanced, flatten, BinaryTree, SimpleTree};
