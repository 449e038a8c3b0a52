//! Randomized tree contraction by rakes. Each internal node is paired with
//! a leaf through Euler-tour labels, then raked once its lower-labelled
//! neighbours are gone.

mod contract;
mod labels;
mod tree;

pub use contract::{tree_contract, tree_contract_with, RakeEntry, TreeContractOutcome, TreeContraction, TreeTask};
pub use labels::{compute_labels, Labels};
pub use tree::{sequential_rake, BinTree};
