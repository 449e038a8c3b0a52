//! List contraction by random priorities, list ranking, and binary-forking
//! Wyllie pointer jumping.

mod contract;
mod list;
mod random;
mod wyllie;

pub use contract::{list_contract, list_contract_with, list_rank, ContractOutcome, ContractTask, ListContraction, SpliceEntry, SpliceLog};
pub use list::LinkedList;
pub use random::{random_list, random_priorities, PrioritySource};
pub use wyllie::{wyllie_rank, Wyllie, WyllieCell, WyllieCells, WyllieTask};
