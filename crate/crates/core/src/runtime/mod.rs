//! Binary-forking execution: fork, test-and-set, TAS-emulated join and
//! divide-and-conquer loops, with work/span accounting in declared cost
//! units (one per comparison, per read or write of algorithm data, per TAS,
//! per fork).

mod ctx;
mod join;
mod program;
mod rng;
mod sync;

pub use ctx::{measure, ComputationTrace, Ctx, Mode, TraceNode, TraceTree};
pub use join::{join_via_tas, JoinTask, JoinTree};
pub use program::{run_in_order, run_threads, simulate, Meter, Program, Step};
pub use rng::TaskRng;
pub use sync::SyncCell;

/// `sim_schedule`: run a steppable program under a seeded interleaving.
pub fn sim_schedule<P: Program>(p: &P, seed: u64, pseudo_processors: usize) -> crate::Result<ComputationTrace> {
    simulate(p, seed, pseudo_processors)
}
