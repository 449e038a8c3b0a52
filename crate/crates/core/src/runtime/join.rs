use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use super::ctx::Ctx;
use super::program::{Meter, Program, Step};
use super::sync::SyncCell;

/// Join emulated with one test-and-set: both branches TAS a fresh cell when
/// they finish, and the branch that observes 1 (the later finisher) runs
/// the continuation. Returns the continuation's result.
pub fn join_via_tas<L, R, K, T>(ctx: &mut Ctx, left: L, right: R, continuation: K) -> T
where
    L: FnOnce(&mut Ctx) + Send,
    R: FnOnce(&mut Ctx) + Send,
    K: FnOnce(&mut Ctx) -> T + Send,
    T: Send,
{
    let cell = SyncCell::new();
    let cont = Mutex::new(Some(continuation));
    let finish = |c: &mut Ctx| -> Option<T> {
        c.tick(1);
        if cell.tas() {
            let k = cont.lock().unwrap().take().expect("continuation taken twice");
            Some(k(c))
        } else {
            None
        }
    };
    let (a, b) = ctx.fork2(
        |c| {
            left(c);
            finish(c)
        },
        |c| {
            right(c);
            finish(c)
        },
    );
    match (a, b) {
        (Some(t), None) | (None, Some(t)) => t,
        _ => unreachable!("exactly one branch wins a join"),
    }
}

/// A balanced tree of TAS joins over `2^depth` leaf tasks, as a steppable
/// program. Each leaf publishes an effect, then climbs: at each join it
/// TASes the join's cell and continues upward only if it arrived second.
/// The winner at the root runs the continuation, which records how many
/// leaf effects it can see.
pub struct JoinTree {
    depth: u32,
    cells: Vec<SyncCell>,
    effects: Vec<AtomicBool>,
    work_per_leaf: u64,
    miswired: bool,
    continuation_runs: AtomicU64,
    last_seen: AtomicU64,
}

pub enum JoinTask {
    Working { leaf: usize, left: u64 },
    Arriving { node: usize },
}

impl JoinTree {
    pub fn new(depth: u32, work_per_leaf: u64) -> Self {
        let leaves = 1usize << depth;
        JoinTree {
            depth,
            cells: (0..leaves.max(2) - 1).map(|_| SyncCell::new()).collect(),
            effects: (0..leaves).map(|_| AtomicBool::new(false)).collect(),
            work_per_leaf,
            miswired: false,
            continuation_runs: AtomicU64::new(0),
            last_seen: AtomicU64::new(0),
        }
    }

    /// A broken join where every leaf TASes its own private cell, so no
    /// branch ever observes the other: the continuation never runs.
    pub fn miswired(depth: u32) -> Self {
        let leaves = 1usize << depth;
        JoinTree {
            cells: (0..leaves).map(|_| SyncCell::new()).collect(),
            miswired: true,
            ..JoinTree::new(depth, 0)
        }
    }

    pub fn continuation_runs(&self) -> u64 {
        self.continuation_runs.load(Ordering::Acquire)
    }

    /// Leaf effects visible to the last continuation run.
    pub fn effects_seen(&self) -> u64 {
        self.last_seen.load(Ordering::Acquire)
    }

    /// Highest number of TAS zero-returns on any one cell.
    pub fn max_zero_returns(&self) -> u32 {
        self.cells.iter().map(|c| c.zero_returns()).max().unwrap_or(0)
    }

    fn leaves(&self) -> usize {
        1 << self.depth
    }
}

impl Program for JoinTree {
    type Task = JoinTask;

    fn task_count(&self) -> usize {
        self.leaves()
    }

    fn start(&self, index: usize, meter: &mut Meter) -> Option<JoinTask> {
        meter.tick(1);
        Some(JoinTask::Working {
            leaf: index,
            left: self.work_per_leaf,
        })
    }

    fn step(&self, task: &mut JoinTask, meter: &mut Meter) -> Step {
        match *task {
            JoinTask::Working { leaf, left } => {
                meter.tick(1);
                if left > 0 {
                    *task = JoinTask::Working { leaf, left: left - 1 };
                } else {
                    self.effects[leaf].store(true, Ordering::Release);
                    // Heap numbering: internal nodes 0..leaves-1, leaf i at leaves-1+i.
                    *task = JoinTask::Arriving {
                        node: self.leaves() - 1 + leaf,
                    };
                }
                Step::Continue
            }
            JoinTask::Arriving { node } => {
                if self.depth == 0 || node == 0 {
                    meter.tick(1);
                    let seen = self.effects.iter().filter(|e| e.load(Ordering::Acquire)).count();
                    self.last_seen.store(seen as u64, Ordering::Release);
                    self.continuation_runs.fetch_add(1, Ordering::AcqRel);
                    return Step::Done;
                }
                let parent = (node - 1) / 2;
                let cell = if self.miswired {
                    &self.cells[node - (self.leaves() - 1)]
                } else {
                    &self.cells[parent]
                };
                if meter.tas(cell) {
                    *task = JoinTask::Arriving { node: parent };
                    Step::Continue
                } else {
                    Step::Done
                }
            }
        }
    }

    fn is_complete(&self) -> bool {
        self.continuation_runs() >= 1
    }

    fn describe_state(&self) -> String {
        let set = self.cells.iter().filter(|c| c.is_set()).count();
        format!(
            "all tasks ended but the root continuation never ran ({} of {} join cells set)",
            set,
            self.cells.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::ctx::Mode;
    use crate::runtime::program::{run_threads, simulate};
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn join_via_tas_sees_both_writes() {
        for mode in [Mode::Instrumented, Mode::Parallel] {
            for seed in 0..50 {
                let x = AtomicUsize::new(0);
                let y = AtomicUsize::new(0);
                let mut ctx = Ctx::new(mode, seed);
                let seen = join_via_tas(
                    &mut ctx,
                    |c| {
                        c.tick(1);
                        x.store(1, Ordering::Release)
                    },
                    |c| {
                        c.tick(1);
                        y.store(1, Ordering::Release)
                    },
                    |c| {
                        c.tick(1);
                        (x.load(Ordering::Acquire), y.load(Ordering::Acquire))
                    },
                );
                assert_eq!(seen, (1, 1));
            }
        }
    }

    #[test]
    fn join_via_tas_cost() {
        let mut ctx = Ctx::instrumented(0);
        join_via_tas(&mut ctx, |c| c.tick(1), |c| c.tick(1), |c| c.tick(1));
        let t = ctx.trace();
        // fork + (unit + tas) per side + continuation on the later side
        assert_eq!(t.work, 1 + 2 + 2 + 1);
        assert_eq!(t.span, 1 + 3);
    }

    #[test]
    fn single_join_exactly_once_1000_schedules() {
        for seed in 0..1000 {
            let j = JoinTree::new(1, 0);
            simulate(&j, seed, 2).unwrap();
            assert_eq!(j.continuation_runs(), 1);
            assert_eq!(j.effects_seen(), 2);
        }
    }

    #[test]
    fn nested_joins_three_deep() {
        for seed in 0..2000 {
            let j = JoinTree::new(3, seed % 4);
            simulate(&j, seed, 1 + (seed as usize % 8)).unwrap();
            assert_eq!(j.continuation_runs(), 1);
            assert_eq!(j.effects_seen(), 8);
            assert!(j.max_zero_returns() <= 1);
        }
        let j = JoinTree::new(3, 2);
        run_threads(&j).unwrap();
        assert_eq!((j.continuation_runs(), j.effects_seen()), (1, 8));
    }

    #[test]
    fn miswired_join_reports_deadlock() {
        let j = JoinTree::miswired(1);
        let err = simulate(&j, 1, 2).unwrap_err();
        assert!(matches!(err, crate::Error::Deadlock(_)));
        assert_eq!(j.continuation_runs(), 0);
    }
}
