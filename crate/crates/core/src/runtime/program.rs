//! Racy task programs: algorithms whose threads coordinate only through
//! test-and-set cells, expressed as steppable tasks so the same code runs on
//! real threads, in a fixed sequential order, or under a randomized
//! interleaving.

use rand::Rng;
use rayon::prelude::*;

use super::ctx::{ComputationTrace, Ctx, Mode};
use super::rng::TaskRng;
use super::sync::SyncCell;
use crate::error::Error;

/// Per-task cost meter. `clock` is the length of the longest dependence
/// chain ending at the task's current instruction.
#[derive(Clone, Copy, Debug, Default)]
pub struct Meter {
    pub work: u64,
    pub clock: u64,
}

impl Meter {
    #[inline]
    pub fn tick(&mut self, units: u64) {
        self.work += units;
        self.clock += units;
    }

    /// One-unit test-and-set. Returns the prior bit; a task that observes 1
    /// continues after both arrivals, so its clock becomes the later one.
    #[inline]
    pub fn tas(&mut self, cell: &SyncCell) -> bool {
        self.work += 1;
        let (prior, clock) = cell.tas_timed(self.clock + 1);
        self.clock = clock;
        prior
    }
}

pub enum Step {
    Continue,
    Done,
}

/// A set of tasks launched by one parallel-for over `task_count()` indices.
///
/// All shared state lives behind `&self` (atomics and [`SyncCell`]s), so a
/// program is usable from many threads at once.
pub trait Program: Sync {
    type Task: Send;

    fn task_count(&self) -> usize;

    /// First action of task `index`; `None` means the task quits at once.
    fn start(&self, index: usize, meter: &mut Meter) -> Option<Self::Task>;

    fn step(&self, task: &mut Self::Task, meter: &mut Meter) -> Step;

    /// Whether the program reached its intended final state once every task
    /// has ended.
    fn is_complete(&self) -> bool {
        true
    }

    fn describe_state(&self) -> String {
        String::from("program incomplete")
    }
}

fn ceil_log2(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as u64
    }
}

/// Cost of the forking skeleton that launches `n` tasks, and the clock at
/// which each task starts.
fn skeleton(n: usize) -> (u64, u64) {
    if n == 0 {
        (1, 1)
    } else {
        (2 * n as u64 - 1, ceil_log2(n) + 1)
    }
}

fn run_to_end<P: Program>(p: &P, index: usize, start_clock: u64) -> Meter {
    let mut m = Meter {
        work: 0,
        clock: start_clock,
    };
    if let Some(mut task) = p.start(index, &mut m) {
        while let Step::Continue = p.step(&mut task, &mut m) {}
    }
    m
}

fn finish<P: Program>(p: &P, work: u64, span: u64, n: usize) -> Result<ComputationTrace, Error> {
    if !p.is_complete() {
        return Err(Error::Deadlock(p.describe_state()));
    }
    Ok(ComputationTrace {
        work,
        span,
        fork_count: n.saturating_sub(1) as u64,
    })
}

/// Runs every task to completion, one after another, in `order`.
pub fn run_in_order<P: Program>(
    p: &P,
    order: impl IntoIterator<Item = usize>,
) -> Result<ComputationTrace, Error> {
    let n = p.task_count();
    let (mut work, start) = skeleton(n);
    let mut span = start;
    for i in order {
        let m = run_to_end(p, i, start);
        work += m.work;
        span = span.max(m.clock);
    }
    finish(p, work, span, n)
}

/// Runs tasks on the rayon pool.
pub fn run_threads<P: Program>(p: &P) -> Result<ComputationTrace, Error> {
    let n = p.task_count();
    let (skel, start) = skeleton(n);
    let (work, span) = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let m = run_to_end(p, i, start);
            (m.work, m.clock)
        })
        .reduce(|| (0, start), |a, b| (a.0 + b.0, a.1.max(b.1)));
    finish(p, skel + work, span, n)
}

enum Slot<T> {
    Pending(usize),
    Running(T),
}

/// Seeded randomized linearization. At most `procs` tasks are active; each
/// step advances one active task chosen uniformly at random, and a finished
/// task is replaced by a random not-yet-started one.
pub fn simulate<P: Program>(p: &P, seed: u64, procs: usize) -> Result<ComputationTrace, Error> {
    let n = p.task_count();
    let procs = procs.max(1);
    let (mut work, start) = skeleton(n);
    let mut span = start;
    let mut rng = TaskRng::new(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut active: Vec<(Slot<P::Task>, Meter)> = Vec::with_capacity(procs);
    loop {
        while active.len() < procs && !pool.is_empty() {
            let k = rng.gen_range(0..pool.len());
            let i = pool.swap_remove(k);
            active.push((
                Slot::Pending(i),
                Meter {
                    work: 0,
                    clock: start,
                },
            ));
        }
        if active.is_empty() {
            break;
        }
        let j = rng.gen_range(0..active.len());
        let (slot, meter) = &mut active[j];
        let done = match slot {
            Slot::Pending(i) => match p.start(*i, meter) {
                Some(t) => {
                    *slot = Slot::Running(t);
                    false
                }
                None => true,
            },
            Slot::Running(t) => matches!(p.step(t, meter), Step::Done),
        };
        if done {
            let (_, m) = active.swap_remove(j);
            work += m.work;
            span = span.max(m.clock);
        }
    }
    finish(p, work, span, n)
}

impl Ctx {
    /// Executes a racy program according to the context mode and charges its
    /// cost to this task.
    pub fn run_program<P: Program>(&mut self, p: &P) -> Result<ComputationTrace, Error> {
        let t = match self.mode() {
            Mode::Parallel => run_threads(p)?,
            Mode::Instrumented => run_in_order(p, 0..p.task_count())?,
            Mode::Simulate { seed, procs } => {
                let salt: u64 = self.rng().gen();
                simulate(p, seed ^ salt, procs)?
            }
        };
        self.absorb(t);
        Ok(t)
    }
}
