//! Random permutation matching the sequential Knuth shuffle for the same
//! swap targets, built from a dependence forest and executed with TAS joins.

mod forest;

use std::sync::atomic::{AtomicUsize, Ordering::*};

use rand::Rng;

use crate::error::{Error, Result};
use crate::runtime::{Ctx, Meter, Program, Step, SyncCell};

pub use forest::{build_forest, DependenceForest};

/// Swap targets `H`, with `H[i] <= i`. `H[i] == i` is a no-op.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapTargets(Vec<usize>);

impl SwapTargets {
    pub fn new(h: Vec<usize>) -> Result<Self> {
        if let Some((index, &target)) = h.iter().enumerate().find(|(i, t)| **t > *i) {
            return Err(Error::InvalidSwapTarget { index, target });
        }
        Ok(SwapTargets(h))
    }

    /// `H[i]` uniform on `0..=i`, one independent stream per index.
    pub fn random(ctx: &mut Ctx, n: usize) -> Self {
        let base = ctx.rng().split();
        SwapTargets(ctx.tabulate(n, &|c, i| {
            c.tick(1);
            base.substream(i as u64).gen_range(0..=i)
        }))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Applies `swap(A[i], A[H[i]])` for `i = n-1` down to `0`.
pub fn knuth_shuffle_seq<T>(a: &[T], h: &SwapTargets) -> Result<Vec<T>>
where
    T: Clone,
{
    if a.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: h.len(),
        });
    }
    let mut out = a.to_vec();
    for i in (0..out.len()).rev() {
        out.swap(i, h.0[i]);
    }
    Ok(out)
}

/// Swap execution over a dependence forest. Leaves start; a node swaps,
/// then TASes its parent's flag, and the later of the parent's children
/// carries on with the parent's swap.
pub struct SwapExecution<'a> {
    h: &'a [usize],
    forest: &'a DependenceForest,
    values: Vec<AtomicUsize>,
    flag: Vec<SyncCell>,
    order: Vec<AtomicUsize>,
    clock: AtomicUsize,
    done: AtomicUsize,
}

pub struct SwapTask {
    node: usize,
    swapped: bool,
}

impl<'a> SwapExecution<'a> {
    pub fn new(ctx: &mut Ctx, h: &'a SwapTargets, forest: &'a DependenceForest, values: &[usize]) -> Self {
        let n = h.len();
        let flag = ctx.tabulate(n, &|c, i| {
            c.tick(1);
            if forest.child_count(i) <= 1 {
                SyncCell::new_set()
            } else {
                SyncCell::new()
            }
        });
        SwapExecution {
            h: &h.0,
            forest,
            values: values.iter().map(|&v| AtomicUsize::new(v)).collect(),
            flag,
            order: (0..n).map(|_| AtomicUsize::new(usize::MAX)).collect(),
            clock: AtomicUsize::new(0),
            done: AtomicUsize::new(0),
        }
    }

    pub fn values(&self) -> Vec<usize> {
        self.values.iter().map(|v| v.load(Acquire)).collect()
    }

    /// Position of each node's action in the realized order.
    pub fn execution_order(&self) -> Vec<usize> {
        self.order.iter().map(|v| v.load(Acquire)).collect()
    }
}

impl Program for SwapExecution<'_> {
    type Task = SwapTask;

    fn task_count(&self) -> usize {
        self.h.len()
    }

    fn start(&self, i: usize, m: &mut Meter) -> Option<SwapTask> {
        m.tick(1);
        (self.forest.child_count(i) == 0).then_some(SwapTask { node: i, swapped: false })
    }

    fn step(&self, t: &mut SwapTask, m: &mut Meter) -> Step {
        let i = t.node;
        if !t.swapped {
            let j = self.h[i];
            if j != i {
                m.tick(4);
                let (a, b) = (self.values[i].load(Acquire), self.values[j].load(Acquire));
                self.values[i].store(b, Release);
                self.values[j].store(a, Release);
            } else {
                m.tick(1);
            }
            self.order[i].store(self.clock.fetch_add(1, AcqRel), Release);
            self.done.fetch_add(1, AcqRel);
            t.swapped = true;
            return Step::Continue;
        }
        m.tick(1);
        match self.forest.parent(i) {
            Some(p) if m.tas(&self.flag[p]) => {
                *t = SwapTask { node: p, swapped: false };
                Step::Continue
            }
            _ => Step::Done,
        }
    }

    fn is_complete(&self) -> bool {
        self.done.load(Acquire) == self.h.len()
    }

    fn describe_state(&self) -> String {
        format!("{} of {} swaps executed", self.done.load(Acquire), self.h.len())
    }
}

/// Applies the swaps of `h` to `values` in parallel; equals
/// [`knuth_shuffle_seq`] on the same input.
pub fn shuffle_with_targets(ctx: &mut Ctx, values: &[usize], h: &SwapTargets) -> Result<Vec<usize>> {
    if values.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: h.len(),
        });
    }
    let forest = build_forest(ctx, h);
    let exec = SwapExecution::new(ctx, h, &forest, values);
    ctx.run_program(&exec)?;
    Ok(exec.values())
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation(ctx: &mut Ctx, n: usize) -> Vec<usize> {
    let h = SwapTargets::random(ctx, n);
    let identity: Vec<usize> = ctx.tabulate(n, &|c, i| {
        c.tick(1);
        i
    });
    shuffle_with_targets(ctx, &identity, &h).expect("swap execution always completes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{run_in_order, Mode};

    const SAMPLE_TARGETS: [usize; 8] = [0, 0, 1, 3, 1, 2, 3, 1];

    #[test]
    fn validation() {
        assert_eq!(SwapTargets::new(vec![0, 2]), Err(Error::InvalidSwapTarget { index: 1, target: 2 }));
        let h = SwapTargets::new(vec![0, 0]).unwrap();
        assert!(knuth_shuffle_seq(&[1, 2, 3], &h).is_err());
    }

    #[test]
    fn sequential_examples() {
        let id = SwapTargets::new((0..6).collect()).unwrap();
        assert_eq!(knuth_shuffle_seq(&[5, 4, 3, 2, 1, 0], &id).unwrap(), vec![5, 4, 3, 2, 1, 0]);
        let h = SwapTargets::new(vec![0, 0]).unwrap();
        assert_eq!(knuth_shuffle_seq(&['x', 'y'], &h).unwrap(), vec!['y', 'x']);
    }

    #[test]
    fn worked_targets_match_oracle() {
        let h = SwapTargets::new(SAMPLE_TARGETS.to_vec()).unwrap();
        let a: Vec<usize> = (0..8).collect();
        let want = knuth_shuffle_seq(&a, &h).unwrap();
        for seed in 0..200 {
            let mut ctx = Ctx::new(Mode::Simulate { seed, procs: 1 + seed as usize % 4 }, seed);
            assert_eq!(shuffle_with_targets(&mut ctx, &a, &h).unwrap(), want);
        }
        let mut ctx = Ctx::instrumented(0);
        let forest = build_forest(&mut ctx, &h);
        let exec = SwapExecution::new(&mut ctx, &h, &forest, &a);
        run_in_order(&exec, [7, 6, 5, 4, 3, 2, 1, 0]).unwrap();
        assert_eq!(exec.values(), want);
    }

    #[test]
    fn single_element() {
        assert_eq!(random_permutation(&mut Ctx::instrumented(3), 1), vec![0]);
    }

    #[test]
    fn exhaustive_small_targets() {
        fn all(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in all(n - 1) {
                for t in 0..n {
                    let mut q = p.clone();
                    q.push(t);
                    out.push(q);
                }
            }
            out
        }
        for n in 1..=6 {
            let a: Vec<usize> = (0..n).collect();
            for h in all(n) {
                let h = SwapTargets::new(h).unwrap();
                let want = knuth_shuffle_seq(&a, &h).unwrap();
                for seed in 0..3 {
                    let mut ctx = Ctx::new(Mode::Simulate { seed, procs: 3 }, seed);
                    assert_eq!(shuffle_with_targets(&mut ctx, &a, &h).unwrap(), want);
                }
            }
        }
    }

    #[test]
    fn swap_order_respects_conflicts() {
        for seed in 0..50 {
            let mut ctx = Ctx::new(Mode::Simulate { seed, procs: 6 }, seed);
            let h = SwapTargets::random(&mut ctx, 300);
            let forest = build_forest(&mut ctx, &h);
            let vals: Vec<usize> = (0..300).collect();
            let exec = SwapExecution::new(&mut ctx, &h, &forest, &vals);
            ctx.run_program(&exec).unwrap();
            let ord = exec.execution_order();
            let h = h.as_slice();
            for i in 0..300 {
                for k in i + 1..300 {
                    if h[k] == i || h[k] == h[i] {
                        assert!(ord[k] < ord[i], "seed {seed}: {k} ran after {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn random_permutation_is_a_permutation() {
        for mode in [Mode::Instrumented, Mode::Parallel] {
            let p = random_permutation(&mut Ctx::new(mode, 11), 100_000);
            let mut s = p.clone();
            s.sort_unstable();
            assert_eq!(s, (0..100_000).collect::<Vec<_>>());
        }
    }
}
