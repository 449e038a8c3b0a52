use std::ops::Range;

use super::rng::TaskRng;

/// How forks are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Forks run on the rayon pool; racy phases run on real threads.
    Parallel,
    /// Everything runs on the calling thread in a fixed order.
    Instrumented,
    /// Fork-join parts run sequentially; racy phases run under a seeded
    /// random interleaving over `procs` pseudo-processors.
    Simulate { seed: u64, procs: usize },
}

/// Work and span of one computation, in declared cost units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ComputationTrace {
    pub work: u64,
    pub span: u64,
    pub fork_count: u64,
}

/// Recorded shape of an instrumented run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceNode {
    Units(u64),
    Fork(TraceTree, TraceTree),
    /// A racy phase, recorded only by its totals.
    Block(ComputationTrace),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceTree {
    pub nodes: Vec<TraceNode>,
}

impl TraceTree {
    /// Recomputes work/span/forks bottom-up from the recorded shape.
    pub fn recompute(&self) -> ComputationTrace {
        let mut t = ComputationTrace::default();
        for node in &self.nodes {
            match node {
                TraceNode::Units(u) => {
                    t.work += u;
                    t.span += u;
                }
                TraceNode::Fork(l, r) => {
                    let (l, r) = (l.recompute(), r.recompute());
                    t.work += 1 + l.work + r.work;
                    t.span += 1 + l.span.max(r.span);
                    t.fork_count += 1 + l.fork_count + r.fork_count;
                }
                TraceNode::Block(b) => {
                    t.work += b.work;
                    t.span += b.span;
                    t.fork_count += b.fork_count;
                }
            }
        }
        t
    }

    fn push_units(&mut self, u: u64) {
        if let Some(TraceNode::Units(prev)) = self.nodes.last_mut() {
            *prev += u;
        } else {
            self.nodes.push(TraceNode::Units(u));
        }
    }
}

/// Per-task execution context: carries the mode, the task's random stream
/// and the running work/span of the task so far.
#[derive(Debug)]
pub struct Ctx {
    mode: Mode,
    rng: TaskRng,
    trace: ComputationTrace,
    record: Option<TraceTree>,
}

impl Ctx {
    pub fn new(mode: Mode, seed: u64) -> Self {
        Ctx {
            mode,
            rng: TaskRng::new(seed),
            trace: ComputationTrace::default(),
            record: None,
        }
    }

    pub fn instrumented(seed: u64) -> Self {
        Ctx::new(Mode::Instrumented, seed)
    }

    pub fn parallel(seed: u64) -> Self {
        Ctx::new(Mode::Parallel, seed)
    }

    /// Keep the full fork tree so it can be re-verified after the run.
    pub fn with_recording(mut self) -> Self {
        self.record = Some(TraceTree::default());
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rng(&mut self) -> &mut TaskRng {
        &mut self.rng
    }

    pub fn trace(&self) -> ComputationTrace {
        self.trace
    }

    pub fn take_recording(&mut self) -> Option<TraceTree> {
        self.record.take()
    }

    /// Charge `units` sequential cost units to this task.
    #[inline]
    pub fn tick(&mut self, units: u64) {
        if units == 0 {
            return;
        }
        self.trace.work += units;
        self.trace.span += units;
        if let Some(rec) = self.record.as_mut() {
            rec.push_units(units);
        }
    }

    /// Charge a racy phase that was executed outside the fork tree.
    pub fn absorb(&mut self, block: ComputationTrace) {
        self.trace.work += block.work;
        self.trace.span += block.span;
        self.trace.fork_count += block.fork_count;
        if let Some(rec) = self.record.as_mut() {
            rec.nodes.push(TraceNode::Block(block));
        }
    }

    fn child(&self, side: u8) -> Ctx {
        Ctx {
            mode: self.mode,
            rng: self.rng.fork(side),
            trace: ComputationTrace::default(),
            record: self.record.as_ref().map(|_| TraceTree::default()),
        }
    }

    /// Binary fork. The fork itself costs one unit; the children's work adds
    /// and their spans combine by max.
    pub fn fork2<A, B, RA, RB>(&mut self, left: A, right: B) -> (RA, RB)
    where
        A: FnOnce(&mut Ctx) -> RA + Send,
        B: FnOnce(&mut Ctx) -> RB + Send,
        RA: Send,
        RB: Send,
    {
        let mut lc = self.child(0);
        let mut rc = self.child(1);
        let (ra, rb) = match self.mode {
            Mode::Parallel => rayon::join(|| left(&mut lc), || right(&mut rc)),
            _ => (left(&mut lc), right(&mut rc)),
        };
        let (l, r) = (lc.trace, rc.trace);
        self.trace.work += 1 + l.work + r.work;
        self.trace.span += 1 + l.span.max(r.span);
        self.trace.fork_count += 1 + l.fork_count + r.fork_count;
        if let Some(rec) = self.record.as_mut() {
            rec.nodes.push(TraceNode::Fork(
                lc.record.unwrap_or_default(),
                rc.record.unwrap_or_default(),
            ));
        }
        (ra, rb)
    }

    /// Divide-and-conquer loop: splits at the midpoint until single indices.
    /// Each leaf of the splitting tree costs one unit before the body runs;
    /// an empty range costs one unit.
    pub fn parallel_for<F>(&mut self, range: Range<usize>, body: &F)
    where
        F: Fn(&mut Ctx, usize) + Sync,
    {
        let len = range.end.saturating_sub(range.start);
        match len {
            0 => self.tick(1),
            1 => {
                self.tick(1);
                body(self, range.start);
            }
            _ => {
                let mid = range.start + len / 2;
                self.fork2(
                    |c| c.parallel_for(range.start..mid, body),
                    |c| c.parallel_for(mid..range.end, body),
                );
            }
        }
    }

    /// `parallel_for` over a mutable slice; `body` gets the global index.
    pub fn for_each_mut<T, F>(&mut self, data: &mut [T], body: &F)
    where
        T: Send,
        F: Fn(&mut Ctx, usize, &mut T) + Sync,
    {
        self.for_each_mut_from(0, data, body)
    }

    fn for_each_mut_from<T, F>(&mut self, offset: usize, data: &mut [T], body: &F)
    where
        T: Send,
        F: Fn(&mut Ctx, usize, &mut T) + Sync,
    {
        match data.len() {
            0 => self.tick(1),
            1 => {
                self.tick(1);
                body(self, offset, &mut data[0]);
            }
            len => {
                let mid = len / 2;
                let (l, r) = data.split_at_mut(mid);
                self.fork2(
                    |c| c.for_each_mut_from(offset, l, body),
                    |c| c.for_each_mut_from(offset + mid, r, body),
                );
            }
        }
    }

    /// Builds a vector of `n` values computed independently per index.
    pub fn tabulate<T, F>(&mut self, n: usize, f: &F) -> Vec<T>
    where
        T: Send + Default,
        F: Fn(&mut Ctx, usize) -> T + Sync,
    {
        let mut out: Vec<T> = Vec::with_capacity(n);
        out.resize_with(n, T::default);
        self.for_each_mut(&mut out, &|c, i, slot| *slot = f(c, i));
        out
    }

    /// Like [`Ctx::tabulate`] for types without a default; `fill` only
    /// initializes the buffer.
    pub fn tabulate_fill<T, F>(&mut self, n: usize, fill: T, f: &F) -> Vec<T>
    where
        T: Send + Clone,
        F: Fn(&mut Ctx, usize) -> T + Sync,
    {
        let mut out = vec![fill; n];
        self.for_each_mut(&mut out, &|c, i, slot| *slot = f(c, i));
        out
    }

    /// Tree reduction over `range`; one unit per combine.
    pub fn reduce<T, M, C>(&mut self, range: Range<usize>, identity: T, map: &M, combine: &C) -> T
    where
        T: Send + Clone,
        M: Fn(&mut Ctx, usize) -> T + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        let len = range.end.saturating_sub(range.start);
        match len {
            0 => {
                self.tick(1);
                identity
            }
            1 => {
                self.tick(1);
                map(self, range.start)
            }
            _ => {
                let mid = range.start + len / 2;
                let (id_l, id_r) = (identity.clone(), identity);
                let (a, b) = self.fork2(
                    |c| c.reduce(range.start..mid, id_l, map, combine),
                    |c| c.reduce(mid..range.end, id_r, map, combine),
                );
                self.tick(1);
                combine(a, b)
            }
        }
    }
}

/// Runs `f` in a fresh context and reports its cost.
pub fn measure<R>(mode: Mode, seed: u64, f: impl FnOnce(&mut Ctx) -> R) -> (R, ComputationTrace) {
    let mut ctx = Ctx::new(mode, seed);
    let r = f(&mut ctx);
    (r, ctx.trace())
}
