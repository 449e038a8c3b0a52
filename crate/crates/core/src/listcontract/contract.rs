use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering::*};

use super::list::{lower, LinkedList, NIL};
use crate::error::Result;
use crate::primitives::ScanSpec;
use crate::runtime::{Ctx, Meter, Program, Step, SyncCell};

/// One splice: the node removed, its live neighbours at that moment, and the
/// task (by start index) that performed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpliceEntry {
    pub node: usize,
    pub prev: Option<usize>,
    pub next: Option<usize>,
    pub thread: usize,
}

/// Splices in the order they took effect.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpliceLog {
    pub entries: Vec<SpliceEntry>,
    /// Task that reached the survivor.
    pub survivor_thread: usize,
}

impl SpliceLog {
    /// Nodes visited by each task, indexed by task, survivor included.
    pub fn paths(&self, tasks: usize, survivor: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); tasks];
        for e in &self.entries {
            out[e.thread].push(e.node);
        }
        out[self.survivor_thread].push(survivor);
        out
    }

    /// Parent of each spliced node in the dependence tree: the neighbour with
    /// the smaller priority at splice time. `None` for the survivor.
    pub fn parents(&self, list: &LinkedList) -> Vec<Option<usize>> {
        let mut parent = vec![None; list.len()];
        for e in &self.entries {
            let (p, q) = (e.prev.unwrap_or(NIL), e.next.unwrap_or(NIL));
            parent[e.node] = Some(if lower(&list.priority, p, q) { p } else { q });
        }
        parent
    }
}

#[derive(Clone, Debug)]
pub struct ContractOutcome {
    pub survivor: usize,
    pub log: SpliceLog,
    /// Fold of all payloads in list order.
    pub total: u64,
}

#[derive(Default)]
struct Record {
    prev: AtomicUsize,
    next: AtomicUsize,
    val: AtomicU64,
    next_val_before: AtomicU64,
    thread: AtomicUsize,
    seq: AtomicUsize,
}

enum Phase {
    Check,
    SpliceLeft,
    SpliceRight,
    Climb,
}

pub struct ContractTask {
    thread: usize,
    c: usize,
    p: usize,
    q: usize,
    phase: Phase,
}

/// Randomized asynchronous list contraction as a steppable program.
///
/// A node is spliced out once its priority is below both live neighbours.
/// The task that splices it then TASes the flag of whichever neighbour has
/// the smaller priority; the second arrival at that flag continues with it.
/// A splice merges the node's payload into its successor (or, at the tail,
/// into the predecessor's tail accumulator).
pub struct ListContraction<'a> {
    list: &'a LinkedList,
    spec: ScanSpec<u64>,
    prev: Vec<AtomicUsize>,
    next: Vec<AtomicUsize>,
    flag: Vec<SyncCell>,
    val: Vec<AtomicU64>,
    tail: Vec<AtomicU64>,
    rec: Vec<Record>,
    seq: AtomicUsize,
    survivor: AtomicUsize,
    survivor_thread: AtomicUsize,
}

impl<'a> ListContraction<'a> {
    /// Prepares the shared state, presetting the flag of every node with at
    /// most one lower-priority neighbour.
    pub fn new(ctx: &mut Ctx, list: &'a LinkedList, payload: &[u64], spec: ScanSpec<u64>) -> Self {
        assert_eq!(payload.len(), list.len(), "one payload per node");
        let n = list.len();
        let pri = &list.priority;
        let flag: Vec<SyncCell> = ctx.tabulate(n, &|c, i| {
            c.tick(3);
            let (p, q) = (list.prev[i], list.next[i]);
            if lower(pri, p, i) && lower(pri, q, i) {
                SyncCell::new()
            } else {
                SyncCell::new_set()
            }
        });
        let prev = list.prev.iter().map(|&x| AtomicUsize::new(x)).collect();
        let next = list.next.iter().map(|&x| AtomicUsize::new(x)).collect();
        ListContraction {
            list,
            spec,
            prev,
            next,
            flag,
            val: payload.iter().map(|&v| AtomicU64::new(v)).collect(),
            tail: (0..n).map(|_| AtomicU64::new(spec.identity)).collect(),
            rec: (0..n).map(|_| Record::default()).collect(),
            seq: AtomicUsize::new(0),
            survivor: AtomicUsize::new(NIL),
            survivor_thread: AtomicUsize::new(NIL),
        }
    }

    pub fn survivor(&self) -> Option<usize> {
        Some(self.survivor.load(Acquire)).filter(|&s| s != NIL)
    }

    pub fn outcome(&self) -> ContractOutcome {
        let n = self.list.len();
        let mut slots = vec![None; n];
        for (node, r) in self.rec.iter().enumerate() {
            let s = self.survivor.load(Acquire);
            if node != s {
                let e = SpliceEntry {
                    node,
                    prev: Some(r.prev.load(Acquire)).filter(|&x| x != NIL),
                    next: Some(r.next.load(Acquire)).filter(|&x| x != NIL),
                    thread: r.thread.load(Acquire),
                };
                slots[r.seq.load(Acquire)] = Some(e);
            }
        }
        let s = self.survivor.load(Acquire);
        ContractOutcome {
            survivor: s,
            log: SpliceLog {
                entries: slots.into_iter().flatten().collect(),
                survivor_thread: self.survivor_thread.load(Acquire),
            },
            total: (self.spec.combine)(self.val[s].load(Acquire), self.tail[s].load(Acquire)),
        }
    }

    /// Rebuilds positions from the contraction by expanding the dependence
    /// tree top-down. Requires the all-ones sum payload.
    pub(crate) fn expand_ranks(&self, ctx: &mut Ctx) -> Vec<usize> {
        let n = self.list.len();
        let s = self.survivor.load(Acquire);
        let pri = &self.list.priority;
        // children[2x] lies on x's prev side, children[2x+1] on its next side.
        let children: Vec<AtomicUsize> = (0..2 * n).map(|_| AtomicUsize::new(NIL)).collect();
        ctx.parallel_for(0..n, &|c, i| {
            c.tick(3);
            if i == s {
                return;
            }
            let (p, q) = (self.rec[i].prev.load(Acquire), self.rec[i].next.load(Acquire));
            if lower(pri, p, q) {
                children[2 * p + 1].store(i, Release);
            } else {
                children[2 * q].store(i, Release);
            }
        });
        let rank: Vec<AtomicU64> = (0..n).map(|_| AtomicU64::new(0)).collect();
        ctx.tick(1);
        rank[s].store(self.val[s].load(Acquire) - 1, Release);
        let e = Expander {
            contraction: self,
            children: &children,
            rank: &rank,
        };
        e.below(ctx, s, 0);
        rank.into_iter().map(|r| r.into_inner() as usize).collect()
    }

    fn splice_left(&self, t: &mut ContractTask, m: &mut Meter) {
        m.tick(3);
        let (c, p, q) = (t.c, t.p, t.q);
        let rec = &self.rec[c];
        let vc = self.val[c].load(Acquire);
        rec.prev.store(p, Release);
        rec.next.store(q, Release);
        rec.thread.store(t.thread, Release);
        rec.val.store(vc, Release);
        if p != NIL {
            self.next[p].store(q, Release);
        }
        if q != NIL {
            let before = self.val[q].load(Acquire);
            rec.next_val_before.store(before, Release);
            self.val[q].store((self.spec.combine)(vc, before), Release);
        } else {
            let merged = (self.spec.combine)(vc, self.tail[c].load(Acquire));
            self.tail[p].store(merged, Release);
        }
    }
}

struct Expander<'e, 'a> {
    contraction: &'e ListContraction<'a>,
    children: &'e [AtomicUsize],
    rank: &'e [AtomicU64],
}

const DEEP: usize = 512;

impl Expander<'_, '_> {
    fn place(&self, c: usize) {
        let r = &self.contraction.rec[c];
        let q = r.next.load(Acquire);
        let rank = if q != NIL {
            self.rank[q].load(Acquire) - r.next_val_before.load(Acquire)
        } else {
            self.rank[r.prev.load(Acquire)].load(Acquire) + r.val.load(Acquire)
        };
        self.rank[c].store(rank, Release);
    }

    fn below(&self, ctx: &mut Ctx, x: usize, depth: usize) {
        let (a, b) = (self.children[2 * x].load(Acquire), self.children[2 * x + 1].load(Acquire));
        ctx.tick(2);
        if depth > DEEP {
            // Degenerate priorities: finish this subtree with an explicit stack.
            let mut stack = vec![a, b];
            while let Some(c) = stack.pop() {
                ctx.tick(1);
                if c != NIL {
                    ctx.tick(4);
                    self.place(c);
                    stack.push(self.children[2 * c].load(Acquire));
                    stack.push(self.children[2 * c + 1].load(Acquire));
                }
            }
            return;
        }
        let visit = |ctx: &mut Ctx, c: usize| {
            if c != NIL {
                ctx.tick(2);
                self.place(c);
                self.below(ctx, c, depth + 1);
            } else {
                ctx.tick(1);
            }
        };
        ctx.fork2(|ctx| visit(ctx, a), |ctx| visit(ctx, b));
    }
}

impl Program for ListContraction<'_> {
    type Task = ContractTask;

    fn task_count(&self) -> usize {
        self.list.len()
    }

    fn start(&self, i: usize, m: &mut Meter) -> Option<ContractTask> {
        m.tick(3);
        let pri = &self.list.priority;
        let (p, q) = (self.list.prev[i], self.list.next[i]);
        (lower(pri, i, p) && lower(pri, i, q)).then_some(ContractTask {
            thread: i,
            c: i,
            p,
            q,
            phase: Phase::Check,
        })
    }

    fn step(&self, t: &mut ContractTask, m: &mut Meter) -> Step {
        match t.phase {
            Phase::Check => {
                m.tick(2);
                t.p = self.prev[t.c].load(Acquire);
                t.q = self.next[t.c].load(Acquire);
                if t.p == NIL && t.q == NIL {
                    self.survivor_thread.store(t.thread, Release);
                    self.survivor.store(t.c, Release);
                    return Step::Done;
                }
                t.phase = Phase::SpliceLeft;
            }
            Phase::SpliceLeft => {
                self.splice_left(t, m);
                t.phase = Phase::SpliceRight;
            }
            Phase::SpliceRight => {
                m.tick(1);
                if t.q != NIL {
                    self.prev[t.q].store(t.p, Release);
                }
                self.rec[t.c].seq.store(self.seq.fetch_add(1, AcqRel), Release);
                t.phase = Phase::Climb;
            }
            Phase::Climb => {
                m.tick(1);
                let up = if lower(&self.list.priority, t.p, t.q) { t.p } else { t.q };
                if !m.tas(&self.flag[up]) {
                    return Step::Done;
                }
                t.c = up;
                t.phase = Phase::Check;
            }
        }
        Step::Continue
    }

    fn is_complete(&self) -> bool {
        self.survivor().is_some()
    }

    fn describe_state(&self) -> String {
        let spliced = self.seq.load(Acquire);
        format!("no survivor reached; {spliced} of {} nodes spliced", self.list.len())
    }
}

/// Contracts `list` to a single node, counting nodes as payload.
pub fn list_contract(ctx: &mut Ctx, list: &LinkedList) -> Result<ContractOutcome> {
    list_contract_with(ctx, list, &vec![1; list.len()], ScanSpec::sum())
}

/// Contracts `list`, folding `payload` with `spec` along the way; the
/// outcome's `total` is the fold of all payloads in list order.
pub fn list_contract_with(
    ctx: &mut Ctx,
    list: &LinkedList,
    payload: &[u64],
    spec: ScanSpec<u64>,
) -> Result<ContractOutcome> {
    let prog = ListContraction::new(ctx, list, payload, spec);
    ctx.run_program(&prog)?;
    Ok(prog.outcome())
}

/// Position of every node, by contraction followed by expansion.
pub fn list_rank(ctx: &mut Ctx, list: &LinkedList) -> Result<Vec<usize>> {
    let prog = ListContraction::new(ctx, list, &vec![1; list.len()], ScanSpec::sum());
    ctx.run_program(&prog)?;
    Ok(prog.expand_ranks(ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{run_in_order, simulate, Mode};

    fn sample_list() -> LinkedList {
        LinkedList::from_order(&[0, 1, 2, 3, 4, 5, 6, 7], vec![0, 4, 7, 1, 5, 2, 6, 3]).unwrap()
    }

    fn height(parent: &[Option<usize>], x: usize) -> usize {
        parent.iter().enumerate().filter(|(_, p)| **p == Some(x)).map(|(c, _)| height(parent, c)).max().map_or(1, |h| h + 1)
    }

    #[test]
    fn single_node_survives() {
        let l = LinkedList::new(&[None], vec![0]).unwrap();
        let out = list_contract(&mut Ctx::instrumented(0), &l).unwrap();
        assert_eq!(out.survivor, 0);
        assert!(out.log.entries.is_empty());
        assert_eq!(out.total, 1);
    }

    #[test]
    fn sample_rounds_and_height() {
        let l = sample_list();
        let out = list_contract(&mut Ctx::instrumented(0), &l).unwrap();
        let parent = out.log.parents(&l);
        let by_pri = |node: usize| l.priority(node);
        assert_eq!(by_pri(out.survivor), 7);
        assert_eq!(height(&parent, out.survivor), 4);
        // Round of a node: 1 + the highest round among its children.
        let mut round = [0; 8];
        for e in &out.log.entries {
            round[e.node] = 1 + (0..8).filter(|&c| parent[c] == Some(e.node)).map(|c| round[c]).max().unwrap_or(0);
        }
        round[out.survivor] = 4;
        let mut rounds = vec![Vec::new(); 4];
        for node in 0..8 {
            rounds[round[node] - 1].push(by_pri(node));
        }
        for r in &mut rounds {
            r.sort();
        }
        assert_eq!(rounds, vec![vec![0, 1, 2, 3], vec![4, 5], vec![6], vec![7]]);
    }

    #[test]
    fn sample_path_decomposition() {
        let l = sample_list();
        let mut ctx = Ctx::instrumented(0);
        let prog = ListContraction::new(&mut ctx, &l, &[1; 8], ScanSpec::sum());
        run_in_order(&prog, [3, 7, 0, 5, 1, 2, 4, 6]).unwrap();
        let out = prog.outcome();
        let paths: Vec<Vec<u64>> = out
            .log
            .paths(8, out.survivor)
            .into_iter()
            .map(|p| p.into_iter().map(|x| l.priority(x)).collect())
            .collect();
        let want: Vec<Vec<u64>> = vec![vec![0, 4], vec![], vec![], vec![1], vec![], vec![2, 5, 6, 7], vec![], vec![3]];
        assert_eq!(paths, want);
    }

    #[test]
    fn survivor_is_max_for_all_small_permutations() {
        fn perms(n: usize) -> Vec<Vec<u64>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for pos in 0..n {
                    let mut q = p.clone();
                    q.insert(pos, (n - 1) as u64);
                    out.push(q);
                }
            }
            out
        }
        for n in 1..=7 {
            let order: Vec<usize> = (0..n).collect();
            for pri in perms(n) {
                let l = LinkedList::from_order(&order, pri.clone()).unwrap();
                let out = list_contract(&mut Ctx::instrumented(0), &l).unwrap();
                assert_eq!(l.priority(out.survivor), n as u64 - 1);
                assert_eq!(out.log.entries.len(), n - 1);
                assert_eq!(list_rank(&mut Ctx::instrumented(0), &l).unwrap(), order);
            }
        }
    }

    #[test]
    fn simulated_schedules_respect_dependence_tree() {
        let l = sample_list();
        for seed in 0..300 {
            let mut ctx = Ctx::new(Mode::Simulate { seed, procs: 1 + seed as usize % 5 }, seed);
            let out = list_contract(&mut ctx, &l).unwrap();
            let parent = out.log.parents(&l);
            let mut pos = [usize::MAX; 8];
            for (k, e) in out.log.entries.iter().enumerate() {
                pos[e.node] = k;
            }
            for x in 0..8 {
                if let Some(p) = parent[x] {
                    assert!(pos[x] < pos[p], "seed {seed}: {x} after its parent {p}");
                }
            }
            for path in out.log.paths(8, out.survivor) {
                assert!(path.windows(2).all(|w| l.priority(w[0]) < l.priority(w[1])));
            }
        }
    }

    #[test]
    fn incomplete_program_is_reported() {
        let l = sample_list();
        let mut ctx = Ctx::instrumented(0);
        let prog = ListContraction::new(&mut ctx, &l, &[1; 8], ScanSpec::sum());
        let err = run_in_order(&prog, [0, 3]).unwrap_err();
        assert!(matches!(err, crate::Error::Deadlock(_)));
        let prog = ListContraction::new(&mut ctx, &l, &[1; 8], ScanSpec::sum());
        simulate(&prog, 4, 3).unwrap();
    }
}
