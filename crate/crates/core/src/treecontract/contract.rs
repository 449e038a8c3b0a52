use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering::*};

use super::labels::{compute_labels, Labels};
use super::tree::{BinTree, NIL};
use crate::error::Result;
use crate::primitives::ScanSpec;
use crate::runtime::{Ctx, Meter, Program, Step, SyncCell};

/// One rake: `leaf` and its parent `node` were removed and `sibling` took
/// the parent's place. `thread` is the task that performed it and `seq`
/// its position in the realized order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RakeEntry {
    pub leaf: usize,
    pub node: usize,
    pub sibling: usize,
    pub thread: usize,
    pub seq: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeContractOutcome {
    pub survivor: usize,
    /// Rakes ordered by `seq`.
    pub log: Vec<RakeEntry>,
    /// Fold of every node's weight, held by the survivor at the end.
    pub total: u64,
    /// Rakes that found a neighbour with a smaller label still present, or
    /// no leaf child carrying the node's label. Always 0 for a correct run.
    pub violations: usize,
}

#[derive(Default)]
struct Record {
    leaf: AtomicUsize,
    sibling: AtomicUsize,
    thread: AtomicUsize,
    seq: AtomicUsize,
}

/// Racy tree contraction. Internal node `w` is raked with its leaf child
/// of priority `pair[w]` once every adjacent internal node with a smaller
/// label is gone. The number of such neighbours (0 to 3) fixes the gate:
/// none starts a task, one passes through pre-set cells, two use one cell,
/// three use a cascade of two cells. After a rake the task climbs to the
/// lower-labelled of the grandparent and the sibling.
pub struct TreeContraction<'a> {
    tree: &'a BinTree,
    pair: Vec<u64>,
    internal: usize,
    parent: Vec<AtomicUsize>,
    left: Vec<AtomicUsize>,
    right: Vec<AtomicUsize>,
    gate: Vec<[SyncCell; 2]>,
    blocked: Vec<u8>,
    weight: Vec<AtomicU64>,
    spec: ScanSpec<u64>,
    record: Vec<Record>,
    seq: AtomicUsize,
    raked: AtomicUsize,
    survivor: AtomicUsize,
    unsound: AtomicUsize,
    ready: Vec<AtomicBool>,
}

enum Phase {
    Rake,
    Splice { leaf: usize, sibling: usize, grand: usize },
    Climb { sibling: usize, grand: usize },
}

pub struct TreeTask {
    node: usize,
    thread: usize,
    phase: Phase,
}

impl<'a> TreeContraction<'a> {
    pub fn new(ctx: &mut Ctx, tree: &'a BinTree, labels: &Labels, weights: &[u64], spec: ScanSpec<u64>) -> Self {
        let n = tree.len();
        assert_eq!(weights.len(), n, "one weight per node");
        let pair = labels.pair.clone();
        let lower = |w: usize, x: usize| x != NIL && !tree.is_leaf(x) && pair[x] < pair[w];
        let blocked: Vec<u8> = ctx.tabulate(n, &|c, w| {
            c.tick(3);
            if tree.is_leaf(w) {
                0
            } else {
                lower(w, tree.parent[w]) as u8 + lower(w, tree.left[w]) as u8 + lower(w, tree.right[w]) as u8
            }
        });
        let gate = ctx.tabulate(n, &|c, w| {
            c.tick(1);
            let cell = |fresh: bool| if fresh { SyncCell::new() } else { SyncCell::new_set() };
            [cell(blocked[w] >= 2), cell(blocked[w] == 3)]
        });
        let atomics = |v: &[usize]| v.iter().map(|&x| AtomicUsize::new(x)).collect::<Vec<_>>();
        TreeContraction {
            tree,
            internal: n / 2,
            parent: atomics(&tree.parent),
            left: atomics(&tree.left),
            right: atomics(&tree.right),
            gate,
            blocked,
            weight: weights.iter().map(|&x| AtomicU64::new(x)).collect(),
            spec,
            record: (0..n).map(|_| Record::default()).collect(),
            seq: AtomicUsize::new(0),
            raked: AtomicUsize::new(0),
            survivor: AtomicUsize::new(if n == 1 { tree.root } else { NIL }),
            unsound: AtomicUsize::new(0),
            ready: (0..n).map(|_| AtomicBool::new(false)).collect(),
            pair,
        }
    }

    /// Number of adjacent internal nodes with a smaller label at the start.
    pub fn initial_blockers(&self, w: usize) -> u8 {
        self.blocked[w]
    }

    fn arrive(&self, w: usize, m: &mut Meter) -> bool {
        m.tas(&self.gate[w][0]) && m.tas(&self.gate[w][1])
    }

    fn label(&self, x: usize) -> u64 {
        if x == NIL || self.tree.is_leaf(x) {
            u64::MAX
        } else {
            self.pair[x]
        }
    }

    pub fn outcome(&self) -> TreeContractOutcome {
        let mut log: Vec<RakeEntry> = (0..self.tree.len())
            .filter(|&w| self.ready[w].load(Acquire))
            .map(|w| {
                let r = &self.record[w];
                RakeEntry {
                    leaf: r.leaf.load(Acquire),
                    node: w,
                    sibling: r.sibling.load(Acquire),
                    thread: r.thread.load(Acquire),
                    seq: r.seq.load(Acquire),
                }
            })
            .collect();
        log.sort_by_key(|e| e.seq);
        let survivor = self.survivor.load(Acquire);
        TreeContractOutcome {
            survivor,
            log,
            total: if survivor == NIL { self.spec.identity } else { self.weight[survivor].load(Acquire) },
            violations: self.unsound.load(Acquire),
        }
    }
}

impl Program for TreeContraction<'_> {
    type Task = TreeTask;

    fn task_count(&self) -> usize {
        self.tree.len()
    }

    fn start(&self, i: usize, m: &mut Meter) -> Option<TreeTask> {
        m.tick(1);
        (!self.tree.is_leaf(i) && self.blocked[i] == 0).then_some(TreeTask {
            node: i,
            thread: i,
            phase: Phase::Rake,
        })
    }

    fn step(&self, t: &mut TreeTask, m: &mut Meter) -> Step {
        let w = t.node;
        match t.phase {
            Phase::Rake => {
                m.tick(4);
                let (l, r) = (self.left[w].load(Acquire), self.right[w].load(Acquire));
                let grand = self.parent[w].load(Acquire);
                let is_pair = |x: usize| self.tree.is_leaf(x) && self.tree.priority[x] == self.pair[w];
                let (leaf, sibling) = if is_pair(l) { (l, r) } else { (r, l) };
                let sound = is_pair(leaf) && self.label(grand) > self.pair[w] && self.label(sibling) > self.pair[w];
                if !sound {
                    self.unsound.fetch_add(1, AcqRel);
                }
                let rec = &self.record[w];
                rec.leaf.store(leaf, Release);
                rec.sibling.store(sibling, Release);
                rec.thread.store(t.thread, Release);
                rec.seq.store(self.seq.fetch_add(1, AcqRel), Release);
                t.phase = Phase::Splice { leaf, sibling, grand };
                Step::Continue
            }
            Phase::Splice { leaf, sibling, grand } => {
                m.tick(4);
                self.parent[sibling].store(grand, Release);
                if grand != NIL {
                    let slot = if self.left[grand].load(Acquire) == w { &self.left } else { &self.right };
                    slot[grand].store(sibling, Release);
                }
                let c = self.spec.combine;
                let folded = c(
                    c(self.weight[leaf].load(Acquire), self.weight[w].load(Acquire)),
                    self.weight[sibling].load(Acquire),
                );
                self.weight[sibling].store(folded, Release);
                self.ready[w].store(true, Release);
                self.raked.fetch_add(1, AcqRel);
                t.phase = Phase::Climb { sibling, grand };
                Step::Continue
            }
            Phase::Climb { sibling, grand } => {
                m.tick(2);
                let target = if self.label(grand) < self.label(sibling) { grand } else { sibling };
                if self.label(target) == u64::MAX {
                    self.survivor.store(sibling, Release);
                    return Step::Done;
                }
                if self.arrive(target, m) {
                    t.node = target;
                    t.phase = Phase::Rake;
                    Step::Continue
                } else {
                    Step::Done
                }
            }
        }
    }

    fn is_complete(&self) -> bool {
        self.raked.load(Acquire) == self.internal
    }

    fn describe_state(&self) -> String {
        format!("{} of {} internal nodes raked", self.raked.load(Acquire), self.internal)
    }
}

/// Contracts the tree to its maximum-priority leaf.
pub fn tree_contract(ctx: &mut Ctx, tree: &BinTree) -> Result<TreeContractOutcome> {
    tree_contract_with(ctx, tree, &vec![1; tree.len()], ScanSpec::sum())
}

/// Contraction that folds `weights` with `spec`: each rake combines the
/// leaf's, the parent's and the sibling's weights into the sibling.
pub fn tree_contract_with(
    ctx: &mut Ctx,
    tree: &BinTree,
    weights: &[u64],
    spec: ScanSpec<u64>,
) -> Result<TreeContractOutcome> {
    let labels = compute_labels(ctx, tree);
    let prog = TreeContraction::new(ctx, tree, &labels, weights, spec);
    ctx.run_program(&prog)?;
    Ok(prog.outcome())
}

#[cfg(test)]
mod tests {
    use super::super::tree::{sequential_rake, tests::sample_tree};
    use super::*;
    use crate::runtime::{run_in_order, Mode};
    use std::collections::HashSet;

    fn check(ctx: &mut Ctx, t: &BinTree) {
        let out = tree_contract(ctx, t).unwrap();
        let (pairs, survivor) = sequential_rake(t);
        assert_eq!(out.survivor, survivor);
        assert_eq!(out.violations, 0);
        assert_eq!(out.total, t.len() as u64);
        let got: HashSet<(usize, usize)> = out.log.iter().map(|e| (e.leaf, e.node)).collect();
        assert_eq!(got, pairs.into_iter().collect());
    }

    #[test]
    fn sample_contraction() {
        let t = sample_tree();
        let mut ctx = Ctx::instrumented(0);
        let labels = compute_labels(&mut ctx, &t);
        let prog = TreeContraction::new(&mut ctx, &t, &labels, &[1; 11], ScanSpec::sum());
        // A waits on P and Q, R on A and B; P, Q and B start.
        assert_eq!((0..5).map(|w| prog.initial_blockers(w)).collect::<Vec<_>>(), vec![2, 2, 0, 0, 0]);
        run_in_order(&prog, [3, 4, 2, 0, 1, 5, 6, 7, 8, 9, 10]).unwrap();
        let out = prog.outcome();
        assert_eq!(t.priority(out.survivor), 5);
        let leaf_pri: Vec<u64> = out.log.iter().map(|e| t.priority(e.leaf)).collect();
        assert_eq!(leaf_pri, vec![0, 1, 3, 2, 4]);
        // Leaves 0, 1, 2 go in the first wave, each by its own start task.
        for e in &out.log[..2] {
            assert_eq!(e.thread, e.node);
        }
        assert_eq!(out.log[3].thread, out.log[3].node);
        assert_eq!(out.log[4].node, 0);
        for seed in 0..100 {
            check(&mut Ctx::new(Mode::Simulate { seed, procs: 3 }, seed), &t);
        }
    }

    #[test]
    fn single_leaf_and_cherry() {
        let one = BinTree::new(&[None], vec![0]).unwrap();
        let out = tree_contract(&mut Ctx::instrumented(0), &one).unwrap();
        assert_eq!((out.survivor, out.log.len(), out.total), (0, 0, 1));
        let cherry = BinTree::new(&[Some((1, 2)), None, None], vec![0, 0, 1]).unwrap();
        check(&mut Ctx::instrumented(0), &cherry);
    }

    #[test]
    fn three_blockers_use_cascade() {
        // Node 1 has an internal parent and two internal children, all lower.
        let mut ch = vec![None; 11];
        ch[0] = Some((1, 2));
        ch[1] = Some((3, 4));
        ch[3] = Some((5, 6));
        ch[4] = Some((7, 8));
        ch[2] = Some((9, 10));
        let pri = {
            let mut p = vec![0; 11];
            for (v, q) in [(5, 1), (6, 5), (7, 2), (8, 4), (9, 0), (10, 3)] {
                p[v] = q;
            }
            p
        };
        let t = BinTree::new(&ch, pri).unwrap();
        let mut ctx = Ctx::instrumented(0);
        let labels = compute_labels(&mut ctx, &t);
        let prog = TreeContraction::new(&mut ctx, &t, &labels, &[1; 11], ScanSpec::sum());
        assert_eq!(prog.initial_blockers(1), 3);
        for seed in 0..100 {
            check(&mut Ctx::new(Mode::Simulate { seed, procs: 4 }, seed), &t);
        }
    }

    #[test]
    fn random_trees_match_oracle() {
        for seed in 0..40 {
            let mut ctx = Ctx::new(Mode::Simulate { seed, procs: 1 + seed as usize % 8 }, seed);
            let n = 1 + (seed as usize * 37) % 300;
            let t = BinTree::random(&mut ctx, n);
            check(&mut ctx, &t);
            let c = BinTree::caterpillar(&mut ctx, n);
            check(&mut ctx, &c);
        }
        let mut ctx = Ctx::parallel(9);
        let t = BinTree::random(&mut ctx, 50_000);
        check(&mut ctx, &t);
    }

    #[test]
    fn weights_fold_to_total() {
        let mut ctx = Ctx::instrumented(2);
        let t = BinTree::random(&mut ctx, 200);
        let w: Vec<u64> = (0..t.len() as u64).map(|x| x * x).collect();
        let out = tree_contract_with(&mut ctx, &t, &w, ScanSpec::sum()).unwrap();
        assert_eq!(out.total, w.iter().sum::<u64>());
        let out = tree_contract_with(&mut ctx, &t, &w, ScanSpec::max()).unwrap();
        assert_eq!(out.total, *w.iter().max().unwrap());
    }
}
