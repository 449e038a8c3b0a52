use std::cmp::Ordering;
use std::sync::atomic::Ordering::Relaxed;

use super::rebalance::rebalance;
use super::tree::{build, flatten_into, size, split, Balance, Link, SetStats, WbbTree};
use crate::error::{Error, Result};
use crate::runtime::Ctx;

/// Which elements survive, with roles fixed by size: `L` is the larger
/// input, `S` the smaller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersection,
    DiffLminusS,
    DiffSminusL,
}

impl SetOp {
    pub fn keeps(self, in_large: bool, in_small: bool) -> bool {
        match self {
            SetOp::Union => in_large || in_small,
            SetOp::Intersection => in_large && in_small,
            SetOp::DiffLminusS => in_large && !in_small,
            SetOp::DiffSminusL => in_small && !in_large,
        }
    }

    /// Non-tomb count from subtree counters.
    pub fn effective(self, c: Counts) -> usize {
        match self {
            SetOp::Union => c.large + c.small - c.common,
            SetOp::Intersection => c.common,
            SetOp::DiffLminusS => c.large - c.common,
            SetOp::DiffSminusL => c.small - c.common,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub size: usize,
    pub large: usize,
    pub small: usize,
    pub common: usize,
}

impl Counts {
    fn own(in_large: bool, in_small: bool) -> Self {
        Counts {
            size: 1,
            large: in_large as usize,
            small: in_small as usize,
            common: (in_large && in_small) as usize,
        }
    }

    fn raw(size: usize, from_large: bool) -> Self {
        Counts {
            size,
            large: if from_large { size } else { 0 },
            small: if from_large { 0 } else { size },
            common: 0,
        }
    }

    /// Counters for a finished subtree whose every key survives `op`.
    fn clean(op: SetOp, size: usize) -> Self {
        let (l, s) = match op {
            SetOp::Union | SetOp::DiffLminusS => (true, false),
            SetOp::Intersection => (true, true),
            SetOp::DiffSminusL => (false, true),
        };
        Counts {
            size,
            large: if l { size } else { 0 },
            small: if s { size } else { 0 },
            common: if l && s { size } else { 0 },
        }
    }

    fn add(self, o: Counts) -> Self {
        Counts {
            size: self.size + o.size,
            large: self.large + o.large,
            small: self.small + o.small,
            common: self.common + o.common,
        }
    }
}

/// A pivot of the sketch. A key found in neither input marks a repeated
/// splitter and never survives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splitter<K> {
    pub key: K,
    pub in_large: bool,
    pub in_small: bool,
    pub tomb: bool,
}

#[derive(Debug)]
pub struct Pivot<K> {
    pub key: K,
    pub in_large: bool,
    pub in_small: bool,
    pub tomb: bool,
    pub left: Sketch<K>,
    pub right: Sketch<K>,
    pub counts: Counts,
    /// Pivot levels in this subtree.
    pub skeleton_height: usize,
}

/// Unbalanced combined tree. Untouched input subtrees and finished base
/// cases hang below a skeleton of pivots.
#[derive(Debug)]
pub enum Sketch<K> {
    Raw { tree: Link<K>, from_large: bool },
    Base { tree: Link<K>, counts: Counts },
    Pivot(Box<Pivot<K>>),
}

impl<K> Default for Sketch<K> {
    fn default() -> Self {
        Sketch::Raw { tree: None, from_large: true }
    }
}

impl<K: Ord + Clone + Send + Sync> Sketch<K> {
    pub fn counts(&self) -> Counts {
        match self {
            Sketch::Raw { tree, from_large } => Counts::raw(size(tree), *from_large),
            Sketch::Base { counts, .. } => *counts,
            Sketch::Pivot(p) => p.counts,
        }
    }

    pub fn effective(&self, op: SetOp) -> usize {
        op.effective(self.counts())
    }

    pub fn skeleton_height(&self) -> usize {
        match self {
            Sketch::Pivot(p) => p.skeleton_height,
            _ => 0,
        }
    }

    /// Height counting every node, skeleton and hanging subtrees.
    pub fn height(&self) -> usize {
        match self {
            Sketch::Raw { tree, .. } | Sketch::Base { tree, .. } => super::tree::height(tree),
            Sketch::Pivot(p) => 1 + p.left.height().max(p.right.height()),
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Sketch::Base { .. })
    }

    /// In-order keys with tombs removed, computed sequentially.
    pub fn surviving_keys(&self, op: SetOp) -> Vec<K> {
        let mut out = Vec::new();
        self.collect(op, &mut out);
        out
    }

    fn collect(&self, op: SetOp, out: &mut Vec<K>) {
        match self {
            Sketch::Raw { tree, .. } | Sketch::Base { tree, .. } => {
                if self.effective(op) > 0 {
                    out.extend(WbbTree { root: tree.clone() }.to_vec());
                }
            }
            Sketch::Pivot(p) => {
                p.left.collect(op, out);
                if !p.tomb {
                    out.push(p.key.clone());
                }
                p.right.collect(op, out);
            }
        }
    }

    /// Writes the surviving keys into `out`, of length `effective(op)`.
    pub(crate) fn flatten_effective(&self, ctx: &mut Ctx, op: SetOp, out: &mut [K]) {
        if out.is_empty() {
            ctx.tick(1);
            return;
        }
        match self {
            Sketch::Raw { tree, .. } | Sketch::Base { tree, .. } => flatten_into(ctx, tree, out),
            Sketch::Pivot(p) => {
                let le = p.left.effective(op);
                let (lo, rest) = out.split_at_mut(le);
                let hi = if p.tomb {
                    rest
                } else {
                    rest[0] = p.key.clone();
                    &mut rest[1..]
                };
                ctx.fork2(
                    |c| p.left.flatten_effective(c, op, lo),
                    |c| p.right.flatten_effective(c, op, hi),
                );
            }
        }
    }
}

/// Shared arguments of one operation.
pub(crate) struct Env<'a> {
    pub op: SetOp,
    pub bal: Balance,
    pub stats: &'a SetStats,
    pub in_base: bool,
    pub base_factor: usize,
}

impl<'a> Env<'a> {
    pub(crate) fn new(op: SetOp, bal: Balance, stats: &'a SetStats) -> Self {
        Env { op, bal, stats, in_base: false, base_factor: BASE_FACTOR }
    }
}

pub(crate) fn pivot<K: Ord + Clone + Send + Sync>(op: SetOp, key: K, in_large: bool, in_small: bool, left: Sketch<K>, right: Sketch<K>) -> Sketch<K> {
    let counts = left.counts().add(right.counts()).add(Counts::own(in_large, in_small));
    let skeleton_height = 1 + left.skeleton_height().max(right.skeleton_height());
    Sketch::Pivot(Box::new(Pivot {
        key,
        in_large,
        in_small,
        tomb: !op.keeps(in_large, in_small),
        left,
        right,
        counts,
        skeleton_height,
    }))
}

fn select<K: Clone>(mut t: &Link<K>, mut k: usize, mut steps: u64) -> (K, u64) {
    loop {
        steps += 1;
        let n = t.as_ref().expect("rank within tree");
        let ls = size(&n.left);
        match k.cmp(&(ls + 1)) {
            Ordering::Equal => return (n.key.clone(), steps),
            Ordering::Less => t = &n.left,
            Ordering::Greater => {
                k -= ls + 1;
                t = &n.right;
            }
        }
    }
}

/// The `rank`-th smallest key (1-based) of both trees together, a key in
/// both counting twice. Descends both trees at once, dropping a root and
/// one of its subtrees per comparison.
pub(crate) fn dual_search_links<K: Ord + Clone>(st: &SetStats, t1: &Link<K>, t2: &Link<K>, rank: usize) -> Result<K> {
    dual_search_steps(st, t1, t2, rank).map(|(k, _)| k)
}

/// Also returns the number of nodes visited.
fn dual_search_steps<K: Ord + Clone>(st: &SetStats, t1: &Link<K>, t2: &Link<K>, rank: usize) -> Result<(K, u64)> {
    let total = size(t1) + size(t2);
    if rank == 0 || rank > total {
        return Err(Error::RankOutOfRange { rank, total });
    }
    let (mut a, mut b, mut k) = (t1, t2, rank);
    let mut steps = 1;
    loop {
        steps += 1;
        match (a, b) {
            (Some(x), Some(y)) => {
                let (ia, ib) = (size(&x.left), size(&y.left));
                if st.cmp(&x.key, &y.key) != Ordering::Greater {
                    if k <= ia + ib + 1 {
                        b = &y.left;
                    } else {
                        k -= ia + 1;
                        a = &x.right;
                    }
                } else if k <= ia + ib + 1 {
                    a = &x.left;
                } else {
                    k -= ib + 1;
                    b = &y.right;
                }
            }
            (Some(_), None) => return Ok(select(a, k, steps)),
            (None, Some(_)) => return Ok(select(b, k, steps)),
            (None, None) => unreachable!("rank checked against total size"),
        }
    }
}

/// Public form of the dual search, with the splitter's presence in each
/// tree and its tomb flag under `op`.
pub fn dual_search<K: Ord + Clone>(
    large: &WbbTree<K>,
    small: &WbbTree<K>,
    rank: usize,
    op: SetOp,
    stats: &SetStats,
) -> Result<Splitter<K>> {
    let key = dual_search_links(stats, &large.root, &small.root, rank)?;
    let in_large = super::tree::contains(stats, &large.root, &key);
    let in_small = super::tree::contains(stats, &small.root, &key);
    Ok(Splitter {
        tomb: !op.keeps(in_large, in_small),
        key,
        in_large,
        in_small,
    })
}

/// A call goes to the base case when `m' < BASE_FACTOR * sqrt(n' + m')`.
pub const BASE_FACTOR: usize = 4;

/// Smallest power of two whose square is at least `t`.
pub(crate) fn fan_out(t: usize) -> usize {
    let mut d = 1usize;
    while d * d < t {
        d *= 2;
    }
    d
}

pub(crate) fn sketch_links<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, env: &Env, t1: Link<K>, t2: Link<K>) -> Sketch<K> {
    let (n, m) = (size(&t1), size(&t2));
    ctx.tick(1);
    if n == 0 {
        return Sketch::Raw { tree: t2, from_large: false };
    }
    if m == 0 {
        return Sketch::Raw { tree: t1, from_large: true };
    }
    if m * m < env.base_factor * env.base_factor * (n + m) {
        return base_case_links(ctx, env, &t1, &t2);
    }
    let t = n + m;
    let d = fan_out(t);
    env.stats.pivots.fetch_add(d as u64 - 1, Relaxed);
    let keys: Vec<Option<K>> = ctx.tabulate(d - 1, &|c, i| {
        let (k, steps) = dual_search_steps(env.stats, &t1, &t2, (i + 1) * t / d).expect("rank in range");
        c.tick(steps);
        Some(k)
    });
    let dup: Vec<bool> = ctx.tabulate(d - 1, &|c, i| {
        c.tick(1);
        i > 0 && env.stats.cmp(&keys[i - 1], &keys[i]) == Ordering::Equal
    });
    // Chunk i lies strictly between splitters i-1 and i; its upper split
    // also reports whether splitter i is in each input.
    let chunks: Vec<(Sketch<K>, bool, bool)> = ctx.tabulate(d, &|c, i| {
        let cut = |c: &mut Ctx, tree: &Link<K>| {
            let mut piece = tree.clone();
            if i > 0 {
                piece = split(c, env.bal, env.stats, &piece, keys[i - 1].as_ref().unwrap()).2;
            }
            let mut present = false;
            if i < d - 1 {
                let (lo, f, _) = split(c, env.bal, env.stats, &piece, keys[i].as_ref().unwrap());
                piece = lo;
                present = f;
            }
            (piece, present)
        };
        let ((p1, f1), (p2, f2)) = c.fork2(|c| cut(c, &t1), |c| cut(c, &t2));
        (sketch_links(c, env, p1, p2), f1, f2)
    });
    let mut slots: Vec<Option<(Sketch<K>, bool, bool)>> = chunks.into_iter().map(Some).collect();
    connect(ctx, env.op, &mut slots, &keys, &dup)
}

/// Hangs `slots` below a full binary tree of the splitters between them.
fn connect<K: Ord + Clone + Send + Sync>(
    ctx: &mut Ctx,
    op: SetOp,
    slots: &mut [Option<(Sketch<K>, bool, bool)>],
    keys: &[Option<K>],
    dup: &[bool],
) -> Sketch<K> {
    if slots.len() == 1 {
        ctx.tick(1);
        return slots[0].take().expect("each chunk used once").0;
    }
    let mid = slots.len() / 2;
    let (_, in_large, in_small) = slots[mid - 1].as_ref().expect("chunk present");
    let (in_large, in_small) = if dup[mid - 1] { (false, false) } else { (*in_large, *in_small) };
    let key = keys[mid - 1].clone().expect("splitter");
    let (ls, rs) = slots.split_at_mut(mid);
    let (l, r) = ctx.fork2(
        |c| connect(c, op, ls, &keys[..mid - 1], &dup[..mid - 1]),
        |c| connect(c, op, rs, &keys[mid..], &dup[mid..]),
    );
    ctx.tick(1);
    pivot(op, key, in_large, in_small, l, r)
}

/// Count of keys in `keys` below `k`, and whether `k` is among them.
fn locate<K: Ord>(st: &SetStats, keys: &[K], k: &K) -> (usize, bool) {
    let (mut lo, mut hi) = (0, keys.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        match st.cmp(&keys[mid], k) {
            Ordering::Less => lo = mid + 1,
            Ordering::Equal => return (mid, true),
            Ordering::Greater => hi = mid,
        }
    }
    (lo, false)
}

/// Copies the search paths of `keys` in `t`. Path nodes become pivots
/// carrying presence flags; keys missing from `t` hang as balanced trees
/// at the external nodes where their searches end.
fn mark<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, env: &Env, t: &Link<K>, keys: &[K]) -> Sketch<K> {
    if keys.is_empty() {
        ctx.tick(1);
        return Sketch::Raw { tree: t.clone(), from_large: true };
    }
    let Some(n) = t else {
        let tree = if env.op.keeps(false, true) { build(ctx, keys) } else { None };
        return Sketch::Raw { tree, from_large: false };
    };
    let (at, found) = locate(env.stats, keys, &n.key);
    ctx.tick(1 + keys.len().ilog2() as u64);
    let (lk, rk) = (&keys[..at], &keys[at + found as usize..]);
    let (l, r) = ctx.fork2(|c| mark(c, env, &n.left, lk), |c| mark(c, env, &n.right, rk));
    pivot(env.op, n.key.clone(), true, found, l, r)
}

/// Work-inefficient operation for a small `t2`: mark its keys in `t1`, then
/// rebalance away the tombs.
fn base_case_links<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, env: &Env, t1: &Link<K>, t2: &Link<K>) -> Sketch<K> {
    env.stats.base_cases.fetch_add(1, Relaxed);
    let small = WbbTree { root: t2.clone() }.flatten(ctx);
    let marked = mark(ctx, env, t1, &small);
    let inner = Env { in_base: true, ..*env };
    let (tree, _) = rebalance(ctx, &inner, marked, false);
    Sketch::Base { counts: Counts::clean(env.op, size(&tree)), tree }
}

/// Sketch of two trees; `large` takes the `L` role in `op`.
pub fn sketch<K: Ord + Clone + Send + Sync>(
    ctx: &mut Ctx,
    large: &WbbTree<K>,
    small: &WbbTree<K>,
    op: SetOp,
    bal: Balance,
    stats: &SetStats,
) -> Sketch<K> {
    sketch_links(ctx, &Env::new(op, bal, stats), large.root.clone(), small.root.clone())
}

/// Base case alone, for testing; `small` should have fewer than
/// `sqrt(|large| + |small|)` keys.
pub fn base_case<K: Ord + Clone + Send + Sync>(
    ctx: &mut Ctx,
    large: &WbbTree<K>,
    small: &WbbTree<K>,
    op: SetOp,
    bal: Balance,
    stats: &SetStats,
) -> WbbTree<K> {
    let env = Env::new(op, bal, stats);
    match base_case_links(ctx, &env, &large.root, &small.root) {
        Sketch::Base { tree, .. } => WbbTree { root: tree },
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn t(keys: impl IntoIterator<Item = u32>) -> WbbTree<u32> {
        WbbTree::from_keys(keys)
    }

    #[test]
    fn dual_search_examples() {
        let st = SetStats::default();
        let k = |a: &[u32], b: &[u32], r| dual_search_links(&st, &t(a.to_vec()).root, &t(b.to_vec()).root, r);
        assert_eq!(k(&[1, 3, 5], &[2, 4], 3), Ok(3));
        assert_eq!(k(&[1, 2], &[2, 3], 3), Ok(2));
        assert_eq!(k(&[1, 2], &[2, 3], 2), Ok(2));
        assert_eq!(k(&[1, 2], &[], 3), Err(Error::RankOutOfRange { rank: 3, total: 2 }));
        let s = dual_search(&t([1, 2]), &t([2, 3]), 3, SetOp::Intersection, &st).unwrap();
        assert!(s.in_large && s.in_small && !s.tomb);
    }

    #[test]
    fn dual_search_matches_merge() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let st = SetStats::default();
        for _ in 0..200 {
            let a = t((0..rng.gen_range(0..60)).map(|_| rng.gen_range(0..100)));
            let b = t((0..rng.gen_range(0..60)).map(|_| rng.gen_range(0..100)));
            let mut merged = a.to_vec();
            merged.extend(b.to_vec());
            merged.sort();
            for r in 1..=merged.len() {
                assert_eq!(dual_search_links(&st, &a.root, &b.root, r).unwrap(), merged[r - 1]);
            }
        }
    }

    #[test]
    fn fan_out_and_twelve_four_example() {
        assert_eq!(fan_out(16), 4);
        assert_eq!(fan_out(17), 8);
        assert_eq!(fan_out(2), 2);
        // |T1| = 12, |T2| = 4: four chunks, splitters at merged ranks 4, 8, 12.
        let a = t((0..12).map(|x| 2 * x));
        let b = t([1, 9, 15, 21]);
        let st = SetStats::default();
        let env = Env { base_factor: 1, ..Env::new(SetOp::Union, Balance::default(), &st) };
        let sk = sketch_links(&mut Ctx::instrumented(0), &env, a.root.clone(), b.root.clone());
        assert_eq!(st.pivots(), 3);
        assert_eq!(sk.skeleton_height(), 2);
        let Sketch::Pivot(root) = &sk else { panic!("expected a pivot root") };
        let mut merged = a.to_vec();
        merged.extend(b.to_vec());
        merged.sort();
        assert_eq!(root.key, merged[7]);
    }

    #[test]
    fn base_case_examples() {
        let mut ctx = Ctx::instrumented(0);
        let st = SetStats::default();
        let bal = Balance::default();
        let big = t((1..=100).map(|x| 10 * x));
        let small = t([15, 20]);
        let inter = base_case(&mut ctx, &big, &small, SetOp::Intersection, bal, &st);
        assert_eq!(inter.to_vec(), vec![20]);
        let sl = base_case(&mut ctx, &big, &small, SetOp::DiffSminusL, bal, &st);
        assert_eq!(sl.to_vec(), vec![15]);
        let u = base_case(&mut ctx, &big, &small, SetOp::Union, bal, &st);
        assert_eq!(u.len(), 101);
        u.validate(bal).unwrap();
        let ls = base_case(&mut ctx, &big, &small, SetOp::DiffLminusS, bal, &st);
        assert_eq!(ls.len(), 99);
        ls.validate(bal).unwrap();
        let hundred = t(0..100);
        for op in [SetOp::Union, SetOp::DiffLminusS] {
            assert_eq!(base_case(&mut ctx, &hundred, &WbbTree::empty(), op, bal, &st).to_vec(), hundred.to_vec());
        }
        for op in [SetOp::Intersection, SetOp::DiffSminusL] {
            assert!(base_case(&mut ctx, &hundred, &WbbTree::empty(), op, bal, &st).is_empty());
        }
    }

    #[test]
    fn sketch_survivors_match_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let bal = Balance::default();
        for _ in 0..60 {
            let n = rng.gen_range(0..10_000);
            let m = rng.gen_range(0..=n);
            let universe = 3 * n as u32 + 10;
            let a = t((0..n).map(|_| rng.gen_range(0..universe)));
            let b = t((0..m).map(|_| rng.gen_range(0..universe)));
            let (l, s) = if a.len() >= b.len() { (a, b) } else { (b, a) };
            let (lv, sv) = (l.to_vec(), s.to_vec());
            for op in [SetOp::Union, SetOp::Intersection, SetOp::DiffLminusS, SetOp::DiffSminusL] {
                let st = SetStats::default();
                let env = Env { base_factor: 1 + n % 4, ..Env::new(op, bal, &st) };
                let sk = sketch_links(&mut Ctx::instrumented(1), &env, l.root.clone(), s.root.clone());
                let want: Vec<u32> = {
                    let mut all: Vec<u32> = lv.iter().chain(&sv).copied().collect();
                    all.sort();
                    all.dedup();
                    all.into_iter()
                        .filter(|x| op.keeps(lv.binary_search(x).is_ok(), sv.binary_search(x).is_ok()))
                        .collect()
                };
                assert_eq!(sk.surviving_keys(op), want);
                assert_eq!(sk.effective(op), want.len());
            }
        }
    }
}
