use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering::Relaxed};
use std::sync::Arc;

use crate::runtime::Ctx;

pub(crate) type Link<K> = Option<Arc<Node<K>>>;

#[derive(Debug)]
pub struct Node<K> {
    pub(crate) key: K,
    pub(crate) left: Link<K>,
    pub(crate) right: Link<K>,
    pub(crate) size: usize,
}

/// Persistent weight-balanced tree. Cloning shares structure; every update
/// copies the affected path.
#[derive(Debug)]
pub struct WbbTree<K> {
    pub(crate) root: Link<K>,
}

impl<K> Clone for WbbTree<K> {
    fn clone(&self) -> Self {
        WbbTree { root: self.root.clone() }
    }
}

/// Counters shared by one set operation.
#[derive(Debug, Default)]
pub struct SetStats {
    pub comparisons: AtomicU64,
    pub pivots: AtomicU64,
    pub base_cases: AtomicU64,
    pub reconstructions: AtomicU64,
    pub base_reconstructions: AtomicU64,
    pub sketch_height: AtomicU64,
}

impl SetStats {
    #[inline]
    pub(crate) fn cmp<K: Ord>(&self, a: &K, b: &K) -> Ordering {
        self.comparisons.fetch_add(1, Relaxed);
        a.cmp(b)
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons.load(Relaxed)
    }

    pub fn pivots(&self) -> u64 {
        self.pivots.load(Relaxed)
    }

    pub fn base_cases(&self) -> u64 {
        self.base_cases.load(Relaxed)
    }

    pub fn reconstructions(&self) -> u64 {
        self.reconstructions.load(Relaxed)
    }

    pub fn base_reconstructions(&self) -> u64 {
        self.base_reconstructions.load(Relaxed)
    }

    pub fn sketch_height(&self) -> u64 {
        self.sketch_height.load(Relaxed)
    }
}

/// Balance parameter: each child's weight (size + 1) is at least `alpha`
/// times its parent's weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Balance {
    pub alpha: f64,
}

impl Default for Balance {
    fn default() -> Self {
        Balance { alpha: 0.25 }
    }
}

impl Balance {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha <= 1.0 - 1.0 / 2f64.sqrt(), "alpha must lie in (0, 1 - 1/sqrt 2]");
        Balance { alpha }
    }

    #[inline]
    pub(crate) fn ok(&self, wl: usize, wr: usize) -> bool {
        let a = self.alpha * (wl + wr) as f64;
        wl as f64 >= a && wr as f64 >= a
    }
}

#[inline]
pub(crate) fn size<K>(t: &Link<K>) -> usize {
    t.as_ref().map_or(0, |n| n.size)
}

#[inline]
fn weight<K>(t: &Link<K>) -> usize {
    size(t) + 1
}

pub(crate) fn node<K>(left: Link<K>, key: K, right: Link<K>) -> Link<K> {
    let size = size(&left) + size(&right) + 1;
    Some(Arc::new(Node { key, left, right, size }))
}

fn expose<K: Clone>(t: &Link<K>) -> (Link<K>, K, Link<K>) {
    let n = t.as_ref().expect("expose on empty tree");
    (n.left.clone(), n.key.clone(), n.right.clone())
}

/// Joins `l < k < r` into one balanced tree.
pub(crate) fn join<K: Clone>(ctx: &mut Ctx, bal: Balance, l: Link<K>, k: K, r: Link<K>) -> Link<K> {
    let (wl, wr) = (weight(&l), weight(&r));
    if bal.ok(wl, wr) {
        ctx.tick(1);
        node(l, k, r)
    } else if wl > wr {
        join_right(ctx, bal, l, k, r)
    } else {
        join_left(ctx, bal, l, k, r)
    }
}

fn join_right<K: Clone>(ctx: &mut Ctx, bal: Balance, l: Link<K>, k: K, r: Link<K>) -> Link<K> {
    ctx.tick(1);
    if bal.ok(weight(&l), weight(&r)) {
        return node(l, k, r);
    }
    let (ll, lk, lr) = expose(&l);
    let t = join_right(ctx, bal, lr, k, r);
    let (t1, tk, t2) = expose(&t);
    if bal.ok(weight(&ll), weight(&t)) {
        node(ll, lk, t)
    } else if bal.ok(weight(&ll), weight(&t1)) && bal.ok(weight(&ll) + weight(&t1), weight(&t2)) {
        node(node(ll, lk, t1), tk, t2)
    } else {
        let (t11, t1k, t12) = expose(&t1);
        node(node(ll, lk, t11), t1k, node(t12, tk, t2))
    }
}

fn join_left<K: Clone>(ctx: &mut Ctx, bal: Balance, l: Link<K>, k: K, r: Link<K>) -> Link<K> {
    ctx.tick(1);
    if bal.ok(weight(&l), weight(&r)) {
        return node(l, k, r);
    }
    let (rl, rk, rr) = expose(&r);
    let t = join_left(ctx, bal, l, k, rl);
    let (t1, tk, t2) = expose(&t);
    if bal.ok(weight(&t), weight(&rr)) {
        node(t, rk, rr)
    } else if bal.ok(weight(&t2), weight(&rr)) && bal.ok(weight(&t1), weight(&t2) + weight(&rr)) {
        node(t1, tk, node(t2, rk, rr))
    } else {
        let (t21, t2k, t22) = expose(&t2);
        node(node(t1, tk, t21), t2k, node(t22, rk, rr))
    }
}

/// Removes the largest key.
pub(crate) fn remove_last<K: Clone>(ctx: &mut Ctx, bal: Balance, t: &Link<K>) -> (Link<K>, Option<K>) {
    match t {
        None => (None, None),
        Some(n) if n.right.is_none() => {
            ctx.tick(1);
            (n.left.clone(), Some(n.key.clone()))
        }
        Some(n) => {
            let (r, last) = remove_last(ctx, bal, &n.right);
            (join(ctx, bal, n.left.clone(), n.key.clone(), r), last)
        }
    }
}

/// Joins `l < r` with no middle key.
pub(crate) fn join2<K: Clone>(ctx: &mut Ctx, bal: Balance, l: Link<K>, r: Link<K>) -> Link<K> {
    if l.is_none() {
        ctx.tick(1);
        return r;
    }
    let (l, k) = remove_last(ctx, bal, &l);
    join(ctx, bal, l, k.expect("non-empty"), r)
}

pub(crate) fn split<K: Ord + Clone>(
    ctx: &mut Ctx,
    bal: Balance,
    st: &SetStats,
    t: &Link<K>,
    k: &K,
) -> (Link<K>, bool, Link<K>) {
    let Some(n) = t else {
        ctx.tick(1);
        return (None, false, None);
    };
    ctx.tick(1);
    match st.cmp(k, &n.key) {
        Ordering::Equal => (n.left.clone(), true, n.right.clone()),
        Ordering::Less => {
            let (a, found, b) = split(ctx, bal, st, &n.left, k);
            (a, found, join(ctx, bal, b, n.key.clone(), n.right.clone()))
        }
        Ordering::Greater => {
            let (a, found, b) = split(ctx, bal, st, &n.right, k);
            (join(ctx, bal, n.left.clone(), n.key.clone(), a), found, b)
        }
    }
}

pub(crate) fn contains<K: Ord>(st: &SetStats, t: &Link<K>, k: &K) -> bool {
    let mut cur = t;
    while let Some(n) = cur {
        match st.cmp(k, &n.key) {
            Ordering::Equal => return true,
            Ordering::Less => cur = &n.left,
            Ordering::Greater => cur = &n.right,
        }
    }
    false
}

/// Perfectly balanced tree over a sorted slice.
pub(crate) fn build<K: Clone + Send + Sync>(ctx: &mut Ctx, keys: &[K]) -> Link<K> {
    if keys.is_empty() {
        ctx.tick(1);
        return None;
    }
    let mid = keys.len() / 2;
    let (l, r) = ctx.fork2(|c| build(c, &keys[..mid]), |c| build(c, &keys[mid + 1..]));
    ctx.tick(1);
    node(l, keys[mid].clone(), r)
}

/// Writes the in-order keys of `t` into `out`, which has length `size(t)`.
pub(crate) fn flatten_into<K: Clone + Send + Sync>(ctx: &mut Ctx, t: &Link<K>, out: &mut [K]) {
    let Some(n) = t else {
        ctx.tick(1);
        return;
    };
    let ls = size(&n.left);
    let (lo, rest) = out.split_at_mut(ls);
    let (mid, hi) = rest.split_first_mut().expect("slot for the root");
    *mid = n.key.clone();
    ctx.fork2(|c| flatten_into(c, &n.left, lo), |c| flatten_into(c, &n.right, hi));
}

pub(crate) fn height<K>(t: &Link<K>) -> usize {
    t.as_ref().map_or(0, |n| 1 + height(&n.left).max(height(&n.right)))
}

impl<K> WbbTree<K> {
    pub fn empty() -> Self {
        WbbTree { root: None }
    }

    pub fn len(&self) -> usize {
        size(&self.root)
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn height(&self) -> usize {
        height(&self.root)
    }

    /// Whether both trees share the same root allocation.
    pub fn ptr_eq(&self, other: &Self) -> bool {
        match (&self.root, &other.root) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl<K: Ord + Clone + Send + Sync> WbbTree<K> {
    /// Builds from strictly increasing keys.
    pub fn from_sorted(ctx: &mut Ctx, keys: &[K]) -> Self {
        assert!(keys.windows(2).all(|w| w[0] < w[1]), "keys must be strictly increasing");
        WbbTree { root: build(ctx, keys) }
    }

    /// Sorts and deduplicates, then builds.
    pub fn from_keys(keys: impl IntoIterator<Item = K>) -> Self {
        let mut v: Vec<K> = keys.into_iter().collect();
        v.sort();
        v.dedup();
        WbbTree::from_sorted(&mut Ctx::instrumented(0), &v)
    }

    pub fn to_vec(&self) -> Vec<K> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut cur = &self.root;
        loop {
            while let Some(n) = cur {
                stack.push(n);
                cur = &n.left;
            }
            match stack.pop() {
                Some(n) => {
                    out.push(n.key.clone());
                    cur = &n.right;
                }
                None => return out,
            }
        }
    }

    /// In-order keys, flattened in parallel.
    pub fn flatten(&self, ctx: &mut Ctx) -> Vec<K> {
        let Some(r) = &self.root else {
            ctx.tick(1);
            return Vec::new();
        };
        let mut out = vec![r.key.clone(); r.size];
        flatten_into(ctx, &self.root, &mut out);
        out
    }

    pub fn contains(&self, k: &K) -> bool {
        contains(&SetStats::default(), &self.root, k)
    }

    /// Persistent split: keys below `k`, whether `k` is present, keys above.
    pub fn split(&self, ctx: &mut Ctx, bal: Balance, k: &K) -> (WbbTree<K>, bool, WbbTree<K>) {
        let (a, found, b) = split(ctx, bal, &SetStats::default(), &self.root, k);
        (WbbTree { root: a }, found, WbbTree { root: b })
    }

    pub fn insert(&self, ctx: &mut Ctx, bal: Balance, k: K) -> Self {
        let (a, _, b) = split(ctx, bal, &SetStats::default(), &self.root, &k);
        WbbTree { root: join(ctx, bal, a, k, b) }
    }

    /// Checks sizes, strict key order and the weight invariant at every node.
    pub fn validate(&self, bal: Balance) -> Result<(), String> {
        fn go<K: Ord>(t: &Link<K>, bal: Balance, lo: Option<&K>, hi: Option<&K>) -> Result<usize, String> {
            let Some(n) = t else { return Ok(0) };
            if lo.is_some_and(|lo| n.key <= *lo) || hi.is_some_and(|hi| n.key >= *hi) {
                return Err("keys out of order".into());
            }
            let l = go(&n.left, bal, lo, Some(&n.key))?;
            let r = go(&n.right, bal, Some(&n.key), hi)?;
            if n.size != l + r + 1 {
                return Err(format!("size {} but children hold {}", n.size, l + r + 1));
            }
            if !bal.ok(l + 1, r + 1) {
                return Err(format!("unbalanced node: child sizes {l} and {r}"));
            }
            Ok(n.size)
        }
        go(&self.root, bal, None, None).map(|_| ())
    }
}
