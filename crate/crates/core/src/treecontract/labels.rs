use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering::Relaxed};

use super::tree::{BinTree, NIL};
use crate::listcontract::{list_rank, LinkedList};
use crate::primitives::{prefix_scan, Direction, ScanSpec};
use crate::randperm::random_permutation;
use crate::rmq::ChunkedRmq;
use crate::runtime::Ctx;

/// `max_leaf[v]` is the largest leaf priority under `v`. `pair[v]` is the
/// leaf priority an internal node is raked with, the smaller of its
/// children's `max_leaf`; for a leaf it is its own priority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    pub max_leaf: Vec<u64>,
    pub pair: Vec<u64>,
}

/// Euler tour of the tree as a linked list: internal nodes contribute an
/// enter, middle and exit stop, leaves one stop. Returns the list and each
/// node's first stop id.
fn euler_tour(ctx: &mut Ctx, t: &BinTree) -> (LinkedList, Vec<usize>) {
    let n = t.len();
    let stops: Vec<u64> = ctx.tabulate(n, &|c, v| {
        c.tick(1);
        if t.is_leaf(v) {
            1
        } else {
            3
        }
    });
    let end = prefix_scan(ctx, &stops, ScanSpec::sum(), Direction::Forward);
    let base: Vec<usize> = ctx.tabulate(n, &|c, v| {
        c.tick(1);
        (end[v] - stops[v]) as usize
    });
    let total = end[n - 1] as usize;
    let owner: Vec<AtomicUsize> = (0..total).map(|_| AtomicUsize::new(0)).collect();
    ctx.parallel_for(0..n, &|c, v| {
        c.tick(stops[v]);
        for k in 0..stops[v] as usize {
            owner[base[v] + k].store(v, Relaxed);
        }
    });
    let first = |x: usize| base[x];
    let last = |x: usize| if t.is_leaf(x) { base[x] } else { base[x] + 2 };
    let after = |x: usize| -> Option<usize> {
        let p = t.parent[x];
        if p == NIL {
            None
        } else if t.left[p] == x {
            Some(base[p] + 1)
        } else {
            Some(base[p] + 2)
        }
    };
    let next: Vec<Option<usize>> = ctx.tabulate(total, &|c, s| {
        c.tick(3);
        let v = owner[s].load(Relaxed);
        let k = s - base[v];
        match k {
            _ if t.is_leaf(v) => after(v),
            0 => Some(first(t.left[v])),
            1 => Some(first(t.right[v])),
            _ => after(v),
        }
    });
    debug_assert!((0..n).all(|v| t.is_leaf(v) || next[last(t.left[v])] == Some(base[v] + 1)));
    let priority: Vec<u64> = random_permutation(ctx, total).into_iter().map(|p| p as u64).collect();
    let list = LinkedList::new(&next, priority).expect("euler tour is a single list");
    (list, base)
}

/// Computes `max_leaf` and `pair` by ranking the Euler tour and answering
/// a range-max query over each subtree's stretch of the tour.
pub fn compute_labels(ctx: &mut Ctx, t: &BinTree) -> Labels {
    let n = t.len();
    let (list, base) = euler_tour(ctx, t);
    let rank = list_rank(ctx, &list).expect("ranking a valid list completes");
    let slot: Vec<AtomicU64> = (0..list.len()).map(|_| AtomicU64::new(0)).collect();
    ctx.parallel_for(0..n, &|c, v| {
        c.tick(1);
        if t.is_leaf(v) {
            slot[rank[base[v]]].store(t.priority[v], Relaxed);
        }
    });
    let by_rank: Vec<u64> = ctx.tabulate(slot.len(), &|c, r| {
        c.tick(1);
        slot[r].load(Relaxed)
    });
    let rmq = ChunkedRmq::build(ctx, &by_rank, ScanSpec::max());
    let max_leaf: Vec<u64> = ctx.tabulate(n, &|c, v| {
        if t.is_leaf(v) {
            c.tick(1);
            t.priority[v]
        } else {
            rmq.query_in(c, rank[base[v]], rank[base[v] + 2]).expect("tour ranks are in range")
        }
    });
    let pair: Vec<u64> = ctx.tabulate(n, &|c, v| {
        c.tick(2);
        if t.is_leaf(v) {
            t.priority[v]
        } else {
            max_leaf[t.left[v]].min(max_leaf[t.right[v]])
        }
    });
    Labels { max_leaf, pair }
}

#[cfg(test)]
mod tests {
    use super::super::tree::tests::sample_tree;
    use super::*;

    fn max_leaf_seq(t: &BinTree, v: usize) -> u64 {
        match t.children(v) {
            None => t.priority(v),
            Some((l, r)) => max_leaf_seq(t, l).max(max_leaf_seq(t, r)),
        }
    }

    #[test]
    fn sample_labels() {
        let t = sample_tree();
        let lb = compute_labels(&mut Ctx::instrumented(0), &t);
        assert_eq!(lb.max_leaf[0], 5);
        assert_eq!(lb.max_leaf[2], 4);
        assert_eq!(&lb.pair[..5], &[4, 3, 2, 0, 1]);
    }

    #[test]
    fn single_leaf() {
        let t = BinTree::new(&[None], vec![0]).unwrap();
        let lb = compute_labels(&mut Ctx::instrumented(0), &t);
        assert_eq!(lb, Labels { max_leaf: vec![0], pair: vec![0] });
    }

    #[test]
    fn random_trees_match_recursive_labels() {
        let mut ctx = Ctx::parallel(5);
        for n in [2, 3, 10, 100, 777] {
            for t in [BinTree::random(&mut ctx, n), BinTree::caterpillar(&mut ctx, n)] {
                let lb = compute_labels(&mut ctx, &t);
                for v in 0..t.len() {
                    assert_eq!(lb.max_leaf[v], max_leaf_seq(&t, v));
                }
                // Internal labels name every leaf except the maximum once.
                let mut p: Vec<u64> = (0..t.len()).filter(|&v| !t.is_leaf(v)).map(|v| lb.pair[v]).collect();
                p.sort_unstable();
                assert_eq!(p, (0..n as u64 - 1).collect::<Vec<_>>());
            }
        }
    }
}
