//! Union, intersection and difference of ordered sets held in persistent
//! weight-balanced trees.
//!
//! An operation first builds a sketch: about `sqrt(n + m)` splitters, found
//! by searching both trees at once, cut both inputs into chunks that are
//! combined recursively and hung below a full binary tree of the splitters.
//! Splitters that do not belong to the result stay as tombs. Small chunk
//! pairs go to a base case that marks the smaller side's keys in the larger
//! tree. A top-down pass then removes tombs, rebuilding any subtree whose
//! sides have drifted too far apart and joining the rest.

mod rebalance;
mod sketch;
mod tree;

use std::sync::atomic::Ordering::Relaxed;

use crate::runtime::Ctx;

pub use sketch::{base_case, BASE_FACTOR, dual_search, sketch, Counts, Pivot, SetOp, Sketch, Splitter};
pub use tree::{Balance, Node, SetStats, WbbTree};

/// Runs `op` with the larger input in the `L` role (the first on ties).
pub fn set_operation<K>(
    ctx: &mut Ctx,
    a: &WbbTree<K>,
    b: &WbbTree<K>,
    op: SetOp,
    bal: Balance,
    stats: &SetStats,
) -> WbbTree<K>
where
    K: Ord + Clone + Send + Sync,
{
    run(ctx, a, b, &sketch::Env::new(op, bal, stats))
}

fn run<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, a: &WbbTree<K>, b: &WbbTree<K>, env: &sketch::Env) -> WbbTree<K> {
    let (large, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let sk = sketch::sketch_links(ctx, env, large.root.clone(), small.root.clone());
    env.stats.sketch_height.fetch_max(sk.skeleton_height() as u64, Relaxed);
    let (root, _) = rebalance::rebalance(ctx, env, sk, false);
    WbbTree { root }
}

pub fn set_union<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, a: &WbbTree<K>, b: &WbbTree<K>) -> WbbTree<K> {
    set_operation(ctx, a, b, SetOp::Union, Balance::default(), &SetStats::default())
}

pub fn set_intersection<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, a: &WbbTree<K>, b: &WbbTree<K>) -> WbbTree<K> {
    set_operation(ctx, a, b, SetOp::Intersection, Balance::default(), &SetStats::default())
}

/// Keys of `a` not in `b`.
pub fn set_difference<K: Ord + Clone + Send + Sync>(ctx: &mut Ctx, a: &WbbTree<K>, b: &WbbTree<K>) -> WbbTree<K> {
    set_operation(ctx, a, b, difference_op(a.len(), b.len()), Balance::default(), &SetStats::default())
}

/// The role-relative operation computing `a - b`.
pub fn difference_op(a_len: usize, b_len: usize) -> SetOp {
    if a_len >= b_len {
        SetOp::DiffLminusS
    } else {
        SetOp::DiffSminusL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn oracle(op: SetOp, l: &[u32], s: &[u32]) -> Vec<u32> {
        let mut all: Vec<u32> = l.iter().chain(s).copied().collect();
        all.sort_unstable();
        all.dedup();
        all.retain(|x| op.keeps(l.binary_search(x).is_ok(), s.binary_search(x).is_ok()));
        all
    }

    const OPS: [SetOp; 4] = [SetOp::Union, SetOp::Intersection, SetOp::DiffLminusS, SetOp::DiffSminusL];

    #[test]
    fn identities() {
        let mut ctx = Ctx::instrumented(0);
        let t = WbbTree::from_keys(0..500u32);
        let e = WbbTree::empty();
        assert_eq!(set_union(&mut ctx, &t, &e).to_vec(), t.to_vec());
        assert_eq!(set_intersection(&mut ctx, &t, &t).to_vec(), t.to_vec());
        assert!(set_difference(&mut ctx, &t, &t).is_empty());
        let a = WbbTree::from_keys([1, 3, 5]);
        let b = WbbTree::from_keys([2, 3, 6]);
        assert_eq!(set_union(&mut ctx, &a, &b).to_vec(), vec![1, 2, 3, 5, 6]);
        assert_eq!(set_difference(&mut ctx, &b, &WbbTree::from_keys([3])).to_vec(), vec![2, 6]);
        assert_eq!(set_difference(&mut ctx, &WbbTree::from_keys([3]), &b).to_vec(), Vec::<u32>::new());
    }

    #[test]
    fn exhaustive_ten_element_universe() {
        let bal = Balance::default();
        let trees: Vec<(Vec<u32>, WbbTree<u32>)> = (0u32..1024)
            .map(|mask| {
                let v: Vec<u32> = (0..10).filter(|b| mask >> b & 1 == 1).collect();
                let t = WbbTree::from_keys(v.clone());
                (v, t)
            })
            .collect();
        let mut ctx = Ctx::instrumented(0);
        for (av, a) in &trees {
            for (bv, b) in &trees {
                let (lv, sv) = if av.len() >= bv.len() { (av, bv) } else { (bv, av) };
                for op in OPS {
                    let st = SetStats::default();
                    let env = sketch::Env { base_factor: 1, ..sketch::Env::new(op, bal, &st) };
                    let out = run(&mut ctx, a, b, &env);
                    assert_eq!(out.to_vec(), oracle(op, lv, sv));
                    out.validate(bal).unwrap();
                    if op == SetOp::Union {
                        assert_eq!(st.reconstructions(), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn random_sets_all_ops() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        for round in 0..80 {
            let n = rng.gen_range(0..20_000);
            let m = if round % 3 == 0 { rng.gen_range(0..=n) } else { rng.gen_range(0..=n / 50 + 1) };
            let u = (n as u32 + 1) * if round % 2 == 0 { 2 } else { 50 };
            let a = WbbTree::from_keys((0..n).map(|_| rng.gen_range(0..u)));
            let b = WbbTree::from_keys((0..m).map(|_| rng.gen_range(0..u)));
            let (av, bv) = (a.to_vec(), b.to_vec());
            let (lv, sv) = if av.len() >= bv.len() { (&av, &bv) } else { (&bv, &av) };
            for (alpha, factor) in [(0.25, 1), (0.2, 1), (0.25, BASE_FACTOR)] {
                let bal = Balance::new(alpha);
                for op in OPS {
                    let st = SetStats::default();
                    let mut ctx = Ctx::instrumented(round);
                    let env = sketch::Env { base_factor: factor, ..sketch::Env::new(op, bal, &st) };
                    let out = run(&mut ctx, &a, &b, &env);
                    assert!(st.pivots() as usize <= 2 * b.len().min(a.len()) + 1, "round {round}");
                    assert_eq!(out.to_vec(), oracle(op, lv, sv), "round {round} {op:?}");
                    out.validate(bal).unwrap();
                    if op == SetOp::Union {
                        assert_eq!(st.reconstructions(), 0, "round {round}");
                    }
                }
            }
            // Inputs are untouched.
            assert_eq!(a.to_vec(), av);
            assert_eq!(b.to_vec(), bv);
            a.validate(Balance::default()).unwrap();
        }
    }

    #[test]
    fn parallel_mode_agrees() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let a = WbbTree::from_keys((0..200_000).map(|_| rng.gen_range(0..1_000_000u64)));
        let b = WbbTree::from_keys((0..30_000).map(|_| rng.gen_range(0..1_000_000u64)));
        for op in OPS {
            let x = set_operation(&mut Ctx::parallel(0), &a, &b, op, Balance::default(), &SetStats::default());
            let y = set_operation(&mut Ctx::instrumented(0), &a, &b, op, Balance::default(), &SetStats::default());
            assert_eq!(x.to_vec(), y.to_vec());
        }
    }
}
