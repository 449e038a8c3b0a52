use std::sync::atomic::Ordering::Relaxed;

use super::sketch::{Env, Sketch};
use super::tree::{build, join, join2, remove_last, Link};
use crate::runtime::Ctx;

/// Factor by which the effective weights of a pivot's two sides may differ
/// before the subtree is flattened and rebuilt.
fn too_skewed(alpha: f64, wl: usize, wr: usize) -> bool {
    let (lo, hi) = (wl.min(wr) as f64, wl.max(wr) as f64);
    hi > (2.0 / alpha) * lo
}

/// Turns a sketch into a balanced tree with no tombs. With `last`, the
/// largest surviving key is removed and returned.
pub(crate) fn rebalance<K: Ord + Clone + Send + Sync>(
    ctx: &mut Ctx,
    env: &Env,
    sk: Sketch<K>,
    last: bool,
) -> (Link<K>, Option<K>) {
    let op = env.op;
    let eff = sk.effective(op);
    ctx.tick(1);
    if eff == 0 {
        return (None, None);
    }
    let p = match sk {
        Sketch::Raw { tree, .. } | Sketch::Base { tree, .. } => {
            // A raw input subtree survives whole or not at all.
            debug_assert_eq!(eff, super::tree::size(&tree));
            return if last { remove_last(ctx, env.bal, &tree) } else { (tree, None) };
        }
        Sketch::Pivot(p) => p,
    };
    let (le, re) = (p.left.effective(op), p.right.effective(op));
    let b = last as usize;
    // With `last` and an empty right side the pivot itself is extracted.
    if !(last && re == 0) && too_skewed(env.bal.alpha, le + 1, re + 1 - b) {
        let counter = if env.in_base { &env.stats.base_reconstructions } else { &env.stats.reconstructions };
        counter.fetch_add(1, Relaxed);
        let whole = Sketch::Pivot(p);
        let mut keys = vec![whole_key(&whole); eff];
        whole.flatten_effective(ctx, op, &mut keys);
        let e = if last { keys.pop() } else { None };
        return (build(ctx, &keys), e);
    }
    let tomb = p.tomb;
    let key = p.key;
    let (left, right) = (p.left, p.right);
    let ((tl, el), (tr, er)) = ctx.fork2(|c| rebalance(c, env, left, tomb), |c| rebalance(c, env, right, last));
    let mid = if tomb { el } else { Some(key) };
    if re == 0 && last {
        (tl, mid)
    } else {
        let t = match mid {
            Some(k) => join(ctx, env.bal, tl, k, tr),
            None => join2(ctx, env.bal, tl, tr),
        };
        (t, er)
    }
}

fn whole_key<K: Clone>(sk: &Sketch<K>) -> K {
    match sk {
        Sketch::Pivot(p) => p.key.clone(),
        _ => unreachable!("only pivots are flattened"),
    }
}
