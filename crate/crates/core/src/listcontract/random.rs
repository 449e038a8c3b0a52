use rand::Rng;

use super::list::LinkedList;
use crate::randperm::random_permutation;
use crate::runtime::Ctx;

/// Where contraction priorities come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrioritySource {
    /// A uniformly random permutation of `0..n`.
    #[default]
    Permutation,
    /// Independent uniform integers in `[1, n²]`, ties broken by node id.
    Integers,
}

pub fn random_priorities(ctx: &mut Ctx, n: usize, source: PrioritySource) -> Vec<u64> {
    match source {
        PrioritySource::Permutation => random_permutation(ctx, n).into_iter().map(|p| p as u64).collect(),
        PrioritySource::Integers => {
            let rng = ctx.rng().split();
            let top = (n as u64).saturating_mul(n as u64).max(1);
            ctx.tabulate(n, &|c, i| {
                c.tick(1);
                rng.substream(i as u64).gen_range(1..=top)
            })
        }
    }
}

/// A list threaded through `0..n` in random order, with random priorities.
pub fn random_list(ctx: &mut Ctx, n: usize, source: PrioritySource) -> LinkedList {
    let order = random_permutation(ctx, n);
    let priority = random_priorities(ctx, n, source);
    let mut next = vec![None; n];
    for w in order.windows(2) {
        next[w[0]] = Some(w[1]);
    }
    match source {
        PrioritySource::Permutation => LinkedList::new(&next, priority),
        PrioritySource::Integers => LinkedList::with_integer_priorities(&next, priority),
    }
    .expect("well-formed random list")
}
