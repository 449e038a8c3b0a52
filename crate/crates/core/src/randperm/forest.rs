use std::sync::atomic::{AtomicUsize, Ordering::*};

use super::SwapTargets;
use crate::primitives::pack;
use crate::runtime::Ctx;
use crate::sort::{quadratic_sort, semisort_by_key};

const NIL: usize = usize::MAX;

/// Which swap must wait for which. Sources with the same destination are
/// chained in increasing order, and the smallest hangs off the destination;
/// a node runs after its (at most two) children. Self-loops are roots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependenceForest {
    parent: Vec<usize>,
    /// `[first source targeting i, next source sharing i's destination]`.
    children: Vec<[usize; 2]>,
}

impl DependenceForest {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        Some(self.parent[i]).filter(|&p| p != NIL)
    }

    pub fn children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[i].iter().copied().filter(|&c| c != NIL)
    }

    pub fn child_count(&self, i: usize) -> usize {
        self.children(i).count()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.parent[i] == NIL).collect()
    }
}

/// Groups sources by destination with a semisort, orders each group with a
/// quadratic sort, then links the chains.
pub fn build_forest(ctx: &mut Ctx, h: &SwapTargets) -> DependenceForest {
    let h = h.as_slice();
    let n = h.len();
    let idx: Vec<usize> = (0..n).collect();
    let moving: Vec<bool> = ctx.tabulate(n, &|c, i| {
        c.tick(1);
        h[i] != i
    });
    let sources = pack(ctx, &idx, &moving);
    let grouped = semisort_by_key(ctx, &sources, &|&s: &usize| h[s]);
    let m = grouped.len();
    let starts: Vec<bool> = ctx.tabulate(m, &|c, k| {
        c.tick(2);
        k == 0 || h[grouped[k - 1]] != h[grouped[k]]
    });
    let pos: Vec<usize> = (0..m).collect();
    let first = pack(ctx, &pos, &starts);
    let parent: Vec<AtomicUsize> = (0..n).map(|_| AtomicUsize::new(NIL)).collect();
    let children: Vec<[AtomicUsize; 2]> = (0..n).map(|_| [AtomicUsize::new(NIL), AtomicUsize::new(NIL)]).collect();
    ctx.parallel_for(0..first.len(), &|c, g| {
        let end = if g + 1 < first.len() { first[g + 1] } else { m };
        let group = quadratic_sort(c, &grouped[first[g]..end]);
        let dest = h[group[0]];
        c.parallel_for(0..group.len(), &|c, t| {
            c.tick(2);
            let s = group[t];
            if t == 0 {
                parent[s].store(dest, Release);
                children[dest][0].store(s, Release);
            } else {
                parent[s].store(group[t - 1], Release);
                children[group[t - 1]][1].store(s, Release);
            }
        });
    });
    DependenceForest {
        parent: parent.into_iter().map(AtomicUsize::into_inner).collect(),
        children: children.into_iter().map(|[a, b]| [a.into_inner(), b.into_inner()]).collect(),
    }
}
