use rand::Rng;

use crate::error::{Error, Result};
use crate::randperm::random_permutation;
use crate::runtime::Ctx;

pub(crate) const NIL: usize = usize::MAX;

/// Rooted binary tree where every internal node has two children. Leaves
/// carry priorities forming a permutation of `0..leaves`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinTree {
    pub(crate) parent: Vec<usize>,
    pub(crate) left: Vec<usize>,
    pub(crate) right: Vec<usize>,
    pub(crate) priority: Vec<u64>,
    pub(crate) root: usize,
    pub(crate) live: Vec<bool>,
}

impl BinTree {
    /// `children[v]` is `Some((left, right))` for internal nodes and `None`
    /// for leaves; `priority[v]` is read for leaves only.
    pub fn new(children: &[Option<(usize, usize)>], priority: Vec<u64>) -> Result<Self> {
        let n = children.len();
        if n == 0 {
            return Err(Error::MalformedTree("no nodes".into()));
        }
        if priority.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: priority.len(),
            });
        }
        let mut parent = vec![NIL; n];
        let (mut left, mut right) = (vec![NIL; n], vec![NIL; n]);
        for (v, ch) in children.iter().enumerate() {
            if let Some((l, r)) = *ch {
                for c in [l, r] {
                    if c >= n || c == v {
                        return Err(Error::MalformedTree(format!("node {v} has invalid child {c}")));
                    }
                    if parent[c] != NIL {
                        return Err(Error::MalformedTree(format!("node {c} has two parents")));
                    }
                    parent[c] = v;
                }
                if l == r {
                    return Err(Error::MalformedTree(format!("node {v} lists child {l} twice")));
                }
                left[v] = l;
                right[v] = r;
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v] == NIL).collect();
        if roots.len() != 1 {
            return Err(Error::MalformedTree(format!("expected one root, found {}", roots.len())));
        }
        let leaves = children.iter().filter(|c| c.is_none()).count();
        if leaves != n.div_ceil(2) || n.is_multiple_of(2) {
            return Err(Error::MalformedTree(format!("{n} nodes cannot form a full binary tree")));
        }
        // Reachability from the root rules out cycles.
        let mut seen = 0;
        let mut stack = vec![roots[0]];
        while let Some(v) = stack.pop() {
            seen += 1;
            if seen > n {
                return Err(Error::MalformedTree("cycle".into()));
            }
            if left[v] != NIL {
                stack.push(left[v]);
                stack.push(right[v]);
            }
        }
        if seen != n {
            return Err(Error::MalformedTree("unreachable nodes".into()));
        }
        let mut used = vec![false; leaves];
        for v in (0..n).filter(|&v| left[v] == NIL) {
            let p = priority[v] as usize;
            if p >= leaves || std::mem::replace(&mut used[p], true) {
                return Err(Error::InvalidPriorities(format!(
                    "leaf priorities must be a permutation of 0..{leaves}"
                )));
            }
        }
        Ok(BinTree {
            parent,
            left,
            right,
            priority,
            root: roots[0],
            live: vec![true; n],
        })
    }

    /// Random shape (each internal node splits its leaf count uniformly)
    /// with random leaf priorities.
    pub fn random(ctx: &mut Ctx, leaves: usize) -> Self {
        assert!(leaves >= 1);
        let mut rng = ctx.rng().split();
        let mut children: Vec<Option<(usize, usize)>> = vec![None];
        let mut stack = vec![(0usize, leaves)];
        while let Some((v, k)) = stack.pop() {
            if k > 1 {
                let a = rng.gen_range(1..k);
                let (l, r) = (children.len(), children.len() + 1);
                children.push(None);
                children.push(None);
                children[v] = Some((l, r));
                stack.push((l, a));
                stack.push((r, k - a));
            }
        }
        Self::with_random_priorities(ctx, children)
    }

    /// Left-leaning spine of `leaves - 1` internal nodes, random priorities.
    pub fn caterpillar(ctx: &mut Ctx, leaves: usize) -> Self {
        assert!(leaves >= 1);
        let mut children: Vec<Option<(usize, usize)>> = vec![None; 2 * leaves - 1];
        for i in 0..leaves - 1 {
            children[2 * i] = Some((2 * i + 2, 2 * i + 1));
        }
        Self::with_random_priorities(ctx, children)
    }

    fn with_random_priorities(ctx: &mut Ctx, children: Vec<Option<(usize, usize)>>) -> Self {
        let leaf_ids: Vec<usize> = (0..children.len()).filter(|&v| children[v].is_none()).collect();
        let perm = random_permutation(ctx, leaf_ids.len());
        let mut priority = vec![0; children.len()];
        for (k, &v) in leaf_ids.iter().enumerate() {
            priority[v] = perm[k] as u64;
        }
        Self::new(&children, priority).expect("generated tree is well formed")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.len().div_ceil(2)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.left[v] == NIL
    }

    pub fn is_live(&self, v: usize) -> bool {
        self.live[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        Some(self.parent[v]).filter(|&p| p != NIL)
    }

    pub fn children(&self, v: usize) -> Option<(usize, usize)> {
        (self.left[v] != NIL).then(|| (self.left[v], self.right[v]))
    }

    /// Leaf priority.
    pub fn priority(&self, v: usize) -> u64 {
        self.priority[v]
    }

    pub fn leaf_with_priority(&self, p: u64) -> Option<usize> {
        (0..self.len()).find(|&v| self.is_leaf(v) && self.priority[v] == p)
    }

    /// Removes leaf `u` and its parent; the sibling takes the parent's place.
    pub fn rake(&mut self, u: usize) -> Result<()> {
        if u >= self.len() || !self.live[u] || !self.is_leaf(u) {
            return Err(Error::MalformedTree(format!("{u} is not a live leaf")));
        }
        let v = self.parent[u];
        if v == NIL {
            return Err(Error::FinalLeaf(u));
        }
        let s = if self.left[v] == u { self.right[v] } else { self.left[v] };
        let g = self.parent[v];
        self.parent[s] = g;
        if g == NIL {
            self.root = s;
        } else if self.left[g] == v {
            self.left[g] = s;
        } else {
            self.right[g] = s;
        }
        self.live[u] = false;
        self.live[v] = false;
        Ok(())
    }
}

/// Rakes leaves one at a time in increasing priority. Returns the
/// `(leaf, parent)` pairs in order and the surviving leaf.
pub fn sequential_rake(tree: &BinTree) -> (Vec<(usize, usize)>, usize) {
    let mut t = tree.clone();
    let mut by_priority = vec![NIL; t.leaf_count()];
    for v in (0..t.len()).filter(|&v| t.is_leaf(v)) {
        by_priority[t.priority[v] as usize] = v;
    }
    let mut pairs = Vec::with_capacity(t.leaf_count().saturating_sub(1));
    for &u in &by_priority[..by_priority.len() - 1] {
        pairs.push((u, t.parent[u]));
        t.rake(u).expect("non-final leaf has a parent");
    }
    (pairs, t.root)
}
