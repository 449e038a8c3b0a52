use crate::runtime::Ctx;

/// Minimal binary-search-tree interface for flattening and rebuilding.
pub trait BinaryTree: Sized + Send + Sync {
    type Key: Clone + Send + Sync + Default;

    fn empty() -> Self;
    fn make(ctx: &mut Ctx, left: Self, key: Self::Key, right: Self) -> Self;
    /// `None` for the empty tree.
    fn parts(&self) -> Option<(&Self, &Self::Key, &Self)>;
    fn size(&self) -> usize;
}

/// In-order keys. Work linear, span proportional to height.
pub fn flatten<T: BinaryTree>(ctx: &mut Ctx, tree: &T) -> Vec<T::Key> {
    let mut out = vec![T::Key::default(); tree.size()];
    flatten_into(ctx, tree, &mut out);
    out
}

fn flatten_into<T: BinaryTree>(ctx: &mut Ctx, tree: &T, out: &mut [T::Key]) {
    match tree.parts() {
        None => ctx.tick(1),
        Some((l, k, r)) => {
            ctx.tick(2);
            let (ol, rest) = out.split_at_mut(l.size());
            let (slot, or) = rest.split_first_mut().expect("key slot");
            *slot = k.clone();
            ctx.fork2(|c| flatten_into(c, l, ol), |c| flatten_into(c, r, or));
        }
    }
}

/// Perfectly balanced tree over `keys` (assumed sorted). Even-length ranges
/// put the extra key on the right, i.e. the root is the left-biased midpoint.
pub fn build_balanced<T: BinaryTree>(ctx: &mut Ctx, keys: &[T::Key]) -> T {
    if keys.is_empty() {
        ctx.tick(1);
        return T::empty();
    }
    let mid = (keys.len() - 1) / 2;
    ctx.tick(1);
    let (l, r) = ctx.fork2(
        |c| build_balanced::<T>(c, &keys[..mid]),
        |c| build_balanced::<T>(c, &keys[mid + 1..]),
    );
    T::make(ctx, l, keys[mid].clone(), r)
}

/// Plain owned tree, used where no augmentation is needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimpleTree<K> {
    Leaf,
    Node(Box<SimpleTree<K>>, K, Box<SimpleTree<K>>, usize),
}

impl<K: Clone + Send + Sync + Default> BinaryTree for SimpleTree<K> {
    type Key = K;

    fn empty() -> Self {
        SimpleTree::Leaf
    }

    fn make(ctx: &mut Ctx, left: Self, key: K, right: Self) -> Self {
        ctx.tick(1);
        let size = left.size() + right.size() + 1;
        SimpleTree::Node(Box::new(left), key, Box::new(right), size)
    }

    fn parts(&self) -> Option<(&Self, &K, &Self)> {
        match self {
            SimpleTree::Leaf => None,
            SimpleTree::Node(l, k, r, _) => Some((l, k, r)),
        }
    }

    fn size(&self) -> usize {
        match self {
            SimpleTree::Leaf => 0,
            SimpleTree::Node(.., s) => *s,
        }
    }
}

impl<K> SimpleTree<K> {
    pub fn height(&self) -> usize {
        match self {
            SimpleTree::Leaf => 0,
            SimpleTree::Node(l, _, r, _) => 1 + l.height().max(r.height()),
        }
    }
}
