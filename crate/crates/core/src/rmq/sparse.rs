use crate::error::{Error, Result};
use crate::primitives::{prefix_scan, Direction, ScanSpec};
use crate::runtime::Ctx;

/// Range query structure over an associative, idempotent operator (min or
/// max). Level `k` splits the padded array into blocks of `2^k`; entries in
/// a block's left half hold suffix folds of that half, entries in the right
/// half hold prefix folds.
#[derive(Clone, Debug)]
pub struct SparseTable<T> {
    len: usize,
    spec: ScanSpec<T>,
    base: Vec<T>,
    levels: Vec<Vec<T>>,
}

/// Cost charged per answered query.
pub const QUERY_UNITS: u64 = 4;

impl<T: Copy + Send + Sync> SparseTable<T> {
    /// Builds every level; levels, blocks and halves are all processed in
    /// parallel, each half by one scan.
    pub fn build(ctx: &mut Ctx, a: &[T], spec: ScanSpec<T>) -> Self {
        assert!(!a.is_empty(), "sparse table over an empty array");
        let padded = a.len().next_power_of_two();
        let depth = padded.trailing_zeros() as usize;
        let mut base = a.to_vec();
        base.resize(padded, spec.identity);
        let mut levels: Vec<Vec<T>> = (0..depth).map(|_| vec![spec.identity; padded]).collect();
        let src = &base;
        ctx.for_each_mut(&mut levels, &|c, li, level| {
            let half = 1usize << li;
            let mut halves: Vec<&mut [T]> = level.chunks_mut(half).collect();
            c.for_each_mut(&mut halves, &|c, h, out| {
                let part = &src[h * half..(h + 1) * half];
                let dir = if h % 2 == 0 { Direction::Backward } else { Direction::Forward };
                let folded = prefix_scan(c, part, spec, dir);
                c.for_each_mut(out, &|c, i, slot| {
                    c.tick(1);
                    *slot = folded[i];
                });
            });
        });
        SparseTable {
            len: a.len(),
            spec,
            base,
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of levels above the base array.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Entry `i` of level `k`, for `1 <= k <= depth()`.
    pub fn entry(&self, i: usize, k: usize) -> T {
        self.levels[k - 1][i]
    }

    /// Fold of `a[i..=j]`.
    pub fn query(&self, i: usize, j: usize) -> Result<T> {
        if i > j || j >= self.len {
            return Err(Error::OutOfRange { i, j, len: self.len });
        }
        Ok(self.query_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn query_unchecked(&self, i: usize, j: usize) -> T {
        if i == j {
            return self.base[i];
        }
        let k = (usize::BITS - (i ^ j).leading_zeros()) as usize;
        let level = &self.levels[k - 1];
        (self.spec.combine)(level[i], level[j])
    }

    /// [`SparseTable::query`] charged to `ctx`.
    pub fn query_in(&self, ctx: &mut Ctx, i: usize, j: usize) -> Result<T> {
        ctx.tick(QUERY_UNITS);
        self.query(i, j)
    }
}

/// Range-minimum table.
pub fn build_sparse<T>(ctx: &mut Ctx, a: &[T]) -> SparseTable<T>
where
    T: Copy + Send + Sync + Ord + crate::primitives::Bounded,
{
    SparseTable::build(ctx, a, ScanSpec::min())
}
