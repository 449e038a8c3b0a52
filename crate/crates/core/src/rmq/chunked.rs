use super::sparse::SparseTable;
use crate::error::{Error, Result};
use crate::primitives::{prefix_scan, Bounded, Direction, ScanSpec};
use crate::runtime::Ctx;

type GroupSlots<'a, T> = (&'a mut [T], &'a mut [T], &'a mut Option<SparseTable<T>>);

/// Two-level range query: groups of `⌈log2 n⌉` elements with prefix and
/// suffix folds, a sparse table over group folds, and a small sparse table
/// per group for queries that stay inside one group.
#[derive(Clone, Debug)]
pub struct ChunkedRmq<T> {
    len: usize,
    group: usize,
    spec: ScanSpec<T>,
    prefix: Vec<T>,
    suffix: Vec<T>,
    top: SparseTable<T>,
    inner: Vec<SparseTable<T>>,
}

impl<T: Copy + Send + Sync> ChunkedRmq<T> {
    pub fn build(ctx: &mut Ctx, a: &[T], spec: ScanSpec<T>) -> Self {
        assert!(!a.is_empty(), "range query structure over an empty array");
        let n = a.len();
        let group = (usize::BITS - (n - 1).leading_zeros()).max(1) as usize;
        let groups = n.div_ceil(group);
        let mut prefix = vec![spec.identity; n];
        let mut suffix = vec![spec.identity; n];
        let mut inner: Vec<Option<SparseTable<T>>> = vec![None; groups];
        {
            let mut pre: Vec<&mut [T]> = prefix.chunks_mut(group).collect();
            let mut suf: Vec<&mut [T]> = suffix.chunks_mut(group).collect();
            let mut work: Vec<GroupSlots<'_, T>> = pre
                .iter_mut()
                .zip(suf.iter_mut())
                .zip(inner.iter_mut())
                .map(|((p, s), t)| (&mut **p, &mut **s, t))
                .collect();
            ctx.for_each_mut(&mut work, &|c, g, (p, s, t)| {
                let part = &a[g * group..((g + 1) * group).min(n)];
                let (fwd, back) = c.fork2(
                    |c| prefix_scan(c, part, spec, Direction::Forward),
                    |c| prefix_scan(c, part, spec, Direction::Backward),
                );
                c.tick(2 * part.len() as u64);
                p.copy_from_slice(&fwd);
                s.copy_from_slice(&back);
                **t = Some(SparseTable::build(c, part, spec));
            });
        }
        let mins: Vec<T> = ctx.tabulate_fill(groups, spec.identity, &|c, g| {
            c.tick(1);
            prefix[((g + 1) * group).min(n) - 1]
        });
        let top = SparseTable::build(ctx, &mins, spec);
        ChunkedRmq {
            len: n,
            group,
            spec,
            prefix,
            suffix,
            top,
            inner: inner.into_iter().map(|t| t.expect("group table")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn group_size(&self) -> usize {
        self.group
    }

    /// Fold of `a[i..=j]`.
    pub fn query(&self, i: usize, j: usize) -> Result<T> {
        if i > j || j >= self.len {
            return Err(Error::OutOfRange { i, j, len: self.len });
        }
        let (gi, gj) = (i / self.group, j / self.group);
        if gi == gj {
            let off = gi * self.group;
            return Ok(self.inner[gi].query_unchecked(i - off, j - off));
        }
        let ends = (self.spec.combine)(self.suffix[i], self.prefix[j]);
        if gj == gi + 1 {
            return Ok(ends);
        }
        Ok((self.spec.combine)(ends, self.top.query_unchecked(gi + 1, gj - 1)))
    }

    pub fn query_in(&self, ctx: &mut Ctx, i: usize, j: usize) -> Result<T> {
        ctx.tick(2 * super::QUERY_UNITS);
        self.query(i, j)
    }
}

/// Chunked range-minimum structure.
pub fn build_chunked<T>(ctx: &mut Ctx, a: &[T]) -> ChunkedRmq<T>
where
    T: Copy + Send + Sync + Ord + Bounded,
{
    ChunkedRmq::build(ctx, a, ScanSpec::min())
}
