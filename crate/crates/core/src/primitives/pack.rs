use super::scan::{prefix_scan, Direction, ScanSpec};
use crate::runtime::Ctx;

/// Keeps the elements whose `keep` bit is set, in input order.
///
/// Scan of the keep bits, then a recursive scatter that splits the output
/// slice by the number of kept elements in the left half.
pub fn pack<T>(ctx: &mut Ctx, a: &[T], keep: &[bool]) -> Vec<T>
where
    T: Copy + Send + Sync,
{
    assert_eq!(a.len(), keep.len(), "pack: value and mask lengths differ");
    if a.is_empty() {
        ctx.tick(1);
        return Vec::new();
    }
    let bits: Vec<u64> = ctx.tabulate(a.len(), &|c, i| {
        c.tick(1);
        keep[i] as u64
    });
    let counts = prefix_scan(ctx, &bits, ScanSpec::sum(), Direction::Forward);
    let total = counts[a.len() - 1] as usize;
    let mut out = vec![a[0]; total];
    scatter(ctx, a, keep, &counts, 0, a.len(), &mut out);
    out
}

/// Like [`pack`] but selects by predicate.
pub fn filter<T, P>(ctx: &mut Ctx, a: &[T], pred: &P) -> Vec<T>
where
    T: Copy + Send + Sync,
    P: Fn(&T) -> bool + Sync,
{
    let keep: Vec<bool> = ctx.tabulate(a.len(), &|c, i| {
        c.tick(1);
        pred(&a[i])
    });
    pack(ctx, a, &keep)
}

fn kept_before(counts: &[u64], i: usize) -> u64 {
    if i == 0 {
        0
    } else {
        counts[i - 1]
    }
}

fn scatter<T>(ctx: &mut Ctx, a: &[T], keep: &[bool], counts: &[u64], lo: usize, hi: usize, out: &mut [T])
where
    T: Copy + Send + Sync,
{
    if out.is_empty() {
        ctx.tick(1);
        return;
    }
    if hi - lo == 1 {
        ctx.tick(2);
        debug_assert!(keep[lo]);
        out[0] = a[lo];
        return;
    }
    let mid = lo + (hi - lo) / 2;
    ctx.tick(2);
    let left = (kept_before(counts, mid) - kept_before(counts, lo)) as usize;
    let (ol, or) = out.split_at_mut(left);
    ctx.fork2(
        |c| scatter(c, a, keep, counts, lo, mid, ol),
        |c| scatter(c, a, keep, counts, mid, hi, or),
    );
}
