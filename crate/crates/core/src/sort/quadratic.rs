use std::sync::atomic::{AtomicUsize, Ordering::*};

use crate::runtime::Ctx;

/// Sorts by counting, for every element, how many elements precede it
/// (smaller, or equal with a lower index). Quadratic work, logarithmic span.
pub fn quadratic_sort<T>(ctx: &mut Ctx, a: &[T]) -> Vec<T>
where
    T: Ord + Copy + Send + Sync,
{
    quadratic_sort_by(ctx, a, &|x: &T, y: &T| x < y)
}

pub(crate) fn quadratic_sort_by<T, L>(ctx: &mut Ctx, a: &[T], less: &L) -> Vec<T>
where
    T: Copy + Send + Sync,
    L: Fn(&T, &T) -> bool + Sync,
{
    let n = a.len();
    if n == 0 {
        ctx.tick(1);
        return Vec::new();
    }
    let at: Vec<AtomicUsize> = (0..n).map(|_| AtomicUsize::new(0)).collect();
    ctx.parallel_for(0..n, &|c, i| {
        let rank = c.reduce(
            0..n,
            0usize,
            &|c, j| {
                c.tick(1);
                (less(&a[j], &a[i]) || (j < i && !less(&a[i], &a[j]))) as usize
            },
            &|x, y| x + y,
        );
        c.tick(1);
        at[rank].store(i, Release);
    });
    ctx.tabulate_fill(n, a[0], &|c, r| {
        c.tick(1);
        a[at[r].load(Acquire)]
    })
}
