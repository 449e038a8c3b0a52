use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::Rng;

use super::buckets::{concat, scatter};
use super::sample::{log2_ceil, sample_sort};
use crate::runtime::Ctx;

fn hash_with<K: Hash>(salt: u64, k: &K) -> u64 {
    let mut h = DefaultHasher::new();
    salt.hash(&mut h);
    k.hash(&mut h);
    h.finish()
}

/// Reorders `a` so that equal elements are contiguous.
pub fn semisort<T>(ctx: &mut Ctx, a: &[T]) -> Vec<T>
where
    T: Hash + Eq + Copy + Send + Sync,
{
    semisort_by_key(ctx, a, &|x: &T| *x)
}

/// Reorders `a` so that elements with equal keys are contiguous.
///
/// Keys are hashed to 64 bits. A sample of hashes marks heavy hashes, which
/// get a bucket each; the rest are split into hash ranges of about
/// `log2 n` elements. Elements are scattered into buckets by TAS, each
/// light bucket is sorted by hash, and runs of equal hashes are split by
/// true key equality.
pub fn semisort_by_key<T, K, F>(ctx: &mut Ctx, a: &[T], key: &F) -> Vec<T>
where
    T: Copy + Send + Sync,
    K: Hash + Eq + Sync,
    F: Fn(&T) -> K + Sync,
{
    let n = a.len();
    if n <= 1 {
        ctx.tick(1);
        return a.to_vec();
    }
    let lg = log2_ceil(n);
    let light = n.div_ceil(lg);
    let mut factor = 2;
    let mut attempt = 0u64;
    let (groups, heavy_count) = loop {
        let rng = ctx.rng().split();
        attempt += 1;
        if attempt.is_multiple_of(8) {
            factor *= 2;
        }
        let salt: u64 = rng.substream(0).gen();
        let hashes: Vec<u64> = ctx.tabulate(n, &|c, i| {
            c.tick(2);
            hash_with(salt, &key(&a[i]))
        });
        let s = light;
        let samples: Vec<u64> = ctx.tabulate(s, &|c, k| {
            c.tick(2);
            hashes[rng.substream(k as u64 + 1).gen_range(0..n)]
        });
        let sorted = sample_sort(ctx, &samples);
        // Run starts in the sorted sample, with their run lengths.
        let runs: Vec<(u64, usize)> = {
            let starts: Vec<bool> = ctx.tabulate(s, &|c, k| {
                c.tick(1);
                k == 0 || sorted[k - 1] != sorted[k]
            });
            let idx: Vec<usize> = (0..s).collect();
            let first = crate::primitives::pack(ctx, &idx, &starts);
            ctx.tabulate(first.len(), &|c, r| {
                c.tick(2);
                let end = if r + 1 < first.len() { first[r + 1] } else { s };
                (sorted[first[r]], end - first[r])
            })
        };
        let heavy: Vec<(u64, usize)> = crate::primitives::filter(ctx, &runs, &|&(_, c)| c >= 3);
        let heavy_hashes: Vec<u64> = heavy.iter().map(|h| h.0).collect();
        let range_of = |h: u64| ((h as u128 * light as u128) >> 64) as usize;
        let depth = log2_ceil(heavy.len() + 1) as u64;
        let bucket: Vec<u32> = ctx.tabulate(n, &|c, i| {
            c.tick(depth + 2);
            match heavy_hashes.binary_search(&hashes[i]) {
                Ok(j) => (light + j) as u32,
                Err(_) => range_of(hashes[i]) as u32,
            }
        });
        // Light sample counts per range, from the sorted sample.
        let light_counts: Vec<usize> = ctx.tabulate(light, &|c, b| {
            c.tick(2 * log2_ceil(s) as u64);
            let lo = sorted.partition_point(|&h| range_of(h) < b);
            let hi = sorted.partition_point(|&h| range_of(h) <= b);
            sorted[lo..hi].iter().filter(|h| heavy_hashes.binary_search(h).is_err()).count()
        });
        let capacity: Vec<usize> = ctx.tabulate(light + heavy.len(), &|c, b| {
            c.tick(1);
            let k = if b < light { light_counts[b] } else { heavy[b - light].1 };
            factor * (k + 2) * lg
        });
        if let Some(table) = scatter(ctx, &bucket, capacity, 2 * lg as u32, rng.substream(u64::MAX)) {
            let g = table.gather(ctx);
            let h: Vec<Vec<(u64, u32)>> = g
                .into_iter()
                .map(|v| v.into_iter().map(|i| (hashes[i as usize], i)).collect())
                .collect();
            break (h, heavy.len());
        }
    };
    let mut parts: Vec<Vec<T>> = vec![Vec::new(); groups.len()];
    let light = groups.len() - heavy_count;
    ctx.for_each_mut(&mut parts, &|c, b, out| {
        let members = &groups[b];
        let by_hash = if b < light { sample_sort(c, members) } else { members.clone() };
        *out = split_runs(c, a, &by_hash, key);
    });
    concat(ctx, &parts)
}

/// Elements of `a` named by `items` (sorted by hash), with each run of equal
/// hashes regrouped by true key equality.
fn split_runs<T, K, F>(ctx: &mut Ctx, a: &[T], items: &[(u64, u32)], key: &F) -> Vec<T>
where
    T: Copy + Send + Sync,
    K: Eq + Sync,
    F: Fn(&T) -> K + Sync,
{
    let Some(&(_, f)) = items.first() else {
        ctx.tick(1);
        return Vec::new();
    };
    let first = key(&a[f as usize]);
    let uniform = ctx.reduce(
        0..items.len(),
        true,
        &|c, k| {
            c.tick(2);
            items[k].0 == items[0].0 && key(&a[items[k].1 as usize]) == first
        },
        &|x, y| x && y,
    );
    if uniform {
        return ctx.tabulate_fill(items.len(), a[f as usize], &|c, k| {
            c.tick(1);
            a[items[k].1 as usize]
        });
    }
    // Mixed bucket: regroup sequentially, keeping first-seen key order
    // within each hash run.
    let mut out = Vec::with_capacity(items.len());
    let mut units = 0;
    let mut start = 0;
    while start < items.len() {
        let mut end = start;
        while end < items.len() && items[end].0 == items[start].0 {
            end += 1;
        }
        let mut taken = vec![false; end - start];
        for i in start..end {
            if taken[i - start] {
                continue;
            }
            let k = key(&a[items[i].1 as usize]);
            for j in i..end {
                units += 1;
                if !taken[j - start] && key(&a[items[j].1 as usize]) == k {
                    taken[j - start] = true;
                    out.push(a[items[j].1 as usize]);
                }
            }
        }
        start = end;
    }
    ctx.tick(units);
    out
}
