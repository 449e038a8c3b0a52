use std::sync::atomic::{AtomicU64, Ordering::*};

use rand::Rng;

use super::buckets::{concat, scatter, BucketTable};
use super::quadratic::quadratic_sort;
use crate::primitives::pack;
use crate::runtime::{Ctx, TaskRng};

pub(crate) fn log2_ceil(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

fn cube_root_ceil(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r * r * r < n {
        r += 1;
    }
    while r > 1 && (r - 1) * (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r.max(1)
}

/// Tunables of the sample sort. Derived sizes are functions of the current
/// subproblem size `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SortParams {
    /// Slots per regular bucket, in units of `⌈n^{2/3}⌉`.
    pub capacity_factor: usize,
    /// Retry limit, in units of `⌈log2 n⌉`.
    pub c2: usize,
    /// Subproblems at most this large are insertion sorted.
    pub base_case: usize,
    /// Fixed capacity for every bucket, overriding the derived sizes.
    pub capacity_override: Option<usize>,
    /// Consecutive restarts after which bucket capacities double.
    pub restart_valve: u32,
}

impl Default for SortParams {
    fn default() -> Self {
        SortParams {
            capacity_factor: 4,
            c2: 2,
            base_case: 64,
            capacity_override: None,
            restart_valve: 8,
        }
    }
}

impl SortParams {
    pub fn sample_count(&self, n: usize) -> usize {
        cube_root_ceil(n) * log2_ceil(n)
    }

    /// Every `pivot_stride`-th sorted sample becomes a pivot.
    pub fn pivot_stride(&self, n: usize) -> usize {
        log2_ceil(n)
    }

    pub fn pivot_count(&self, n: usize) -> usize {
        cube_root_ceil(n)
    }

    pub fn retry_limit(&self, n: usize) -> u32 {
        (self.c2 * log2_ceil(n)).max(1) as u32
    }

    pub fn bucket_capacity(&self, n: usize) -> usize {
        self.capacity_override.unwrap_or_else(|| {
            let c = (n as f64).powf(2.0 / 3.0).ceil() as usize;
            self.capacity_factor * c.max(1)
        })
    }

    /// Capacity of the bucket holding elements equal to a pivot seen
    /// `multiplicity` times among `samples` samples.
    pub fn equal_capacity(&self, n: usize, multiplicity: usize, samples: usize) -> usize {
        self.capacity_override
            .unwrap_or_else(|| self.capacity_factor * ((multiplicity + 1) * n).div_ceil(samples.max(1)))
    }
}

/// Counters gathered across one sort.
#[derive(Debug, Default)]
pub struct SortStats {
    pub restarts: AtomicU64,
    pub distributions: AtomicU64,
    pub max_slot_claims: AtomicU64,
}

impl SortStats {
    pub fn restarts(&self) -> u64 {
        self.restarts.load(Acquire)
    }

    pub fn distributions(&self) -> u64 {
        self.distributions.load(Acquire)
    }
}

/// Outcome of one distribution attempt.
pub enum Distribution {
    Placed(BucketTable),
    Restart,
}

/// Bucket of `x` among pivots `p_0 < … < p_{d-1}`: bucket `2k` holds
/// `p_{k-1} < x < p_k`, bucket `2k + 1` holds `x == p_k`.
pub fn bucket_of<T: Ord>(pivots: &[T], x: &T) -> usize {
    let k = pivots.partition_point(|p| p < x);
    if k < pivots.len() && pivots[k] == *x {
        2 * k + 1
    } else {
        2 * k
    }
}

/// Places each element in a random free slot of its bucket. `multiplicity`
/// gives, per pivot, how many samples equalled it; it sizes the equal
/// buckets. `Restart` if some element ran out of retries.
pub fn distribute<T>(
    ctx: &mut Ctx,
    a: &[T],
    pivots: &[T],
    multiplicity: &[usize],
    samples: usize,
    params: &SortParams,
    rng: TaskRng,
) -> Distribution
where
    T: Ord + Copy + Send + Sync,
{
    let n = a.len();
    let depth = log2_ceil(pivots.len() + 1) as u64;
    let bucket: Vec<u32> = ctx.tabulate(n, &|c, i| {
        c.tick(depth + 1);
        bucket_of(pivots, &a[i]) as u32
    });
    let regular = params.bucket_capacity(n);
    let capacity: Vec<usize> = ctx.tabulate(2 * pivots.len() + 1, &|c, b| {
        c.tick(1);
        if b % 2 == 0 {
            regular
        } else {
            params.equal_capacity(n, multiplicity[b / 2], samples)
        }
    });
    match scatter(ctx, &bucket, capacity, params.retry_limit(n), rng) {
        Some(t) => Distribution::Placed(t),
        None => Distribution::Restart,
    }
}

/// Sorts `a`.
pub fn sample_sort<T>(ctx: &mut Ctx, a: &[T]) -> Vec<T>
where
    T: Ord + Copy + Send + Sync,
{
    sample_sort_with(ctx, a, &SortParams::default(), &SortStats::default())
}

pub fn sample_sort_with<T>(ctx: &mut Ctx, a: &[T], params: &SortParams, stats: &SortStats) -> Vec<T>
where
    T: Ord + Copy + Send + Sync,
{
    let n = a.len();
    if n <= params.base_case.max(1) {
        return insertion_sort(ctx, a);
    }
    let mut params = *params;
    let mut streak = 0;
    let (pivots, table) = loop {
        let rng = ctx.rng().split();
        let (pivots, mult, s) = choose_pivots(ctx, a, &params, &rng);
        stats.distributions.fetch_add(1, AcqRel);
        match distribute(ctx, a, &pivots, &mult, s, &params, rng.substream(u64::MAX)) {
            Distribution::Placed(t) => break (pivots, t),
            Distribution::Restart => {
                stats.restarts.fetch_add(1, AcqRel);
                streak += 1;
                if streak >= params.restart_valve {
                    streak = 0;
                    params.capacity_factor *= 2;
                    params.capacity_override = params.capacity_override.map(|c| 2 * c);
                }
            }
        }
    };
    stats.max_slot_claims.fetch_max(table.max_claims_per_slot() as u64, AcqRel);
    let groups = table.gather(ctx);
    drop(table);
    debug_assert!(groups.iter().enumerate().all(|(b, g)| g.iter().all(|&i| bucket_of(&pivots, &a[i as usize]) == b)));
    let mut parts: Vec<Vec<T>> = vec![Vec::new(); groups.len()];
    let inner = SortParams { ..params };
    ctx.for_each_mut(&mut parts, &|c, b, out| {
        let vals: Vec<T> = match groups[b].first() {
            None => Vec::new(),
            Some(&f) => c.tabulate_fill(groups[b].len(), a[f as usize], &|c, k| {
                c.tick(1);
                a[groups[b][k] as usize]
            }),
        };
        // Equal buckets are already sorted.
        *out = if b % 2 == 1 { vals } else { sample_sort_with(c, &vals, &inner, stats) };
    });
    concat(ctx, &parts)
}

/// Draws samples, sorts them, keeps every stride-th as a pivot and drops
/// repeats. Returns pivots, how often each pivot value occurs among the
/// samples, and the sample count.
fn choose_pivots<T>(ctx: &mut Ctx, a: &[T], params: &SortParams, rng: &TaskRng) -> (Vec<T>, Vec<usize>, usize)
where
    T: Ord + Copy + Send + Sync,
{
    let n = a.len();
    let s = params.sample_count(n).min(n);
    let samples: Vec<T> = ctx.tabulate_fill(s, a[0], &|c, k| {
        c.tick(2);
        a[rng.substream(k as u64).gen_range(0..n)]
    });
    let sorted = quadratic_sort(ctx, &samples);
    let stride = params.pivot_stride(n);
    let picks = s.div_ceil(stride);
    let cand: Vec<T> = ctx.tabulate_fill(picks, a[0], &|c, k| {
        c.tick(1);
        sorted[(k * stride + stride / 2).min(s - 1)]
    });
    let keep: Vec<bool> = ctx.tabulate(picks, &|c, k| {
        c.tick(1);
        k == 0 || cand[k - 1] != cand[k]
    });
    let pivots = pack(ctx, &cand, &keep);
    let depth = log2_ceil(s) as u64;
    let mult: Vec<usize> = ctx.tabulate(pivots.len(), &|c, k| {
        c.tick(2 * depth);
        let lo = sorted.partition_point(|x| x < &pivots[k]);
        let hi = sorted.partition_point(|x| x <= &pivots[k]);
        hi - lo
    });
    (pivots, mult, s)
}

fn insertion_sort<T: Ord + Copy>(ctx: &mut Ctx, a: &[T]) -> Vec<T> {
    let mut v = a.to_vec();
    let mut units = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            j -= 1;
            units += 1;
        }
        units += 1;
    }
    ctx.tick(units);
    v
}
