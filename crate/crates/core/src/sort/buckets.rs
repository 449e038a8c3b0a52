use std::sync::atomic::{AtomicBool, AtomicU32, Ordering::*};

use rand::Rng;

use crate::primitives::{pack, prefix_scan, Direction, ScanSpec};
use crate::runtime::{Ctx, Meter, Program, Step, SyncCell, TaskRng};

/// Slot arrays for a scatter: bucket `b` owns slots
/// `offset[b]..offset[b] + capacity[b]`, each with an occupancy flag and
/// the index of the element that claimed it.
pub struct BucketTable {
    offset: Vec<usize>,
    capacity: Vec<usize>,
    flags: Vec<SyncCell>,
    items: Vec<AtomicU32>,
}

impl BucketTable {
    pub fn new(capacity: Vec<usize>) -> Self {
        let mut offset = Vec::with_capacity(capacity.len());
        let mut total = 0;
        for &c in &capacity {
            offset.push(total);
            total += c;
        }
        BucketTable {
            offset,
            capacity,
            flags: (0..total).map(|_| SyncCell::new()).collect(),
            items: (0..total).map(|_| AtomicU32::new(u32::MAX)).collect(),
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.capacity.len()
    }

    pub fn capacity(&self, b: usize) -> usize {
        self.capacity[b]
    }

    pub fn total_slots(&self) -> usize {
        self.flags.len()
    }

    /// Occupied slots per bucket.
    pub fn loads(&self) -> Vec<usize> {
        (0..self.bucket_count())
            .map(|b| self.slot_range(b).filter(|&s| self.flags[s].is_set()).count())
            .collect()
    }

    /// Largest number of TAS calls that returned 0 on one slot.
    pub fn max_claims_per_slot(&self) -> u32 {
        self.flags.iter().map(|f| f.zero_returns()).max().unwrap_or(0)
    }

    fn slot_range(&self, b: usize) -> std::ops::Range<usize> {
        self.offset[b]..self.offset[b] + self.capacity[b]
    }

    /// Element indices in each bucket, in slot order.
    pub fn gather(&self, ctx: &mut Ctx) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = vec![Vec::new(); self.bucket_count()];
        ctx.for_each_mut(&mut out, &|c, b, dst| {
            let r = self.slot_range(b);
            let idx: Vec<u32> = c.tabulate(r.len(), &|c, k| {
                c.tick(1);
                self.items[r.start + k].load(Acquire)
            });
            let keep: Vec<bool> = c.tabulate(r.len(), &|c, k| {
                c.tick(1);
                self.flags[r.start + k].is_set()
            });
            *dst = pack(c, &idx, &keep);
        });
        out
    }
}

/// Scatter of elements into their buckets: element `i` picks uniformly
/// random slots of bucket `bucket[i]` and TASes them, up to `retries` times.
pub struct Scatter<'a> {
    pub(crate) table: BucketTable,
    bucket: &'a [u32],
    retries: u32,
    rng: TaskRng,
    failed: AtomicBool,
}

pub struct ScatterTask {
    index: u32,
    tries: u32,
    rng: TaskRng,
}

impl<'a> Scatter<'a> {
    pub fn new(table: BucketTable, bucket: &'a [u32], retries: u32, rng: TaskRng) -> Self {
        Scatter {
            table,
            bucket,
            retries: retries.max(1),
            rng,
            failed: AtomicBool::new(false),
        }
    }

    pub fn failed(&self) -> bool {
        self.failed.load(Acquire)
    }
}

impl Program for Scatter<'_> {
    type Task = ScatterTask;

    fn task_count(&self) -> usize {
        self.bucket.len()
    }

    fn start(&self, index: usize, m: &mut Meter) -> Option<ScatterTask> {
        m.tick(1);
        Some(ScatterTask {
            index: index as u32,
            tries: 0,
            rng: self.rng.substream(index as u64),
        })
    }

    fn step(&self, t: &mut ScatterTask, m: &mut Meter) -> Step {
        m.tick(2);
        if self.failed.load(Acquire) {
            return Step::Done;
        }
        let b = self.bucket[t.index as usize] as usize;
        let range = self.table.slot_range(b);
        if range.is_empty() || t.tries == self.retries {
            self.failed.store(true, Release);
            return Step::Done;
        }
        t.tries += 1;
        let slot = range.start + t.rng.gen_range(0..range.len());
        if m.tas(&self.table.flags[slot]) {
            return Step::Continue;
        }
        m.tick(1);
        self.table.items[slot].store(t.index, Release);
        Step::Done
    }
}

/// Runs a scatter; `None` if some element exhausted its retries.
pub fn scatter(ctx: &mut Ctx, bucket: &[u32], capacity: Vec<usize>, retries: u32, rng: TaskRng) -> Option<BucketTable> {
    let prog = Scatter::new(BucketTable::new(capacity), bucket, retries, rng);
    ctx.run_program(&prog).expect("scatter tasks always finish");
    (!prog.failed()).then_some(prog.table)
}

/// Concatenates `parts` in order.
pub fn concat<T: Copy + Send + Sync>(ctx: &mut Ctx, parts: &[Vec<T>]) -> Vec<T> {
    let sizes: Vec<u64> = ctx.tabulate(parts.len(), &|c, i| {
        c.tick(1);
        parts[i].len() as u64
    });
    let ends = prefix_scan(ctx, &sizes, ScanSpec::sum(), Direction::Forward);
    let total = ends.last().copied().unwrap_or(0) as usize;
    let Some(fill) = parts.iter().find_map(|p| p.first().copied()) else {
        return Vec::new();
    };
    let mut out = vec![fill; total];
    place(ctx, parts, &ends, 0, parts.len(), &mut out);
    out
}

fn place<T: Copy + Send + Sync>(ctx: &mut Ctx, parts: &[Vec<T>], ends: &[u64], lo: usize, hi: usize, out: &mut [T]) {
    if hi - lo == 1 {
        ctx.for_each_mut(out, &|c, i, slot| {
            c.tick(1);
            *slot = parts[lo][i];
        });
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let start = if lo == 0 { 0 } else { ends[lo - 1] };
    ctx.tick(1);
    let (l, r) = out.split_at_mut((ends[mid - 1] - start) as usize);
    ctx.fork2(|c| place(c, parts, ends, lo, mid, l), |c| place(c, parts, ends, mid, hi, r));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::Mode;

    #[test]
    fn concat_parts() {
        let mut c = Ctx::instrumented(0);
        let parts = vec![vec![1u8, 2], vec![], vec![3], vec![4, 5, 6]];
        assert_eq!(concat(&mut c, &parts), vec![1, 2, 3, 4, 5, 6]);
        assert!(concat::<u8>(&mut c, &[vec![], vec![]]).is_empty());
    }

    #[test]
    fn each_element_lands_once() {
        let bucket: Vec<u32> = (0..500).map(|i| i % 5).collect();
        for seed in 0..30 {
            let mut c = Ctx::new(Mode::Simulate { seed, procs: 4 }, seed);
            let table = scatter(&mut c, &bucket, vec![250; 5], 20, TaskRng::new(seed)).unwrap();
            assert_eq!(table.loads(), vec![100; 5]);
            assert!(table.max_claims_per_slot() <= 1);
            let groups = table.gather(&mut c);
            let mut all: Vec<u32> = groups.concat();
            all.sort();
            assert_eq!(all, (0..500).collect::<Vec<_>>());
            for (b, g) in groups.iter().enumerate() {
                assert!(g.iter().all(|&i| bucket[i as usize] as usize == b));
            }
        }
    }

    #[test]
    fn overfull_bucket_fails() {
        let mut c = Ctx::instrumented(0);
        assert!(scatter(&mut c, &[0, 0], vec![1], 4, TaskRng::new(1)).is_none());
        assert!(scatter(&mut c, &[0], vec![0, 3], 4, TaskRng::new(1)).is_none());
    }
}
