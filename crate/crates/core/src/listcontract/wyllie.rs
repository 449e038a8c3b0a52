use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering::*};

use super::list::{LinkedList, NIL};
use crate::error::Result;
use crate::runtime::{Ctx, Meter, Program, Step, SyncCell};

const NONE: u32 = u32::MAX;

/// One level of one node: neighbours `2^level` links away and the number of
/// predecessors within that distance.
#[derive(Default)]
pub struct WyllieCell {
    fwd: AtomicU32,
    back: AtomicU32,
    count: AtomicU32,
    flag: SyncCell,
}

/// `levels[i][x]` is node `x` at level `i`.
pub struct WyllieCells {
    levels: Vec<Vec<WyllieCell>>,
}

impl WyllieCells {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Level-`i` neighbours of `x`, once written.
    pub fn links(&self, level: usize, x: usize) -> (Option<usize>, Option<usize>) {
        let c = &self.levels[level][x];
        let get = |v: u32| (v != NONE).then_some(v as usize);
        (get(c.back.load(Acquire)), get(c.fwd.load(Acquire)))
    }
}

/// Binary-forking Wyllie: a node's thread at level `i` writes the level
/// `i+1` pointers of its two level-`i` neighbours (and its own missing
/// sides), then TASes each written cell. The second writer of a cell
/// continues with that node at level `i+1`, so one step can leave zero, one
/// or two threads running.
pub struct Wyllie {
    cells: WyllieCells,
    rank: Vec<AtomicU32>,
    finished: AtomicUsize,
    levels_used: AtomicU32,
}

pub struct WyllieTask {
    pending: Vec<(u32, u32, u64)>,
    latest: u64,
}

impl Wyllie {
    pub fn new(ctx: &mut Ctx, list: &LinkedList) -> Self {
        let n = list.len();
        assert!(n < NONE as usize, "list too long for 32-bit links");
        let depth = if n <= 1 { 0 } else { (usize::BITS - (n - 1).leading_zeros()) as usize };
        let enc = |v: usize| if v == NIL { NONE } else { v as u32 };
        let level0 = ctx.tabulate(n, &|c, x| {
            c.tick(2);
            WyllieCell {
                fwd: AtomicU32::new(enc(list.next[x])),
                back: AtomicU32::new(enc(list.prev[x])),
                ..WyllieCell::default()
            }
        });
        let mut levels = vec![level0];
        for _ in 0..depth {
            levels.push((0..n).map(|_| WyllieCell::default()).collect());
        }
        Wyllie {
            cells: WyllieCells { levels },
            rank: (0..n).map(|_| AtomicU32::new(0)).collect(),
            finished: AtomicUsize::new(0),
            levels_used: AtomicU32::new(0),
        }
    }

    pub fn cells(&self) -> &WyllieCells {
        &self.cells
    }

    pub fn levels_used(&self) -> u32 {
        self.levels_used.load(Acquire)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.rank.iter().map(|r| r.load(Acquire) as usize).collect()
    }

    /// Handles node `x` at `level`; returns the nodes whose level+1 cells
    /// this thread now owns.
    fn advance(&self, x: u32, level: u32, m: &mut Meter, won: &mut Vec<u32>) {
        let here = &self.cells.levels[level as usize];
        let cell = &here[x as usize];
        m.tick(3);
        let (b, f, cnt) = (cell.back.load(Acquire), cell.fwd.load(Acquire), cell.count.load(Acquire));
        if b == NONE && f == NONE {
            self.rank[x as usize].store(cnt, Release);
            self.finished.fetch_add(1, AcqRel);
            return;
        }
        self.levels_used.fetch_max(level + 1, AcqRel);
        let up = &self.cells.levels[level as usize + 1];
        let mut arrive = |y: u32, m: &mut Meter| {
            if m.tas(&up[y as usize].flag) {
                won.push(y);
            }
        };
        if f != NONE {
            m.tick(2);
            up[f as usize].back.store(b, Release);
            up[f as usize].count.store((1 << level) + cnt, Release);
        } else {
            m.tick(1);
            up[x as usize].fwd.store(NONE, Release);
        }
        if b != NONE {
            m.tick(1);
            up[b as usize].fwd.store(f, Release);
        } else {
            m.tick(2);
            up[x as usize].back.store(NONE, Release);
            up[x as usize].count.store(cnt, Release);
        }
        // Each written cell is TASed once by this writer.
        if f != NONE {
            arrive(f, m);
        }
        if b != NONE {
            arrive(b, m);
        }
        if f == NONE || b == NONE {
            arrive(x, m);
        }
    }
}

impl Program for Wyllie {
    type Task = WyllieTask;

    fn task_count(&self) -> usize {
        self.rank.len()
    }

    fn start(&self, index: usize, m: &mut Meter) -> Option<WyllieTask> {
        m.tick(1);
        Some(WyllieTask {
            pending: vec![(index as u32, 0, m.clock)],
            latest: m.clock,
        })
    }

    fn step(&self, t: &mut WyllieTask, m: &mut Meter) -> Step {
        let Some((x, level, clock)) = t.pending.pop() else {
            m.clock = t.latest;
            return Step::Done;
        };
        m.clock = clock;
        let mut won = Vec::with_capacity(2);
        self.advance(x, level, m, &mut won);
        if won.len() == 2 {
            m.tick(1);
        }
        for y in won {
            t.pending.push((y, level + 1, m.clock));
        }
        t.latest = t.latest.max(m.clock);
        Step::Continue
    }

    fn is_complete(&self) -> bool {
        self.finished.load(Acquire) == self.rank.len()
    }

    fn describe_state(&self) -> String {
        format!("{} of {} nodes ranked", self.finished.load(Acquire), self.rank.len())
    }
}

/// Positions by binary-forking pointer jumping.
pub fn wyllie_rank(ctx: &mut Ctx, list: &LinkedList) -> Result<Vec<usize>> {
    let w = Wyllie::new(ctx, list);
    ctx.run_program(&w)?;
    Ok(w.ranks())
}
