use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};

/// One-bit memory cell operated on by test-and-set.
///
/// Besides the bit, the cell keeps the latest logical clock seen by any
/// arriving task (so the later arriver inherits the longer dependence chain)
/// and the number of `tas` calls that returned 0, used by audits.
#[derive(Debug, Default)]
pub struct SyncCell {
    bit: AtomicBool,
    clock: AtomicU64,
    zeros: AtomicU32,
}

impl SyncCell {
    pub const fn new() -> Self {
        SyncCell {
            bit: AtomicBool::new(false),
            clock: AtomicU64::new(0),
            zeros: AtomicU32::new(0),
        }
    }

    pub fn new_set() -> Self {
        let c = SyncCell::new();
        c.set();
        c
    }

    /// Reads the bit; if it was 0, sets it to 1. Returns the prior value.
    #[inline]
    pub fn tas(&self) -> bool {
        let prior = self.bit.swap(true, Ordering::AcqRel);
        if !prior {
            self.zeros.fetch_add(1, Ordering::Relaxed);
        }
        prior
    }

    /// Test-and-set that also merges logical clocks. Returns the prior bit
    /// and the clock the caller continues with: its own if it arrived first,
    /// otherwise the max of both arrivals.
    #[inline]
    pub(crate) fn tas_timed(&self, clock: u64) -> (bool, u64) {
        self.clock.fetch_max(clock, Ordering::AcqRel);
        let prior = self.tas();
        if prior {
            (true, self.clock.load(Ordering::Acquire).max(clock))
        } else {
            (false, clock)
        }
    }

    pub fn is_set(&self) -> bool {
        self.bit.load(Ordering::Acquire)
    }

    /// Initialization-time set; not counted as a TAS.
    pub fn set(&self) {
        self.bit.store(true, Ordering::Release);
    }

    pub fn reset(&self) {
        self.bit.store(false, Ordering::Release);
        self.clock.store(0, Ordering::Relaxed);
        self.zeros.store(0, Ordering::Relaxed);
    }

    /// How many `tas` calls on this cell have returned 0.
    pub fn zero_returns(&self) -> u32 {
        self.zeros.load(Ordering::Relaxed)
    }
}
