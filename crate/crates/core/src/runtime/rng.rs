use rand::{Error, RngCore};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based splittable generator.
///
/// A stream is identified by the root seed and the sequence of fork sides
/// taken to reach the task. The path is folded into a 64-bit key, so two
/// tasks on different paths draw from unrelated streams while the same
/// seed and path always reproduce the same values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskRng {
    seed: u64,
    key: u64,
    depth: u32,
    counter: u64,
}

impl TaskRng {
    pub fn new(seed: u64) -> Self {
        TaskRng {
            seed,
            key: mix64(seed ^ GOLDEN),
            depth: 0,
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of fork sides appended to the root path.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Stream for the child on `side` (0 = left, 1 = right) of a fork.
    pub fn fork(&self, side: u8) -> TaskRng {
        debug_assert!(side < 2);
        let key = mix64(self.key.wrapping_add(GOLDEN).rotate_left(17) ^ (2 + side as u64));
        TaskRng {
            seed: self.seed,
            key,
            depth: self.depth + 1,
            counter: 0,
        }
    }

    /// Stream for a labelled sub-task, e.g. element `i` of a scatter or the
    /// `k`-th restart of a randomized phase. Equivalent to a fork path that
    /// encodes the label.
    pub fn substream(&self, label: u64) -> TaskRng {
        let key = mix64(self.key ^ mix64(label.wrapping_mul(GOLDEN) ^ 0x5bd1_e995));
        TaskRng {
            seed: self.seed,
            key,
            depth: self.depth + 1,
            counter: 0,
        }
    }

    /// Fresh independent stream; advances this one.
    pub fn split(&mut self) -> TaskRng {
        let label = self.next();
        self.substream(label)
    }

    #[inline]
    fn next(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ self.counter.wrapping_mul(GOLDEN))
    }
}

impl RngCore for TaskRng {
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_stream() {
        let a = TaskRng::new(7).fork(0).fork(1);
        let b = TaskRng::new(7).fork(0).fork(1);
        let xa: Vec<u64> = a.clone().sample_iter(rand::distributions::Standard).take(16).collect();
        let xb: Vec<u64> = b.clone().sample_iter(rand::distributions::Standard).take(16).collect();
        assert_eq!(xa, xb);
        assert_eq!(a.depth(), 2);
    }

    #[test]
    fn sibling_streams_differ() {
        let root = TaskRng::new(1);
        let mut l = root.fork(0);
        let mut r = root.fork(1);
        let same = (0..64).filter(|_| l.next_u64() == r.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn sibling_streams_uncorrelated() {
        // Bit agreement between sibling streams should sit near 1/2.
        let root = TaskRng::new(99);
        let mut l = root.fork(0);
        let mut r = root.fork(1);
        let agree: u32 = (0..4096).map(|_| 64 - (l.next_u64() ^ r.next_u64()).count_ones()).sum();
        let frac = agree as f64 / (4096.0 * 64.0);
        assert!((frac - 0.5).abs() < 0.01, "agreement {frac}");
    }

    #[test]
    fn gen_range_is_in_bounds() {
        let mut rng = TaskRng::new(3).substream(11);
        for i in 0..1000u64 {
            let v = rng.gen_range(0..=i);
            assert!(v <= i);
        }
    }
}
