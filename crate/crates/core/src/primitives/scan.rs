use crate::runtime::Ctx;

/// Types with a least and greatest value, used as identities for max/min.
pub trait Bounded: Copy {
    const LOWEST: Self;
    const HIGHEST: Self;
}

macro_rules! bounded {
    ($($t:ty),*) => {$(
        impl Bounded for $t {
            const LOWEST: Self = <$t>::MIN;
            const HIGHEST: Self = <$t>::MAX;
        }
    )*};
}
bounded!(u8, u16, u32, u64, usize, i8, i16, i32, i64, isize);

/// An associative operator with its identity.
#[derive(Clone, Copy)]
pub struct ScanSpec<T> {
    pub identity: T,
    pub combine: fn(T, T) -> T,
}

impl<T: Ord + Bounded> ScanSpec<T> {
    pub fn min() -> Self {
        ScanSpec {
            identity: T::HIGHEST,
            combine: |a, b| if b < a { b } else { a },
        }
    }

    pub fn max() -> Self {
        ScanSpec {
            identity: T::LOWEST,
            combine: |a, b| if b > a { b } else { a },
        }
    }
}

impl ScanSpec<u64> {
    pub fn sum() -> Self {
        ScanSpec {
            identity: 0,
            combine: |a, b| a.wrapping_add(b),
        }
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for ScanSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScanSpec").field("identity", &self.identity).finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

struct Sweep<'a, T> {
    src: &'a [T],
    spec: ScanSpec<T>,
    backward: bool,
}

impl<T: Copy + Send + Sync> Sweep<'_, T> {
    #[inline]
    fn get(&self, pos: usize) -> T {
        if self.backward {
            self.src[self.src.len() - 1 - pos]
        } else {
            self.src[pos]
        }
    }

    /// `a` then `b` in sweep order.
    #[inline]
    fn join(&self, a: T, b: T) -> T {
        if self.backward {
            (self.spec.combine)(b, a)
        } else {
            (self.spec.combine)(a, b)
        }
    }

    /// `sums` covers sweep positions lo+1..hi; each internal node stores the
    /// total of its left half at its midpoint.
    fn up(&self, ctx: &mut Ctx, lo: usize, hi: usize, sums: &mut [T]) -> T {
        if hi - lo == 1 {
            ctx.tick(1);
            return self.get(lo);
        }
        let mid = lo + (hi - lo) / 2;
        let (sl, rest) = sums.split_at_mut(mid - lo - 1);
        let (slot, sr) = rest.split_first_mut().expect("midpoint slot");
        let (l, r) = ctx.fork2(|c| self.up(c, lo, mid, sl), |c| self.up(c, mid, hi, sr));
        ctx.tick(2);
        *slot = l;
        self.join(l, r)
    }

    /// `out` holds sweep positions lo..hi, in array order.
    fn down(&self, ctx: &mut Ctx, lo: usize, hi: usize, carry: T, sums: &[T], out: &mut [T]) {
        if hi - lo == 1 {
            ctx.tick(2);
            out[0] = self.join(carry, self.get(lo));
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let (sl, rest) = sums.split_at(mid - lo - 1);
        let (left_total, sr) = rest.split_first().expect("midpoint slot");
        ctx.tick(1);
        let right_carry = self.join(carry, *left_total);
        let (ol, or) = if self.backward {
            let (r, l) = out.split_at_mut(hi - mid);
            (l, r)
        } else {
            out.split_at_mut(mid - lo)
        };
        ctx.fork2(
            |c| self.down(c, lo, mid, carry, sl, ol),
            |c| self.down(c, mid, hi, right_carry, sr, or),
        );
    }
}

/// Inclusive scan. Forward: `out[i] = a[0] ⊕ … ⊕ a[i]`; backward:
/// `out[i] = a[i] ⊕ … ⊕ a[n-1]`. Linear work, logarithmic span.
pub fn prefix_scan<T>(ctx: &mut Ctx, a: &[T], spec: ScanSpec<T>, direction: Direction) -> Vec<T>
where
    T: Copy + Send + Sync,
{
    let n = a.len();
    if n == 0 {
        ctx.tick(1);
        return Vec::new();
    }
    let sweep = Sweep {
        src: a,
        spec,
        backward: direction == Direction::Backward,
    };
    let mut sums = vec![spec.identity; n - 1];
    sweep.up(ctx, 0, n, &mut sums);
    let mut out = vec![spec.identity; n];
    sweep.down(ctx, 0, n, spec.identity, &sums, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{measure, Mode};
    use proptest::prelude::*;

    fn seq_scan<T: Copy>(a: &[T], spec: ScanSpec<T>, dir: Direction) -> Vec<T> {
        let mut out = Vec::with_capacity(a.len());
        match dir {
            Direction::Forward => {
                let mut acc = spec.identity;
                for &x in a {
                    acc = (spec.combine)(acc, x);
                    out.push(acc);
                }
            }
            Direction::Backward => {
                let mut acc = spec.identity;
                for &x in a.iter().rev() {
                    acc = (spec.combine)(x, acc);
                    out.push(acc);
                }
                out.reverse();
            }
        }
        out
    }

    #[test]
    fn prefix_min_example() {
        let mut c = Ctx::instrumented(0);
        let a = [3u64, 1, 4, 1, 5];
        assert_eq!(prefix_scan(&mut c, &a, ScanSpec::min(), Direction::Forward), vec![3, 1, 1, 1, 1]);
        assert_eq!(prefix_scan(&mut c, &a, ScanSpec::min(), Direction::Backward), vec![1, 1, 1, 1, 5]);
    }

    #[test]
    fn empty_and_singleton() {
        let mut c = Ctx::instrumented(0);
        assert!(prefix_scan::<u64>(&mut c, &[], ScanSpec::sum(), Direction::Forward).is_empty());
        assert_eq!(prefix_scan(&mut c, &[9u64], ScanSpec::sum(), Direction::Backward), vec![9]);
    }

    #[test]
    fn exhaustive_prefix_min_small_lengths() {
        // Every length up to 64 over a handful of value patterns.
        for n in 1..=64usize {
            for pat in 0..6u64 {
                let a: Vec<u64> = (0..n as u64).map(|i| (i * 7 + pat * 13) % (5 + pat)).collect();
                let mut c = Ctx::instrumented(0);
                for dir in [Direction::Forward, Direction::Backward] {
                    let got = prefix_scan(&mut c, &a, ScanSpec::min(), dir);
                    for i in 0..n {
                        let want = match dir {
                            Direction::Forward => *a[..=i].iter().min().unwrap(),
                            Direction::Backward => *a[i..].iter().min().unwrap(),
                        };
                        assert_eq!(got[i], want);
                    }
                }
            }
        }
    }

    #[test]
    fn large_prefix_sum_matches_fold() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let a: Vec<u64> = (0..100_000).map(|_| rng.gen_range(0..1_000_000)).collect();
        let mut c = Ctx::parallel(0);
        let got = prefix_scan(&mut c, &a, ScanSpec::sum(), Direction::Forward);
        assert_eq!(got, seq_scan(&a, ScanSpec::sum(), Direction::Forward));
    }

    #[test]
    fn non_commutative_operator() {
        // Composition of affine maps x -> a*x + b is associative, not commutative.
        let spec = ScanSpec::<(u64, u64)> {
            identity: (1, 0),
            combine: |(a1, b1), (a2, b2)| (a1.wrapping_mul(a2), b1.wrapping_mul(a2).wrapping_add(b2)),
        };
        let a: Vec<(u64, u64)> = (0..200u64).map(|i| (i % 5 + 1, i * 3 % 11)).collect();
        let mut c = Ctx::instrumented(0);
        for dir in [Direction::Forward, Direction::Backward] {
            assert_eq!(prefix_scan(&mut c, &a, spec, dir), seq_scan(&a, spec, dir));
        }
    }

    #[test]
    fn linear_work_log_span() {
        for k in [10u32, 14, 18] {
            let n = 1usize << k;
            let a = vec![1u64; n];
            let (_, t) = measure(Mode::Instrumented, 0, |c| prefix_scan(c, &a, ScanSpec::sum(), Direction::Forward));
            assert!(t.work <= 12 * n as u64, "work {}", t.work);
            assert!(t.span <= 6 * k as u64 + 10, "span {}", t.span);
        }
    }

    proptest! {
        #[test]
        fn scan_matches_sequential(a in proptest::collection::vec(any::<i32>(), 0..300), back in any::<bool>()) {
            let dir = if back { Direction::Backward } else { Direction::Forward };
            let mut c = Ctx::instrumented(0);
            prop_assert_eq!(prefix_scan(&mut c, &a, ScanSpec::max(), dir), seq_scan(&a, ScanSpec::max(), dir));
        }
    }
}
