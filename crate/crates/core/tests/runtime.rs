use binfork::runtime::{measure, sim_schedule, JoinTree};
use binfork::{Ctx, Mode};
use proptest::prelude::*;

fn tree_sum(ctx: &mut Ctx, lo: u64, hi: u64) -> u64 {
    if hi - lo <= 1 {
        ctx.tick(1);
        return lo;
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = ctx.fork2(|c| tree_sum(c, lo, mid), |c| tree_sum(c, mid, hi));
    a + b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fork_tree_costs_are_exact(k in 0u32..12) {
        let n = 1u64 << k;
        let (sum, t) = measure(Mode::Instrumented, 0, |c| tree_sum(c, 0, n));
        prop_assert_eq!(sum, n * (n - 1) / 2);
        prop_assert_eq!(t.work, n + (n - 1));
        prop_assert_eq!(t.span, 1 + k as u64);
        prop_assert_eq!(t.fork_count, n - 1);
    }

    #[test]
    fn modes_agree_on_results(n in 1u64..5000, seed in any::<u64>()) {
        let want = n * (n - 1) / 2;
        for mode in [Mode::Instrumented, Mode::Parallel, Mode::Simulate { seed, procs: 3 }] {
            prop_assert_eq!(measure(mode, seed, |c| tree_sum(c, 0, n)).0, want);
        }
    }

    #[test]
    fn joins_run_the_continuation_once(depth in 0u32..7, work in 0u64..5, seed in any::<u64>(), procs in 1usize..9) {
        let j = JoinTree::new(depth, work);
        sim_schedule(&j, seed, procs).unwrap();
        prop_assert_eq!(j.continuation_runs(), 1);
        prop_assert_eq!(j.effects_seen(), 1u64 << depth);
    }

    #[test]
    fn tabulate_and_reduce_match_sequential(n in 0usize..3000) {
        let mut ctx = Ctx::instrumented(1);
        let v = ctx.tabulate(n, &|c, i| { c.tick(1); i * i });
        prop_assert_eq!(&v, &(0..n).map(|i| i * i).collect::<Vec<_>>());
        let s = ctx.reduce(0..n, 0usize, &|c, i| { c.tick(1); v[i] }, &|a, b| a + b);
        prop_assert_eq!(s, v.iter().sum::<usize>());
    }
}

#[test]
fn instrumented_runs_are_reproducible() {
    let run = |seed| measure(Mode::Instrumented, seed, |c| tree_sum(c, 0, 1000)).1;
    assert_eq!(run(3), run(3));
    assert_eq!(run(3), run(4));
}
