use std::collections::HashMap;
use std::time::Instant;

use binfork::listcontract::{list_rank, random_list, wyllie_rank, LinkedList, PrioritySource};
use binfork::randperm::{knuth_shuffle_seq, shuffle_with_targets, SwapTargets};
use binfork::rmq::build_chunked;
use binfork::sets::{set_operation, Balance, SetOp, SetStats, WbbTree};
use binfork::sort::{sample_sort, semisort};
use binfork::treecontract::{sequential_rake, tree_contract, BinTree};
use binfork::{Ctx, Mode};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    Listcontract,
    Wyllie,
    Sort,
    Semisort,
    Randperm,
    Rmq,
    Treecontract,
    Setops,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OpName {
    Union,
    Intersection,
    DiffLs,
    DiffSl,
}

impl OpName {
    pub fn op(self) -> SetOp {
        match self {
            OpName::Union => SetOp::Union,
            OpName::Intersection => SetOp::Intersection,
            OpName::DiffLs => SetOp::DiffLminusS,
            OpName::DiffSl => SetOp::DiffSminusL,
        }
    }
}

/// Inputs of one run besides the mode.
#[derive(Clone, Copy, Debug)]
pub struct Job {
    pub algo: Algo,
    pub n: usize,
    pub m: usize,
    pub queries: usize,
    pub seed: u64,
    pub op: OpName,
    pub alpha: f64,
    pub verify: bool,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub work: Option<u64>,
    pub span: Option<u64>,
    pub wall_ns: Option<u64>,
    /// First divergence from the oracle, when verifying.
    pub divergence: Option<String>,
    pub comparisons: Option<u64>,
}

/// First index where two sequences differ, described.
pub fn first_divergence<T: PartialEq + std::fmt::Debug>(want: &[T], got: &[T]) -> Option<String> {
    if let Some(i) = want.iter().zip(got).position(|(a, b)| a != b) {
        return Some(format!("index {i}: expected {:?}, got {:?}", want[i], got[i]));
    }
    (want.len() != got.len()).then(|| format!("length: expected {}, got {}", want.len(), got.len()))
}

/// Equal elements contiguous and the same multiset as the input.
pub fn check_semisorted(input: &[u64], got: &[u64]) -> Option<String> {
    let mut a = input.to_vec();
    let mut b = got.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if let Some(d) = first_divergence(&a, &b) {
        return Some(format!("not a permutation of the input ({d})"));
    }
    let mut closed: HashMap<u64, usize> = HashMap::new();
    for (i, w) in got.windows(2).enumerate() {
        if w[0] != w[1] {
            if let Some(j) = closed.insert(w[0], i) {
                return Some(format!("key {} split: runs end at {j} and {i}", w[0]));
            }
        }
    }
    if let Some(last) = got.last() {
        if closed.contains_key(last) {
            return Some(format!("key {last} split: also ends the output"));
        }
    }
    None
}

fn random_values(gen: &mut Ctx, n: usize, range: u64) -> Vec<u64> {
    let mut rng = gen.rng().split();
    (0..n).map(|_| rng.gen_range(0..range.max(1))).collect()
}

fn ranks_divergence(list: &LinkedList, got: &[usize]) -> Option<String> {
    first_divergence(&list.sequential_ranks(), got)
}

/// Runs one job. Inputs come from a separate instrumented context seeded by
/// `job.seed`, so every mode sees the same input.
pub fn run(job: &Job, mode: Mode) -> Result<Outcome, String> {
    let mut gen = Ctx::instrumented(job.seed ^ 0x00c0_ffee);
    let mut ctx = Ctx::new(mode, job.seed);
    let n = job.n;
    let start = Instant::now();
    let mut out = Outcome::default();
    let divergence = match job.algo {
        Algo::Listcontract | Algo::Wyllie => {
            if n == 0 {
                return Err("list algorithms need --n >= 1".into());
            }
            let list = random_list(&mut gen, n, PrioritySource::Permutation);
            let got = if job.algo == Algo::Listcontract {
                list_rank(&mut ctx, &list)
            } else {
                wyllie_rank(&mut ctx, &list)
            }
            .map_err(|e| e.to_string())?;
            stamp(&mut out, start);
            job.verify.then(|| ranks_divergence(&list, &got)).flatten()
        }
        Algo::Sort => {
            let a = random_values(&mut gen, n, u64::MAX);
            let got = sample_sort(&mut ctx, &a);
            stamp(&mut out, start);
            job.verify
                .then(|| {
                    let mut want = a.clone();
                    want.sort_unstable();
                    first_divergence(&want, &got)
                })
                .flatten()
        }
        Algo::Semisort => {
            let a = random_values(&mut gen, n, (n as u64 / 4).max(1));
            let got = semisort(&mut ctx, &a);
            stamp(&mut out, start);
            job.verify.then(|| check_semisorted(&a, &got)).flatten()
        }
        Algo::Randperm => {
            let h = SwapTargets::random(&mut gen, n);
            let values: Vec<usize> = (0..n).collect();
            let got = shuffle_with_targets(&mut ctx, &values, &h).map_err(|e| e.to_string())?;
            stamp(&mut out, start);
            job.verify
                .then(|| first_divergence(&knuth_shuffle_seq(&values, &h).expect("lengths match"), &got))
                .flatten()
        }
        Algo::Rmq => {
            if n == 0 {
                return Err("rmq needs --n >= 1".into());
            }
            let a = random_values(&mut gen, n, u64::MAX);
            let mut rng = gen.rng().split();
            let qs: Vec<(usize, usize)> = (0..job.queries)
                .map(|_| {
                    let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    (i.min(j), i.max(j))
                })
                .collect();
            let rmq = build_chunked(&mut ctx, &a);
            let got = ctx.tabulate(qs.len(), &|c, k| rmq.query_in(c, qs[k].0, qs[k].1).expect("query in range"));
            stamp(&mut out, start);
            job.verify
                .then(|| {
                    let want: Vec<u64> = qs.iter().map(|&(i, j)| *a[i..=j].iter().min().unwrap()).collect();
                    first_divergence(&want, &got).map(|d| format!("query {d}"))
                })
                .flatten()
        }
        Algo::Treecontract => {
            if n == 0 {
                return Err("treecontract needs --n >= 1 leaves".into());
            }
            let tree = BinTree::random(&mut gen, n);
            let got = tree_contract(&mut ctx, &tree).map_err(|e| e.to_string())?;
            stamp(&mut out, start);
            job.verify
                .then(|| {
                    let (pairs, survivor) = sequential_rake(&tree);
                    let mut want: Vec<(usize, usize)> = pairs;
                    let mut have: Vec<(usize, usize)> = got.log.iter().map(|e| (e.leaf, e.node)).collect();
                    want.sort_unstable();
                    have.sort_unstable();
                    if got.survivor != survivor {
                        Some(format!("survivor: expected {survivor}, got {}", got.survivor))
                    } else if got.violations > 0 {
                        Some(format!("{} rakes saw a lower label", got.violations))
                    } else {
                        first_divergence(&want, &have).map(|d| format!("rake pairs {d}"))
                    }
                })
                .flatten()
        }
        Algo::Setops => {
            let universe = 4 * (n + job.m) as u64;
            let large = random_values(&mut gen, n, universe);
            let small = random_values(&mut gen, job.m, universe);
            let (ta, tb) = (WbbTree::from_keys(large.iter().copied()), WbbTree::from_keys(small.iter().copied()));
            let bal = Balance::new(job.alpha);
            let stats = SetStats::default();
            let got = set_operation(&mut ctx, &ta, &tb, job.op.op(), bal, &stats);
            stamp(&mut out, start);
            out.comparisons = Some(stats.comparisons());
            job.verify.then(|| check_setop(&ta, &tb, job.op.op(), bal, &stats, &got)).flatten()
        }
    };
    if matches!(mode, Mode::Instrumented) {
        let t = ctx.trace();
        out.work = Some(t.work);
        out.span = Some(t.span);
        out.wall_ns = None;
    }
    out.divergence = divergence;
    Ok(out)
}

fn stamp(out: &mut Outcome, start: Instant) {
    out.wall_ns = Some(start.elapsed().as_nanos() as u64);
}

fn check_setop(
    a: &WbbTree<u64>,
    b: &WbbTree<u64>,
    op: SetOp,
    bal: Balance,
    stats: &SetStats,
    got: &WbbTree<u64>,
) -> Option<String> {
    let (l, s) = if a.len() >= b.len() { (a.to_vec(), b.to_vec()) } else { (b.to_vec(), a.to_vec()) };
    let mut want: Vec<u64> = l.iter().chain(&s).copied().collect();
    want.sort_unstable();
    want.dedup();
    want.retain(|x| op.keeps(l.binary_search(x).is_ok(), s.binary_search(x).is_ok()));
    if let Some(d) = first_divergence(&want, &got.to_vec()) {
        return Some(d);
    }
    if let Err(e) = got.validate(bal) {
        return Some(format!("output not weight balanced: {e}"));
    }
    if op == SetOp::Union && stats.reconstructions() > 0 {
        return Some(format!("union rebuilt {} subtrees", stats.reconstructions()));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_messages() {
        assert_eq!(first_divergence(&[1, 2, 3], &[1, 2, 3]), None);
        assert_eq!(first_divergence(&[1, 2, 3], &[1, 5, 3]).unwrap(), "index 1: expected 2, got 5");
        assert!(first_divergence(&[1, 2], &[1, 2, 3]).unwrap().starts_with("length"));
    }

    #[test]
    fn semisort_checker() {
        assert_eq!(check_semisorted(&[3, 1, 3, 2], &[3, 3, 1, 2]), None);
        assert!(check_semisorted(&[3, 1, 3, 2], &[3, 1, 3, 2]).unwrap().contains("split"));
        assert!(check_semisorted(&[3, 1, 3, 2], &[3, 3, 1, 1]).unwrap().contains("permutation"));
        assert!(check_semisorted(&[1, 2, 1], &[1, 2, 1]).is_some());
    }

    #[test]
    fn every_algorithm_verifies_in_every_mode() {
        let modes = [Mode::Instrumented, Mode::Parallel, Mode::Simulate { seed: 4, procs: 3 }];
        for algo in [
            Algo::Listcontract,
            Algo::Wyllie,
            Algo::Sort,
            Algo::Semisort,
            Algo::Randperm,
            Algo::Rmq,
            Algo::Treecontract,
            Algo::Setops,
        ] {
            for mode in modes {
                let job = Job {
                    algo,
                    n: 3000,
                    m: 200,
                    queries: 100,
                    seed: 9,
                    op: OpName::Intersection,
                    alpha: 0.25,
                    verify: true,
                };
                let out = run(&job, mode).unwrap();
                assert_eq!(out.divergence, None, "{algo:?} {mode:?}");
                assert_eq!(out.work.is_some(), mode == Mode::Instrumented);
            }
        }
    }
}
