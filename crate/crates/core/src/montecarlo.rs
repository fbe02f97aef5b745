//! Monte Carlo estimation of P_n with exact per-trial singularity tests.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det::PrimeScreen;
use crate::error::{Error, Result};
use crate::parallel::{chunks, with_threads};
use crate::seed::Seed;
use crate::sign::{has_parallel_pair_bits, low_mask};

pub const MAX_MC_DIM: usize = 40;
pub const MAX_PAIR_DIM: usize = 24;
/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;
/// Minimum expected singular hits before a series row is trusted.
pub const MIN_EXPECTED_HITS: f64 = 100.0;
const TRIAL_CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: usize,
    pub trials: u64,
    pub singular_hits: u64,
    /// Trials with two rows or two columns equal up to sign.
    pub dependent_pair_hits: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// −log₂(p̂)/n; +∞ when no hit was seen.
    pub exponent: f64,
    pub seed: u64,
    pub primes: Vec<u64>,
    pub seconds: f64,
}

impl McEstimate {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_hi - self.ci_lo) / 2.0
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

/// Wilson score interval for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials);
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

#[derive(Debug, Clone, Copy, Default)]
struct Hits {
    singular: u64,
    pairs: u64,
}

fn run_trials(n: usize, lo: u64, hi: u64, rng: &mut impl RngCore, screen: &PrimeScreen) -> Hits {
    let mask = low_mask(n);
    let mut rows = [0u64; MAX_MC_DIM];
    let rows = &mut rows[..n];
    let mut hits = Hits::default();
    for _ in lo..hi {
        for r in rows.iter_mut() {
            *r = rng.next_u64() & mask;
        }
        // A parallel pair forces singularity, so it is only checked on singular draws.
        if screen.is_singular_bits(rows, n) {
            hits.singular += 1;
            if has_parallel_pair_bits(rows) {
                hits.pairs += 1;
            }
        }
    }
    hits
}

/// P̂_n from `trials` uniform matrices. Chunk c of the trials draws from
/// stream c of `seed`, so the result is independent of `threads`.
pub fn estimate_pn(n: usize, trials: u64, seed: Seed, threads: usize) -> Result<McEstimate> {
    if !(1..=MAX_MC_DIM).contains(&n) {
        return Err(Error::limit("Monte Carlo dimension", n, MAX_MC_DIM));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let started = Instant::now();
    let screen = PrimeScreen::draw(seed);
    let ranges = chunks(0, trials, TRIAL_CHUNK);
    let hits = with_threads(threads, || {
        ranges
            .par_iter()
            .enumerate()
            .map(|(c, &(lo, hi))| run_trials(n, lo, hi, &mut seed.stream(c as u64), &screen))
            .reduce(Hits::default, |a, b| Hits {
                singular: a.singular + b.singular,
                pairs: a.pairs + b.pairs,
            })
    });
    let p_hat = hits.singular as f64 / trials as f64;
    let (ci_lo, ci_hi) = wilson_interval(hits.singular, trials, Z_99);
    Ok(McEstimate {
        n,
        trials,
        singular_hits: hits.singular,
        dependent_pair_hits: hits.pairs,
        p_hat,
        ci_lo,
        ci_hi,
        exponent: -p_hat.log2() / n as f64,
        seed: seed.master,
        primes: screen.primes().to_vec(),
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Signed Stirling numbers of the first kind s(n, 0..=n).
fn stirling_first_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for m in 0..n {
        let mut next = vec![BigInt::zero(); m + 2];
        for (k, v) in row.iter().enumerate() {
            next[k + 1] += v;
            next[k] -= v * m;
        }
        row = next;
    }
    row
}

fn falling_factorial(x: &BigInt, m: usize) -> BigInt {
    (0..m).fold(BigInt::one(), |acc, i| acc * (x - i))
}

/// Exact probability that two rows or two columns are equal up to sign.
///
/// Row and column sign flips preserve the event, so it suffices to count the
/// (n−1)×(n−1) 0/1 matrices B for which [0; B] has distinct rows and [0 | B]
/// has distinct columns. Möbius inversion over the partition lattice of the n
/// columns (weights s(n, j)) gives that count as Σ_j s(n, j)·(2^{j−1} − 1)_{n−1}.
pub fn dependent_pair_probability(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if n > MAX_PAIR_DIM {
        return Err(Error::limit("dependent-pair dimension", n, MAX_PAIR_DIM));
    }
    let stirling = stirling_first_row(n);
    let clean: BigInt = (1..=n)
        .map(|j| &stirling[j] * falling_factorial(&((BigInt::one() << (j - 1)) - 1), n - 1))
        .sum();
    let clean_matrices = clean << (2 * n - 1);
    let total = BigInt::one() << (n * n);
    Ok(BigRational::new(&total - clean_matrices, total))
}

/// n²·2^{1−n}, the conjectured leading term of P_n.
pub fn conjectured_bound(n: usize) -> f64 {
    (n * n) as f64 * (1.0 - n as f64).exp2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub estimate: McEstimate,
    pub bound: f64,
    pub ratio_to_bound: f64,
    /// trials × (a certified lower bound on P_n).
    pub expected_hits: f64,
    pub guard_ok: bool,
}

/// Estimates for each n; row n uses the child seed `seed.derive(n)`.
pub fn exponent_series(n_list: &[usize], trials: u64, seed: Seed, threads: usize) -> Result<Vec<SeriesRow>> {
    n_list
        .iter()
        .map(|&n| {
            let estimate = estimate_pn(n, trials, seed.derive(n as u64), threads)?;
            let lower = if n <= MAX_PAIR_DIM {
                dependent_pair_probability(n)?.to_f64().unwrap_or(0.0)
            } else {
                conjectured_bound(n)
            };
            let expected_hits = trials as f64 * lower;
            let bound = conjectured_bound(n);
            Ok(SeriesRow {
                ratio_to_bound: estimate.p_hat / bound,
                bound,
                expected_hits,
                guard_ok: expected_hits >= MIN_EXPECTED_HITS,
                estimate,
            })
        })
        .collect()
}

/// Adjacent exponents never drop by more than twice the larger CI half-width
/// (converted to exponent units through the delta method).
pub fn exponent_nondecreasing(rows: &[SeriesRow]) -> bool {
    let slack = |e: &McEstimate| {
        if e.p_hat > 0.0 {
            2.0 * e.ci_half_width() / (e.p_hat * std::f64::consts::LN_2 * e.n as f64)
        } else {
            f64::INFINITY
        }
    };
    rows.windows(2).all(|w| {
        let (a, b) = (&w[0].estimate, &w[1].estimate);
        b.exponent >= a.exponent - slack(a).max(slack(b))
    })
}
