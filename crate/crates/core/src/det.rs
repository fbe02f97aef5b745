//! Exact determinants of sign matrices and the modular singularity screen.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{det_of_i64_rows, with_fallback};
use crate::seed::{Seed, SETUP_STREAM};
use crate::sign::SignMatrix;

/// Largest n for which the unchecked i64 kernel is safe: every intermediate
/// Bareiss numerator is a difference of two products of minors, bounded by
/// 2·n^n via Hadamard, and 2·15^15 < 2^63.
pub const SMALL_DET_MAX_N: usize = 15;

/// Exact determinant by fraction-free elimination.
pub fn det_exact(m: &SignMatrix) -> BigInt {
    let n = m.dim();
    if n <= SMALL_DET_MAX_N {
        return BigInt::from(det_small(&m.row_bits(), n));
    }
    let rows = m.to_i64_rows();
    with_fallback(|ring| det_of_i64_rows(&rows, ring))
}

/// Same as [`det_exact`] but always on unbounded integers.
pub fn det_exact_unbounded(m: &SignMatrix) -> BigInt {
    det_of_i64_rows(&m.to_i64_rows(), crate::exact::Ring::Big).expect("BigInt path")
}

/// Bareiss on a stack matrix for n ≤ [`SMALL_DET_MAX_N`], rows given as bit patterns.
pub fn det_small(rows: &[u64], n: usize) -> i64 {
    assert!((1..=SMALL_DET_MAX_N).contains(&n) && rows.len() == n);
    let mut a = [[0i64; SMALL_DET_MAX_N]; SMALL_DET_MAX_N];
    for (i, &r) in rows.iter().enumerate() {
        for (j, slot) in a[i].iter_mut().take(n).enumerate() {
            *slot = 1 - 2 * ((r >> j & 1) as i64);
        }
    }
    let mut negate = false;
    let mut prev = 1i64;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    negate = !negate;
                }
                None => return 0,
            }
        }
        let pivot = a[k][k];
        for i in k + 1..n {
            let lead = a[i][k];
            for j in k + 1..n {
                a[i][j] = (a[i][j] * pivot - lead * a[k][j]) / prev;
            }
        }
        prev = pivot;
    }
    if negate {
        -a[n - 1][n - 1]
    } else {
        a[n - 1][n - 1]
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &b in &BASES {
        let mut x = pow_mod(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Inverse of a nonzero residue modulo a prime, by the extended Euclidean algorithm.
fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i64, a as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    t0.rem_euclid(p as i64) as u64
}

/// Determinant modulo an odd prime `p < 2^32`, rows given as bit patterns.
pub fn det_mod_p(rows: &[u64], n: usize, p: u64) -> u64 {
    assert!(p < 1 << 32);
    let minus_one = p - 1;
    let mut a: Vec<u64> = Vec::with_capacity(n * n);
    for &r in rows {
        a.extend((0..n).map(|j| if r >> j & 1 == 1 { minus_one } else { 1 }));
    }
    let mut det = 1u64;
    for k in 0..n {
        let Some(piv) = (k..n).find(|&r| a[r * n + k] != 0) else {
            return 0;
        };
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = (p - det) % p;
        }
        let pivot = a[k * n + k];
        det = det * pivot % p;
        let inv = inv_mod(pivot, p);
        let (top, rest) = a.split_at_mut((k + 1) * n);
        let pivot_row = &top[k * n..];
        for row in rest.chunks_exact_mut(n) {
            let lead = row[k];
            if lead == 0 {
                continue;
            }
            let factor = lead * inv % p;
            for j in k + 1..n {
                let sub = factor * pivot_row[j] % p;
                let v = row[j];
                row[j] = if v >= sub { v - sub } else { v + p - sub };
            }
        }
    }
    det
}

/// Rank over GF(p) of vectors given as bit patterns of length `dim`.
pub fn rank_mod_p(rows: &[u64], dim: usize, p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = rows
        .iter()
        .map(|&r| (0..dim).map(|j| if r >> j & 1 == 1 { p - 1 } else { 1 }).collect())
        .collect();
    let mut rank = 0;
    for col in 0..dim {
        let Some(piv) = (rank..a.len()).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = inv_mod(a[rank][col], p);
        for i in rank + 1..a.len() {
            let factor = a[i][col] * inv % p;
            if factor == 0 {
                continue;
            }
            for j in col..dim {
                let sub = factor * a[rank][j] % p;
                a[i][j] = (a[i][j] + p - sub) % p;
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// Primes used to screen for nonsingularity before the exact fallback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeScreen {
    primes: Vec<u64>,
}

pub const SCREEN_PRIME_COUNT: usize = 3;
const SCREEN_LO: u64 = 1 << 30;
const SCREEN_HI: u64 = 1 << 31;

impl PrimeScreen {
    pub fn new(primes: Vec<u64>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidArgument("prime screen needs at least one prime".into()));
        }
        for (i, &p) in primes.iter().enumerate() {
            if p == 2 || p >= 1 << 32 || !is_prime(p) {
                return Err(Error::InvalidArgument(format!(
                    "{p} is not an odd prime below 2^32"
                )));
            }
            if primes[..i].contains(&p) {
                return Err(Error::InvalidArgument(format!("prime {p} repeated")));
            }
        }
        Ok(PrimeScreen { primes })
    }

    /// Three distinct primes from [2^30, 2^31), drawn from the seed's setup stream.
    pub fn draw(seed: Seed) -> Self {
        let mut rng = seed.stream(SETUP_STREAM);
        let mut primes = Vec::with_capacity(SCREEN_PRIME_COUNT);
        while primes.len() < SCREEN_PRIME_COUNT {
            let candidate = rng.gen_range(SCREEN_LO..SCREEN_HI) | 1;
            if is_prime(candidate) && !primes.contains(&candidate) {
                primes.push(candidate);
            }
        }
        PrimeScreen { primes }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Exact singularity test on row bit patterns.
    pub fn is_singular_bits(&self, rows: &[u64], n: usize) -> bool {
        debug_assert!(self.primes.iter().all(|&p| p > 2 * n as u64));
        if self.primes.iter().any(|&p| det_mod_p(rows, n, p) != 0) {
            return false;
        }
        if n <= SMALL_DET_MAX_N {
            det_small(rows, n) == 0
        } else {
            let m = SignMatrix::from_row_bits(rows).expect("valid rows");
            det_exact(&m).is_zero()
        }
    }
}

/// Exact singularity: any nonzero residue proves det ≠ 0; otherwise the exact
/// determinant decides.
pub fn is_singular_fast(m: &SignMatrix, screen: &PrimeScreen) -> Result<bool> {
    let n = m.dim();
    if let Some(&p) = screen.primes.iter().find(|&&p| p <= 2 * n as u64) {
        return Err(Error::InvalidArgument(format!("screen prime {p} must exceed 2n = {}", 2 * n)));
    }
    Ok(screen.is_singular_bits(&m.row_bits(), n))
}
