//! Hyperplane concentration M(H) = #{x ∈ {±1}ⁿ : a·x = 0} and P(H) = M(H)/2ⁿ.
//!
//! Three independent routes compute the same number:
//! * `atom_spectrum`: dynamic programming over the full distribution of a·x,
//! * `count_mitm`: meet-in-the-middle over sorted half-sums, exact for any
//!   coefficient size,
//! * `fourier_probability`: discrete inversion of the characteristic function
//!   Π_j cos(2π i a_j / Q), exact in exact arithmetic once Q exceeds Σ|a_j|.

use std::f64::consts::TAU;
use std::ops::Neg;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::normal::NormalVector;

/// Probability tolerance for Fourier inversion at Q ≤ 10⁷.
pub const FOURIER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Dp,
    Mitm,
    Fourier,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Dp => "dp",
            Method::Mitm => "mitm",
            Method::Fourier => "fourier",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "dp" => Ok(Method::Dp),
            "mitm" => Ok(Method::Mitm),
            "fourier" => Ok(Method::Fourier),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub normal: NormalVector,
    /// M(H); absent for the floating-point Fourier route.
    pub m_count: Option<u128>,
    /// M(H)/2ⁿ, reduced; absent for Fourier.
    pub probability: Option<BigRational>,
    pub prob_float: f64,
    /// The method actually used (never `Auto`).
    pub method: Method,
    pub modulus: Option<u64>,
    pub seconds: f64,
}

/// M/2ⁿ as a reduced fraction.
pub fn count_to_probability(m: u128, n: usize) -> BigRational {
    BigRational::new(BigInt::from(m), BigInt::from(1u8) << n)
}

pub fn count_to_f64(m: u128, n: usize) -> f64 {
    m as f64 * (-(n as f64)).exp2()
}

/// Distribution of s = Σ a_j x_j over the 2ⁿ sign vectors x.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomSpectrum {
    n: usize,
    /// Σ|a_j|; `counts[k]` is the multiplicity of s = k − reach.
    reach: i64,
    counts: Vec<u128>,
}

impl AtomSpectrum {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn reach(&self) -> i64 {
        self.reach
    }

    pub fn count_at(&self, s: i64) -> u128 {
        if s.abs() > self.reach {
            return 0;
        }
        self.counts[(s + self.reach) as usize]
    }

    /// Attainable sums with their multiplicities, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u128)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(k, &c)| (k as i64 - self.reach, c))
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> u128 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Σ_s count_s², the number of pairs (x, x') with a·x = a·x'.
    pub fn collision_count(&self) -> BigInt {
        self.counts.iter().map(|&c| BigInt::from(c) * c).sum()
    }
}

fn small_coeffs(a: &NormalVector, cap: u64, what: &'static str) -> Result<(Vec<i64>, i64)> {
    let sum = a.abs_sum();
    match sum.to_u64() {
        Some(s) if s <= cap => {
            let coeffs = a.to_i64().expect("bounded by the sum");
            Ok((coeffs, s as i64))
        }
        _ => Err(Error::limit(what, sum, cap)),
    }
}

/// Exact distribution of a·x by dynamic programming over prefix sums.
pub fn atom_spectrum(a: &NormalVector, limits: &Limits) -> Result<AtomSpectrum> {
    let (coeffs, reach) = small_coeffs(a, limits.dp_sum_cap, "Σ|a_j| for dynamic programming")?;
    let width = 2 * reach as usize + 1;
    let mut counts = vec![0u128; width];
    let mut next = vec![0u128; width];
    counts[reach as usize] = 1;
    let mut partial = 0usize;
    for &c in &coeffs {
        let c = c.unsigned_abs() as usize;
        let lo = reach as usize - partial;
        let hi = reach as usize + partial;
        let new_partial = partial + c;
        for v in &mut next[reach as usize - new_partial..=reach as usize + new_partial] {
            *v = 0;
        }
        for k in lo..=hi {
            let v = counts[k];
            if v != 0 {
                next[k + c] += v;
                next[k - c] += v;
            }
        }
        std::mem::swap(&mut counts, &mut next);
        partial = new_partial;
    }
    Ok(AtomSpectrum {
        n: coeffs.len(),
        reach,
        counts,
    })
}

/// The sums Σ a_j x_j over all sign patterns of `coeffs`, in mask order.
fn half_sums<T>(coeffs: &[T]) -> Vec<T>
where
    T: Clone + Zero + for<'a> std::ops::Sub<&'a T, Output = T>,
    for<'a> &'a T: std::ops::Add<&'a T, Output = T>,
{
    let base: T = coeffs.iter().fold(T::zero(), |acc, c| &acc + c);
    let twice: Vec<T> = coeffs.iter().map(|c| c + c).collect();
    let mut sums = Vec::with_capacity(1 << coeffs.len());
    sums.push(base);
    for mask in 1usize..1 << coeffs.len() {
        let low = mask.trailing_zeros() as usize;
        let prev = sums[mask & (mask - 1)].clone();
        sums.push(prev - &twice[low]);
    }
    sums
}

/// Number of pairs (u, v) with u + v = 0, by sorting and a run-length merge.
fn count_zero_pairs<T: Ord + Clone + Neg<Output = T>>(mut left: Vec<T>, right: Vec<T>) -> u128 {
    let mut neg: Vec<T> = right.into_iter().map(Neg::neg).collect();
    left.sort_unstable();
    neg.sort_unstable();
    let (mut i, mut j, mut total) = (0, 0, 0u128);
    while i < left.len() && j < neg.len() {
        match left[i].cmp(&neg[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let v = &left[i];
                let run_l = left[i..].iter().take_while(|x| *x == v).count();
                let run_r = neg[j..].iter().take_while(|x| *x == v).count();
                total += run_l as u128 * run_r as u128;
                i += run_l;
                j += run_r;
            }
        }
    }
    total
}

fn mitm_in<T>(coeffs: Vec<T>) -> u128
where
    T: Ord + Clone + Zero + Neg<Output = T> + for<'a> std::ops::Sub<&'a T, Output = T>,
    for<'a> &'a T: std::ops::Add<&'a T, Output = T>,
{
    let split = coeffs.len().div_ceil(2);
    let left = half_sums(&coeffs[..split]);
    let right = half_sums(&coeffs[split..]);
    count_zero_pairs(left, right)
}

/// M(H) by meet in the middle over the two coordinate halves.
pub fn count_mitm(a: &NormalVector, limits: &Limits) -> Result<u128> {
    let n = a.dim();
    if n > limits.mitm_max_n {
        return Err(Error::limit("dimension for meet-in-the-middle", n, limits.mitm_max_n));
    }
    // Half-sums are bounded by Σ|a_j|; pick the narrowest type that holds them.
    let bound = a.abs_sum();
    if bound < BigInt::from(1u64 << 62) {
        Ok(mitm_in(a.to_i64().expect("bounded")))
    } else if bound < BigInt::from(1u128 << 126) {
        Ok(mitm_in(a.coeffs().iter().map(|c| c.to_i128().expect("bounded")).collect()))
    } else {
        Ok(mitm_in(a.coeffs().to_vec()))
    }
}

/// Q = Σ|a_j| + 1, the least modulus under which the only attainable multiple
/// of Q is 0.
pub fn choose_modulus(a: &NormalVector) -> BigInt {
    a.abs_sum() + 1
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Residues r_j = a_j mod q for the nonzero coefficients.
pub(crate) fn residues(a: &NormalVector, q: u64) -> Vec<u64> {
    let qb = BigInt::from(q);
    a.coeffs()
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| c.mod_floor(&qb).to_u64().expect("below q"))
        .collect()
}

const RESIDUE_CHUNK: u64 = 4096;
const COS_TABLE_MAX: u64 = 1 << 22;

/// cos(2π k / q) for k in 0..q, tabulated when q is small enough.
pub(crate) struct UnitCosine {
    q: u64,
    table: Option<Vec<f64>>,
}

impl UnitCosine {
    pub(crate) fn new(q: u64) -> Self {
        let table = (q <= COS_TABLE_MAX).then(|| (0..q).map(|k| Self::direct(k, q)).collect());
        UnitCosine { q, table }
    }

    fn direct(k: u64, q: u64) -> f64 {
        (TAU * k as f64 / q as f64).cos()
    }

    #[inline]
    pub(crate) fn at(&self, k: u64) -> f64 {
        match &self.table {
            Some(t) => t[k as usize],
            None => Self::direct(k, self.q),
        }
    }
}

/// (1/q) Σ_{i=0}^{q−1} term(i), summed in fixed residue chunks with
/// compensated partial sums so the result does not depend on the worker count.
pub(crate) fn residue_average<F>(q: u64, term: F) -> f64
where
    F: Fn(u64, u64) -> CompensatedSum + Sync,
{
    let ranges = crate::parallel::chunks(0, q, RESIDUE_CHUNK);
    let partials: Vec<CompensatedSum> = ranges.par_iter().map(|&(lo, hi)| term(lo, hi)).collect();
    let mut total = CompensatedSum::default();
    for p in partials {
        total.add(p.sum);
        total.add(p.comp);
    }
    total.value() / q as f64
}

/// (1/Q) Σ_{i=0}^{Q−1} Π_j cos(2π i a_j / Q).
pub fn fourier_probability(a: &NormalVector, q: u64, limits: &Limits) -> Result<f64> {
    let reach = a.abs_sum();
    if BigInt::from(q) <= reach {
        return Err(Error::Alias {
            q,
            reach: reach.to_string(),
        });
    }
    if q > limits.fourier_q_cap {
        return Err(Error::limit("Fourier modulus", q, limits.fourier_q_cap));
    }
    let r = residues(a, q);
    let cosine = UnitCosine::new(q);
    Ok(residue_average(q, |lo, hi| {
        let mut phase: Vec<u64> = r.iter().map(|&rj| ((lo as u128 * rj as u128) % q as u128) as u64).collect();
        let mut acc = CompensatedSum::default();
        for _ in lo..hi {
            let mut prod = 1.0;
            for (p, &rj) in phase.iter_mut().zip(&r) {
                prod *= cosine.at(*p);
                *p += rj;
                if *p >= q {
                    *p -= q;
                }
            }
            acc.add(prod);
        }
        acc
    }))
}

/// Exact M(H) by the cheapest exact route available.
pub fn zero_atom_count(a: &NormalVector, limits: &Limits) -> Result<(u128, Method)> {
    let small = a.abs_sum().to_u64().is_some_and(|s| s <= limits.dp_sum_cap);
    if small && a.dim() > 24 {
        Ok((atom_spectrum(a, limits)?.count_at(0), Method::Dp))
    } else if a.dim() <= limits.mitm_max_n {
        Ok((count_mitm(a, limits)?, Method::Mitm))
    } else {
        Ok((atom_spectrum(a, limits)?.count_at(0), Method::Dp))
    }
}

/// P(H) by the requested method. `modulus` overrides Q for Fourier only.
pub fn concentration(
    a: &NormalVector,
    method: Method,
    modulus: Option<u64>,
    limits: &Limits,
) -> Result<ConcentrationResult> {
    let started = Instant::now();
    let n = a.dim();
    let resolved = match method {
        Method::Auto => {
            let small = a.abs_sum().to_u64().is_some_and(|s| s <= limits.dp_sum_cap);
            if small {
                Method::Dp
            } else {
                Method::Mitm
            }
        }
        m => m,
    };
    let (m_count, prob_float, q) = match resolved {
        Method::Dp => {
            let m = atom_spectrum(a, limits)?.count_at(0);
            (Some(m), count_to_f64(m, n), None)
        }
        Method::Mitm => {
            let m = count_mitm(a, limits)?;
            (Some(m), count_to_f64(m, n), None)
        }
        Method::Fourier => {
            let q = match modulus {
                Some(q) => q,
                None => {
                    let q = choose_modulus(a);
                    q.to_u64()
                        .filter(|&q| q <= limits.fourier_q_cap)
                        .ok_or_else(|| Error::limit("Fourier modulus", &q, limits.fourier_q_cap))?
                }
            };
            (None, fourier_probability(a, q, limits)?, Some(q))
        }
        Method::Auto => unreachable!(),
    };
    Ok(ConcentrationResult {
        normal: a.clone(),
        m_count,
        probability: m_count.map(|m| count_to_probability(m, n)),
        prob_float,
        method: resolved,
        modulus: q,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Erdős–Littlewood–Offord ceiling C(n, ⌊n/2⌋)/2ⁿ on P(H) for all-nonzero a.
pub fn elo_ceiling(n: usize) -> BigRational {
    let k = n / 2;
    let binom = (0..k).fold(BigInt::from(1u8), |acc, i| acc * (n - i) / (i + 1));
    BigRational::new(binom, BigInt::from(1u8) << n)
}
