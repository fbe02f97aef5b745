//! The lazy-walk smoothing T(H) of hyperplane concentration.
//!
//! With step law p_k on {−s..s}, the factor Σ_k p_k cos(2π k i a_j / Q) is the
//! characteristic function of a_j·y_j, so T(H) = (1/Q) Σ_i Π_j factor is the
//! probability that Σ a_j y_j = 0. For the default law (1/4, 1/2, 1/4) a lazy
//! step is half the sum of two independent ±1 steps, hence T(H) is the
//! collision probability Σ_s (q_s/2ⁿ)² of the ±1 walk and P(H)² ≤ T(H).

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{
    atom_spectrum, count_to_f64, count_to_probability, residue_average, residues, zero_atom_count,
    CompensatedSum, UnitCosine,
};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::normal::NormalVector;

/// Slack for floating comparisons against exact identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Symmetric step law with p₀ = 1/2 ≥ p_k, stored as p₀, p₁, …, p_s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LazyDistribution {
    half: Vec<BigRational>,
}

impl LazyDistribution {
    pub fn new(half: Vec<BigRational>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let one_half = BigRational::new(1.into(), 2.into());
        if half.len() < 2 {
            return bad("a lazy distribution needs p0 and at least p1".into());
        }
        if half[0] != one_half {
            return bad(format!("p0 must be 1/2, got {}", half[0]));
        }
        if let Some((k, p)) = half.iter().enumerate().find(|(_, p)| p.is_negative() || **p > one_half) {
            return bad(format!("p{k} = {p} must lie in [0, p0]"));
        }
        let total = &half[0] + half[1..].iter().sum::<BigRational>() * BigRational::from_integer(2.into());
        if !total.is_one() {
            return bad(format!("p0 + 2·Σ p_k = {total}, not 1"));
        }
        if half.last().is_some_and(Zero::is_zero) {
            return bad("trailing p_s must be nonzero".into());
        }
        Ok(LazyDistribution { half })
    }

    /// Parses `p0,p1,...` where each entry is a decimal (`0.25`) or a fraction (`1/4`).
    pub fn parse(text: &str) -> Result<Self> {
        let half = text
            .split(',')
            .map(|t| parse_exact(t.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(half)
    }

    /// Support radius s.
    pub fn radius(&self) -> usize {
        self.half.len() - 1
    }

    /// p_k for k ≥ 0.
    pub fn p(&self, k: usize) -> &BigRational {
        &self.half[k]
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }

    fn floats(&self) -> Vec<f64> {
        self.half.iter().map(|p| p.to_f64().expect("finite")).collect()
    }

    /// Integer weights w_k and common denominator D with p_k = w_k / D.
    fn integer_weights(&self) -> (Vec<BigUint>, BigUint) {
        let d = self
            .half
            .iter()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let w = self
            .half
            .iter()
            .map(|p| (p.numer() * (&d / p.denom())).to_biguint().expect("nonnegative"))
            .collect();
        (w, d.to_biguint().expect("positive"))
    }
}

impl Default for LazyDistribution {
    /// p₀ = 1/2, p_{±1} = 1/4.
    fn default() -> Self {
        LazyDistribution {
            half: vec![
                BigRational::new(1.into(), 2.into()),
                BigRational::new(1.into(), 4.into()),
            ],
        }
    }
}

impl std::fmt::Display for LazyDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.half.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

fn parse_exact(t: &str) -> Result<BigRational> {
    let err = || Error::InvalidArgument(format!("cannot parse probability {t:?}"));
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if int.is_empty() && frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().map_err(|_| err())?;
    Ok(BigRational::new(num, BigInt::from(10u8).pow(frac.len() as u32)))
}

/// Σ_k p_k cos(2π k i a_j / Q) over k ∈ {−s..s}.
pub fn t_factor(i: u64, a_j: i64, q: u64, dist: &LazyDistribution) -> f64 {
    assert!(q >= 1);
    let r = (a_j as i128).rem_euclid(q as i128) as u64;
    let phase = ((i as u128 * r as u128) % q as u128) as u64;
    factor_at(phase, q, &dist.floats(), &UnitCosine::new(q))
}

#[inline]
fn factor_at(phase: u64, q: u64, p: &[f64], cosine: &UnitCosine) -> f64 {
    let mut v = p[0];
    for (k, pk) in p.iter().enumerate().skip(1) {
        if *pk != 0.0 {
            v += 2.0 * pk * cosine.at(((k as u128 * phase as u128) % q as u128) as u64);
        }
    }
    v
}

/// Smallest alias-free modulus for the lazy walk: s·Σ|a_j| + 1.
pub fn smoothing_modulus(a: &NormalVector, dist: &LazyDistribution) -> BigInt {
    a.abs_sum() * dist.radius() + 1
}

/// T(H) = (1/Q) Σ_{i=0}^{Q−1} Π_j t_factor(i, a_j, Q).
pub fn t_of_hyperplane(a: &NormalVector, q: u64, dist: &LazyDistribution, limits: &Limits) -> Result<f64> {
    let reach = a.abs_sum() * dist.radius();
    if BigInt::from(q) <= reach {
        return Err(Error::Alias {
            q,
            reach: reach.to_string(),
        });
    }
    if q > limits.fourier_q_cap {
        return Err(Error::limit("smoothing modulus", q, limits.fourier_q_cap));
    }
    let r = residues(a, q);
    let p = dist.floats();
    let cosine = UnitCosine::new(q);
    Ok(residue_average(q, |lo, hi| {
        let mut phase: Vec<u64> = r.iter().map(|&rj| ((lo as u128 * rj as u128) % q as u128) as u64).collect();
        let mut acc = CompensatedSum::default();
        for _ in lo..hi {
            let mut prod = 1.0;
            for (ph, &rj) in phase.iter_mut().zip(&r) {
                prod *= factor_at(*ph, q, &p, &cosine);
                *ph += rj;
                if *ph >= q {
                    *ph -= q;
                }
            }
            acc.add(prod);
        }
        acc
    }))
}

trait Weight: Clone + Zero {
    fn from_big(v: &BigUint) -> Option<Self>;
    fn mul_add(&mut self, x: &Self, w: &Self) -> Option<()>;
    fn into_big(self) -> BigUint;
}

impl Weight for u128 {
    fn from_big(v: &BigUint) -> Option<Self> {
        v.to_u128()
    }
    fn mul_add(&mut self, x: &Self, w: &Self) -> Option<()> {
        *self = self.checked_add(x.checked_mul(*w)?)?;
        Some(())
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Weight for BigUint {
    fn from_big(v: &BigUint) -> Option<Self> {
        Some(v.clone())
    }
    fn mul_add(&mut self, x: &Self, w: &Self) -> Option<()> {
        *self += x * w;
        Some(())
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Weighted count of Σ a_j y_j = 0 with integer step weights; `None` on overflow.
fn weighted_zero_count<T: Weight>(coeffs: &[i64], weights: &[BigUint], reach: usize) -> Option<BigUint> {
    let w: Vec<T> = weights.iter().map(T::from_big).collect::<Option<_>>()?;
    let width = 2 * reach + 1;
    let mut cur = vec![T::zero(); width];
    cur[reach] = T::from_big(&BigUint::one())?;
    let mut partial = 0usize;
    let s = w.len() - 1;
    for &c in coeffs {
        let c = c.unsigned_abs() as usize;
        let mut next = vec![T::zero(); width];
        for x in reach - partial..=reach + partial {
            if cur[x].is_zero() {
                continue;
            }
            for k in 0..=s {
                if w[k].is_zero() {
                    continue;
                }
                next[x + k * c].mul_add(&cur[x], &w[k])?;
                if k > 0 {
                    next[x - k * c].mul_add(&cur[x], &w[k])?;
                }
            }
        }
        cur = next;
        partial += s * c;
    }
    Some(cur[reach].clone().into_big())
}

/// Exact probability that Σ a_j y_j = 0 for i.i.d. steps y_j with law `dist`.
pub fn lazy_walk_zero_atom(a: &NormalVector, dist: &LazyDistribution, limits: &Limits) -> Result<BigRational> {
    let reach = a.abs_sum() * dist.radius();
    let reach = reach
        .to_u64()
        .filter(|&r| r <= limits.dp_sum_cap)
        .ok_or_else(|| Error::limit("s·Σ|a_j| for the lazy-walk DP", &reach, limits.dp_sum_cap))?
        as usize;
    let coeffs = a.to_i64().expect("bounded by the reach");
    let (weights, denom) = dist.integer_weights();
    let count = weighted_zero_count::<u128>(&coeffs, &weights, reach)
        .or_else(|| weighted_zero_count::<BigUint>(&coeffs, &weights, reach))
        .expect("BigUint path cannot overflow");
    Ok(BigRational::new(
        BigInt::from(count),
        BigInt::from(denom.pow(coeffs.len() as u32)),
    ))
}

/// f(i) = Π_j ((1 + cos(2π i a_j / Q))/2)^{1/2}, i = 0..Q−1.
pub fn f_profile(a: &NormalVector, q: u64, limits: &Limits) -> Result<Vec<f64>> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if q > limits.profile_q_cap {
        return Err(Error::limit("profile modulus", q, limits.profile_q_cap));
    }
    let r = residues(a, q);
    let cosine = UnitCosine::new(q);
    Ok((0..q)
        .into_par_iter()
        .map(|i| {
            r.iter()
                .map(|&rj| {
                    let phase = ((i as u128 * rj as u128) % q as u128) as u64;
                    ((1.0 + cosine.at(phase)) / 2.0).clamp(0.0, 1.0).sqrt()
                })
                .product()
        })
        .collect())
}

/// Λ = {i : f(i) ≥ ε}.
pub fn lambda_set(profile: &[f64], epsilon: f64) -> Result<Vec<usize>> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("ε must be nonnegative, got {epsilon}")));
    }
    Ok(profile
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= epsilon)
        .map(|(i, _)| i)
        .collect())
}

/// ε = 2^{−n/4}.
pub fn default_epsilon(n: usize) -> f64 {
    (-(n as f64) / 4.0).exp2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub normal: NormalVector,
    pub n: usize,
    pub q: u64,
    pub epsilon: f64,
    pub p_of_h: BigRational,
    pub p_float: f64,
    pub t_of_h: f64,
    pub lambda_size: usize,
    /// (1/Q) Σ_{i∈Λ} f(i)
    pub restricted_sum: f64,
    /// (1/Q) Σ_i f(i)
    pub profile_sum: f64,
    /// (1/Q) Σ_{i∈Λ} f(i)², the default-kernel product restricted to Λ.
    pub restricted_square_sum: f64,
    pub c1_empirical: f64,
    pub c_empirical: f64,
    /// C·T(H) ≥ P(H) with C = C₁/ε.
    pub sandwich_ok_upper: bool,
    /// (1/Q)Σ_Λ f² ≥ ε·(1/Q)Σ_Λ f − tolerance.
    pub chain_ok: bool,
    /// P(H)² ≤ T(H) ≤ max_s q_s/2ⁿ; only for the default law with a tractable spectrum.
    pub collision_bounds_ok: Option<bool>,
    pub seconds: f64,
}

impl SmoothingReport {
    /// Every checkable lower-side relation holds.
    pub fn ok_lower_bounds(&self) -> bool {
        self.chain_ok && self.collision_bounds_ok.unwrap_or(true)
    }
}

/// Assembles P(H), T(H), the Λ-restricted profile sum and the empirical constants.
pub fn sandwich_report(
    a: &NormalVector,
    epsilon: Option<f64>,
    dist: &LazyDistribution,
    limits: &Limits,
) -> Result<SmoothingReport> {
    let started = Instant::now();
    let n = a.dim();
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(n));
    let q_big = smoothing_modulus(a, dist);
    let q = q_big
        .to_u64()
        .filter(|&q| q <= limits.profile_q_cap && q <= limits.fourier_q_cap)
        .ok_or_else(|| Error::limit("smoothing modulus", &q_big, limits.profile_q_cap.min(limits.fourier_q_cap)))?;
    let (m, _) = zero_atom_count(a, limits)?;
    if m == 0 {
        return Err(Error::DegenerateAtom);
    }
    let p_of_h = count_to_probability(m, n);
    let p_float = count_to_f64(m, n);
    let t_of_h = t_of_hyperplane(a, q, dist, limits)?;
    let profile = f_profile(a, q, limits)?;
    let lambda = lambda_set(&profile, epsilon)?;
    let average = |values: &mut dyn Iterator<Item = f64>| {
        let mut acc = CompensatedSum::default();
        values.for_each(|v| acc.add(v));
        acc.value() / q as f64
    };
    let restricted_sum = average(&mut lambda.iter().map(|&i| profile[i]));
    let restricted_square_sum = average(&mut lambda.iter().map(|&i| profile[i] * profile[i]));
    let profile_sum = average(&mut profile.iter().copied());
    let c1_empirical = (p_float / restricted_sum).max(restricted_sum / p_float);
    let c_empirical = c1_empirical / epsilon;
    let collision_bounds_ok = if dist.is_default() {
        atom_spectrum(a, limits).ok().map(|atoms| {
            let max_atom = count_to_f64(atoms.max_count(), n);
            p_float * p_float <= t_of_h + IDENTITY_TOLERANCE && t_of_h <= max_atom + IDENTITY_TOLERANCE
        })
    } else {
        None
    };
    Ok(SmoothingReport {
        normal: a.clone(),
        n,
        q,
        epsilon,
        p_of_h,
        p_float,
        t_of_h,
        lambda_size: lambda.len(),
        restricted_sum,
        profile_sum,
        restricted_square_sum,
        c1_empirical,
        c_empirical,
        sandwich_ok_upper: c_empirical * t_of_h >= p_float,
        chain_ok: restricted_square_sum >= epsilon * restricted_sum - IDENTITY_TOLERANCE,
        collision_bounds_ok,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Reports for many normals; degenerate atoms stay in the output as errors.
pub fn sandwich_batch(
    normals: &[NormalVector],
    epsilon: Option<f64>,
    dist: &LazyDistribution,
    limits: &Limits,
) -> Vec<Result<SmoothingReport>> {
    normals
        .par_iter()
        .map(|a| sandwich_report(a, epsilon, dist, limits))
        .collect()
}

/// Σ_s (q_s/2ⁿ)², exactly.
pub fn collision_probability(a: &NormalVector, limits: &Limits) -> Result<BigRational> {
    let atoms = atom_spectrum(a, limits)?;
    Ok(BigRational::new(
        atoms.collision_count(),
        BigInt::one() << (2 * a.dim()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn nv(c: &[i64]) -> NormalVector {
        NormalVector::from_i64(c).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn lim() -> Limits {
        Limits::default()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= IDENTITY_TOLERANCE
    }

    #[test]
    fn distribution_validation() {
        assert!(LazyDistribution::default().is_default());
        assert_eq!(LazyDistribution::parse("0.5,0.25").unwrap(), LazyDistribution::default());
        assert_eq!(LazyDistribution::parse("1/2, 1/4").unwrap(), LazyDistribution::default());
        let wide = LazyDistribution::parse("0.5,0,0.25").unwrap();
        assert_eq!(wide.radius(), 2);
        assert!(LazyDistribution::parse("0.4,0.3").is_err());
        assert!(LazyDistribution::parse("0.5,0.2").is_err());
        assert!(LazyDistribution::parse("0.5").is_err());
        assert!(LazyDistribution::parse("0.5,0.25,0").is_err());
        assert!(LazyDistribution::parse("0.5,x").is_err());
        assert!(LazyDistribution::parse("0.5,0.15,0.1").is_ok());
        assert_eq!(parse_exact("0.125").unwrap(), r(1, 8));
        assert_eq!(parse_exact(".5").unwrap(), r(1, 2));
    }

    #[test]
    fn t_factor_examples() {
        let d = LazyDistribution::default();
        assert_eq!(t_factor(0, 7, 11, &d), 1.0);
        assert_eq!(t_factor(0, 3, 5, &LazyDistribution::parse("0.5,0.15,0.1").unwrap()), 1.0);
        // 2π i a / Q = π
        assert!(t_factor(1, 2, 4, &d).abs() < 1e-15);
        let wide = LazyDistribution::parse("0.5,0,0.25").unwrap();
        // i·a = Q/4: 1/2 + (1/2)cos(π) = 0
        assert!(t_factor(1, 2, 8, &wide).abs() < 1e-15);
        assert!(t_factor(2, 1, 8, &wide).abs() < 1e-15);
    }

    #[test]
    fn lazy_walk_examples() {
        let d = LazyDistribution::default();
        // y1 + y2 = 0: 2·(1/4·1/4) + 1/2·1/2 = 6/16
        assert_eq!(lazy_walk_zero_atom(&nv(&[1, 1]), &d, &lim()).unwrap(), r(3, 8));
        assert_eq!(lazy_walk_zero_atom(&nv(&[1]), &d, &lim()).unwrap(), r(1, 2));
        assert_eq!(
            lazy_walk_zero_atom(&nv(&[1]), &LazyDistribution::parse("0.5,0.15,0.1").unwrap(), &lim()).unwrap(),
            r(1, 2)
        );
        // Collision identity: 1/16 + 1/4 + 1/16.
        assert_eq!(collision_probability(&nv(&[1, 1]), &lim()).unwrap(), r(3, 8));
        let tight = Limits { dp_sum_cap: 3, ..lim() };
        assert!(lazy_walk_zero_atom(&nv(&[2, 2, 1]), &d, &tight).is_err());
    }

    #[test]
    fn t_of_hyperplane_examples() {
        let d = LazyDistribution::default();
        let t = t_of_hyperplane(&nv(&[1, 1]), 3, &d, &lim()).unwrap();
        assert!(close(t, 0.375));
        let t = t_of_hyperplane(&nv(&[1]), 2, &LazyDistribution::parse("0.5,0.25").unwrap(), &lim()).unwrap();
        assert!(close(t, 0.5));
        let a = nv(&[1, 1, 1]);
        let exact = lazy_walk_zero_atom(&a, &d, &lim()).unwrap().to_f64().unwrap();
        assert!(close(t_of_hyperplane(&a, 4, &d, &lim()).unwrap(), exact));
        assert!(matches!(t_of_hyperplane(&a, 3, &d, &lim()), Err(Error::Alias { .. })));
        let wide = LazyDistribution::parse("0.5,0,0.25").unwrap();
        assert!(matches!(t_of_hyperplane(&a, 6, &wide, &lim()), Err(Error::Alias { .. })));
        assert!(t_of_hyperplane(&a, 7, &wide, &lim()).is_ok());
    }

    #[test]
    fn profile_and_lambda_examples() {
        let f = f_profile(&nv(&[1, 1]), 4, &lim()).unwrap();
        assert_eq!(f[0], 1.0);
        assert!(f[2].abs() < 1e-15);
        let f = f_profile(&nv(&[1, 1]), 3, &lim()).unwrap();
        assert!((f[1] - 0.25).abs() < 1e-15 && (f[2] - 0.25).abs() < 1e-15);
        assert_eq!(lambda_set(&f, 0.0).unwrap(), vec![0, 1, 2]);
        assert!(lambda_set(&f, 1.5).unwrap().is_empty());
        assert_eq!(lambda_set(&f, 0.3).unwrap(), vec![0]);
        assert!(lambda_set(&f, -0.1).is_err());
        assert!(lambda_set(&f, f64::NAN).is_err());
        let tight = Limits { profile_q_cap: 2, ..lim() };
        assert!(f_profile(&nv(&[1, 1]), 3, &tight).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let d = LazyDistribution::default();
        let rep = sandwich_report(&nv(&[1, 1]), Some(0.3), &d, &lim()).unwrap();
        assert_eq!(rep.q, 3);
        assert_eq!(rep.p_of_h, r(1, 2));
        assert!(close(rep.t_of_h, 0.375));
        assert!(close(rep.restricted_sum, 1.0 / 3.0));
        assert!(close(rep.c1_empirical, 1.5));
        assert!(close(rep.c_empirical, 5.0));
        assert_eq!(rep.lambda_size, 1);
        assert!(rep.sandwich_ok_upper && rep.ok_lower_bounds());
        assert_eq!(
            sandwich_report(&nv(&[1, 1, 1]), None, &d, &lim()),
            Err(Error::DegenerateAtom)
        );
        let rep = sandwich_report(&nv(&[1, 1, 1, 1]), Some(1e-3), &d, &lim()).unwrap();
        assert!(rep.sandwich_ok_upper);
        assert_eq!(rep.collision_bounds_ok, Some(true));
        let wide = LazyDistribution::parse("0.5,0,0.25").unwrap();
        let rep = sandwich_report(&nv(&[1, 1, 1, 1]), None, &wide, &lim()).unwrap();
        assert_eq!(rep.q, 9);
        assert_eq!(rep.collision_bounds_ok, None);
        assert!(close(
            rep.t_of_h,
            lazy_walk_zero_atom(&nv(&[1, 1, 1, 1]), &wide, &lim()).unwrap().to_f64().unwrap()
        ));
        let batch = sandwich_batch(&[nv(&[1, 1]), nv(&[1, 1, 1])], Some(0.3), &d, &lim());
        assert!(batch[0].is_ok() && batch[1] == Err(Error::DegenerateAtom));
    }

    #[test]
    fn default_epsilon_shrinks() {
        assert_eq!(default_epsilon(0), 1.0);
        assert_eq!(default_epsilon(8), 0.25);
    }

    fn normal(max_n: usize, max_c: i64) -> impl Strategy<Value = NormalVector> {
        prop::collection::vec(-max_c..=max_c, 1..=max_n)
            .prop_filter_map("nonzero", |c| NormalVector::from_i64(&c).ok())
    }

    proptest! {
        #[test]
        fn collision_identity_exact(a in normal(10, 6)) {
            let d = LazyDistribution::default();
            prop_assert_eq!(lazy_walk_zero_atom(&a, &d, &lim()).unwrap(), collision_probability(&a, &lim()).unwrap());
        }

        #[test]
        fn fourier_t_matches_dp(a in normal(10, 6), wide in any::<bool>()) {
            let d = if wide { LazyDistribution::parse("0.5,0.15,0.1").unwrap() } else { LazyDistribution::default() };
            let q = smoothing_modulus(&a, &d).to_u64().unwrap();
            let t = t_of_hyperplane(&a, q, &d, &lim()).unwrap();
            let exact = lazy_walk_zero_atom(&a, &d, &lim()).unwrap().to_f64().unwrap();
            prop_assert!(close(t, exact));
        }

        #[test]
        fn profile_relations(a in normal(8, 5), eps_lo in 0.0f64..0.5, bump in 0.0f64..0.5) {
            let d = LazyDistribution::default();
            let q = smoothing_modulus(&a, &d).to_u64().unwrap();
            let f = f_profile(&a, q, &lim()).unwrap();
            prop_assert_eq!(f[0], 1.0);
            let coeffs = a.to_i64().unwrap();
            for (i, &fi) in f.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&fi));
                let prod: f64 = coeffs.iter().map(|&c| t_factor(i as u64, c, q, &d)).product();
                prop_assert!((prod - fi * fi).abs() < 1e-12);
            }
            let lo = lambda_set(&f, eps_lo).unwrap();
            let hi = lambda_set(&f, eps_lo + bump).unwrap();
            prop_assert!(hi.iter().all(|i| lo.contains(i)));
            let sum = |set: &[usize]| set.iter().map(|&i| f[i]).sum::<f64>();
            prop_assert!(sum(&hi) <= sum(&lo) + 1e-12);
        }

        #[test]
        fn report_bounds(a in normal(9, 5), eps in 0.001f64..0.9) {
            match sandwich_report(&a, Some(eps), &LazyDistribution::default(), &lim()) {
                Ok(rep) => {
                    prop_assert!(rep.t_of_h >= rep.p_float * rep.p_float - IDENTITY_TOLERANCE);
                    prop_assert!(rep.restricted_sum >= 0.0 && rep.restricted_sum <= rep.profile_sum + 1e-12);
                    prop_assert!(rep.ok_lower_bounds());
                    prop_assert!(rep.c1_empirical >= 1.0);
                }
                Err(e) => prop_assert_eq!(e, Error::DegenerateAtom),
            }
        }
    }

    #[test]
    fn seeded_random_reports_are_consistent() {
        let mut rng = Seed::new(5).stream(0);
        for _ in 0..50 {
            let n = rng.gen_range(2..=10);
            let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
            let Ok(a) = NormalVector::from_i64(&c) else { continue };
            if let Ok(rep) = sandwich_report(&a, None, &LazyDistribution::default(), &lim()) {
                assert_eq!(rep.collision_bounds_ok, Some(true));
            }
        }
    }
}
