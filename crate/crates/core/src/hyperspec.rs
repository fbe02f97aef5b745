//! Hyperplanes spanned by sign vectors: sampling, enumeration, and their
//! classification into small (G1), intermediate (G2) and large (G3)
//! concentration.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{count_mitm, count_to_f64, count_to_probability, elo_ceiling};
use crate::det::rank_mod_p;
use crate::error::{Error, Result};
use crate::exactcount::{census_plain, CensusOptions};
use crate::limits::Limits;
use crate::normal::{normal_from_rows, NormalVector};
use crate::parallel::chunks;
use crate::seed::Seed;
use crate::sign::{random_sign_vector, SignVector};

pub const MAX_RETRIES: u32 = 64;
pub const MAX_SAMPLE_DIM: usize = 44;
pub const MAX_ENUM_DIM: usize = 4;
const SAMPLE_CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GClass {
    G1,
    G2,
    G3,
}

impl GClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            GClass::G1 => "G1",
            GClass::G2 => "G2",
            GClass::G3 => "G3",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

/// Finite-n proxies for the class boundaries: G1 below 2^{−(1−δ)n}, G3 at or
/// above `theta_large_factor` times the Erdős–Littlewood–Offord ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds {
    pub delta_small: f64,
    pub theta_large_factor: f64,
}

impl ClassThresholds {
    pub fn new(delta_small: f64, theta_large_factor: f64) -> Result<Self> {
        if !(delta_small > 0.0 && delta_small < 1.0) {
            return Err(Error::InvalidArgument(format!("δ = {delta_small} outside (0, 1)")));
        }
        if !(theta_large_factor > 0.0 && theta_large_factor <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "large-class factor {theta_large_factor} outside (0, 1]"
            )));
        }
        Ok(ClassThresholds {
            delta_small,
            theta_large_factor,
        })
    }

    pub fn small_cutoff(&self, n: usize) -> f64 {
        (-(1.0 - self.delta_small) * n as f64).exp2()
    }

    pub fn large_cutoff(&self, n: usize) -> f64 {
        self.theta_large_factor * elo_ceiling(n).to_f64().expect("finite")
    }
}

impl Default for ClassThresholds {
    fn default() -> Self {
        ClassThresholds {
            delta_small: 0.1,
            theta_large_factor: 0.5,
        }
    }
}

pub fn classify(p: f64, n: usize, th: &ClassThresholds) -> GClass {
    if p >= th.large_cutoff(n) {
        GClass::G3
    } else if p < th.small_cutoff(n) {
        GClass::G1
    } else {
        GClass::G2
    }
}

/// Normal of the span of n−1 uniform sign vectors, redrawing dependent sets.
pub fn sample_hyperplane<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<NormalVector> {
    if !(2..=MAX_SAMPLE_DIM).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "hyperplane sampling needs 2 ≤ n ≤ {MAX_SAMPLE_DIM}, got {n}"
        )));
    }
    for _ in 0..MAX_RETRIES {
        let rows = (0..n - 1)
            .map(|_| random_sign_vector(n, rng))
            .collect::<Result<Vec<_>>>()?;
        match normal_from_rows(&rows) {
            Ok(a) => return Ok(a),
            Err(Error::DependentRows) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryExhausted(MAX_RETRIES))
}

fn combinations(items: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(start: usize, items: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for i in start..items {
            cur.push(i);
            rec(i + 1, items, k, cur, visit);
            cur.pop();
        }
    }
    rec(0, items, k, &mut Vec::with_capacity(k), &mut visit);
}

/// Distinct hyperplanes spanned by n−1 of the 2ⁿ sign vectors, with the number
/// of generating subsets of each, in canonical order.
pub fn enumerate_hyperplanes(n: usize) -> Result<Vec<(NormalVector, u64)>> {
    if n < 2 {
        return Err(Error::InvalidArgument("no hyperplane is spanned by zero vectors".into()));
    }
    if n > MAX_ENUM_DIM {
        return Err(Error::limit("hyperplane enumeration dimension", n, MAX_ENUM_DIM));
    }
    let vectors: Vec<SignVector> = (0..1u64 << n)
        .map(|b| SignVector::from_bits(n, b).expect("in range"))
        .collect();
    let mut found: BTreeMap<NormalVector, u64> = BTreeMap::new();
    let mut failure = None;
    combinations(vectors.len(), n - 1, |idx| {
        let rows: Vec<SignVector> = idx.iter().map(|&i| vectors[i]).collect();
        match normal_from_rows(&rows) {
            Ok(a) => *found.entry(a).or_default() += 1,
            Err(Error::DependentRows) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(found.into_iter().collect())
}

/// All sign vectors x with a·x = 0, by enumeration (small n only).
pub fn kernel_sign_vectors(a: &NormalVector) -> Vec<SignVector> {
    let n = a.dim();
    assert!(n <= 24, "enumeration of 2^{n} sign vectors");
    (0..1u64 << n)
        .map(|b| SignVector::from_bits(n, b).expect("in range"))
        .filter(|x| a.is_orthogonal_to(x))
        .collect()
}

/// The sign vectors on H span it: rank n−1 over GF(p) certifies rank n−1 over Q.
pub fn spanned_by_sign_vectors(a: &NormalVector) -> bool {
    let kernel: Vec<u64> = kernel_sign_vectors(a).iter().map(SignVector::bits).collect();
    a.dim() >= 2 && rank_mod_p(&kernel, a.dim(), 1_000_000_007) == a.dim() - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub normal: NormalVector,
    pub n: usize,
    pub m_count: u128,
    pub p_of_h: BigRational,
    pub p_float: f64,
    /// −∞ when P(H) = 0.
    pub log2_p: f64,
    pub klass: GClass,
}

impl SpectrumRecord {
    fn new(normal: NormalVector, m_count: u128, th: &ClassThresholds) -> Self {
        let n = normal.dim();
        let p_float = count_to_f64(m_count, n);
        let log2_p = if m_count == 0 {
            f64::NEG_INFINITY
        } else {
            (m_count as f64).log2() - n as f64
        };
        SpectrumRecord {
            n,
            m_count,
            p_of_h: count_to_probability(m_count, n),
            p_float,
            log2_p,
            klass: classify(p_float, n, th),
            normal,
        }
    }
}

/// Unit-width bin [lo, lo+1) of log₂P(H); `lo = None` holds the P(H) = 0 records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: Option<i64>,
    pub count: u64,
    pub class_counts: [u64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub klass: GClass,
    pub count: u64,
    pub max_p: Option<BigRational>,
    pub sum_p: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub samples: u64,
    pub seed: Seed,
    pub thresholds: ClassThresholds,
    pub small_cutoff: f64,
    pub large_cutoff: f64,
    pub records: Vec<SpectrumRecord>,
    pub histogram: Vec<HistogramBin>,
    pub classes: Vec<ClassSummary>,
    /// max P(H) over records whose normal has no zero coefficient.
    pub max_p_all_nonzero: Option<BigRational>,
}

/// Samples hyperplanes, computes P(H) by meet in the middle and classifies.
pub fn spectrum(n: usize, samples: u64, seed: Seed, th: &ClassThresholds, limits: &Limits) -> Result<SpectrumReport> {
    if !(2..=MAX_SAMPLE_DIM).contains(&n) || n > limits.mitm_max_n {
        return Err(Error::limit("spectrum dimension", n, MAX_SAMPLE_DIM.min(limits.mitm_max_n)));
    }
    let ranges = chunks(0, samples, SAMPLE_CHUNK);
    let per_chunk: Vec<Result<Vec<SpectrumRecord>>> = ranges
        .par_iter()
        .enumerate()
        .map(|(c, &(lo, hi))| {
            let mut rng = seed.stream(c as u64);
            (lo..hi)
                .map(|_| {
                    let a = sample_hyperplane(n, &mut rng)?;
                    let m = count_mitm(&a, limits)?;
                    Ok(SpectrumRecord::new(a, m, th))
                })
                .collect()
        })
        .collect();
    let mut records = Vec::with_capacity(samples as usize);
    for chunk in per_chunk {
        records.extend(chunk?);
    }

    let mut bins: BTreeMap<Option<i64>, HistogramBin> = BTreeMap::new();
    let mut count = [0u64; 3];
    let mut max_m: [Option<u128>; 3] = [None; 3];
    let mut sum_m = [0u128; 3];
    let mut max_nonzero: Option<u128> = None;
    for r in &records {
        let lo = (r.m_count > 0).then(|| r.log2_p.floor() as i64);
        let bin = bins.entry(lo).or_insert(HistogramBin {
            lo,
            count: 0,
            class_counts: [0; 3],
        });
        bin.count += 1;
        bin.class_counts[r.klass.index()] += 1;
        let k = r.klass.index();
        count[k] += 1;
        max_m[k] = max_m[k].max(Some(r.m_count));
        sum_m[k] += r.m_count;
        if r.normal.all_nonzero() {
            max_nonzero = max_nonzero.max(Some(r.m_count));
        }
    }
    let classes = [GClass::G1, GClass::G2, GClass::G3]
        .into_iter()
        .map(|k| ClassSummary {
            klass: k,
            count: count[k.index()],
            max_p: max_m[k.index()].map(|m| count_to_probability(m, n)),
            sum_p: count_to_probability(sum_m[k.index()], n),
        })
        .collect();
    Ok(SpectrumReport {
        n,
        samples,
        seed,
        thresholds: *th,
        small_cutoff: th.small_cutoff(n),
        large_cutoff: th.large_cutoff(n),
        records,
        histogram: bins.into_values().collect(),
        classes,
        max_p_all_nonzero: max_nonzero.map(|m| count_to_probability(m, n)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneTerm {
    pub normal: NormalVector,
    pub multiplicity: u64,
    pub m_count: u128,
    pub p_of_h: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneSum {
    pub n: usize,
    pub terms: Vec<HyperplaneTerm>,
    /// Σ over distinct hyperplanes of P(H).
    pub sum: BigRational,
    /// Σ of multiplicity · P(H).
    pub sum_with_multiplicity: BigRational,
    pub p_n: BigRational,
    /// P_n / Σ_H P(H)
    pub ratio: BigRational,
}

/// Exact Σ_H P(H) over the spanned hyperplanes against the exact P_n.
pub fn sum_over_hyperplanes(n: usize, limits: &Limits) -> Result<HyperplaneSum> {
    let hyperplanes = enumerate_hyperplanes(n)?;
    let terms: Vec<HyperplaneTerm> = hyperplanes
        .into_iter()
        .map(|(normal, multiplicity)| {
            let m = count_mitm(&normal, limits)?;
            Ok(HyperplaneTerm {
                p_of_h: count_to_probability(m, n),
                m_count: m,
                normal,
                multiplicity,
            })
        })
        .collect::<Result<_>>()?;
    let zero = || BigRational::from_integer(BigInt::zero());
    let sum = terms.iter().fold(zero(), |acc, t| acc + &t.p_of_h);
    let sum_with_multiplicity = terms.iter().fold(zero(), |acc, t| {
        acc + &t.p_of_h * BigRational::from_integer(t.multiplicity.into())
    });
    let census = census_plain(
        n,
        &CensusOptions {
            limits: Limits {
                census_plain_max_n: MAX_ENUM_DIM,
                ..limits.clone()
            },
            ..CensusOptions::default()
        },
    )?;
    let p_n = census.p_n();
    let ratio = &p_n / &sum;
    Ok(HyperplaneSum {
        n,
        terms,
        sum,
        sum_with_multiplicity,
        p_n,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::det_exact;
    use crate::sign::SignMatrix;
    use num_traits::One;

    fn nv(c: &[i64]) -> NormalVector {
        NormalVector::from_i64(c).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn classify_examples() {
        let th = ClassThresholds::default();
        assert_eq!(classify(0.0, 4, &th), GClass::G1);
        assert_eq!(classify(0.375, 4, &th), GClass::G3);
        let th20 = ClassThresholds::new(0.1, 0.5).unwrap();
        assert_eq!(classify((-19f64).exp2(), 20, &th20), GClass::G1);
        assert_eq!(classify((-17f64).exp2(), 20, &th20), GClass::G2);
        assert!(ClassThresholds::new(0.0, 0.5).is_err());
        assert!(ClassThresholds::new(0.1, 1.5).is_err());
    }

    #[test]
    fn classify_is_monotone() {
        let th = ClassThresholds::default();
        for n in 2..30 {
            let mut last = GClass::G1;
            for k in 0..=2000 {
                let c = classify(k as f64 / 2000.0, n, &th);
                assert!(c >= last, "n = {n}");
                last = c;
            }
        }
    }

    #[test]
    fn two_dimensional_samples_are_balanced() {
        // 10^4 draws of one of two spans: sd = 50, 4σ = 200.
        let mut rng = Seed::new(21).stream(0);
        let mut plus = 0;
        for _ in 0..10_000 {
            let a = sample_hyperplane(2, &mut rng).unwrap();
            if a == nv(&[1, 1]) {
                plus += 1;
            } else {
                assert_eq!(a, nv(&[1, -1]));
            }
        }
        assert!((plus as i64 - 5000).abs() <= 200, "{plus}");
    }

    #[test]
    fn sampling_is_deterministic_and_orthogonal() {
        let a = sample_hyperplane(3, &mut Seed::new(4).stream(9)).unwrap();
        assert_eq!(a, sample_hyperplane(3, &mut Seed::new(4).stream(9)).unwrap());
        assert!(sample_hyperplane(1, &mut Seed::new(4).stream(9)).is_err());
        assert!(sample_hyperplane(45, &mut Seed::new(4).stream(9)).is_err());
        for n in 2..=10 {
            let a = sample_hyperplane(n, &mut Seed::new(5).stream(n as u64)).unwrap();
            assert!(spanned_by_sign_vectors(&a), "n = {n}: {a}");
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let two = enumerate_hyperplanes(2).unwrap();
        assert_eq!(two, vec![(nv(&[1, -1]), 2), (nv(&[1, 1]), 2)]);
        assert!(enumerate_hyperplanes(1).is_err());
        assert!(matches!(enumerate_hyperplanes(5), Err(Error::LimitExceeded { .. })));
        for n in 2..=4 {
            for (a, mult) in enumerate_hyperplanes(n).unwrap() {
                assert!(mult >= 1);
                assert!(spanned_by_sign_vectors(&a));
            }
        }
    }

    #[test]
    fn singular_three_by_three_rows_lie_on_enumerated_hyperplanes() {
        let planes: Vec<NormalVector> = enumerate_hyperplanes(3).unwrap().into_iter().map(|(a, _)| a).collect();
        let mut singular = 0;
        for idx in 0..1u64 << 9 {
            let rows: Vec<u64> = (0..3).map(|i| idx >> (3 * i) & 7).collect();
            let m = SignMatrix::from_row_bits(&rows).unwrap();
            if det_exact(&m).is_zero() {
                singular += 1;
                assert!(planes.iter().any(|a| m.rows().iter().all(|row| a.is_orthogonal_to(row))));
            }
        }
        assert_eq!(singular, 320);
    }

    #[test]
    fn hyperplane_sums() {
        let two = sum_over_hyperplanes(2, &Limits::default()).unwrap();
        assert_eq!(two.sum, BigRational::one());
        assert_eq!(two.p_n, r(1, 2));
        assert_eq!(two.ratio, r(1, 2));
        assert_eq!(two.sum_with_multiplicity, r(2, 1));
        for n in 3..=4 {
            let s = sum_over_hyperplanes(n, &Limits::default()).unwrap();
            assert!(s.ratio > BigRational::zero() && s.ratio <= BigRational::one());
            assert!(s.sum >= s.p_n);
        }
        assert!(sum_over_hyperplanes(1, &Limits::default()).is_err());
    }

    #[test]
    fn spectrum_consistency() {
        let th = ClassThresholds::default();
        let rep = spectrum(4, 1000, Seed::new(1), &th, &Limits::default()).unwrap();
        assert_eq!(rep.records.len(), 1000);
        assert!(rep.records.iter().all(|r| r.klass == classify(r.p_float, 4, &th)));
        assert_eq!(rep.histogram.iter().map(|b| b.count).sum::<u64>(), 1000);
        assert_eq!(rep.classes.iter().map(|c| c.count).sum::<u64>(), 1000);
        let total: BigRational = rep.records.iter().map(|r| r.p_of_h.clone()).sum();
        let by_class: BigRational = rep.classes.iter().map(|c| c.sum_p.clone()).sum();
        assert_eq!(total, by_class);
    }

    #[test]
    fn spectrum_at_ten_is_reproducible_and_respects_elo() {
        let th = ClassThresholds::default();
        let a = spectrum(10, 2000, Seed::new(2), &th, &Limits::default()).unwrap();
        let b = spectrum(10, 2000, Seed::new(2), &th, &Limits::default()).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.records, b.records);
        if let Some(max) = &a.max_p_all_nonzero {
            assert!(*max <= r(252, 1024));
        }
        let threaded = crate::parallel::with_threads(3, || spectrum(10, 2000, Seed::new(2), &th, &Limits::default()))
            .unwrap();
        assert_eq!(threaded.records, a.records);
    }
}
