//! Bit-packed ±1 vectors and square matrices.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A vector in {+1, −1}^n. Bit j set means entry j is −1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignVector {
    n: u8,
    bits: u64,
}

impl SignVector {
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "sign vector dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        if bits & !low_mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bits {bits:#x} set above dimension {n}"
            )));
        }
        Ok(SignVector { n: n as u8, bits })
    }

    pub(crate) fn from_bits_unchecked(n: usize, bits: u64) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&n) && bits & !low_mask(n) == 0);
        SignVector { n: n as u8, bits }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (j, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << j,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "entry {s} at position {j} is not ±1"
                    )))
                }
            }
        }
        Self::from_bits(signs.len(), bits)
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::from_bits(n, 0)
    }

    pub fn dim(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn entry(&self, j: usize) -> i8 {
        assert!(j < self.dim(), "index {j} out of range for dimension {}", self.n);
        if self.bits >> j & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.dim()).map(|j| self.entry(j)).collect()
    }

    pub fn negate(&self) -> Self {
        SignVector {
            n: self.n,
            bits: !self.bits & low_mask(self.dim()),
        }
    }

    /// Equal to `other` or to `-other`.
    pub fn parallel_to(&self, other: &SignVector) -> bool {
        self.n == other.n && (self.bits == other.bits || self.bits == other.negate().bits)
    }

    /// Inner product with another sign vector of the same dimension.
    pub fn dot(&self, other: &SignVector) -> i64 {
        assert_eq!(self.n, other.n);
        self.dim() as i64 - 2 * (self.bits ^ other.bits).count_ones() as i64
    }

    /// Drops coordinate `j`, giving a vector of dimension n−1.
    pub fn without(&self, j: usize) -> Result<Self> {
        let n = self.dim();
        if j >= n || n == 1 {
            return Err(Error::InvalidArgument(format!(
                "cannot drop coordinate {j} of a dimension-{n} vector"
            )));
        }
        let low = self.bits & low_mask(j);
        let high = (self.bits >> (j + 1)) << j;
        Ok(SignVector::from_bits_unchecked(n - 1, low | high))
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for j in 0..self.dim() {
            f.write_str(if self.entry(j) > 0 { "+" } else { "-" })?;
        }
        write!(f, "]")
    }
}

/// Uniform sign vector: each entry independently ±1 with probability 1/2.
pub fn random_sign_vector<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<SignVector> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(SignVector::from_bits_unchecked(n, rng.next_u64() & low_mask(n)))
}

/// Square n×n matrix of ±1 entries stored as n packed rows.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignMatrix {
    rows: Vec<SignVector>,
}

impl SignMatrix {
    pub fn new(rows: Vec<SignVector>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.dim() != n) {
            return Err(Error::InvalidArgument(format!(
                "not square: {n} rows of dimensions {:?}",
                rows.iter().map(SignVector::dim).collect::<Vec<_>>()
            )));
        }
        Ok(SignMatrix { rows })
    }

    /// Builds from row bit patterns; row i uses the low n bits of `bits[i]`.
    pub fn from_row_bits(bits: &[u64]) -> Result<Self> {
        let n = bits.len();
        let rows = bits
            .iter()
            .map(|&b| SignVector::from_bits(n, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn from_signs(rows: &[Vec<i8>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| SignVector::from_signs(r)).collect::<Result<_>>()?)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SignVector] {
        &self.rows
    }

    pub fn row_bits(&self) -> Vec<u64> {
        self.rows.iter().map(SignVector::bits).collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        self.rows[i].entry(j)
    }

    pub fn transpose(&self) -> SignMatrix {
        SignMatrix {
            rows: transpose_bits(&self.row_bits())
                .into_iter()
                .map(|b| SignVector::from_bits_unchecked(self.dim(), b))
                .collect(),
        }
    }

    pub fn negate_row(&self, i: usize) -> SignMatrix {
        let mut rows = self.rows.clone();
        rows[i] = rows[i].negate();
        SignMatrix { rows }
    }

    pub fn negate_column(&self, j: usize) -> SignMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| SignVector::from_bits_unchecked(r.dim(), r.bits() ^ (1 << j)))
            .collect();
        SignMatrix { rows }
    }

    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        self.rows
            .iter()
            .map(|r| (0..r.dim()).map(|j| r.entry(j) as i64).collect())
            .collect()
    }

    /// Some pair of rows, or some pair of columns, equal up to sign.
    pub fn has_parallel_pair(&self) -> bool {
        has_parallel_pair_bits(&self.row_bits())
    }
}

impl fmt::Debug for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter()).finish()
    }
}

pub fn random_sign_matrix<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<SignMatrix> {
    let rows = (0..n)
        .map(|_| random_sign_vector(n, rng))
        .collect::<Result<Vec<_>>>()?;
    SignMatrix::new(rows)
}

/// Column bit patterns of a square matrix given by row bit patterns.
pub(crate) fn transpose_bits(rows: &[u64]) -> Vec<u64> {
    let n = rows.len();
    (0..n)
        .map(|j| {
            rows.iter()
                .enumerate()
                .fold(0u64, |acc, (i, &r)| acc | ((r >> j & 1) << i))
        })
        .collect()
}

fn has_duplicate_up_to_sign(vectors: &[u64], n: usize) -> bool {
    let mask = low_mask(n);
    let mut canon: Vec<u64> = vectors
        .iter()
        .map(|&v| if v & 1 == 1 { !v & mask } else { v })
        .collect();
    canon.sort_unstable();
    canon.windows(2).any(|w| w[0] == w[1])
}

pub(crate) fn has_parallel_pair_bits(rows: &[u64]) -> bool {
    let n = rows.len();
    has_duplicate_up_to_sign(rows, n) || has_duplicate_up_to_sign(&transpose_bits(rows), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;

    #[test]
    fn entries_and_invariants() {
        let v = SignVector::from_signs(&[1, -1, -1, 1]).unwrap();
        assert_eq!(v.bits(), 0b0110);
        assert_eq!(v.to_signs(), vec![1, -1, -1, 1]);
        assert_eq!(v.negate().to_signs(), vec![-1, 1, 1, -1]);
        assert!(SignVector::from_bits(3, 0b1000).is_err());
        assert!(SignVector::from_bits(65, 0).is_err());
        assert!(SignVector::from_signs(&[1, 0]).is_err());
        let full = SignVector::from_bits(64, u64::MAX).unwrap();
        assert_eq!(full.negate().bits(), 0);
    }

    #[test]
    fn dot_and_drop() {
        let a = SignVector::from_signs(&[1, 1, -1]).unwrap();
        let b = SignVector::from_signs(&[1, -1, -1]).unwrap();
        assert_eq!(a.dot(&b), 1);
        assert_eq!(a.without(1).unwrap().to_signs(), vec![1, -1]);
        assert_eq!(a.without(2).unwrap().to_signs(), vec![1, 1]);
        assert!(a.parallel_to(&a.negate()));
        assert!(!a.parallel_to(&b));
    }

    #[test]
    fn random_matrices_repeat_for_same_stream() {
        let s = Seed::new(1);
        let a = random_sign_matrix(5, &mut s.stream(0)).unwrap();
        let b = random_sign_matrix(5, &mut s.stream(0)).unwrap();
        assert_eq!(a, b);
        let one = random_sign_vector(1, &mut s.stream(2)).unwrap();
        assert!(matches!(one.entry(0), 1 | -1));
    }

    #[test]
    fn entry_means_are_balanced() {
        // 10^5 samples of an 8x8 matrix: sd of each mean is 1/sqrt(1e5) ~ 0.0032, 4σ < 0.02.
        let mut rng = Seed::new(2024).stream(0);
        let mut sums = [[0i64; 8]; 8];
        let samples = 100_000;
        for _ in 0..samples {
            let m = random_sign_matrix(8, &mut rng).unwrap();
            for (i, row) in sums.iter_mut().enumerate() {
                for (j, s) in row.iter_mut().enumerate() {
                    *s += m.entry(i, j) as i64;
                }
            }
        }
        for row in sums {
            for s in row {
                assert!((s as f64 / samples as f64).abs() <= 0.02);
            }
        }
    }

    #[test]
    fn transpose_and_parallel_pairs() {
        let m = SignMatrix::from_signs(&[vec![1, 1, 1], vec![1, -1, 1], vec![-1, -1, 1]]).unwrap();
        let t = m.transpose();
        assert_eq!(t.entry(0, 2), -1);
        assert_eq!(t.transpose(), m);
        // Columns 0 and 1 equal up to sign? col0 = (1,1,-1), col1 = (1,-1,-1): no. col2 = (1,1,1): no.
        assert!(!m.has_parallel_pair());
        let m2 = SignMatrix::from_signs(&[vec![1, -1, 1], vec![-1, 1, -1], vec![1, 1, 1]]).unwrap();
        assert!(m2.has_parallel_pair());
        let m3 = SignMatrix::from_signs(&[vec![1, 1, -1], vec![1, -1, 1], vec![-1, 1, 1]]).unwrap();
        assert!(!m3.has_parallel_pair());
        let equal_cols =
            SignMatrix::from_signs(&[vec![1, 1, 1], vec![1, 1, -1], vec![-1, -1, 1]]).unwrap();
        assert!(equal_cols.has_parallel_pair());
        assert!(equal_cols.negate_column(1).has_parallel_pair());
    }
}
