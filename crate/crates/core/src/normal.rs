//! Primitive integer normals of hyperplanes spanned by sign vectors.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::det::det_exact;
use crate::error::{Error, Result};
use crate::exact::{convert, ExactRing, Ring};
use crate::sign::{SignMatrix, SignVector};

/// Integer normal in canonical form: coefficient gcd 1, first nonzero positive.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalVector {
    coeffs: Vec<BigInt>,
}

impl NormalVector {
    /// Canonicalizes `coeffs`. Fails if empty or all zero.
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("normal vector has no coordinates".into()));
        }
        let g = crate::exact::gcd_all(&coeffs);
        if g.is_zero() {
            return Err(Error::InvalidArgument("normal vector is identically zero".into()));
        }
        let first_negative = coeffs.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
        let scale = if first_negative { -g } else { g };
        let coeffs = coeffs.into_iter().map(|c| c.div_floor(&scale)).collect();
        Ok(NormalVector { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn abs_sum(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(ToPrimitive::to_i64).collect()
    }

    pub fn all_nonzero(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_zero())
    }

    /// Σ a_j is odd, so no sign vector can be orthogonal.
    pub fn has_odd_sum(&self) -> bool {
        self.coeffs.iter().sum::<BigInt>().is_odd()
    }

    pub fn dot(&self, x: &SignVector) -> BigInt {
        assert_eq!(x.dim(), self.dim());
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| if x.entry(j) > 0 { c.clone() } else { -c })
            .sum()
    }

    pub fn is_orthogonal_to(&self, x: &SignVector) -> bool {
        self.dot(x).is_zero()
    }

    /// Appends a zero coordinate.
    pub fn with_zero_appended(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.push(BigInt::zero());
        NormalVector { coeffs }
    }
}

impl fmt::Display for NormalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for NormalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

/// Parses coordinates separated by commas or semicolons, then canonicalizes.
impl FromStr for NormalVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split([',', ';'])
            .map(|t| {
                t.trim()
                    .parse::<BigInt>()
                    .map_err(|_| Error::InvalidArgument(format!("bad coefficient {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        NormalVector::new(coeffs)
    }
}

fn check_rows(rows: &[SignVector]) -> Result<usize> {
    let n = rows.len() + 1;
    if n < 2 {
        return Err(Error::InvalidArgument("need at least one row".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.dim() != n) {
        return Err(Error::InvalidArgument(format!(
            "{} rows need dimension {n}, got {}",
            rows.len(),
            r.dim()
        )));
    }
    Ok(n)
}

/// Canonical normal of the span of n−1 sign vectors in dimension n.
///
/// Solves for the kernel with one fraction-free elimination (with column
/// pivoting) and a fraction-free back substitution. The result equals the
/// signed-cofactor vector up to scale, hence after canonicalization.
pub fn normal_from_rows(rows: &[SignVector]) -> Result<NormalVector> {
    let n = check_rows(rows)?;
    let ints: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| (0..n).map(|j| r.entry(j) as i64).collect())
        .collect();
    let kernel = [Ring::I64, Ring::I128, Ring::Big]
        .into_iter()
        .find_map(|ring| match ring {
            Ring::I64 => kernel_vector::<i64>(convert(&ints), n).map(|k| k.map(big)),
            Ring::I128 => kernel_vector::<i128>(convert(&ints), n).map(|k| k.map(big)),
            Ring::Big => kernel_vector::<BigInt>(convert(&ints), n),
        })
        .expect("BigInt path cannot overflow")
        .ok_or(Error::DependentRows)?;
    NormalVector::new(kernel)
}

fn big<T: ExactRing>(v: Vec<T>) -> Vec<BigInt> {
    v.iter().map(ExactRing::to_bigint).collect()
}

/// Outer `None`: overflow. Inner `None`: rank < n−1.
fn kernel_vector<T: ExactRing>(mut m: Vec<Vec<T>>, n: usize) -> Option<Option<Vec<T>>> {
    let r = n - 1;
    let mut cols: Vec<usize> = (0..n).collect();
    let mut prev = T::from_i64(1);
    for k in 0..r {
        let pivot = (k..n).find_map(|c| (k..r).find(|&i| !m[i][c].is_zero_value()).map(|i| (i, c)));
        let Some((pi, pc)) = pivot else {
            return Some(None);
        };
        m.swap(k, pi);
        if pc != k {
            for row in m.iter_mut() {
                row.swap(k, pc);
            }
            cols.swap(k, pc);
        }
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            for j in k + 1..n {
                row[j] = T::mul_sub(&row[j], &pivot_row[k], &row[k], &pivot_row[j])?.div_exact(&prev);
            }
            row[k] = T::from_i64(0);
        }
        prev = m[k][k].clone();
    }
    // Upper-triangular U in positions 0..r with the last position as right-hand side.
    let d = prev;
    let mut y: Vec<T> = vec![T::from_i64(0); r];
    for i in (0..r).rev() {
        let mut acc = d.mul(&m[i][r])?;
        for k in i + 1..r {
            acc = acc.sub(&m[i][k].mul(&y[k])?)?;
        }
        y[i] = acc.div_exact(&m[i][i]);
    }
    let mut out = vec![T::from_i64(0); n];
    for (pos, yi) in y.iter().enumerate() {
        out[cols[pos]] = yi.neg()?;
    }
    out[cols[r]] = d;
    Some(Some(out))
}

/// The literal construction a_j = (−1)^j · det(minor omitting column j).
pub fn normal_from_cofactors(rows: &[SignVector]) -> Result<NormalVector> {
    let n = check_rows(rows)?;
    let coeffs = (0..n)
        .map(|j| {
            let minor = SignMatrix::new(rows.iter().map(|r| r.without(j).expect("j < n")).collect())
                .expect("square minor");
            let d = det_exact(&minor);
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect::<Vec<_>>();
    if coeffs.iter().all(Zero::is_zero) {
        return Err(Error::DependentRows);
    }
    NormalVector::new(coeffs)
}
