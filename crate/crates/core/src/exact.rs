//! Integer rings used by fraction-free elimination.
//!
//! Machine-word implementations return `None` on overflow so callers can
//! retry the same computation with `BigInt`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub(crate) trait ExactRing: Clone + PartialEq {
    fn from_i64(v: i64) -> Self;
    fn is_zero_value(&self) -> bool;
    fn mul(&self, b: &Self) -> Option<Self>;
    fn sub(&self, b: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    /// `self / d` where the division is known to be exact.
    fn div_exact(&self, d: &Self) -> Self;
    fn to_bigint(&self) -> BigInt;

    /// a·b − c·d
    fn mul_sub(a: &Self, b: &Self, c: &Self, d: &Self) -> Option<Self> {
        a.mul(b)?.sub(&c.mul(d)?)
    }
}

macro_rules! machine_ring {
    ($t:ty) => {
        impl ExactRing for $t {
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            fn is_zero_value(&self) -> bool {
                *self == 0
            }
            fn mul(&self, b: &Self) -> Option<Self> {
                self.checked_mul(*b)
            }
            fn sub(&self, b: &Self) -> Option<Self> {
                self.checked_sub(*b)
            }
            fn neg(&self) -> Option<Self> {
                self.checked_neg()
            }
            fn div_exact(&self, d: &Self) -> Self {
                debug_assert_eq!(self % d, 0);
                self / d
            }
            fn to_bigint(&self) -> BigInt {
                BigInt::from(*self)
            }
        }
    };
}

machine_ring!(i64);
machine_ring!(i128);

impl ExactRing for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
    fn mul(&self, b: &Self) -> Option<Self> {
        Some(self * b)
    }
    fn sub(&self, b: &Self) -> Option<Self> {
        Some(self - b)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn div_exact(&self, d: &Self) -> Self {
        debug_assert!((self % d).is_zero());
        self / d
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

/// Determinant by Bareiss elimination with row pivoting. `None` on overflow.
pub(crate) fn bareiss_det<T: ExactRing>(mut m: Vec<Vec<T>>) -> Option<T> {
    let n = m.len();
    if n == 0 {
        return Some(T::from_i64(1));
    }
    let mut negate = false;
    let mut prev = T::from_i64(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero_value() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero_value()) {
                Some(r) => {
                    m.swap(k, r);
                    negate = !negate;
                }
                None => return Some(T::from_i64(0)),
            }
        }
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            for j in k + 1..n {
                row[j] = T::mul_sub(&row[j], &pivot_row[k], &row[k], &pivot_row[j])?.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        d.neg()
    } else {
        Some(d)
    }
}

/// Tries i64, then i128, then BigInt.
pub(crate) fn with_fallback<F>(f: F) -> BigInt
where
    F: Fn(Ring) -> Option<BigInt>,
{
    f(Ring::I64)
        .or_else(|| f(Ring::I128))
        .or_else(|| f(Ring::Big))
        .expect("BigInt arithmetic cannot overflow")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ring {
    I64,
    I128,
    Big,
}

pub(crate) fn convert<T: ExactRing>(rows: &[Vec<i64>]) -> Vec<Vec<T>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| T::from_i64(v)).collect())
        .collect()
}

pub(crate) fn det_of_i64_rows(rows: &[Vec<i64>], ring: Ring) -> Option<BigInt> {
    match ring {
        Ring::I64 => bareiss_det::<i64>(convert(rows)).map(BigInt::from),
        Ring::I128 => bareiss_det::<i128>(convert(rows)).map(BigInt::from),
        Ring::Big => bareiss_det::<BigInt>(convert(rows)),
    }
}

/// gcd of absolute values; zero only if every entry is zero.
pub(crate) fn gcd_all(values: &[BigInt]) -> BigInt {
    use num_integer::Integer;
    values
        .iter()
        .fold(BigInt::zero(), |g, v| if g.is_one() { g } else { g.gcd(v) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_is_reported_not_wrapped() {
        let big = i64::MAX / 2;
        let m = vec![vec![big, 1], vec![1, big]];
        assert_eq!(bareiss_det::<i64>(m.clone()), None);
        let exact = bareiss_det::<BigInt>(convert(&m)).unwrap();
        assert_eq!(exact, BigInt::from(big) * big - 1);
        assert_eq!(with_fallback(|r| det_of_i64_rows(&m, r)), exact);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let m = vec![vec![0, 1, 2], vec![1, 0, 3], vec![4, -3, 8]];
        // det = 0*(0+9) - 1*(8-12) + 2*(-3-0) = 4 - 6 = -2
        assert_eq!(bareiss_det::<i64>(m), Some(-2));
        let singular = vec![vec![0, 1], vec![0, 2]];
        assert_eq!(bareiss_det::<i64>(singular), Some(0));
    }

    #[test]
    fn gcd_of_vector() {
        let v: Vec<BigInt> = [-6, 0, 9, 15].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(gcd_all(&v), BigInt::from(3));
        assert_eq!(gcd_all(&[BigInt::zero()]), BigInt::zero());
    }
}
