//! Prime-field arithmetic, dense matrices over GF(q), and Vandermonde MDS codes.
//!
//! Values are kept as `u64` residues in `[0, q)`. The modulus is restricted to
//! primes below 2^32 so that a product of two residues never overflows.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest modulus accepted by [`PrimeField::new`].
pub const MAX_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("{0} is not a prime below 2^32")]
    NotPrime(u64),
    #[error("inverse of zero in GF({0})")]
    ZeroInverse(u64),
    #[error("modulus mismatch: GF({left}) vs GF({right})")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("field too small: a length-{t} MDS code needs at least {t} distinct points, GF({q}) has {q}")]
    FieldTooSmall { t: usize, q: u64 },
    #[error("invalid code dimensions: k = {k} exceeds t = {t}")]
    InvalidDimensions { t: usize, k: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("singular system")]
    Singular,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `p >= n`.
pub fn next_prime_at_least(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// The prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    q: u64,
}

impl TryFrom<u64> for PrimeField {
    type Error = AlgebraError;
    fn try_from(q: u64) -> Result<Self, Self::Error> {
        PrimeField::new(q)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.q
    }
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, AlgebraError> {
        if q >= MAX_MODULUS || !is_prime(q) {
            return Err(AlgebraError::NotPrime(q));
        }
        Ok(Self { q })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v % self.q
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.q - b) % self.q
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.q - a) % self.q
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        let mut b = base % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> Result<u64, AlgebraError> {
        if a.is_multiple_of(self.q) {
            return Err(AlgebraError::ZeroInverse(self.q));
        }
        // Fermat: a^(q-2)
        Ok(self.pow(a, self.q - 2))
    }

    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            modulus: self.q,
        }
    }
}

/// A residue tagged with its modulus, for callers that mix fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn field(&self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    fn same_field(&self, other: &Self) -> Result<PrimeField, AlgebraError> {
        if self.modulus != other.modulus {
            return Err(AlgebraError::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(self.field())
    }

    pub fn add(self, other: Self) -> Result<Self, AlgebraError> {
        let f = self.same_field(&other)?;
        Ok(f.element(f.add(self.value, other.value)))
    }

    pub fn sub(self, other: Self) -> Result<Self, AlgebraError> {
        let f = self.same_field(&other)?;
        Ok(f.element(f.sub(self.value, other.value)))
    }

    pub fn mul(self, other: Self) -> Result<Self, AlgebraError> {
        let f = self.same_field(&other)?;
        Ok(f.element(f.mul(self.value, other.value)))
    }

    pub fn inv(self) -> Result<Self, AlgebraError> {
        let f = self.field();
        Ok(f.element(f.inv(self.value)?))
    }

    pub fn pow(self, exp: u64) -> Self {
        let f = self.field();
        f.element(f.pow(self.value, exp))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Dense row-major matrix over GF(q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl FieldMatrix {
    pub fn new(
        field: PrimeField,
        rows: usize,
        cols: usize,
        entries: Vec<u64>,
    ) -> Result<Self, AlgebraError> {
        if entries.len() != rows * cols {
            return Err(AlgebraError::LengthMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        let entries = entries.into_iter().map(|v| field.reduce(v)).collect();
        Ok(Self {
            field,
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>, AlgebraError> {
        if v.len() != self.cols {
            return Err(AlgebraError::LengthMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| f.add(acc, f.mul(a, b % f.q)))
            })
            .collect())
    }

    /// Matrix formed by the listed rows, in the listed order.
    pub fn select_rows(&self, row_set: &[usize]) -> Result<FieldMatrix, AlgebraError> {
        let mut entries = Vec::with_capacity(row_set.len() * self.cols);
        for &r in row_set {
            if r >= self.rows {
                return Err(AlgebraError::IndexOutOfRange {
                    index: r,
                    bound: self.rows,
                });
            }
            entries.extend_from_slice(self.row(r));
        }
        Ok(FieldMatrix {
            field: self.field,
            rows: row_set.len(),
            cols: self.cols,
            entries,
        })
    }

    /// Exact rank by Gaussian elimination over GF(q).
    pub fn rank(&self) -> usize {
        let f = self.field;
        let mut m = self.entries.clone();
        let cols = self.cols;
        let mut rank = 0;
        for c in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| m[r * cols + c] != 0) else {
                continue;
            };
            if p != rank {
                for j in 0..cols {
                    m.swap(p * cols + j, rank * cols + j);
                }
            }
            let inv = f.inv(m[rank * cols + c]).expect("pivot is nonzero");
            for r in (rank + 1)..self.rows {
                let factor = f.mul(m[r * cols + c], inv);
                if factor == 0 {
                    continue;
                }
                for j in c..cols {
                    let sub = f.mul(factor, m[rank * cols + j]);
                    m[r * cols + j] = f.sub(m[r * cols + j], sub);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Solves `self · x = rhs` for a square, invertible matrix.
    pub fn solve(&self, rhs: &[u64]) -> Result<Vec<u64>, AlgebraError> {
        if self.rows != self.cols {
            return Err(AlgebraError::LengthMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        if rhs.len() != self.rows {
            return Err(AlgebraError::LengthMismatch {
                expected: self.rows,
                got: rhs.len(),
            });
        }
        let f = self.field;
        let n = self.rows;
        let w = n + 1;
        let mut m = vec![0u64; n * w];
        for r in 0..n {
            m[r * w..r * w + n].copy_from_slice(self.row(r));
            m[r * w + n] = f.reduce(rhs[r]);
        }
        for c in 0..n {
            let p = (c..n)
                .find(|&r| m[r * w + c] != 0)
                .ok_or(AlgebraError::Singular)?;
            if p != c {
                for j in 0..w {
                    m.swap(p * w + j, c * w + j);
                }
            }
            let inv = f.inv(m[c * w + c])?;
            for j in c..w {
                m[c * w + j] = f.mul(m[c * w + j], inv);
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let factor = m[r * w + c];
                if factor == 0 {
                    continue;
                }
                for j in c..w {
                    let sub = f.mul(factor, m[c * w + j]);
                    m[r * w + j] = f.sub(m[r * w + j], sub);
                }
            }
        }
        Ok((0..n).map(|r| m[r * w + n]).collect())
    }
}

/// Rank of the submatrix formed by `row_set`.
pub fn submatrix_rank(m: &FieldMatrix, row_set: &[usize]) -> Result<usize, AlgebraError> {
    Ok(m.select_rows(row_set)?.rank())
}

/// A `(t, k)` MDS code with a Vandermonde generator `G[i][j] = α_i^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsCode {
    t: usize,
    k: usize,
    generator: FieldMatrix,
    eval_points: Vec<u64>,
}

impl MdsCode {
    /// Evaluation points are `α_i = i + 1 (mod q)` for `i = 0..t`.
    pub fn vandermonde(t: usize, k: usize, field: PrimeField) -> Result<Self, AlgebraError> {
        let points: Vec<u64> = (0..t as u64).map(|i| field.reduce(i + 1)).collect();
        Self::with_points(k, field, points)
    }

    pub fn with_points(k: usize, field: PrimeField, points: Vec<u64>) -> Result<Self, AlgebraError> {
        let t = points.len();
        if k > t {
            return Err(AlgebraError::InvalidDimensions { t, k });
        }
        if t as u64 > field.modulus() {
            return Err(AlgebraError::FieldTooSmall {
                t,
                q: field.modulus(),
            });
        }
        let mut entries = Vec::with_capacity(t * k);
        for &a in &points {
            entries.extend((0..k as u64).map(|j| field.pow(a, j)));
        }
        let generator = FieldMatrix::new(field, t, k, entries)?;
        Ok(Self {
            t,
            k,
            generator,
            eval_points: points,
        })
    }

    pub fn length(&self) -> usize {
        self.t
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    pub fn eval_points(&self) -> &[u64] {
        &self.eval_points
    }

    pub fn field(&self) -> PrimeField {
        self.generator.field()
    }

    pub fn encode(&self, key: &[u64]) -> Result<Vec<u64>, AlgebraError> {
        self.generator.mul_vec(key)
    }

    /// Recovers the key from `k` codeword symbols at distinct `positions`.
    pub fn recover_key(&self, positions: &[usize], values: &[u64]) -> Result<Vec<u64>, AlgebraError> {
        if positions.len() != self.k || values.len() != self.k {
            return Err(AlgebraError::LengthMismatch {
                expected: self.k,
                got: positions.len().min(values.len()),
            });
        }
        if self.k == 0 {
            return Ok(Vec::new());
        }
        self.generator.select_rows(positions)?.solve(values)
    }

    /// Reconstructs the full codeword from any `k` of its symbols.
    pub fn reconstruct(&self, positions: &[usize], values: &[u64]) -> Result<Vec<u64>, AlgebraError> {
        let key = self.recover_key(positions, values)?;
        self.encode(&key)
    }
}

/// Builds the default Vandermonde code for `t` symbols carrying a `k`-symbol key.
pub fn mds_generator(t: usize, k: usize, field: PrimeField) -> Result<MdsCode, AlgebraError> {
    MdsCode::vandermonde(t, k, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::for_each_subset;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn small_field_examples() {
        let f = gf(7);
        assert_eq!(f.add(3, 5), 1);
        assert_eq!(f.inv(3).unwrap(), 5);
        for x in 0..7 {
            assert_eq!(f.mul(0, x), 0);
        }
        assert_eq!(f.inv(0), Err(AlgebraError::ZeroInverse(7)));
    }

    #[test]
    fn element_modulus_mismatch() {
        let a = gf(7).element(3);
        let b = gf(11).element(3);
        assert_eq!(
            a.add(b),
            Err(AlgebraError::ModulusMismatch { left: 7, right: 11 })
        );
        assert_eq!(a.add(gf(7).element(5)).unwrap().value(), 1);
        assert_eq!(a.inv().unwrap().value(), 5);
    }

    #[test]
    fn rejects_composite_modulus() {
        assert_eq!(PrimeField::new(9), Err(AlgebraError::NotPrime(9)));
        assert_eq!(next_prime_at_least(19), 19);
        assert_eq!(next_prime_at_least(20), 23);
    }

    #[test]
    fn vandermonde_rows() {
        let code = mds_generator(4, 2, gf(7)).unwrap();
        let rows: Vec<&[u64]> = (0..4).map(|r| code.generator().row(r)).collect();
        assert_eq!(rows, vec![&[1, 1][..], &[1, 2], &[1, 3], &[1, 4]]);
    }

    #[test]
    fn encode_and_recover() {
        let code = mds_generator(4, 2, gf(7)).unwrap();
        let u = code.encode(&[2, 3]).unwrap();
        assert_eq!(u, vec![5, 1, 4, 0]);
        assert_eq!(code.encode(&[0, 0]).unwrap(), vec![0; 4]);
        // positions {2,3} in 1-based terms are rows 1 and 2
        assert_eq!(code.recover_key(&[1, 2], &[u[1], u[2]]).unwrap(), vec![2, 3]);
        assert_eq!(code.reconstruct(&[0, 3], &[u[0], u[3]]).unwrap(), u);
    }

    #[test]
    fn square_code_is_invertible() {
        let code = mds_generator(5, 5, gf(7)).unwrap();
        assert_eq!(code.generator().rank(), 5);
    }

    #[test]
    fn field_too_small() {
        assert_eq!(
            mds_generator(8, 2, gf(7)).unwrap_err(),
            AlgebraError::FieldTooSmall { t: 8, q: 7 }
        );
        // t == q uses the point 0 and is still MDS
        let code = mds_generator(7, 3, gf(7)).unwrap();
        for_each_subset(7, 3, |s| assert_eq!(submatrix_rank(code.generator(), s).unwrap(), 3));
    }

    #[test]
    fn exhaustive_mds_property_16_4() {
        let code = mds_generator(16, 4, gf(17)).unwrap();
        let mut count = 0;
        for_each_subset(16, 4, |s| {
            assert_eq!(submatrix_rank(code.generator(), s).unwrap(), 4, "{s:?}");
            count += 1;
        });
        assert_eq!(count, 1820);
    }

    #[test]
    fn rank_examples() {
        let f = gf(7);
        let id = FieldMatrix::new(f, 3, 3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        assert_eq!(submatrix_rank(&id, &[0, 1, 2]).unwrap(), 3);
        let rep = FieldMatrix::new(f, 3, 2, vec![1, 2, 1, 2, 1, 3]).unwrap();
        assert_eq!(submatrix_rank(&rep, &[0, 1]).unwrap(), 1);
        assert_eq!(submatrix_rank(&rep, &[1, 2]).unwrap(), 2);
        assert_eq!(
            submatrix_rank(&rep, &[3]),
            Err(AlgebraError::IndexOutOfRange { index: 3, bound: 3 })
        );
    }

    #[test]
    fn encode_length_mismatch() {
        let code = mds_generator(4, 2, gf(7)).unwrap();
        assert_eq!(
            code.encode(&[1]),
            Err(AlgebraError::LengthMismatch { expected: 2, got: 1 })
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn field_axioms(a in 0u64..101, b in 0u64..101, c in 0u64..101) {
                let f = gf(101);
                prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                prop_assert_eq!(f.add(f.sub(a, b), b), a);
                if a != 0 {
                    prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }

            #[test]
            fn recover_any_k_positions(
                key in proptest::collection::vec(0u64..31, 5),
                picks in proptest::sample::subsequence((0..12usize).collect::<Vec<_>>(), 5),
            ) {
                let code = mds_generator(12, 5, gf(31)).unwrap();
                let u = code.encode(&key).unwrap();
                let vals: Vec<u64> = picks.iter().map(|&p| u[p]).collect();
                prop_assert_eq!(code.recover_key(&picks, &vals).unwrap(), key);
                prop_assert_eq!(code.reconstruct(&picks, &vals).unwrap(), u);
            }
        }
    }
}
