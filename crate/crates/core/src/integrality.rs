//! Unimodularity tests in exact integer arithmetic, deciding whether the
//! vertices of the feasible set are integral for every integral `b`.

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::AvlpError;
use crate::matrix::Matrix;
use crate::problem::{SignOrder, SignVector};
use crate::scalar::Scalar;

/// Default cap on the number of determinants one check may evaluate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Dense integer matrix with arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows<I: Into<BigInt> + Clone>(rows: &[Vec<I>]) -> Result<Self, AvlpError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(AvlpError::Dimension(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().cloned().map(Into::into).collect(),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Converts a floating matrix whose entries are all integers.
    pub fn from_scalar<T: Scalar>(m: &Matrix<T>) -> Result<Self, AvlpError> {
        let mut data = Vec::with_capacity(m.rows() * m.cols());
        for (k, &v) in m.as_slice().iter().enumerate() {
            if !v.is_finite() || v.fract() != T::zero() {
                return Err(AvlpError::Precondition(format!(
                    "entry ({}, {}) = {v} is not an integer",
                    k / m.cols().max(1),
                    k % m.cols().max(1)
                )));
            }
            let f = v.to_f64().unwrap();
            let big = if f.abs() < 9.0e15 {
                BigInt::from(f as i64)
            } else {
                BigInt::from(num_traits::FromPrimitive::from_f64(f).unwrap_or(0i128))
            };
            data.push(big);
        }
        Ok(Self {
            rows: m.rows(),
            cols: m.cols(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                out.set(i, k, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            for j in 0..self.cols {
                out.set(k, j, self.get(i, j).clone());
            }
        }
        out
    }

    /// `A - D diag(s)` for `s ∈ {-1, 0, 1}^n`.
    pub fn shifted(a: &Self, d: &Self, s: &SignVector) -> Self {
        let mut out = a.clone();
        for i in 0..a.rows {
            for j in 0..a.cols {
                let sj = s.get(j);
                if sj != 0 {
                    let v = a.get(i, j) - d.get(i, j) * BigInt::from(sj);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }
}

fn serialize_big<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    match v.to_i64() {
        Some(i) => s.serialize_i64(i),
        None => s.serialize_str(&v.to_string()),
    }
}

/// Fraction-free elimination. Returns the final pivot row state so the
/// caller can read either the determinant or the rank.
fn bareiss(mut a: Vec<Vec<BigInt>>, cols: usize) -> (usize, BigInt) {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut sign = 1i8;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            a.swap(p, r);
            sign = -sign;
        }
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v.div_floor(&prev);
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    let det = if r == rows && rows == cols {
        if rows == 0 {
            BigInt::one()
        } else {
            prev * BigInt::from(sign)
        }
    } else {
        BigInt::zero()
    };
    (r, det)
}

/// Exact determinant of a square matrix.
pub fn det_exact(m: &IntMatrix) -> Result<BigInt, AvlpError> {
    if m.rows != m.cols {
        return Err(AvlpError::Dimension(format!(
            "determinant of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    Ok(bareiss(m.to_rows(), m.cols).1)
}

/// Exact rank.
pub fn rank_exact(m: &IntMatrix) -> usize {
    bareiss(m.to_rows(), m.cols).0
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Unimodularity {
    Yes,
    /// The columns `subset` form a basis with determinant `det ∉ {0, ±1}`.
    No {
        subset: Vec<usize>,
        #[serde(serialize_with = "serialize_big")]
        det: BigInt,
    },
}

/// Checks every `n x n` column submatrix of the `n x m` matrix `m`.
pub fn is_unimodular(m: &IntMatrix, budget: u64) -> Result<Unimodularity, AvlpError> {
    let (n, cols) = (m.rows, m.cols);
    if n > cols {
        return Err(AvlpError::Precondition(format!(
            "unimodularity needs at least as many columns as rows, got {n}x{cols}"
        )));
    }
    let count = binomial(cols, n);
    if count > budget {
        return Err(AvlpError::Limit(format!("{count} bases exceed the budget {budget}")));
    }
    Ok(first_bad_basis(m).map_or(Unimodularity::Yes, |(subset, det)| Unimodularity::No { subset, det }))
}

fn first_bad_basis(m: &IntMatrix) -> Option<(Vec<usize>, BigInt)> {
    let (n, cols) = (m.rows, m.cols);
    for subset in (0..cols).combinations(n) {
        let det = det_exact(&m.select_cols(&subset)).expect("square");
        if det.abs() > BigInt::one() {
            return Some((subset, det));
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralityMethod {
    Full,
    RankOne,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum IntegralityVerdict {
    IntegralForAllB,
    /// Rows `basis` of `A - D diag(sign)` form a basis with determinant
    /// `det ∉ {0, ±1}`.
    NotIntegral {
        sign: SignVector,
        basis: Vec<usize>,
        #[serde(serialize_with = "serialize_big")]
        det: BigInt,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegralityReport {
    pub verdict: IntegralityVerdict,
    pub checked_signs: usize,
    pub method: IntegralityMethod,
}

impl IntegralityReport {
    pub fn is_integral(&self) -> bool {
        self.verdict == IntegralityVerdict::IntegralForAllB
    }
}

fn check_shapes(a: &IntMatrix, d: &IntMatrix) -> Result<(), AvlpError> {
    if (a.rows, a.cols) != (d.rows, d.cols) {
        return Err(AvlpError::Dimension(format!(
            "A is {}x{} but D is {}x{}",
            a.rows, a.cols, d.rows, d.cols
        )));
    }
    Ok(())
}

fn nonzero_int_columns(d: &IntMatrix) -> Vec<usize> {
    (0..d.cols)
        .filter(|&j| (0..d.rows).any(|i| !d.get(i, j).is_zero()))
        .collect()
}

fn scan(
    a: &IntMatrix,
    d: &IntMatrix,
    signs: &[SignVector],
    budget: u64,
    method: IntegralityMethod,
) -> Result<IntegralityReport, AvlpError> {
    let (m, n) = (a.rows, a.cols);
    let per_sign = binomial(m, n);
    let total = per_sign.saturating_mul(signs.len() as u64);
    if total > budget {
        return Err(AvlpError::Limit(format!(
            "{} sign vectors x {per_sign} bases exceed the budget {budget}",
            signs.len()
        )));
    }
    let found: Vec<Option<(Vec<usize>, BigInt)>> = signs
        .par_iter()
        .map(|s| {
            if n > m {
                return None;
            }
            first_bad_basis(&IntMatrix::shifted(a, d, s).transpose())
        })
        .collect();
    for (s, hit) in signs.iter().zip(found) {
        if let Some((basis, det)) = hit {
            return Ok(IntegralityReport {
                verdict: IntegralityVerdict::NotIntegral {
                    sign: s.clone(),
                    basis,
                    det,
                },
                checked_signs: signs.iter().position(|t| t == s).unwrap() + 1,
                method,
            });
        }
    }
    Ok(IntegralityReport {
        verdict: IntegralityVerdict::IntegralForAllB,
        checked_signs: signs.len(),
        method,
    })
}

/// Checks unimodularity of `(A - D diag(s))^T` for every `s ∈ {±1}^n`.
///
/// Coordinates whose `D` column is zero do not influence the matrix and are
/// fixed to `+1`; the others are scanned from `(1, ..., 1)` downwards.
pub fn integrality_full(a: &IntMatrix, d: &IntMatrix) -> Result<IntegralityReport, AvlpError> {
    integrality_full_with_budget(a, d, DEFAULT_BUDGET)
}

pub fn integrality_full_with_budget(a: &IntMatrix, d: &IntMatrix, budget: u64) -> Result<IntegralityReport, AvlpError> {
    check_shapes(a, d)?;
    let active = nonzero_int_columns(d);
    if active.len() >= 63 {
        return Err(AvlpError::Limit(format!("{} sign coordinates", active.len())));
    }
    let signs: Vec<SignVector> = SignVector::enumerate(a.cols, &active, 1, SignOrder::PlusFirst).collect();
    scan(a, d, &signs, budget, IntegralityMethod::Full)
}

/// Sign vectors with at most two nonzero entries: `0`, then `±e_j`, then
/// pairs, with `+1` before `-1`.
pub fn sparse_signs(n: usize) -> Vec<SignVector> {
    let mut out = vec![SignVector::zeros(n)];
    for j in 0..n {
        for v in [1, -1] {
            let mut s = SignVector::zeros(n);
            s.set(j, v);
            out.push(s);
        }
    }
    for (j, k) in (0..n).tuple_combinations() {
        for (vj, vk) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let mut s = SignVector::zeros(n);
            s.set(j, vj);
            s.set(k, vk);
            out.push(s);
        }
    }
    out
}

/// Same verdict as [`integrality_full`] when `D` has rank one, using only
/// sign vectors with at most two nonzero entries.
pub fn integrality_rank_one(a: &IntMatrix, d: &IntMatrix) -> Result<IntegralityReport, AvlpError> {
    check_shapes(a, d)?;
    let r = rank_exact(d);
    if r != 1 {
        return Err(AvlpError::Precondition(format!("D has rank {r}, not 1")));
    }
    scan(a, d, &sparse_signs(a.cols), DEFAULT_BUDGET, IntegralityMethod::RankOne)
}

/// Confirms unimodularity for every `s ∈ {±1, 0}^n` on an instance that
/// passed [`integrality_full`].
pub fn extended_signs_check(a: &IntMatrix, d: &IntMatrix) -> Result<bool, AvlpError> {
    if !integrality_full(a, d)?.is_integral() {
        return Err(AvlpError::Precondition(
            "the instance does not pass the ±1 check".into(),
        ));
    }
    let n = a.cols;
    if n > 12 {
        return Err(AvlpError::Limit(format!("3^{n} sign vectors")));
    }
    let signs: Vec<SignVector> = (0..n)
        .map(|_| [1i8, 0, -1])
        .multi_cartesian_product()
        .map(|v| SignVector::new(v).expect("valid signs"))
        .collect();
    let signs = if n == 0 { vec![SignVector::zeros(0)] } else { signs };
    Ok(scan(a, d, &signs, u64::MAX, IntegralityMethod::Full)?.is_integral())
}
