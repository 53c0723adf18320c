//! The canonical problem `max c^T x  s.t.  A x - D|x| <= b` with `D >= 0`,
//! together with sign vectors and the per-orthant linear restriction.

use std::fmt;

use serde::Serialize;

use crate::error::AvlpError;
use crate::matrix::Matrix;
use crate::scalar::{sgn, Scalar};
use crate::simplex::LinearProgram;

/// An element of `{-1, 0, +1}^n`.
///
/// Ordered lexicographically with `-1 < 0 < +1`, which is the order used for
/// tie-breaking between orthants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SignVector(Vec<i8>);

/// Order in which `{±1}` patterns are enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignOrder {
    /// `-1` before `+1` in every coordinate (lexicographic).
    MinusFirst,
    /// `+1` before `-1`.
    PlusFirst,
}

impl SignVector {
    pub fn new(entries: Vec<i8>) -> Result<Self, AvlpError> {
        if let Some(&bad) = entries.iter().find(|&&s| !(-1..=1).contains(&s)) {
            return Err(AvlpError::BadSign(bad));
        }
        Ok(Self(entries))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// Sign pattern of `x` with the convention `sgn(0) = +1`.
    pub fn of<T: Scalar>(x: &[T]) -> Self {
        Self(x.iter().map(|&v| if v >= T::zero() { 1 } else { -1 }).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn get(&self, j: usize) -> i8 {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, v: i8) {
        assert!((-1..=1).contains(&v));
        self.0[j] = v;
    }

    /// Number of nonzero entries.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&s| s != 0)
    }

    pub fn to_scalars<T: Scalar>(&self) -> Vec<T> {
        self.0.iter().map(|&s| T::from_i8(s).unwrap()).collect()
    }

    /// Enumerates all patterns with `±1` on `active` and `fill` elsewhere.
    ///
    /// The first entry of `active` is the most significant coordinate, so
    /// [`SignOrder::MinusFirst`] yields lexicographic order.
    pub fn enumerate(n: usize, active: &[usize], fill: i8, order: SignOrder) -> impl Iterator<Item = SignVector> + '_ {
        let l = active.len();
        assert!(l < 63, "too many sign coordinates to enumerate");
        let (zero_bit, one_bit) = match order {
            SignOrder::MinusFirst => (-1i8, 1i8),
            SignOrder::PlusFirst => (1, -1),
        };
        (0u64..(1u64 << l)).map(move |k| {
            let mut s = vec![fill; n];
            for (pos, &j) in active.iter().enumerate() {
                let bit = (k >> (l - 1 - pos)) & 1;
                s[j] = if bit == 0 { zero_bit } else { one_bit };
            }
            SignVector(s)
        })
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Problem data with `D` of arbitrary sign.
#[derive(Clone, Debug, PartialEq)]
pub struct RawProblem<T> {
    pub a: Matrix<T>,
    pub d: Matrix<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> RawProblem<T> {
    pub fn new(a: Matrix<T>, d: Matrix<T>, b: Vec<T>, c: Vec<T>) -> Result<Self, AvlpError> {
        check_dims(&a, &d, &b, &c)?;
        Ok(Self { a, d, b, c })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Residual `A x - D|x| - b` with the unrestricted `D`.
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        let ax = self.a.mul_vec(x);
        let abs: Vec<T> = x.iter().map(|v| v.abs()).collect();
        let dx = self.d.mul_vec(&abs);
        ax.iter()
            .zip(&dx)
            .zip(&self.b)
            .map(|((&p, &q), &r)| p - q - r)
            .collect()
    }
}

fn check_dims<T: Scalar>(a: &Matrix<T>, d: &Matrix<T>, b: &[T], c: &[T]) -> Result<(), AvlpError> {
    if a.shape() != d.shape() {
        return Err(AvlpError::Dimension(format!(
            "A is {:?} but D is {:?}",
            a.shape(),
            d.shape()
        )));
    }
    if b.len() != a.rows() {
        return Err(AvlpError::Dimension(format!(
            "b has length {} but A has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if c.len() != a.cols() {
        return Err(AvlpError::Dimension(format!(
            "c has length {} but A has {} columns",
            c.len(),
            a.cols()
        )));
    }
    Ok(())
}

/// `max c^T x  s.t.  A x - D|x| <= b`, `D >= 0`.
///
/// Immutable after construction; [`AvlpProblem::new`] rejects a negative
/// entry of `D` and inconsistent shapes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AvlpProblem<T> {
    a: Matrix<T>,
    d: Matrix<T>,
    b: Vec<T>,
    c: Vec<T>,
}

impl<T: Scalar> AvlpProblem<T> {
    pub fn new(a: Matrix<T>, d: Matrix<T>, b: Vec<T>, c: Vec<T>) -> Result<Self, AvlpError> {
        check_dims(&a, &d, &b, &c)?;
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let v = d[(i, j)];
                if v.is_nan() || v < T::zero() {
                    return Err(AvlpError::NegativeRadius {
                        row: i,
                        col: j,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(Self { a, d, b, c })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(a: &[Vec<T>], d: &[Vec<T>], b: Vec<T>, c: Vec<T>) -> Result<Self, AvlpError> {
        let n = c.len();
        let mk = |rows: &[Vec<T>]| {
            if rows.is_empty() {
                Ok(Matrix::zeros(0, n))
            } else {
                Matrix::from_rows(rows)
            }
        };
        Self::new(mk(a)?, mk(d)?, b, c)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    #[inline]
    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    #[inline]
    pub fn d(&self) -> &Matrix<T> {
        &self.d
    }

    #[inline]
    pub fn b(&self) -> &[T] {
        &self.b
    }

    #[inline]
    pub fn c(&self) -> &[T] {
        &self.c
    }

    /// Same constraints with a different right-hand side.
    pub fn with_rhs(&self, b: Vec<T>) -> Result<Self, AvlpError> {
        Self::new(self.a.clone(), self.d.clone(), b, self.c.clone())
    }

    pub fn with_objective(&self, c: Vec<T>) -> Result<Self, AvlpError> {
        Self::new(self.a.clone(), self.d.clone(), self.b.clone(), c)
    }

    pub fn objective(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.c, x)
    }

    /// `A - D diag(s)`; zero entries of `s` leave the column of `A` untouched.
    pub fn shifted_matrix(&self, s: &SignVector) -> Matrix<T> {
        let sv = s.to_scalars::<T>();
        self.a.zip_map(&self.d.scale_cols(&sv), |a, ds| a - ds)
    }

    /// Applies a row permutation to `(A, D, b)`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self {
            a: self.a.permute_rows(perm),
            d: self.d.permute_rows(perm),
            b: perm.iter().map(|&i| self.b[i]).collect(),
            c: self.c.clone(),
        }
    }

    /// Applies a column permutation to `(A, D, c)`: new column `j` is old
    /// column `perm[j]`.
    pub fn permute_cols(&self, perm: &[usize]) -> Self {
        Self {
            a: self.a.select_cols(perm),
            d: self.d.select_cols(perm),
            b: self.b.clone(),
            c: perm.iter().map(|&j| self.c[j]).collect(),
        }
    }

    pub fn to_raw(&self) -> RawProblem<T> {
        RawProblem {
            a: self.a.clone(),
            d: self.d.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }
}

/// Rewrites a problem with sign-indefinite `D = D⁺ - D⁻` as a canonical one.
///
/// When `D⁻ = 0` the input is returned unchanged. Otherwise the result lives
/// in `(x, y)` with rows `A x - D⁺|x| + D⁻ y <= b`, `x - y <= 0`,
/// `-x - y <= 0`, and `x` is feasible for the raw system iff `(x, |x|)` is
/// feasible for the result.
pub fn normalize<T: Scalar>(raw: &RawProblem<T>) -> Result<AvlpProblem<T>, AvlpError> {
    check_dims(&raw.a, &raw.d, &raw.b, &raw.c)?;
    let (m, n) = raw.a.shape();
    let dplus = raw.d.map(|v| v.max(T::zero()));
    let dminus = raw.d.map(|v| (-v).max(T::zero()));
    if dminus.is_zero() {
        return AvlpProblem::new(raw.a.clone(), dplus, raw.b.clone(), raw.c.clone());
    }
    let eye = Matrix::<T>::identity(n);
    let top = raw.a.hstack(&dminus)?;
    let upper = eye.hstack(&eye.neg())?;
    let lower = eye.neg().hstack(&eye.neg())?;
    let a = top.vstack(&upper)?.vstack(&lower)?;

    let d_top = dplus.hstack(&Matrix::zeros(m, n))?;
    let d = d_top.vstack(&Matrix::zeros(2 * n, 2 * n))?;

    let mut b = raw.b.clone();
    b.extend(std::iter::repeat_n(T::zero(), 2 * n));
    let mut c = raw.c.clone();
    c.extend(std::iter::repeat_n(T::zero(), n));
    AvlpProblem::new(a, d, b, c)
}

/// Linear program of the orthant `diag(s) x >= 0`:
/// `max c^T x  s.t.  (A - D diag(s)) x <= b,  -diag(s) x <= 0`.
pub fn orthant_restriction<T: Scalar>(p: &AvlpProblem<T>, s: &SignVector) -> Result<LinearProgram<T>, AvlpError> {
    if s.len() != p.n() {
        return Err(AvlpError::Dimension(format!(
            "sign vector has length {}, problem has {} variables",
            s.len(),
            p.n()
        )));
    }
    if let Some(j) = s.entries().iter().position(|&v| v == 0) {
        return Err(AvlpError::ZeroSign(j));
    }
    Ok(orthant_lp(p, s, p.c()))
}

/// Like [`orthant_restriction`], but a zero in `s` leaves that coordinate
/// sign-free (no orthant row). Used on zero columns of `D`.
pub(crate) fn orthant_lp<T: Scalar>(p: &AvlpProblem<T>, s: &SignVector, obj: &[T]) -> LinearProgram<T> {
    let n = p.n();
    let g = p.shifted_matrix(s);
    let mut rows: Vec<Vec<T>> = g.iter_rows().map(<[T]>::to_vec).collect();
    let mut h = p.b().to_vec();
    for j in 0..n {
        let sj = s.get(j);
        if sj != 0 {
            let mut r = vec![T::zero(); n];
            r[j] = -T::from_i8(sj).unwrap();
            rows.push(r);
            h.push(T::zero());
        }
    }
    let g = if rows.is_empty() {
        Matrix::zeros(0, n)
    } else {
        Matrix::from_rows(&rows).expect("orthant rows")
    };
    LinearProgram::new(g, h, obj.to_vec()).expect("orthant LP dimensions")
}

/// Result of a feasibility check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership<T> {
    pub feasible: bool,
    /// `A x - D|x| - b`.
    pub residual: Vec<T>,
}

impl<T: Scalar> Membership<T> {
    pub fn max_violation(&self) -> T {
        self.residual.iter().fold(T::zero(), |acc, &r| acc.max(r))
    }
}

/// Evaluates `A x - D|x| <= b + tol (1 + |b|)` componentwise.
pub fn membership<T: Scalar>(p: &AvlpProblem<T>, x: &[T], tol: T) -> Membership<T> {
    assert_eq!(x.len(), p.n(), "point dimension");
    let residual = residual(p, x);
    let feasible = residual
        .iter()
        .zip(p.b())
        .all(|(&r, &bi)| r <= tol * (T::one() + bi.abs()));
    Membership { feasible, residual }
}

pub(crate) fn residual<T: Scalar>(p: &AvlpProblem<T>, x: &[T]) -> Vec<T> {
    let ax = p.a().mul_vec(x);
    let abs: Vec<T> = x.iter().map(|v| v.abs()).collect();
    let dx = p.d().mul_vec(&abs);
    ax.iter()
        .zip(&dx)
        .zip(p.b())
        .map(|((&u, &v), &bi)| u - v - bi)
        .collect()
}

/// Default relative feasibility tolerance.
pub fn default_tol<T: Scalar>() -> T {
    T::feas_tol()
}

/// Indices of the nonzero columns of `D`.
pub fn nonzero_columns<T: Scalar>(d: &Matrix<T>) -> Vec<usize> {
    (0..d.cols())
        .filter(|&j| (0..d.rows()).any(|i| d[(i, j)] != T::zero()))
        .collect()
}

/// `sgn` applied entrywise, as scalars.
pub fn sign_of<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| sgn(v)).collect()
}
