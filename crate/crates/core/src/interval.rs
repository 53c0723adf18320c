//! Interval arithmetic with outward rounding and verified enclosures of
//! interval linear systems.
//!
//! Rounding is directed without touching the FPU mode: every operation is
//! evaluated in round-to-nearest, an error-free transformation recovers the
//! sign of the rounding error, and the bound is stepped by one ulp only when
//! it landed on the wrong side. Exact results therefore stay exact.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::AvlpError;
use crate::matrix::{Lu, Matrix};
use crate::scalar::Scalar;

/// `a + b` rounded towards `-inf` and `+inf`.
fn add_dir<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    if !s.is_finite() {
        return (s, s);
    }
    // TwoSum: `err` is the exact rounding error `a + b - s`.
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err > T::zero() {
        (s, s.next_up())
    } else if err < T::zero() {
        (s.next_down(), s)
    } else {
        (s, s)
    }
}

fn mul_dir<T: Scalar>(a: T, b: T) -> (T, T) {
    let p = a * b;
    if !p.is_finite() || p == T::zero() && (a == T::zero() || b == T::zero()) {
        return (p, p);
    }
    let err = a.mul_add(b, -p);
    if err > T::zero() {
        (p, p.next_up())
    } else if err < T::zero() {
        (p.next_down(), p)
    } else {
        (p, p)
    }
}

fn div_dir<T: Scalar>(a: T, b: T) -> (T, T) {
    let q = a / b;
    if !q.is_finite() {
        return (q, q);
    }
    // `a - q b` is exact, and `a/b - q` has its sign times sign(b).
    let rem = (-q).mul_add(b, a);
    let err = if b > T::zero() { rem } else { -rem };
    if err > T::zero() {
        (q, q.next_up())
    } else if err < T::zero() {
        (q.next_down(), q)
    } else {
        (q, q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self, AvlpError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(AvlpError::Precondition(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn zero() -> Self {
        Self::point(T::zero())
    }

    /// `[mid - rad, mid + rad]`, rounded outward.
    pub fn from_mid_rad(mid: T, rad: T) -> Self {
        debug_assert!(rad >= T::zero());
        Self {
            lo: add_dir(mid, -rad).0,
            hi: add_dir(mid, rad).1,
        }
    }

    /// `[-r, r]`.
    pub fn symmetric(r: T) -> Self {
        Self {
            lo: -r.abs(),
            hi: r.abs(),
        }
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    /// Midpoint, not necessarily representable exactly.
    pub fn mid(&self) -> T {
        self.lo + (self.hi - self.lo) / T::lit(2.0)
    }

    pub fn width(&self) -> T {
        add_dir(self.hi, -self.lo).1
    }

    /// Largest absolute value of a member.
    pub fn mag(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value of a member.
    pub fn mig(&self) -> T {
        if self.contains(T::zero()) {
            T::zero()
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn subset_of(&self, other: &Self) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Inclusion in the topological interior of `other`.
    pub fn interior_of(&self, other: &Self) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn scale(&self, k: T) -> Self {
        *self * Self::point(k)
    }

    /// Division; fails when the divisor contains zero.
    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.contains(T::zero()) {
            return None;
        }
        let cands = [
            div_dir(self.lo, rhs.lo),
            div_dir(self.lo, rhs.hi),
            div_dir(self.hi, rhs.lo),
            div_dir(self.hi, rhs.hi),
        ];
        Some(Self::from_candidates(&cands))
    }

    fn from_candidates(c: &[(T, T)]) -> Self {
        let lo = c.iter().map(|p| p.0).fold(T::infinity(), T::min);
        let hi = c.iter().map(|p| p.1).fold(T::neg_infinity(), T::max);
        Self { lo, hi }
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl<T: Scalar> Add for Interval<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            lo: add_dir(self.lo, rhs.lo).0,
            hi: add_dir(self.hi, rhs.hi).1,
        }
    }
}

impl<T: Scalar> Sub for Interval<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for Interval<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl<T: Scalar> Mul for Interval<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let cands = [
            mul_dir(self.lo, rhs.lo),
            mul_dir(self.lo, rhs.hi),
            mul_dir(self.hi, rhs.lo),
            mul_dir(self.hi, rhs.hi),
        ];
        Self::from_candidates(&cands)
    }
}

pub type IntervalVector<T> = Vec<Interval<T>>;

pub fn point_vector<T: Scalar>(v: &[T]) -> IntervalVector<T> {
    v.iter().map(|&x| Interval::point(x)).collect()
}

pub fn idot<T: Scalar>(a: &[Interval<T>], b: &[Interval<T>]) -> Interval<T> {
    a.iter().zip(b).fold(Interval::zero(), |acc, (&x, &y)| acc + x * y)
}

/// The interval matrix `[mid - rad, mid + rad]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalMatrix<T> {
    mid: Matrix<T>,
    rad: Matrix<T>,
}

impl<T: Scalar> IntervalMatrix<T> {
    pub fn new(mid: Matrix<T>, rad: Matrix<T>) -> Result<Self, AvlpError> {
        if mid.shape() != rad.shape() {
            return Err(AvlpError::Dimension(format!(
                "midpoint is {:?} but radius is {:?}",
                mid.shape(),
                rad.shape()
            )));
        }
        if let Some(k) = rad.as_slice().iter().position(|&r| r.is_nan() || r < T::zero()) {
            let cols = rad.cols().max(1);
            return Err(AvlpError::NegativeRadius {
                row: k / cols,
                col: k % cols,
                value: rad.as_slice()[k].to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mid, rad })
    }

    pub fn point(mid: Matrix<T>) -> Self {
        let rad = Matrix::zeros(mid.rows(), mid.cols());
        Self { mid, rad }
    }

    pub fn mid(&self) -> &Matrix<T> {
        &self.mid
    }

    pub fn rad(&self) -> &Matrix<T> {
        &self.rad
    }

    pub fn rows(&self) -> usize {
        self.mid.rows()
    }

    pub fn cols(&self) -> usize {
        self.mid.cols()
    }

    pub fn entry(&self, i: usize, j: usize) -> Interval<T> {
        Interval::from_mid_rad(self.mid[(i, j)], self.rad[(i, j)])
    }

    pub fn row(&self, i: usize) -> IntervalVector<T> {
        (0..self.cols()).map(|j| self.entry(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            mid: self.mid.transpose(),
            rad: self.rad.transpose(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            mid: self.mid.select_rows(idx),
            rad: self.rad.select_rows(idx),
        }
    }

    /// Whether `a` is a realization, with a small relative slack.
    pub fn contains(&self, a: &Matrix<T>, tol: T) -> bool {
        a.shape() == self.mid.shape()
            && a.as_slice()
                .iter()
                .zip(self.mid.as_slice())
                .zip(self.rad.as_slice())
                .all(|((&v, &m), &r)| (v - m).abs() <= r + tol * (T::one() + m.abs()))
    }

    pub fn mul_vec(&self, x: &[Interval<T>]) -> IntervalVector<T> {
        (0..self.rows()).map(|i| idot(&self.row(i), x)).collect()
    }
}

/// Spectral radius estimate of a nonnegative matrix by power iteration,
/// returned as an upper estimate from the last Collatz-Wielandt ratio.
pub fn spectral_radius_nonneg<T: Scalar>(m: &Matrix<T>) -> T {
    let n = m.rows();
    if n == 0 {
        return T::zero();
    }
    let mut v = vec![T::one(); n];
    let mut est = T::zero();
    for _ in 0..200 {
        let w = m.mul_vec(&v);
        let ratio = w
            .iter()
            .zip(&v)
            .map(|(&wi, &vi)| if vi > T::zero() { wi / vi } else { T::zero() })
            .fold(T::zero(), T::max);
        let norm = w.iter().fold(T::zero(), |a, &x| a.max(x));
        if norm == T::zero() {
            return T::zero();
        }
        // Keep the vector positive so the ratio stays an upper bound.
        let floor = norm * T::lit(1e-12);
        v = w.iter().map(|&x| (x / norm).max(floor)).collect();
        if (ratio - est).abs() <= T::lit(1e-12) * ratio {
            return ratio;
        }
        est = ratio;
    }
    est
}

const MAX_KRAWCZYK: usize = 30;
const GAUSS_SEIDEL_SWEEPS: usize = 5;

/// Encloses `{x : Ã x = rhs, Ã ∈ m}` for a square interval matrix.
///
/// Midpoint-inverse preconditioning, Krawczyk iteration with ε-inflation
/// to prove existence, then Gauss-Seidel sweeps to tighten the result.
pub fn enclose_solutions<T: Scalar>(m: &IntervalMatrix<T>, rhs: &[T]) -> Result<IntervalVector<T>, AvlpError> {
    let n = m.rows();
    if m.cols() != n || rhs.len() != n {
        return Err(AvlpError::Dimension(format!(
            "interval system is {}x{} with {} right-hand sides",
            n,
            m.cols(),
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let lu = Lu::factor(m.mid(), T::pivot_tol())
        .ok_or_else(|| AvlpError::Precondition("midpoint matrix is singular".into()))?;
    let r = lu.inverse();
    let x0 = lu.solve(rhs);

    let ri: Vec<IntervalVector<T>> = (0..n).map(|i| point_vector(r.row(i))).collect();
    let cols: Vec<IntervalVector<T>> = (0..n).map(|j| (0..n).map(|i| m.entry(i, j)).collect()).collect();
    // G = I - R Ã, enclosed entrywise.
    let g: Vec<IntervalVector<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let delta = if i == j { T::one() } else { T::zero() };
                    Interval::point(delta) - idot(&ri[i], &cols[j])
                })
                .collect()
        })
        .collect();
    let mag = Matrix::from_rows(
        &g.iter()
            .map(|row| row.iter().map(Interval::mag).collect())
            .collect::<Vec<_>>(),
    )?;
    let rho = spectral_radius_nonneg(&mag);
    if rho.is_nan() || rho >= T::one() {
        return Err(AvlpError::Verification(format!(
            "preconditioned radius has spectral bound {rho} >= 1"
        )));
    }
    // z = R (rhs - Ã x0).
    let x0i = point_vector(&x0);
    let resid: IntervalVector<T> = (0..n)
        .map(|i| Interval::point(rhs[i]) - idot(&m.row(i), &x0i))
        .collect();
    let z: IntervalVector<T> = ri.iter().map(|row| idot(row, &resid)).collect();

    let krawczyk = |e: &IntervalVector<T>| -> IntervalVector<T> { (0..n).map(|i| z[i] + idot(&g[i], e)).collect() };

    let eps = T::lit(0.1);
    let eta = T::min_positive_value() * T::lit(1e6);
    let mut e = z.clone();
    let mut verified = None;
    for _ in 0..MAX_KRAWCZYK {
        let y: IntervalVector<T> = e
            .iter()
            .map(|iv| {
                let w = iv.width() * eps + eta;
                Interval::new(add_dir(iv.lo(), -w).0, add_dir(iv.hi(), w).1).expect("ordered")
            })
            .collect();
        let k = krawczyk(&y);
        if k.iter().zip(&y).all(|(a, b)| a.interior_of(b)) {
            verified = Some(k);
            break;
        }
        e = k;
    }
    let mut e = verified
        .ok_or_else(|| AvlpError::Verification(format!("no verified enclosure after {MAX_KRAWCZYK} iterations")))?;

    for _ in 0..GAUSS_SEIDEL_SWEEPS {
        for i in 0..n {
            let denom = Interval::point(T::one()) - g[i][i];
            let mut acc = z[i];
            for j in (0..n).filter(|&j| j != i) {
                acc = acc + g[i][j] * e[j];
            }
            if let Some(q) = acc.checked_div(&denom) {
                if let Some(t) = q.intersect(&e[i]) {
                    e[i] = t;
                }
            }
        }
    }
    let mut x: IntervalVector<T> = x0.iter().zip(&e).map(|(&x, &d)| Interval::point(x) + d).collect();

    // Sweeps on the preconditioned system R Ã x = R rhs itself, which is
    // tighter than the residual form once x is bounded.
    let rb: IntervalVector<T> = ri.iter().map(|row| idot(row, &point_vector(rhs))).collect();
    let c: Vec<IntervalVector<T>> = g
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &gij)| Interval::point(if i == j { T::one() } else { T::zero() }) - gij)
                .collect()
        })
        .collect();
    for _ in 0..GAUSS_SEIDEL_SWEEPS {
        for i in 0..n {
            let mut acc = rb[i];
            for j in (0..n).filter(|&j| j != i) {
                acc = acc - c[i][j] * x[j];
            }
            if let Some(t) = acc.checked_div(&c[i][i]).and_then(|q| q.intersect(&x[i])) {
                x[i] = t;
            }
        }
    }
    Ok(x)
}
