//! Compilers from 0-1 programs, disjunctions, unions of polyhedra and
//! orthant-wise convex sets into the canonical absolute value form.

use std::ops::Range;

use serde::Serialize;

use crate::error::AvlpError;
use crate::exact::find_feasible;
use crate::matrix::Matrix;
use crate::problem::{membership, AvlpProblem, SignOrder, SignVector};
use crate::scalar::{dot, Scalar};
use crate::simplex::{solve_lp, LinearProgram, LpOutcome};

/// `{x : G x <= h}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyhedron<T> {
    g: Matrix<T>,
    h: Vec<T>,
}

impl<T: Scalar> Polyhedron<T> {
    pub fn new(g: Matrix<T>, h: Vec<T>) -> Result<Self, AvlpError> {
        if g.rows() != h.len() {
            return Err(AvlpError::Dimension(format!(
                "G has {} rows, h has {}",
                g.rows(),
                h.len()
            )));
        }
        Ok(Self { g, h })
    }

    pub fn from_rows(n: usize, rows: &[Vec<T>], h: Vec<T>) -> Result<Self, AvlpError> {
        let g = if rows.is_empty() {
            Matrix::zeros(0, n)
        } else {
            Matrix::from_rows(rows)?
        };
        if g.cols() != n {
            return Err(AvlpError::Dimension(format!(
                "rows have {} entries, expected {n}",
                g.cols()
            )));
        }
        Self::new(g, h)
    }

    pub fn g(&self) -> &Matrix<T> {
        &self.g
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.g.cols()
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        self.g
            .mul_vec(x)
            .iter()
            .zip(&self.h)
            .all(|(&gx, &hi)| gx <= hi + tol * (T::one() + hi.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionOfPolyhedra<T> {
    pieces: Vec<Polyhedron<T>>,
}

impl<T: Scalar> UnionOfPolyhedra<T> {
    pub fn new(pieces: Vec<Polyhedron<T>>) -> Result<Self, AvlpError> {
        let Some(first) = pieces.first() else {
            return Err(AvlpError::Precondition("a union needs at least one piece".into()));
        };
        let n = first.n();
        if let Some(i) = pieces.iter().position(|p| p.n() != n) {
            return Err(AvlpError::Dimension(format!(
                "piece {i} lives in dimension {}, piece 0 in {n}",
                pieces[i].n()
            )));
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[Polyhedron<T>] {
        &self.pieces
    }

    pub fn n(&self) -> usize {
        self.pieces[0].n()
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        self.pieces.iter().any(|p| p.contains(x, tol))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxRole {
    /// `±1` variables of a 0-1 encoding.
    Sign,
    /// Piece selectors of a union encoding.
    Selector,
    /// Affine residuals pinned by equality rows.
    Residual,
    /// Bounds on partial minima or on absolute values.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuxBlock {
    pub role: AuxRole,
    pub vars: Range<usize>,
}

/// An encoded problem together with the meaning of its variables. The
/// original variables always come first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Encoding<T> {
    pub problem: AvlpProblem<T>,
    pub original_vars: Range<usize>,
    pub aux: Vec<AuxBlock>,
}

impl<T: Scalar> Encoding<T> {
    /// Wraps a hand-built problem whose first `n_original` variables are the
    /// original ones and the rest are auxiliary.
    pub fn new(problem: AvlpProblem<T>, n_original: usize, aux: Vec<AuxBlock>) -> Result<Self, AvlpError> {
        let total = problem.n();
        if n_original > total {
            return Err(AvlpError::Dimension(format!(
                "{n_original} original variables but only {total} in the problem"
            )));
        }
        let mut next = n_original;
        for block in &aux {
            if block.vars.start != next || block.vars.end > total {
                return Err(AvlpError::Dimension(format!(
                    "auxiliary block {:?} does not continue at {next}",
                    block.vars
                )));
            }
            next = block.vars.end;
        }
        if next != total {
            return Err(AvlpError::Dimension(format!(
                "auxiliary blocks cover {next} of {total} variables"
            )));
        }
        Ok(Self {
            problem,
            original_vars: 0..n_original,
            aux,
        })
    }

    pub fn n_original(&self) -> usize {
        self.original_vars.end
    }

    pub fn n_aux(&self) -> usize {
        self.problem.n() - self.n_original()
    }

    /// Decides whether some auxiliary completion of `x` is feasible.
    ///
    /// With `x` fixed the system is again an absolute value system in the
    /// auxiliary variables alone; it is decided by orthant enumeration over
    /// those of its columns that carry absolute values.
    pub fn contains(&self, x: &[T], tol: T) -> Result<bool, AvlpError> {
        let n = self.n_original();
        if x.len() != n {
            return Err(AvlpError::Dimension(format!(
                "point has {} entries, encoding has {n} original variables",
                x.len()
            )));
        }
        let p = &self.problem;
        let (m, total) = (p.m(), p.n());
        if total == n {
            return Ok(membership(p, x, tol).feasible);
        }
        let aux: Vec<usize> = (n..total).collect();
        let orig: Vec<usize> = (0..n).collect();
        let abs_x: Vec<T> = x.iter().map(|v| v.abs()).collect();
        let ax = p.a().select_cols(&orig).mul_vec(x);
        let dx = p.d().select_cols(&orig).mul_vec(&abs_x);
        let rhs: Vec<T> = (0..m)
            .map(|i| p.b()[i] - ax[i] + dx[i] + tol * (T::one() + p.b()[i].abs()))
            .collect();
        let reduced = AvlpProblem::new(
            p.a().select_cols(&aux),
            p.d().select_cols(&aux),
            rhs,
            vec![T::zero(); aux.len()],
        )?;
        Ok(find_feasible(&reduced)?.is_some())
    }
}

/// Affine expression `coef^T z + constant` over the variables of an
/// encoding under construction.
#[derive(Clone, Debug)]
struct Affine<T> {
    coef: Vec<T>,
    constant: T,
}

impl<T: Scalar> Affine<T> {
    fn zero(width: usize) -> Self {
        Self {
            coef: vec![T::zero(); width],
            constant: T::zero(),
        }
    }

    fn var(width: usize, j: usize) -> Self {
        let mut e = Self::zero(width);
        e.coef[j] = T::one();
        e
    }

    /// `g^T x - h` placed on the leading variables.
    fn row(width: usize, g: &[T], h: T) -> Self {
        let mut e = Self::zero(width);
        e.coef[..g.len()].copy_from_slice(g);
        e.constant = -h;
        e
    }

    fn add(&self, other: &Self, k: T) -> Self {
        Self {
            coef: self.coef.iter().zip(&other.coef).map(|(&a, &b)| a + k * b).collect(),
            constant: self.constant + k * other.constant,
        }
    }
}

struct Rows<T> {
    width: usize,
    a: Vec<Vec<T>>,
    d: Vec<Vec<T>>,
    b: Vec<T>,
}

impl<T: Scalar> Rows<T> {
    fn new(width: usize) -> Self {
        Self {
            width,
            a: Vec::new(),
            d: Vec::new(),
            b: Vec::new(),
        }
    }

    /// `e(z) - Σ w_j |z_j| <= 0`.
    fn le(&mut self, e: &Affine<T>, abs: &[(usize, T)]) {
        let mut d = vec![T::zero(); self.width];
        for &(j, w) in abs {
            d[j] = d[j] + w;
        }
        self.a.push(e.coef.clone());
        self.d.push(d);
        self.b.push(-e.constant);
    }

    fn eq(&mut self, e: &Affine<T>) {
        self.le(e, &[]);
        self.le(&Affine::zero(self.width).add(e, -T::one()), &[]);
    }

    fn finish(self, c: Vec<T>) -> Result<AvlpProblem<T>, AvlpError> {
        let a = stack(self.width, &self.a)?;
        let d = stack(self.width, &self.d)?;
        AvlpProblem::new(a, d, self.b, c)
    }
}

fn stack<T: Scalar>(width: usize, rows: &[Vec<T>]) -> Result<Matrix<T>, AvlpError> {
    if rows.is_empty() {
        Ok(Matrix::zeros(0, width))
    } else {
        Matrix::from_rows(rows)
    }
}

fn pad<T: Scalar>(c: &[T], width: usize) -> Vec<T> {
    let mut out = c.to_vec();
    out.resize(width, T::zero());
    out
}

/// `max c^T x  s.t.  A x <= b,  x ∈ {0,1}^n` as
/// `A x <= b,  2x - y = e,  |y| = e` in the variables `(x, y)`.
pub fn ilp01_to_avlp<T: Scalar>(a: &Matrix<T>, b: &[T], c: &[T]) -> Result<Encoding<T>, AvlpError> {
    let n = c.len();
    if a.rows() > 0 && a.cols() != n {
        return Err(AvlpError::Dimension(format!(
            "A has {} columns, c has {n} entries",
            a.cols()
        )));
    }
    if a.rows() != b.len() {
        return Err(AvlpError::Dimension(format!(
            "A has {} rows, b has {} entries",
            a.rows(),
            b.len()
        )));
    }
    let w = 2 * n;
    let mut rows = Rows::new(w);
    for (i, r) in a.iter_rows().enumerate() {
        rows.le(&Affine::row(w, r, b[i]), &[]);
    }
    for j in 0..n {
        // 2x_j - y_j <= 1
        let mut e = Affine::zero(w);
        e.coef[j] = T::lit(2.0);
        e.coef[n + j] = -T::one();
        e.constant = -T::one();
        rows.le(&e, &[]);
    }
    for j in 0..n {
        // -2x_j + y_j <= -1
        let mut e = Affine::zero(w);
        e.coef[j] = -T::lit(2.0);
        e.coef[n + j] = T::one();
        e.constant = T::one();
        rows.le(&e, &[]);
    }
    for j in 0..n {
        // -|y_j| <= -1
        let mut e = Affine::zero(w);
        e.constant = T::one();
        rows.le(&e, &[(n + j, T::one())]);
    }
    for j in 0..n {
        let mut e = Affine::var(w, n + j);
        e.constant = -T::one();
        rows.le(&e, &[]);
    }
    for j in 0..n {
        let mut e = Affine::zero(w).add(&Affine::var(w, n + j), -T::one());
        e.constant = -T::one();
        rows.le(&e, &[]);
    }
    let problem = rows.finish(pad(c, w))?;
    Encoding::new(
        problem,
        n,
        vec![AuxBlock {
            role: AuxRole::Sign,
            vars: n..w,
        }],
    )
}

/// Affine condition `g^T x <= h` (or `= h` for equation systems).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffineRow<T> {
    pub g: Vec<T>,
    pub h: T,
}

impl<T: Scalar> AffineRow<T> {
    pub fn new(g: Vec<T>, h: T) -> Self {
        Self { g, h }
    }

    /// `g^T x - h`.
    pub fn eval(&self, x: &[T]) -> T {
        dot(&self.g, x) - self.h
    }
}

fn check_rows<T: Scalar>(n: usize, rows: &[AffineRow<T>]) -> Result<(), AvlpError> {
    match rows.iter().position(|r| r.g.len() != n) {
        Some(i) => Err(AvlpError::Dimension(format!(
            "row {i} has {} coefficients, expected {n}",
            rows[i].g.len()
        ))),
        None => Ok(()),
    }
}

/// Encodes `f_1(x) <= 0 ∨ ... ∨ f_k(x) <= 0` with `f_i = g_i^T x - h_i`.
///
/// Uses `min(a, b) = (a + b - |a - b|) / 2` along the chain
/// `min(f_1, min(f_2, ...))`. Each partial minimum after the first gets an
/// upper-bound variable `v_i >= min(f_i, v_{i+1})` (with `v_k = f_k`), and
/// each binary minimum gets a residual `t_i = f_i - v_{i+1}`. Variables are
/// ordered `(x, v_2, ..., v_{k-1}, t_1, ..., t_{k-1})`.
pub fn disjunction_ineq_to_avlp<T: Scalar>(n: usize, terms: &[AffineRow<T>]) -> Result<Encoding<T>, AvlpError> {
    let k = terms.len();
    if k < 2 {
        return Err(AvlpError::Precondition(format!(
            "a disjunction needs at least two terms, got {k}"
        )));
    }
    check_rows(n, terms)?;
    let nv = k - 2;
    let w = n + nv + (k - 1);
    let v_var = |i: usize| n + (i - 1); // i in 1..k-1 (0-based term index)
    let t_var = |i: usize| n + nv + i; // i in 0..k-1
    let f = |i: usize| Affine::row(w, &terms[i].g, terms[i].h);
    // Upper bound on min(f_i, ..., f_k) as an expression.
    let upper = |i: usize| {
        if i == k - 1 {
            f(i)
        } else {
            Affine::var(w, v_var(i))
        }
    };

    let mut rows = Rows::new(w);
    for i in 0..k - 1 {
        let next = upper(i + 1);
        let t = t_var(i);
        rows.eq(&f(i).add(&next, -T::one()).add(&Affine::var(w, t), -T::one()));
        let mut e = f(i).add(&next, T::one());
        if i > 0 {
            e = e.add(&Affine::var(w, v_var(i)), -T::lit(2.0));
        }
        rows.le(&e, &[(t, T::one())]);
    }
    let problem = rows.finish(vec![T::zero(); w])?;
    let mut aux = Vec::new();
    if nv > 0 {
        aux.push(AuxBlock {
            role: AuxRole::Bound,
            vars: n..n + nv,
        });
    }
    aux.push(AuxBlock {
        role: AuxRole::Residual,
        vars: n + nv..w,
    });
    Encoding::new(problem, n, aux)
}

/// How equation disjunctions are encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqMode {
    /// `|t_i - r_j| = |t_i + r_j|` for every pair, i.e. `t_i r_j = 0`.
    #[default]
    Corrected,
    /// `t_i + r_j = |t_i - r_j|` for every pair, i.e. `min(t_i, r_j) = 0`.
    #[serde(rename = "paper-literal")]
    MinForm,
}

/// Encodes `(f_i(x) = 0 ∀i) ∨ (g_j(x) = 0 ∀j)`.
///
/// Variables are `x`, then the residuals `t_i = f_i(x)` and `r_j = g_j(x)`,
/// then the per-pair residuals, then the per-pair bound variables. In
/// [`EqMode::MinForm`] each pair has `w = t - r` and a bound
/// `|w| <= y <= t + r`; in [`EqMode::Corrected`] it has `p = t - r`,
/// `q = t + r` and bounds `|p| <= v_p <= |q|`, `|q| <= v_q <= |p|`.
pub fn disjunction_eq_to_avlp<T: Scalar>(
    n: usize,
    f: &[AffineRow<T>],
    g: &[AffineRow<T>],
    mode: EqMode,
) -> Result<Encoding<T>, AvlpError> {
    check_rows(n, f)?;
    check_rows(n, g)?;
    let (m1, m2) = (f.len(), g.len());
    let pairs = m1 * m2;
    // Residuals and bounds per pair: (w, y) or (p, q, v_p, v_q).
    let per_pair = match mode {
        EqMode::Corrected => 2,
        EqMode::MinForm => 1,
    };
    let base = n + m1 + m2;
    let bounds = base + per_pair * pairs;
    let w = bounds + per_pair * pairs;
    let t = |i: usize| Affine::var(w, n + i);
    let r = |j: usize| Affine::var(w, n + m1 + j);
    let var = |j: usize| Affine::var(w, j);

    let mut rows = Rows::new(w);
    for (i, fi) in f.iter().enumerate() {
        rows.eq(&Affine::row(w, &fi.g, fi.h).add(&t(i), -T::one()));
    }
    for (j, gj) in g.iter().enumerate() {
        rows.eq(&Affine::row(w, &gj.g, gj.h).add(&r(j), -T::one()));
    }
    let one = T::one();
    // v >= |z|
    let bound_abs = |rows: &mut Rows<T>, z: usize, v: usize| {
        rows.le(&var(z).add(&var(v), -one), &[]);
        rows.le(&Affine::zero(w).add(&var(z), -one).add(&var(v), -one), &[]);
    };
    for i in 0..m1 {
        for j in 0..m2 {
            let res = base + per_pair * (i * m2 + j);
            let bnd = bounds + per_pair * (i * m2 + j);
            match mode {
                EqMode::MinForm => {
                    let (wv, y) = (res, bnd);
                    rows.eq(&t(i).add(&r(j), -one).add(&var(wv), -one));
                    // t + r <= |w|
                    rows.le(&t(i).add(&r(j), one), &[(wv, one)]);
                    // |w| <= y <= t + r
                    bound_abs(&mut rows, wv, y);
                    rows.le(&var(y).add(&t(i), -one).add(&r(j), -one), &[]);
                }
                EqMode::Corrected => {
                    let (p, q, vp, vq) = (res, res + 1, bnd, bnd + 1);
                    rows.eq(&t(i).add(&r(j), -one).add(&var(p), -one));
                    rows.eq(&t(i).add(&r(j), one).add(&var(q), -one));
                    // |p| <= v_p <= |q| and |q| <= v_q <= |p|
                    for (small, big, v) in [(p, q, vp), (q, p, vq)] {
                        bound_abs(&mut rows, small, v);
                        rows.le(&var(v), &[(big, one)]);
                    }
                }
            }
        }
    }
    let problem = rows.finish(vec![T::zero(); w])?;
    let mut aux = vec![AuxBlock {
        role: AuxRole::Residual,
        vars: n..bounds,
    }];
    if pairs > 0 {
        aux.push(AuxBlock {
            role: AuxRole::Bound,
            vars: bounds..w,
        });
    }
    Encoding::new(problem, n, aux)
}

/// Selector codes for `m` pieces: a complete prefix code over `{+1, -1}`
/// with codewords of length `k - 1` or `k`, `k = ceil(log2 m)`.
///
/// For `m = 3` the codes are `(+)`, `(-,+)`, `(-,-)`.
pub fn selector_codes(m: usize) -> Vec<Vec<i8>> {
    assert!(m >= 1);
    let k = ceil_log2(m);
    if k == 0 {
        return vec![Vec::new()];
    }
    let short = (1usize << k) - m;
    let digits = |value: usize, len: usize| -> Vec<i8> {
        (0..len)
            .map(|pos| if (value >> (len - 1 - pos)) & 1 == 0 { 1 } else { -1 })
            .collect()
    };
    let mut out: Vec<Vec<i8>> = (0..short).map(|v| digits(v, k - 1)).collect();
    out.extend((2 * short..(1 << k)).map(|v| digits(v, k)));
    out
}

/// `ceil(log2 m)` for `m >= 1`.
pub fn ceil_log2(m: usize) -> usize {
    assert!(m >= 1);
    (usize::BITS - (m - 1).leading_zeros()) as usize
}

/// Encodes a union of `m` polyhedra with `ceil(log2 m)` selector variables
/// `z`: piece `i` with code `s^i` becomes
/// `A^i x + Σ_j (s^i_j z_j - |z_j|) e <= b^i`.
pub fn union_to_avlp<T: Scalar>(u: &UnionOfPolyhedra<T>) -> Result<Encoding<T>, AvlpError> {
    let n = u.n();
    let m = u.pieces().len();
    let k = ceil_log2(m);
    let w = n + k;
    let codes = selector_codes(m);
    let mut rows = Rows::new(w);
    for (piece, code) in u.pieces().iter().zip(&codes) {
        let mut sel = Affine::zero(w);
        let mut abs = Vec::with_capacity(code.len());
        for (j, &sj) in code.iter().enumerate() {
            sel.coef[n + j] = T::from_i8(sj).unwrap();
            abs.push((n + j, T::one()));
        }
        for (i, g) in piece.g().iter_rows().enumerate() {
            rows.le(&Affine::row(w, g, piece.h()[i]).add(&sel, T::one()), &abs);
        }
    }
    let problem = rows.finish(vec![T::zero(); w])?;
    let aux = if k > 0 {
        vec![AuxBlock {
            role: AuxRole::Selector,
            vars: n..w,
        }]
    } else {
        Vec::new()
    };
    Encoding::new(problem, n, aux)
}

/// Decides `x ∈ ∪ pieces` through the encoding: one small LP in `z` per
/// sign pattern of `z`.
pub fn union_membership<T: Scalar>(enc: &Encoding<T>, x: &[T]) -> Result<bool, AvlpError> {
    enc.contains(x, T::feas_tol())
}

/// Inequalities `a^T x <= β` describing a set inside one orthant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthantPiece<T> {
    pub sign: SignVector,
    pub rows: Vec<AffineRow<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha<T> {
    Fixed(T),
    Auto,
}

/// Largest doubling exponent tried by [`Alpha::Auto`].
pub const ALPHA_DOUBLINGS: u32 = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthantConvexEncoding<T> {
    pub encoding: Encoding<T>,
    pub alpha: T,
    /// Implication LPs solved for the accepted `alpha`.
    pub checks: usize,
    /// Orthants without a piece that needed an extra excluding row.
    pub excluded: Vec<SignVector>,
    /// Orthants without a piece where the emitted system is nonempty and no
    /// excluding row could be verified. The encoding may contain extra
    /// points there.
    pub uncovered: Vec<SignVector>,
}

/// Counts the inequalities of the orthant-wise description.
pub fn union_count_bound<T>(pieces: &[OrthantPiece<T>]) -> usize {
    pieces.iter().map(|p| p.rows.len()).sum()
}

fn orthant_rows<T: Scalar>(s: &SignVector) -> Vec<AffineRow<T>> {
    let n = s.len();
    (0..n)
        .map(|j| {
            let mut g = vec![T::zero(); n];
            g[j] = -T::from_i8(s.get(j)).unwrap();
            AffineRow::new(g, T::zero())
        })
        .collect()
}

/// Row `(α diag(s) e + a)^T x - α e^T |x| <= β`.
fn lift<T: Scalar>(s: &SignVector, row: &AffineRow<T>, alpha: T) -> (Vec<T>, Vec<T>, T) {
    let a = row
        .g
        .iter()
        .zip(s.entries())
        .map(|(&aj, &sj)| aj + alpha * T::from_i8(sj).unwrap())
        .collect();
    (a, vec![alpha; s.len()], row.h)
}

/// Maximizes the lifted row over a piece, restricted to orthant `at`.
fn implied<T: Scalar>(
    lifted: &(Vec<T>, Vec<T>, T),
    at: &SignVector,
    piece: &[AffineRow<T>],
) -> Result<bool, AvlpError> {
    let (a, d, beta) = lifted;
    let n = at.len();
    let obj: Vec<T> = a
        .iter()
        .zip(d)
        .zip(at.entries())
        .map(|((&aj, &dj), &sj)| aj - dj * T::from_i8(sj).unwrap())
        .collect();
    let all: Vec<AffineRow<T>> = piece.iter().cloned().chain(orthant_rows(at)).collect();
    let g: Vec<Vec<T>> = all.iter().map(|r| r.g.clone()).collect();
    let h: Vec<T> = all.iter().map(|r| r.h).collect();
    let lp = LinearProgram::from_rows(n, &g, h, obj)?;
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => value <= *beta + T::cert_tol() * (T::one() + beta.abs()),
        LpOutcome::Infeasible { .. } => true,
        LpOutcome::Unbounded { .. } => false,
    })
}

struct Attempt<T> {
    a: Vec<Vec<T>>,
    d: Vec<Vec<T>>,
    b: Vec<T>,
    checks: usize,
    excluded: Vec<SignVector>,
    uncovered: Vec<SignVector>,
}

fn attempt<T: Scalar>(n: usize, pieces: &[OrthantPiece<T>], alpha: T) -> Result<Result<Attempt<T>, String>, AvlpError> {
    let mut out = Attempt {
        a: Vec::new(),
        d: Vec::new(),
        b: Vec::new(),
        checks: 0,
        excluded: Vec::new(),
        uncovered: Vec::new(),
    };
    let mut lifted = Vec::new();
    for piece in pieces {
        for row in &piece.rows {
            lifted.push((piece.sign.clone(), lift(&piece.sign, row, alpha)));
        }
    }
    for (s, l) in &lifted {
        for other in pieces {
            if &other.sign == s {
                continue;
            }
            out.checks += 1;
            if !implied(l, &other.sign, &other.rows)? {
                return Ok(Err(format!(
                    "a row of orthant {s} cuts into the piece of orthant {} (alpha = {alpha})",
                    other.sign
                )));
            }
        }
    }
    for (_, (a, d, b)) in &lifted {
        out.a.push(a.clone());
        out.d.push(d.clone());
        out.b.push(*b);
    }

    // Orthants without a piece must come out empty.
    let idx: Vec<usize> = (0..n).collect();
    for s in SignVector::enumerate(n, &idx, 0, SignOrder::MinusFirst) {
        if pieces.iter().any(|p| p.sign == s) {
            continue;
        }
        let probe = AvlpProblem::new(stack(n, &out.a)?, stack(n, &out.d)?, out.b.clone(), vec![T::zero(); n])?;
        let lp = crate::problem::orthant_restriction(&probe, &s)?;
        out.checks += 1;
        if !solve_lp(&lp)?.is_feasible() {
            continue;
        }
        // In orthant s this row reads 0 <= -1; elsewhere it only removes
        // points close to the orthant s.
        let sep = lift(&s, &AffineRow::new(vec![T::zero(); n], -T::one()), alpha);
        let mut valid = true;
        for other in pieces {
            out.checks += 1;
            if !implied(&sep, &other.sign, &other.rows)? {
                valid = false;
                break;
            }
        }
        if !valid {
            out.uncovered.push(s);
            continue;
        }
        out.a.push(sep.0);
        out.d.push(sep.1);
        out.b.push(sep.2);
        out.excluded.push(s);
    }
    Ok(Ok(out))
}

/// Describes a set given piecewise per orthant by a single system
/// `A x - D|x| <= b` without new variables.
///
/// Every emitted row is checked against every other piece by an LP. An
/// orthant absent from `pieces` is taken to contain no point of the set and
/// is cut off by an extra row when that row is implied by all pieces;
/// otherwise it is reported in `uncovered`.
/// With [`Alpha::Auto`] the multiplier starts at `1 + max|a|` and doubles up
/// to [`ALPHA_DOUBLINGS`] times.
pub fn orthant_convex_to_avlp<T: Scalar>(
    n: usize,
    pieces: &[OrthantPiece<T>],
    alpha: Alpha<T>,
) -> Result<OrthantConvexEncoding<T>, AvlpError> {
    for p in pieces {
        if p.sign.len() != n || !p.sign.is_full() {
            return Err(AvlpError::Precondition(format!(
                "piece sign {} is not in {{-1, 1}}^{n}",
                p.sign
            )));
        }
        check_rows(n, &p.rows)?;
    }
    if let Some((i, _)) = pieces
        .iter()
        .enumerate()
        .find(|(i, p)| pieces[..*i].iter().any(|q| q.sign == p.sign))
    {
        return Err(AvlpError::Precondition(format!(
            "orthant {} is listed twice",
            pieces[i].sign
        )));
    }
    let alphas: Vec<T> = match alpha {
        Alpha::Fixed(a) if a > T::zero() => vec![a],
        Alpha::Fixed(a) => {
            return Err(AvlpError::Precondition(format!("alpha must be positive, got {a}")));
        }
        Alpha::Auto => {
            let a0 = T::one()
                + pieces
                    .iter()
                    .flat_map(|p| p.rows.iter().flat_map(|r| r.g.iter()))
                    .fold(T::zero(), |acc, v| acc.max(v.abs()));
            (0..=ALPHA_DOUBLINGS)
                .map(|k| a0 * T::lit(2f64.powi(k as i32)))
                .collect()
        }
    };
    let mut last = String::new();
    for &a in &alphas {
        match attempt(n, pieces, a)? {
            Ok(done) => {
                let problem = AvlpProblem::new(stack(n, &done.a)?, stack(n, &done.d)?, done.b, vec![T::zero(); n])?;
                return Ok(OrthantConvexEncoding {
                    encoding: Encoding::new(problem, n, Vec::new())?,
                    alpha: a,
                    checks: done.checks,
                    excluded: done.excluded,
                    uncovered: done.uncovered,
                });
            }
            Err(msg) => last = msg,
        }
    }
    Err(AvlpError::Verification(last))
}
