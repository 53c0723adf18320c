//! Sufficient conditions for a basis that is optimal for every realization
//! `Ã ∈ [A ± D]`, and the single LP that solves the problem in that case.

use serde::Serialize;

use crate::error::AvlpError;
use crate::interval::{enclose_solutions, Interval, IntervalMatrix, IntervalVector};
use crate::matrix::{rank, solve_square, Lu, Matrix};
use crate::problem::{membership, AvlpProblem};
use crate::scalar::{dot, sgn, Scalar};
use crate::simplex::{solve_lp, LinearProgram, LpOutcome};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Condition {
    Verified,
    /// Inconclusive: the sufficient test did not go through.
    Unverified {
        reason: String,
    },
}

impl Condition {
    pub fn is_verified(&self) -> bool {
        *self == Condition::Verified
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport<T> {
    pub basis: Vec<usize>,
    pub condition1: Condition,
    pub condition2: Condition,
    pub y_box: Option<IntervalVector<T>>,
    pub x_box: Option<IntervalVector<T>>,
    pub z_box: Option<IntervalVector<T>>,
    pub f_star: Option<T>,
    pub y_star: Option<Vec<T>>,
    pub x_star: Option<Vec<T>>,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn is_stable(&self) -> bool {
        self.condition1.is_verified() && self.condition2.is_verified()
    }
}

pub fn problem_interval_matrix<T: Scalar>(p: &AvlpProblem<T>) -> IntervalMatrix<T> {
    IntervalMatrix::new(p.a().clone(), p.d().clone()).expect("validated problem")
}

fn check_basis<T: Scalar>(p: &AvlpProblem<T>, basis: &[usize]) -> Result<Vec<usize>, AvlpError> {
    let (m, n) = (p.m(), p.n());
    if basis.len() != n {
        return Err(AvlpError::Precondition(format!(
            "basis has {} rows, expected {n}",
            basis.len()
        )));
    }
    let mut seen = vec![false; m];
    for &i in basis {
        if i >= m || seen[i] {
            return Err(AvlpError::Precondition(format!("invalid basis row {i}")));
        }
        seen[i] = true;
    }
    if Lu::factor(&p.a().select_rows(basis), T::pivot_tol()).is_none() {
        return Err(AvlpError::Precondition("A_B is singular".into()));
    }
    Ok((0..m).filter(|&i| !seen[i]).collect())
}

/// Runs both interval tests for `basis` (0-based row indices). When both
/// verify, the optimal value and an optimal solution are filled in.
pub fn basis_stability_check<T: Scalar>(p: &AvlpProblem<T>, basis: &[usize]) -> Result<StabilityReport<T>, AvlpError> {
    let nonbasic = check_basis(p, basis)?;
    let full = problem_interval_matrix(p);
    let mb = full.select_rows(basis);

    let (condition1, y_box) = match enclose_solutions(&mb.transpose(), p.c()) {
        Ok(y) => {
            let cond = match y.iter().position(|iv| iv.lo() < T::zero()) {
                None => Condition::Verified,
                Some(i) => Condition::Unverified {
                    reason: format!("y_{i} has lower bound {} < 0", y[i].lo()),
                },
            };
            (cond, Some(y))
        }
        Err(e) => (Condition::Unverified { reason: e.to_string() }, None),
    };

    let b_b: Vec<T> = basis.iter().map(|&i| p.b()[i]).collect();
    let (condition2, x_box, z_box) = match enclose_solutions(&mb, &b_b) {
        Ok(x) => {
            let z = full.select_rows(&nonbasic).mul_vec(&x);
            let cond = match nonbasic.iter().zip(&z).find(|(&i, iv)| iv.hi() > p.b()[i]) {
                None => Condition::Verified,
                Some((&i, iv)) => Condition::Unverified {
                    reason: format!("row {i} has upper bound {} > {}", iv.hi(), p.b()[i]),
                },
            };
            (cond, Some(x), Some(z))
        }
        Err(e) => (Condition::Unverified { reason: e.to_string() }, None, None),
    };

    let mut report = StabilityReport {
        basis: basis.to_vec(),
        condition1,
        condition2,
        y_box,
        x_box,
        z_box,
        f_star: None,
        y_star: None,
        x_star: None,
    };
    if report.is_stable() {
        let (f, y) = stable_optimal_value(p, basis)?;
        let x = recover_x_star(p, basis, &y)?.x;
        report.f_star = Some(f);
        report.y_star = Some(y);
        report.x_star = Some(x);
    }
    Ok(report)
}

/// Optimal basis of the midpoint LP `max c^T x, A x <= b`, preferring rows
/// with larger dual values.
pub fn midpoint_basis<T: Scalar>(p: &AvlpProblem<T>) -> Result<Vec<usize>, AvlpError> {
    let rows: Vec<Vec<T>> = p.a().iter_rows().map(<[T]>::to_vec).collect();
    let lp = LinearProgram::from_rows(p.n(), &rows, p.b().to_vec(), p.c().to_vec())?;
    let LpOutcome::Optimal { x, duals, .. } = solve_lp(&lp)? else {
        return Err(AvlpError::Precondition("midpoint LP has no optimum".into()));
    };
    let slack: Vec<T> = (0..p.m()).map(|i| p.b()[i] - dot(p.a().row(i), &x)).collect();
    let mut order: Vec<usize> = (0..p.m())
        .filter(|&i| slack[i].abs() <= T::feas_tol() * (T::one() + p.b()[i].abs()) * T::lit(10.0))
        .collect();
    order.sort_by(|&i, &j| duals[j].partial_cmp(&duals[i]).unwrap().then(i.cmp(&j)));
    let mut basis = Vec::new();
    for i in order {
        let mut trial = basis.clone();
        trial.push(i);
        if rank(&p.a().select_rows(&trial), T::pivot_tol()) == trial.len() {
            basis = trial;
            if basis.len() == p.n() {
                basis.sort_unstable();
                return Ok(basis);
            }
        }
    }
    Err(AvlpError::Precondition(
        "midpoint optimum is not determined by active rows".into(),
    ))
}

/// Solves `max b_B^T y` over `(A - D)_B^T y <= c <= (A + D)_B^T y, y >= 0`.
///
/// The value equals the optimum of the whole problem only when both
/// stability conditions hold for `basis`.
pub fn stable_optimal_value<T: Scalar>(p: &AvlpProblem<T>, basis: &[usize]) -> Result<(T, Vec<T>), AvlpError> {
    check_basis(p, basis)?;
    let n = p.n();
    let ab = p.a().select_rows(basis);
    let db = p.d().select_rows(basis);
    let mut rows = Vec::with_capacity(3 * n);
    let mut h = Vec::with_capacity(3 * n);
    for j in 0..n {
        rows.push((0..n).map(|i| ab[(i, j)] - db[(i, j)]).collect());
        h.push(p.c()[j]);
    }
    for j in 0..n {
        rows.push((0..n).map(|i| -(ab[(i, j)] + db[(i, j)])).collect());
        h.push(-p.c()[j]);
    }
    for i in 0..n {
        let mut r = vec![T::zero(); n];
        r[i] = -T::one();
        rows.push(r);
        h.push(T::zero());
    }
    let obj: Vec<T> = basis.iter().map(|&i| p.b()[i]).collect();
    let lp = LinearProgram::from_rows(n, &rows, h, obj)?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, value, .. } => Ok((value, x)),
        LpOutcome::Infeasible { .. } => Err(AvlpError::Verification(
            "optimal-value LP is infeasible; the stability verdict does not hold".into(),
        )),
        LpOutcome::Unbounded { .. } => Err(AvlpError::Verification(
            "optimal-value LP is unbounded; the stability verdict does not hold".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recovered<T> {
    /// Realization of the basic rows with `Ã_B^T y = c`.
    pub a_tilde: Matrix<T>,
    pub x: Vec<T>,
}

/// Builds `Ã_B ∈ [A ± D]_B` with `Ã_B^T y = c` and returns `x = Ã_B^{-1} b_B`.
pub fn recover_x_star<T: Scalar>(p: &AvlpProblem<T>, basis: &[usize], y: &[T]) -> Result<Recovered<T>, AvlpError> {
    check_basis(p, basis)?;
    let n = p.n();
    if y.len() != n {
        return Err(AvlpError::Dimension(format!("y has {} entries, expected {n}", y.len())));
    }
    let ab = p.a().select_rows(basis);
    let db = p.d().select_rows(basis);
    let tol = T::cert_tol();
    let r: Vec<T> = ab.tr_mul_vec(y).iter().zip(p.c()).map(|(&u, &c)| u - c).collect();
    let abs_y: Vec<T> = y.iter().map(|v| v.abs()).collect();
    let s = db.tr_mul_vec(&abs_y);
    let mut d = vec![T::zero(); n];
    for j in 0..n {
        if r[j].abs() > s[j] + tol * (T::one() + p.c()[j].abs()) {
            return Err(AvlpError::Precondition(format!(
                "|A_B^T y - c|_{j} = {} exceeds (D_B^T |y|)_{j} = {}",
                r[j].abs(),
                s[j]
            )));
        }
        if s[j] > T::zero() {
            d[j] = (r[j] / s[j]).max(-T::one()).min(T::one());
        }
    }
    let mut a_tilde = ab.clone();
    for i in 0..n {
        for j in 0..n {
            a_tilde[(i, j)] = ab[(i, j)] - sgn(y[i]) * db[(i, j)] * d[j];
        }
    }
    let b_b: Vec<T> = basis.iter().map(|&i| p.b()[i]).collect();
    let x = solve_square(&a_tilde, &b_b)
        .ok_or_else(|| AvlpError::Verification("recovered basis matrix is singular".into()))?;
    let mem = membership(p, &x, tol);
    if !mem.feasible {
        return Err(AvlpError::Verification(format!(
            "recovered point violates the constraints by {}",
            mem.max_violation()
        )));
    }
    let f = dot(&b_b, y);
    let cx = dot(p.c(), &x);
    if (cx - f).abs() > tol * (T::one() + f.abs()) {
        return Err(AvlpError::Verification(format!(
            "recovered objective {cx} differs from {f}"
        )));
    }
    Ok(Recovered { a_tilde, x })
}

/// Widest interval among the enclosure components, for reporting.
pub fn max_width<T: Scalar>(v: &[Interval<T>]) -> T {
    v.iter().fold(T::zero(), |acc, iv| acc.max(iv.width()))
}
