//! The penalized bilinear program
//! `max c^T x¹ - c^T x² - α (x¹)^T x²  s.t.  (A - D) x¹ - (A + D) x² <= b,  x¹, x² >= 0`,
//! verification of its KKT points, and the LP test deciding whether every
//! KKT point is complementary.

use serde::Serialize;

use crate::error::AvlpError;
use crate::exact::solve_exact;
use crate::matrix::Matrix;
use crate::problem::{membership, AvlpProblem};
use crate::reformulate::Alpha;
use crate::scalar::{dot, max_abs, pos, Scalar};
use crate::simplex::{solve_lp, LinearProgram, LpOutcome};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QpReformulation<T> {
    #[serde(skip)]
    problem: AvlpProblem<T>,
    pub alpha: T,
    /// `A - D`, the block multiplying `x¹`.
    pub lower: Matrix<T>,
    /// `A + D`, the block multiplying `-x²`.
    pub upper: Matrix<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> QpReformulation<T> {
    pub fn problem(&self) -> &AvlpProblem<T> {
        &self.problem
    }

    pub fn objective(&self, x1: &[T], x2: &[T]) -> T {
        dot(&self.c, x1) - dot(&self.c, x2) - self.alpha * dot(x1, x2)
    }
}

/// Penalty used by [`Alpha::Auto`]: `100 (1 + max |entry|)^2` over
/// `A, D, b, c`.
pub fn auto_alpha<T: Scalar>(p: &AvlpProblem<T>) -> T {
    let big = p
        .a()
        .max_abs()
        .max(p.d().max_abs())
        .max(max_abs(p.b()))
        .max(max_abs(p.c()));
    let t = T::one() + big;
    T::lit(100.0) * t * t
}

pub fn build_qp<T: Scalar>(p: &AvlpProblem<T>, alpha: Alpha<T>) -> Result<QpReformulation<T>, AvlpError> {
    let alpha = match alpha {
        Alpha::Fixed(a) if a > T::zero() => a,
        Alpha::Fixed(a) => return Err(AvlpError::Precondition(format!("alpha must be positive, got {a}"))),
        Alpha::Auto => auto_alpha(p),
    };
    Ok(QpReformulation {
        problem: p.clone(),
        alpha,
        lower: p.a().zip_map(p.d(), |a, d| a - d),
        upper: p.a().zip_map(p.d(), |a, d| a + d),
        b: p.b().to_vec(),
        c: p.c().to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktPoint<T> {
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub w: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KktCondition {
    /// `u = -c + α x² + (A - D)^T w`.
    StationarityU,
    /// `v = c + α x¹ - (A + D)^T w`.
    StationarityV,
    Nonnegativity,
    Complementarity,
    PrimalFeasibility,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktViolation {
    pub condition: KktCondition,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktVerdict {
    pub valid: bool,
    pub violations: Vec<KktViolation>,
    /// `(x¹)^T x² = 0` within tolerance, so `x¹ - x²` is feasible.
    pub complementary: bool,
    /// Indices with `x¹_i > 0` and `x²_i > 0`.
    pub overlap: Vec<usize>,
}

fn close<T: Scalar>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * (T::one() + a.abs().max(b.abs()))
}

/// Checks the KKT system of the QP with right-hand side `b` at `pt`, and
/// separately whether the point is complementary.
pub fn verify_kkt<T: Scalar>(
    q: &QpReformulation<T>,
    b: &[T],
    pt: &KktPoint<T>,
    tol: T,
) -> Result<KktVerdict, AvlpError> {
    let (m, n) = q.lower.shape();
    let lens = [pt.x1.len(), pt.x2.len(), pt.u.len(), pt.v.len()];
    if lens.iter().any(|&l| l != n) || pt.w.len() != m || b.len() != m {
        return Err(AvlpError::Dimension(format!(
            "KKT point shapes {lens:?}, w {}, b {} do not match a {m}x{n} problem",
            pt.w.len(),
            b.len()
        )));
    }
    let mut violations = Vec::new();
    let mut flag = |condition, detail: String| violations.push(KktViolation { condition, detail });

    let lw = q.lower.tr_mul_vec(&pt.w);
    let uw = q.upper.tr_mul_vec(&pt.w);
    for i in 0..n {
        let u = -q.c[i] + q.alpha * pt.x2[i] + lw[i];
        if !close(u, pt.u[i], tol) {
            flag(
                KktCondition::StationarityU,
                format!("index {i}: expected {u}, got {}", pt.u[i]),
            );
        }
        let v = q.c[i] + q.alpha * pt.x1[i] - uw[i];
        if !close(v, pt.v[i], tol) {
            flag(
                KktCondition::StationarityV,
                format!("index {i}: expected {v}, got {}", pt.v[i]),
            );
        }
    }
    for (name, vec) in [("x1", &pt.x1), ("x2", &pt.x2), ("u", &pt.u), ("v", &pt.v), ("w", &pt.w)] {
        if let Some(i) = vec.iter().position(|&t| t < -tol) {
            flag(KktCondition::Nonnegativity, format!("{name}[{i}] = {}", vec[i]));
        }
    }
    let lx = q.lower.mul_vec(&pt.x1);
    let ux = q.upper.mul_vec(&pt.x2);
    let slack: Vec<T> = (0..m).map(|i| b[i] - lx[i] + ux[i]).collect();
    if let Some(i) = slack
        .iter()
        .zip(b)
        .position(|(&s, &bi)| s < -tol * (T::one() + bi.abs()))
    {
        flag(
            KktCondition::PrimalFeasibility,
            format!("row {i} exceeds b by {}", -slack[i]),
        );
    }
    // Componentwise `min(a_i, b_i) = 0`; unlike the inner product this is
    // linear in the distance to a complementary pair.
    let comp_tol = tol * (T::one() + max_abs(b));
    for (name, lhs, rhs) in [
        ("u, x1", &pt.u, &pt.x1),
        ("v, x2", &pt.v, &pt.x2),
        ("w, slack", &pt.w, &slack),
    ] {
        if let Some(i) = (0..lhs.len()).find(|&i| lhs[i].min(rhs[i]).abs() > comp_tol) {
            flag(
                KktCondition::Complementarity,
                format!("{name} at index {i}: {} and {}", lhs[i], rhs[i]),
            );
        }
    }
    let overlap: Vec<usize> = (0..n).filter(|&i| pt.x1[i] > tol && pt.x2[i] > tol).collect();
    Ok(KktVerdict {
        valid: violations.is_empty(),
        violations,
        complementary: dot(&pt.x1, &pt.x2).abs() <= tol,
        overlap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum KktProperty<T> {
    /// No `w >= 0` has `|c - A^T w| <= D^T w` with strict inequality
    /// somewhere; every KKT point of the QP is complementary.
    Holds,
    /// `w` satisfies the system with strict inequality at `index`.
    Fails { w: Vec<T>, index: usize },
}

/// Rows `(A - D)^T w <= c`, `-(A + D)^T w <= -c`, `-w <= 0` over `(w, extra)`.
fn dual_cone_rows<T: Scalar>(p: &AvlpProblem<T>, extra: usize) -> (Vec<Vec<T>>, Vec<T>) {
    let (m, n) = (p.m(), p.n());
    let width = m + extra;
    let mut rows = Vec::with_capacity(2 * n + m);
    let mut h = Vec::with_capacity(2 * n + m);
    for j in 0..n {
        let mut lo = vec![T::zero(); width];
        let mut hi = vec![T::zero(); width];
        for i in 0..m {
            let (a, d) = (p.a()[(i, j)], p.d()[(i, j)]);
            lo[i] = a - d;
            hi[i] = -(a + d);
        }
        rows.push(lo);
        h.push(p.c()[j]);
        rows.push(hi);
        h.push(-p.c()[j]);
    }
    for i in 0..m {
        let mut r = vec![T::zero(); width];
        r[i] = -T::one();
        rows.push(r);
        h.push(T::zero());
    }
    (rows, h)
}

/// Smallest slack counted as strict.
fn strict_threshold<T: Scalar>(p: &AvlpProblem<T>) -> T {
    T::cert_tol() * (T::one() + p.a().max_abs().max(p.d().max_abs()).max(max_abs(p.c())))
}

/// Decides the strict system one index at a time: for each `i`, maximize
/// `δ <= 1` with both sides of `|c_i - (A^T w)_i| <= (D^T w)_i` holding with
/// slack `δ`. The cap only keeps the LP bounded; any positive optimum
/// above rounding noise is a witness.
pub fn kkt_global_property<T: Scalar>(p: &AvlpProblem<T>) -> Result<KktProperty<T>, AvlpError> {
    let (m, n) = (p.m(), p.n());
    let (base, base_h) = dual_cone_rows(p, 1);
    let threshold = strict_threshold(p);
    for i in 0..n {
        let mut rows = base.clone();
        let mut h = base_h.clone();
        // -(A + D)^T_i w + δ <= -c_i and (A - D)^T_i w + δ <= c_i
        let mut r = rows[2 * i + 1].clone();
        r[m] = T::one();
        rows.push(r);
        h.push(-p.c()[i]);
        let mut r = rows[2 * i].clone();
        r[m] = T::one();
        rows.push(r);
        h.push(p.c()[i]);
        let mut cap = vec![T::zero(); m + 1];
        cap[m] = T::one();
        rows.push(cap);
        h.push(T::one());
        let mut obj = vec![T::zero(); m + 1];
        obj[m] = T::one();
        let lp = LinearProgram::from_rows(m + 1, &rows, h, obj)?;
        if let LpOutcome::Optimal { x, value, .. } = solve_lp(&lp)? {
            if value > threshold {
                let w = x[..m].iter().map(|&t| pos(t)).collect();
                return Ok(KktProperty::Fails { w, index: i });
            }
        }
    }
    Ok(KktProperty::Holds)
}

/// The aggregated single-LP variant: maximize `ε <= 1` subject to the cone
/// rows and `e^T((A + D)^T w - c) >= ε`, `e^T(c - (A - D)^T w) >= ε`.
///
/// Returns `w` when the aggregated system is feasible. Strictness may then
/// sit at different indices on the two sides, so this can report a `w` even
/// when [`kkt_global_property`] holds.
pub fn kkt_aggregate_check<T: Scalar>(p: &AvlpProblem<T>) -> Result<Option<Vec<T>>, AvlpError> {
    let (m, n) = (p.m(), p.n());
    let (mut rows, mut h) = dual_cone_rows(p, 1);
    let mut hi_sum = vec![T::zero(); m + 1];
    let mut lo_sum = vec![T::zero(); m + 1];
    for j in 0..n {
        for i in 0..m + 1 {
            hi_sum[i] = hi_sum[i] + rows[2 * j + 1][i];
            lo_sum[i] = lo_sum[i] + rows[2 * j][i];
        }
    }
    let csum: T = p.c().iter().copied().sum();
    hi_sum[m] = T::one();
    lo_sum[m] = T::one();
    rows.push(hi_sum);
    h.push(-csum);
    rows.push(lo_sum);
    h.push(csum);
    let mut cap = vec![T::zero(); m + 1];
    cap[m] = T::one();
    rows.push(cap);
    h.push(T::one());
    let mut obj = vec![T::zero(); m + 1];
    obj[m] = T::one();
    let lp = LinearProgram::from_rows(m + 1, &rows, h, obj)?;
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal { x, value, .. } if value > strict_threshold(p) => {
            Some(x[..m].iter().map(|&t| pos(t)).collect())
        }
        _ => None,
    })
}

/// Indices where `w` satisfies the strict system.
pub fn strict_indices<T: Scalar>(p: &AvlpProblem<T>, w: &[T], tol: T) -> Result<Vec<usize>, AvlpError> {
    if w.len() != p.m() {
        return Err(AvlpError::Dimension(format!(
            "w has {} entries, problem has {} rows",
            w.len(),
            p.m()
        )));
    }
    if let Some(i) = w.iter().position(|&t| t < -tol) {
        return Err(AvlpError::Precondition(format!("w[{i}] is negative")));
    }
    let aw = p.a().tr_mul_vec(w);
    let dw = p.d().tr_mul_vec(w);
    let mut strict = Vec::new();
    for j in 0..p.n() {
        let gap = dw[j] - (p.c()[j] - aw[j]).abs();
        let scale = T::one() + dw[j].abs();
        if gap < -tol * scale {
            return Err(AvlpError::Precondition(format!(
                "|c - A^T w| exceeds D^T w at index {j}"
            )));
        }
        if gap > tol * scale {
            strict.push(j);
        }
    }
    Ok(strict)
}

/// Builds a right-hand side and a KKT point of the QP that is not
/// complementary, from a `w` satisfying the strict system.
pub fn construct_kkt_counterexample<T: Scalar>(
    p: &AvlpProblem<T>,
    w: &[T],
    alpha: T,
) -> Result<(Vec<T>, KktPoint<T>), AvlpError> {
    if alpha <= T::zero() {
        return Err(AvlpError::Precondition(format!("alpha must be positive, got {alpha}")));
    }
    if strict_indices(p, w, T::cert_tol())?.is_empty() {
        return Err(AvlpError::Precondition(
            "w satisfies the system without strict inequality".into(),
        ));
    }
    let q = build_qp(p, Alpha::Fixed(alpha))?;
    let lw = q.lower.tr_mul_vec(w);
    let uw = q.upper.tr_mul_vec(w);
    let c = p.c();
    let n = p.n();
    let x1: Vec<T> = (0..n).map(|i| pos(uw[i] - c[i]) / alpha).collect();
    let x2: Vec<T> = (0..n).map(|i| pos(c[i] - lw[i]) / alpha).collect();
    let v: Vec<T> = (0..n).map(|i| c[i] + alpha * x1[i] - uw[i]).collect();
    let u: Vec<T> = (0..n).map(|i| -c[i] + alpha * x2[i] + lw[i]).collect();
    let lx = q.lower.mul_vec(&x1);
    let ux = q.upper.mul_vec(&x2);
    let b = lx.iter().zip(&ux).map(|(&l, &h)| l - h).collect();
    Ok((
        b,
        KktPoint {
            x1,
            x2,
            u,
            v,
            w: w.to_vec(),
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LpPart<T> {
    /// An optimum of `max c^T x  s.t.  A x <= b` attains the optimal value.
    Confirmed {
        x: Vec<T>,
        value: T,
    },
    Refuted {
        lp_value: T,
        f_star: T,
    },
    Inapplicable {
        reason: String,
    },
}

/// When every KKT point is complementary and `A x <= b` is feasible, some
/// optimum satisfies `A x <= b`; this solves that LP and compares values.
pub fn optimum_on_lp_part<T: Scalar>(p: &AvlpProblem<T>) -> Result<LpPart<T>, AvlpError> {
    let inapplicable = |reason: &str| Ok(LpPart::Inapplicable { reason: reason.into() });
    if let KktProperty::Fails { .. } = kkt_global_property(p)? {
        return inapplicable("the strict dual system is feasible");
    }
    let report = solve_exact(p)?;
    let Some(f_star) = report.f_star else {
        return inapplicable("the problem has no optimum");
    };
    let lp = LinearProgram::new(p.a().clone(), p.b().to_vec(), p.c().to_vec())?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, value, .. } => {
            if close(value, f_star, T::cert_tol() * T::lit(10.0)) {
                debug_assert!(membership(p, &x, T::cert_tol()).feasible);
                Ok(LpPart::Confirmed { x, value })
            } else {
                Ok(LpPart::Refuted {
                    lp_value: value,
                    f_star,
                })
            }
        }
        LpOutcome::Infeasible { .. } => inapplicable("A x <= b is infeasible"),
        LpOutcome::Unbounded { .. } => Ok(LpPart::Refuted {
            lp_value: T::infinity(),
            f_star,
        }),
    }
}
