//! Global solution by orthant enumeration, the split-variable relaxation
//! bound, and a necessary vertex test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::AvlpError;
use crate::matrix::{rank, Matrix};
use crate::problem::{membership, nonzero_columns, orthant_lp, residual, AvlpProblem, SignOrder, SignVector};
use crate::scalar::Scalar;
use crate::simplex::{solve_lp, LinearProgram, LpOutcome, LpStatus};

/// Largest number of enumerated sign coordinates accepted by the solvers.
pub const MAX_SIGN_BITS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthantResult<T> {
    pub sign: SignVector,
    pub status: LpStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport<T> {
    pub status: LpStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_star: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<T>>,
    /// Direction of unbounded improvement inside the witness orthant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ray: Option<Vec<T>>,
    /// Orthant achieving the result. Coordinates whose `D` column is zero
    /// are not enumerated and carry sign `0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_sign: Option<SignVector>,
    pub orthants_solved: usize,
    pub per_orthant: Vec<OrthantResult<T>>,
}

impl<T: Scalar> SolveReport<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn is_feasible(&self) -> bool {
        self.status != LpStatus::Infeasible
    }
}

/// Sign vectors enumerated by the solver, in lexicographic order.
pub fn orthant_signs<T: Scalar>(p: &AvlpProblem<T>) -> Result<Vec<SignVector>, AvlpError> {
    let active = nonzero_columns(p.d());
    if active.len() > MAX_SIGN_BITS {
        return Err(AvlpError::Limit(format!(
            "{} nonzero columns of D exceed the enumeration limit {MAX_SIGN_BITS}",
            active.len()
        )));
    }
    Ok(SignVector::enumerate(p.n(), &active, 0, SignOrder::MinusFirst).collect())
}

/// Solves the problem by one LP per orthant of the nonzero columns of `D`.
///
/// Any unbounded orthant makes the problem unbounded. Among optimal orthants
/// the largest value wins, and ties go to the lexicographically smallest
/// sign vector.
pub fn solve_exact<T: Scalar>(p: &AvlpProblem<T>) -> Result<SolveReport<T>, AvlpError> {
    let signs = orthant_signs(p)?;
    let outcomes: Vec<Result<LpOutcome<T>, AvlpError>> = signs
        .par_iter()
        .map(|s| {
            solve_lp(&orthant_lp(p, s, p.c())).map_err(|source| AvlpError::OrthantLp {
                sign: s.clone(),
                source,
            })
        })
        .collect();

    let mut per_orthant = Vec::with_capacity(signs.len());
    let mut best: Option<(T, Vec<T>, &SignVector)> = None;
    let mut unbounded: Option<(Vec<T>, &SignVector)> = None;
    for (s, outcome) in signs.iter().zip(outcomes) {
        let outcome = outcome?;
        per_orthant.push(OrthantResult {
            sign: s.clone(),
            status: outcome.status(),
            value: outcome.value(),
        });
        match outcome {
            LpOutcome::Unbounded { ray } if unbounded.is_none() => unbounded = Some((ray, s)),
            LpOutcome::Optimal { x, value, .. } => {
                let better = match &best {
                    None => true,
                    Some((v, _, _)) => value > *v + T::cert_tol() * (T::one() + v.abs()),
                };
                if better {
                    best = Some((value, x, s));
                }
            }
            _ => {}
        }
    }

    let orthants_solved = per_orthant.len();
    let report = if let Some((ray, s)) = unbounded {
        SolveReport {
            status: LpStatus::Unbounded,
            f_star: None,
            x_star: None,
            ray: Some(ray),
            witness_sign: Some(s.clone()),
            orthants_solved,
            per_orthant,
        }
    } else if let Some((value, x, s)) = best {
        SolveReport {
            status: LpStatus::Optimal,
            f_star: Some(value),
            x_star: Some(x),
            ray: None,
            witness_sign: Some(s.clone()),
            orthants_solved,
            per_orthant,
        }
    } else {
        SolveReport {
            status: LpStatus::Infeasible,
            f_star: None,
            x_star: None,
            ray: None,
            witness_sign: None,
            orthants_solved,
            per_orthant,
        }
    };
    Ok(report)
}

/// Returns some feasible point, or `None` when the feasible set is empty.
pub fn find_feasible<T: Scalar>(p: &AvlpProblem<T>) -> Result<Option<Vec<T>>, AvlpError> {
    let zero = p.with_objective(vec![T::zero(); p.n()])?;
    let report = solve_exact(&zero)?;
    Ok(report.x_star)
}

/// LP in `(x¹, x²) >= 0`:
/// `max c^T x¹ - c^T x²  s.t.  (A - D) x¹ - (A + D) x² <= b`.
pub fn relaxation_lp<T: Scalar>(p: &AvlpProblem<T>) -> LinearProgram<T> {
    let (m, n) = (p.m(), p.n());
    let mut rows = Vec::with_capacity(m + 2 * n);
    for i in 0..m {
        let (a, d) = (p.a().row(i), p.d().row(i));
        let mut r: Vec<T> = a.iter().zip(d).map(|(&a, &d)| a - d).collect();
        r.extend(a.iter().zip(d).map(|(&a, &d)| -(a + d)));
        rows.push(r);
    }
    for j in 0..2 * n {
        let mut r = vec![T::zero(); 2 * n];
        r[j] = -T::one();
        rows.push(r);
    }
    let mut h = p.b().to_vec();
    h.extend(std::iter::repeat_n(T::zero(), 2 * n));
    let mut obj = p.c().to_vec();
    obj.extend(p.c().iter().map(|&v| -v));
    LinearProgram::from_rows(2 * n, &rows, h, obj).expect("relaxation dimensions")
}

/// Solves [`relaxation_lp`]. An optimal value bounds the true optimum from
/// above.
pub fn relaxation_bound<T: Scalar>(p: &AvlpProblem<T>) -> Result<LpOutcome<T>, AvlpError> {
    Ok(solve_lp(&relaxation_lp(p))?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Candidacy {
    Pass,
    /// Active constraints of the shifted system (without and with the
    /// orthant rows) have rank below `n`.
    Fail {
        rank_shifted: usize,
        rank_with_orthant: usize,
    },
}

/// Necessary test for `x` to be a vertex of the convex hull of the feasible
/// set: with `s = sgn(x)`, the active rows of `(A - D diag(s)) x <= b` must
/// have rank `n`, and so must those of the same system plus
/// `diag(s) x >= 0`.
pub fn vertex_candidacy<T: Scalar>(p: &AvlpProblem<T>, x: &[T]) -> Result<Candidacy, AvlpError> {
    let n = p.n();
    if x.len() != n {
        return Err(AvlpError::Dimension(format!(
            "point has {} entries, problem has {n} variables",
            x.len()
        )));
    }
    let mem = membership(p, x, T::feas_tol());
    if !mem.feasible {
        return Err(AvlpError::NotFeasible(mem.max_violation().to_f64().unwrap_or(f64::NAN)));
    }
    let act = active_tol::<T>();
    let r = residual(p, x);
    let shifted = p.shifted_matrix(&SignVector::of(x));
    let mut active: Vec<Vec<T>> = (0..p.m())
        .filter(|&i| r[i].abs() <= act * (T::one() + p.b()[i].abs()))
        .map(|i| shifted.row(i).to_vec())
        .collect();
    let rank_shifted = active_rank(&active, n);
    for (j, &v) in x.iter().enumerate() {
        if v.abs() <= act {
            let mut row = vec![T::zero(); n];
            row[j] = T::one();
            active.push(row);
        }
    }
    let rank_with_orthant = active_rank(&active, n);
    if rank_shifted == n && rank_with_orthant == n {
        Ok(Candidacy::Pass)
    } else {
        Ok(Candidacy::Fail {
            rank_shifted,
            rank_with_orthant,
        })
    }
}

pub(crate) fn active_tol<T: Scalar>() -> T {
    T::feas_tol() * T::lit(10.0)
}

fn active_rank<T: Scalar>(rows: &[Vec<T>], n: usize) -> usize {
    if rows.is_empty() || n == 0 {
        return 0;
    }
    let m = Matrix::from_rows(rows).expect("active rows");
    rank(&m, T::pivot_tol() * T::lit(1e2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manhattan() -> AvlpProblem<f64> {
        AvlpProblem::<f64>::from_rows(
            &[
                vec![10.0, 10.0],
                vec![-10.0, 10.0],
                vec![10.0, -10.0],
                vec![-10.0, -10.0],
            ],
            &vec![vec![1.0, 1.0]; 4],
            vec![9.0; 4],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn manhattan_max_x1() {
        let r = solve_exact(&manhattan()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.f_star.unwrap() - 1.0).abs() < 1e-9);
        let x = r.x_star.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
        assert_eq!(r.orthants_solved, 4);
    }

    #[test]
    fn zero_columns_are_free() {
        // x1 unrestricted and not in D; x2 must satisfy |x2| >= 1.
        let p = AvlpProblem::<f64>::from_rows(
            &[
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            &[
                vec![0.0, 0.0],
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 0.0],
                vec![0.0, 0.0],
            ],
            vec![2.0, 3.0, -1.0, 4.0, 4.0],
            vec![-1.0, -1.0],
        )
        .unwrap();
        let r = solve_exact(&p).unwrap();
        assert_eq!(r.orthants_solved, 2);
        assert!((r.f_star.unwrap() - 7.0).abs() < 1e-9);
        assert_eq!(r.witness_sign.unwrap().entries(), &[0, -1]);
    }

    #[test]
    fn unbounded_beats_optimal() {
        // x - 2|x| <= 0 holds everywhere; maximize x.
        let p = AvlpProblem::<f64>::from_rows(&[vec![1.0]], &[vec![2.0]], vec![0.0], vec![1.0]).unwrap();
        let r = solve_exact(&p).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        assert_eq!(r.witness_sign.unwrap().entries(), &[1]);
    }

    #[test]
    fn infeasible_everywhere() {
        let p = AvlpProblem::<f64>::from_rows(&[vec![0.0]], &[vec![0.0]], vec![-1.0], vec![1.0]).unwrap();
        let r = solve_exact(&p).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.witness_sign.is_none());
        assert!(find_feasible(&p).unwrap().is_none());
    }

    #[test]
    fn ties_go_to_smallest_sign() {
        // |x| <= 1, maximize 0: every orthant ties.
        let p = AvlpProblem::<f64>::from_rows(
            &[vec![1.0], vec![-1.0]],
            &[vec![0.0], vec![0.0]],
            vec![1.0, 1.0],
            vec![0.0],
        )
        .unwrap();
        let r = solve_exact(&p).unwrap();
        assert_eq!(r.orthants_solved, 1);
        let q = AvlpProblem::<f64>::from_rows(&[vec![0.0]], &[vec![1.0]], vec![1.0], vec![0.0]).unwrap();
        let r = solve_exact(&q).unwrap();
        assert_eq!(r.witness_sign.unwrap().entries(), &[-1]);
    }

    #[test]
    fn candidacy_examples() {
        let p = manhattan();
        assert_eq!(vertex_candidacy(&p, &[1.0, 0.0]).unwrap(), Candidacy::Pass);
        assert!(matches!(
            vertex_candidacy(&p, &[0.5, 0.0]).unwrap(),
            Candidacy::Fail { .. }
        ));
        assert!(matches!(
            vertex_candidacy(&p, &[0.6, 0.6]),
            Err(AvlpError::NotFeasible(_))
        ));
        let square = AvlpProblem::<f64>::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            &vec![vec![0.0, 0.0]; 4],
            vec![1.0; 4],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert_eq!(vertex_candidacy(&square, &[1.0, 1.0]).unwrap(), Candidacy::Pass);
    }

    #[test]
    fn relaxation_is_exact_without_d() {
        let p = AvlpProblem::<f64>::from_rows(
            &[vec![1.0, 2.0], vec![3.0, -1.0], vec![-1.0, 0.0]],
            &vec![vec![0.0, 0.0]; 3],
            vec![4.0, 3.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let exact = solve_exact(&p).unwrap().f_star.unwrap();
        let relax = relaxation_bound(&p).unwrap().value().unwrap();
        assert!((exact - relax).abs() < 1e-9);
    }
}
