//! Structural questions about the feasible set `M = {x : Ax - D|x| <= b}`
//! that do not depend on a particular objective.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::AvlpError;
use crate::exact::{active_tol, find_feasible, MAX_SIGN_BITS};
use crate::matrix::{Lu, Matrix};
use crate::problem::{membership, residual, AvlpProblem, SignOrder, SignVector};
use crate::scalar::Scalar;
use crate::simplex::{solve_lp, LinearProgram, LpOutcome};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Boundedness<T> {
    Yes,
    /// A nonzero `x` with `Ax - D|x| <= 0`, lying in orthant `sign`.
    No {
        ray: Vec<T>,
        sign: SignVector,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FeasibleAllB<T> {
    /// `witness` satisfies `Ax - D|x| <= -e`.
    Yes {
        witness: Vec<T>,
    },
    No,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Connectedness<T> {
    /// `u, v >= 0` with `(A + D) u - (A - D) v <= b`.
    Holds {
        u: Vec<T>,
        v: Vec<T>,
    },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Convexity<T> {
    Consistent,
    /// Row `row` is active at both points, `x1[col] x2[col] < 0` and
    /// `D[row][col] > 0`, so `M` is not convex.
    Violated {
        row: usize,
        col: usize,
        x1: Vec<T>,
        x2: Vec<T>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounded_all_b: Option<Boundedness<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible_all_b: Option<FeasibleAllB<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connected_sufficient: Option<Connectedness<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convexity_necessary: Option<Convexity<T>>,
}

impl<T> Default for AnalysisReport<T> {
    fn default() -> Self {
        Self {
            bounded_all_b: None,
            feasible_all_b: None,
            connected_sufficient: None,
            convexity_necessary: None,
        }
    }
}

fn all_signs(n: usize) -> Result<Vec<SignVector>, AvlpError> {
    if n > MAX_SIGN_BITS {
        return Err(AvlpError::Limit(format!(
            "{n} variables exceed the enumeration limit {MAX_SIGN_BITS}"
        )));
    }
    let idx: Vec<usize> = (0..n).collect();
    Ok(SignVector::enumerate(n, &idx, 0, SignOrder::PlusFirst).collect())
}

/// Decides whether `M` is bounded for every `b`, i.e. whether
/// `Ax - D|x| <= 0` forces `x = 0`.
///
/// All `2^n` orthants are visited, including signs of zero columns of `D`,
/// because a nontrivial solution may hide in any of them. Orthants are
/// scanned from `(1, ..., 1)` downwards and the first ray found is returned.
pub fn bounded_for_all_b<T: Scalar>(p: &AvlpProblem<T>) -> Result<Boundedness<T>, AvlpError> {
    let n = p.n();
    let signs = all_signs(n)?;
    let found: Vec<Result<Option<Vec<T>>, AvlpError>> = signs
        .par_iter()
        .map(|s| {
            let g = p.shifted_matrix(s);
            let sv = s.to_scalars::<T>();
            let mut rows: Vec<Vec<T>> = g.iter_rows().map(<[T]>::to_vec).collect();
            let mut h = vec![T::zero(); p.m()];
            for (j, &sj) in sv.iter().enumerate() {
                let mut r = vec![T::zero(); n];
                r[j] = -sj;
                rows.push(r);
                h.push(T::zero());
                let mut r = vec![T::zero(); n];
                r[j] = sj;
                rows.push(r);
                h.push(T::one());
            }
            let lp = LinearProgram::from_rows(n, &rows, h, sv).expect("cone LP");
            let out = solve_lp(&lp).map_err(|source| AvlpError::OrthantLp {
                sign: s.clone(),
                source,
            })?;
            Ok(match out {
                LpOutcome::Optimal { x, value, .. } if value > T::cert_tol() => Some(x),
                _ => None,
            })
        })
        .collect();
    for (s, r) in signs.iter().zip(found) {
        if let Some(ray) = r? {
            return Ok(Boundedness::No { ray, sign: s.clone() });
        }
    }
    Ok(Boundedness::Yes)
}

/// Decides whether `M` is nonempty for every `b` by solving the system with
/// `b = -e`.
pub fn feasible_for_all_b<T: Scalar>(p: &AvlpProblem<T>) -> Result<FeasibleAllB<T>, AvlpError> {
    let q = p.with_rhs(vec![-T::one(); p.m()])?;
    Ok(match find_feasible(&q)? {
        Some(witness) => FeasibleAllB::Yes { witness },
        None => FeasibleAllB::No,
    })
}

/// Scales a witness of `Ax - D|x| <= -e` into a feasible point for the
/// right-hand side `b`.
pub fn scale_witness<T: Scalar>(p: &AvlpProblem<T>, witness: &[T], b: &[T]) -> Vec<T> {
    let q = p.with_rhs(vec![T::zero(); p.m()]).expect("same shape");
    let r = residual(&q, witness);
    let alpha = r
        .iter()
        .zip(b)
        .filter(|(&rj, _)| rj < T::zero())
        .fold(T::zero(), |acc, (&rj, &bj)| acc.max(bj / rj));
    witness.iter().map(|&v| v * alpha).collect()
}

/// Sufficient condition for connectedness of `M`: feasibility of
/// `(A + D) u - (A - D) v <= b` with `u, v >= 0`.
pub fn connected_sufficient<T: Scalar>(p: &AvlpProblem<T>) -> Result<Connectedness<T>, AvlpError> {
    let (m, n) = (p.m(), p.n());
    let mut rows = Vec::with_capacity(m + 2 * n);
    for i in 0..m {
        let (a, d) = (p.a().row(i), p.d().row(i));
        let mut r: Vec<T> = a.iter().zip(d).map(|(&a, &d)| a + d).collect();
        r.extend(a.iter().zip(d).map(|(&a, &d)| d - a));
        rows.push(r);
    }
    for j in 0..2 * n {
        let mut r = vec![T::zero(); 2 * n];
        r[j] = -T::one();
        rows.push(r);
    }
    let mut h = p.b().to_vec();
    h.extend(std::iter::repeat_n(T::zero(), 2 * n));
    let lp = LinearProgram::from_rows(2 * n, &rows, h, vec![T::zero(); 2 * n])?;
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => {
            let clip = |v: &[T]| v.iter().map(|&t| t.max(T::zero())).collect();
            Connectedness::Holds {
                u: clip(&x[..n]),
                v: clip(&x[n..]),
            }
        }
        _ => Connectedness::Inconclusive,
    })
}

fn check_active<T: Scalar>(p: &AvlpProblem<T>, x: &[T], i: usize, tol: T) -> Result<(), AvlpError> {
    let mem = membership(p, x, tol);
    if !mem.feasible {
        return Err(AvlpError::NotFeasible(mem.max_violation().to_f64().unwrap_or(f64::NAN)));
    }
    let r = mem.residual[i];
    if r.abs() > tol * (T::one() + p.b()[i].abs()) {
        return Err(AvlpError::NotActive {
            row: i,
            residual: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Necessary convexity test on two feasible points sharing the active row
/// `i`: a coordinate with opposite signs at the two points must have
/// `D[i][j] = 0`.
pub fn convexity_active_pair_check<T: Scalar>(
    p: &AvlpProblem<T>,
    x1: &[T],
    x2: &[T],
    i: usize,
    tol: T,
) -> Result<Convexity<T>, AvlpError> {
    if i >= p.m() {
        return Err(AvlpError::Dimension(format!("row {i} out of range")));
    }
    if x1.len() != p.n() || x2.len() != p.n() {
        return Err(AvlpError::Dimension("point length differs from n".into()));
    }
    check_active(p, x1, i, tol)?;
    check_active(p, x2, i, tol)?;
    Ok(flipped_column(p, i, x1, x2)
        .map(|col| Convexity::Violated {
            row: i,
            col,
            x1: x1.to_vec(),
            x2: x2.to_vec(),
        })
        .unwrap_or(Convexity::Consistent))
}

fn flipped_column<T: Scalar>(p: &AvlpProblem<T>, i: usize, x1: &[T], x2: &[T]) -> Option<usize> {
    (0..p.n()).find(|&j| x1[j] * x2[j] < T::zero() && p.d()[(i, j)] > T::zero())
}

/// Size limits for brute-force vertex enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VertexLimits {
    pub max_dim: usize,
    pub max_rows: usize,
}

impl Default for VertexLimits {
    fn default() -> Self {
        Self {
            max_dim: 4,
            max_rows: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex<T> {
    pub point: Vec<T>,
    /// Every nonsingular row subset that determines the point.
    pub bases: Vec<Vec<usize>>,
}

/// All vertices of `{x : G x <= h}` by solving every `d x d` row subsystem.
pub fn enumerate_vertices<T: Scalar>(
    g: &Matrix<T>,
    h: &[T],
    limits: VertexLimits,
) -> Result<Vec<Vertex<T>>, AvlpError> {
    let (k, d) = g.shape();
    if d > limits.max_dim || k > limits.max_rows {
        return Err(AvlpError::Limit(format!(
            "vertex enumeration on {k} rows in dimension {d} exceeds {} rows / dimension {}",
            limits.max_rows, limits.max_dim
        )));
    }
    if h.len() != k {
        return Err(AvlpError::Dimension(format!("G has {k} rows, h has {}", h.len())));
    }
    let tol = T::feas_tol() * T::lit(10.0);
    let mut out: Vec<Vertex<T>> = Vec::new();
    if d == 0 {
        if h.iter().all(|&v| v >= -tol) {
            out.push(Vertex {
                point: Vec::new(),
                bases: vec![Vec::new()],
            });
        }
        return Ok(out);
    }
    for subset in (0..k).combinations(d) {
        let sub = g.select_rows(&subset);
        let Some(lu) = Lu::factor(&sub, T::pivot_tol()) else {
            continue;
        };
        let rhs: Vec<T> = subset.iter().map(|&i| h[i]).collect();
        let x = lu.solve(&rhs);
        let feasible = g
            .mul_vec(&x)
            .iter()
            .zip(h)
            .all(|(&gx, &hi)| gx <= hi + tol * (T::one() + hi.abs()));
        if !feasible {
            continue;
        }
        let scale = x.iter().fold(T::one(), |a, v| a.max(v.abs()));
        match out
            .iter_mut()
            .find(|v| v.point.iter().zip(&x).all(|(&a, &b)| (a - b).abs() <= tol * scale))
        {
            Some(v) => v.bases.push(subset),
            None => out.push(Vertex {
                point: x,
                bases: vec![subset],
            }),
        }
    }
    Ok(out)
}

/// Vertices of `{x : (A - D diag(s)) x <= b}` that lie in orthant `s`,
/// with bases restricted to rows of the original system.
pub fn orthant_vertices<T: Scalar>(
    p: &AvlpProblem<T>,
    s: &SignVector,
    limits: VertexLimits,
) -> Result<Vec<Vertex<T>>, AvlpError> {
    let g = p.shifted_matrix(s);
    let tol = active_tol::<T>();
    let verts = enumerate_vertices(&g, p.b(), limits)?;
    Ok(verts
        .into_iter()
        .filter(|v| {
            v.point
                .iter()
                .zip(s.entries())
                .all(|(&x, &sj)| T::from_i8(sj).unwrap() * x >= -tol)
        })
        .collect())
}

/// Necessary convexity test over all pairs of orthant vertices that share a
/// basis row.
pub fn convexity_vertex_check<T: Scalar>(p: &AvlpProblem<T>, limits: VertexLimits) -> Result<Convexity<T>, AvlpError> {
    if p.n() > limits.max_dim {
        return Err(AvlpError::Limit(format!(
            "{} variables exceed the vertex enumeration limit {}",
            p.n(),
            limits.max_dim
        )));
    }
    let mut all: Vec<Vertex<T>> = Vec::new();
    for s in all_signs(p.n())? {
        all.extend(orthant_vertices(p, &s, limits)?);
    }
    for (v1, v2) in all.iter().tuple_combinations() {
        for b1 in &v1.bases {
            for &i in b1 {
                if !v2.bases.iter().any(|b2| b2.contains(&i)) {
                    continue;
                }
                if let Some(col) = flipped_column(p, i, &v1.point, &v2.point) {
                    return Ok(Convexity::Violated {
                        row: i,
                        col,
                        x1: v1.point.clone(),
                        x2: v2.point.clone(),
                    });
                }
            }
        }
    }
    Ok(Convexity::Consistent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(a: [f64; 2], d: f64) -> AvlpProblem<f64> {
        AvlpProblem::<f64>::from_rows(
            &[vec![a[0]], vec![a[1]]],
            &[vec![d], vec![d]],
            vec![1.0, 1.0],
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn boundedness_examples() {
        assert_eq!(bounded_for_all_b(&one_var([1.0, -1.0], 0.5)).unwrap(), Boundedness::Yes);
        match bounded_for_all_b(&one_var([1.0, -1.0], 2.0)).unwrap() {
            Boundedness::No { ray, sign } => {
                assert!(ray[0] > 0.0);
                assert_eq!(sign.entries(), &[1]);
            }
            other => panic!("expected a ray, got {other:?}"),
        }
    }

    #[test]
    fn feasibility_examples() {
        let p = AvlpProblem::<f64>::from_rows(&[vec![1.0]], &[vec![2.0]], vec![0.0], vec![0.0]).unwrap();
        let FeasibleAllB::Yes { witness } = feasible_for_all_b(&p).unwrap() else {
            panic!("expected a witness");
        };
        assert!(witness[0] - 2.0 * witness[0].abs() <= -1.0 + 1e-9);
        let b = [5.0];
        let y = scale_witness(&p, &witness, &b);
        assert!(p
            .with_rhs(b.to_vec())
            .map(|q| membership(&q, &y, 1e-9).feasible)
            .unwrap());

        let q = AvlpProblem::<f64>::from_rows(
            &[vec![1.0], vec![-1.0]],
            &[vec![0.0], vec![0.0]],
            vec![0.0, 0.0],
            vec![0.0],
        )
        .unwrap();
        assert_eq!(feasible_for_all_b(&q).unwrap(), FeasibleAllB::No);
    }

    #[test]
    fn connected_with_nonnegative_b() {
        let p = one_var([1.0, -1.0], 2.0);
        assert!(matches!(connected_sufficient(&p).unwrap(), Connectedness::Holds { .. }));
    }

    #[test]
    fn vertices_of_simple_shapes() {
        let square = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let v = enumerate_vertices(&square, &[1.0, 1.0, 0.0, 0.0], VertexLimits::default()).unwrap();
        assert_eq!(v.len(), 4);

        let tri = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let v = enumerate_vertices(&tri, &[0.0, 0.0, 1.0], VertexLimits::default()).unwrap();
        let mut pts: Vec<Vec<f64>> = v.into_iter().map(|v| v.point).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);

        let empty = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        assert!(enumerate_vertices(&empty, &[-1.0, 0.0], VertexLimits::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn degenerate_vertex_collects_bases() {
        // Three constraint lines through the origin.
        let g = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0], vec![-1.0, -1.0]]).unwrap();
        let v = enumerate_vertices(&g, &[0.0, 0.0, 0.0], VertexLimits::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].bases.len(), 3);
    }

    #[test]
    fn limits_are_enforced() {
        let g = Matrix::<f64>::zeros(13, 2);
        assert!(matches!(
            enumerate_vertices(&g, &[0.0; 13], VertexLimits::default()),
            Err(AvlpError::Limit(_))
        ));
    }
}
