//! Shared helpers for integration tests: an exact rational oracle that
//! solves orthant LPs by enumerating basic solutions, plus random instance
//! generators.
#![allow(dead_code)]

use avlp::{AvlpProblem, Matrix};
use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Q = BigRational;

pub fn q(v: f64) -> Q {
    BigRational::from_float(v).expect("finite")
}

pub fn qi(v: i64) -> Q {
    BigRational::from_integer(v.into())
}

pub fn f(x: &Q) -> f64 {
    x.to_f64().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-reduces `a` in place and returns the pivot columns.
fn rref(a: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let k = a[i][c].clone();
                let pivot = a[r].clone();
                for (v, p) in a[i].iter_mut().zip(&pivot) {
                    *v = &*v - &k * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub fn rank_q(a: &[Vec<Q>]) -> usize {
    rref(&mut a.to_vec()).len()
}

/// Unique solution of a square system, if nonsingular.
pub fn solve_q(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut aug: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| r.iter().cloned().chain([v.clone()]).collect())
        .collect();
    let piv = rref(&mut aug);
    if piv.len() != n || piv.iter().any(|&c| c >= n) {
        return None;
    }
    Some(aug.iter().map(|r| r[n].clone()).collect())
}

/// A nonzero kernel vector of a matrix with one-dimensional kernel.
fn kernel_vector(a: &[Vec<Q>], d: usize) -> Option<Vec<Q>> {
    if a.is_empty() {
        return (d == 1).then(|| vec![Q::one()]);
    }
    let mut m = a.to_vec();
    let piv = rref(&mut m);
    if piv.len() != d - 1 {
        return None;
    }
    let free = (0..d).find(|c| !piv.contains(c))?;
    let mut v = vec![Q::zero(); d];
    v[free] = Q::one();
    for (r, &c) in piv.iter().enumerate() {
        v[c] = -m[r][free].clone();
    }
    Some(v)
}

fn dot_q(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    Infeasible,
    Unbounded,
    Optimal(Q),
}

impl Oracle {
    pub fn merge(self, other: Oracle) -> Oracle {
        match (self, other) {
            (Oracle::Unbounded, _) | (_, Oracle::Unbounded) => Oracle::Unbounded,
            (Oracle::Optimal(a), Oracle::Optimal(b)) => Oracle::Optimal(a.max(b)),
            (Oracle::Optimal(a), _) | (_, Oracle::Optimal(a)) => Oracle::Optimal(a),
            _ => Oracle::Infeasible,
        }
    }
}

/// `max obj^T x  s.t.  G x <= h` over a pointed polyhedron (`rank G = d`),
/// by enumerating all basic solutions and all extreme rays.
pub fn pointed_lp(g: &[Vec<Q>], h: &[Q], obj: &[Q]) -> Oracle {
    let d = obj.len();
    let k = g.len();
    assert_eq!(rank_q(g), d, "oracle needs a pointed polyhedron");
    let mut best: Option<Q> = None;
    for rows in (0..k).combinations(d) {
        let sub: Vec<Vec<Q>> = rows.iter().map(|&i| g[i].clone()).collect();
        let rhs: Vec<Q> = rows.iter().map(|&i| h[i].clone()).collect();
        let Some(x) = solve_q(&sub, &rhs) else { continue };
        if (0..k).all(|i| dot_q(&g[i], &x) <= h[i]) {
            let v = dot_q(obj, &x);
            best = Some(best.map_or(v.clone(), |b| b.max(v)));
        }
    }
    let Some(best) = best else {
        return Oracle::Infeasible;
    };
    for rows in (0..k).combinations(d - 1) {
        let sub: Vec<Vec<Q>> = rows.iter().map(|&i| g[i].clone()).collect();
        let Some(r) = kernel_vector(&sub, d) else { continue };
        for dir in [r.clone(), r.iter().map(|v| -v).collect()] {
            let in_cone = (0..k).all(|i| !dot_q(&g[i], &dir).is_positive());
            if in_cone && dot_q(obj, &dir).is_positive() {
                return Oracle::Unbounded;
            }
        }
    }
    Oracle::Optimal(best)
}

/// Optimal value of the problem by solving every one of the `2^n` orthant
/// LPs exactly. Substitutes `x = diag(s) u`, `u >= 0`, so every piece is
/// pointed.
pub fn avlp_oracle(p: &AvlpProblem<f64>) -> Oracle {
    let (m, n) = (p.m(), p.n());
    let mut out = Oracle::Infeasible;
    for s in (0..n).map(|_| [-1i64, 1]).multi_cartesian_product() {
        let mut g = Vec::with_capacity(m + n);
        for i in 0..m {
            // (A_ij - D_ij s_j) s_j u_j = (A_ij s_j - D_ij) u_j
            g.push(
                (0..n)
                    .map(|j| q(p.a()[(i, j)]) * qi(s[j]) - q(p.d()[(i, j)]))
                    .collect::<Vec<_>>(),
            );
        }
        for j in 0..n {
            let mut r = vec![Q::zero(); n];
            r[j] = -Q::one();
            g.push(r);
        }
        let h: Vec<Q> = p.b().iter().map(|&v| q(v)).chain((0..n).map(|_| Q::zero())).collect();
        let obj: Vec<Q> = (0..n).map(|j| q(p.c()[j]) * qi(s[j])).collect();
        out = out.merge(pointed_lp(&g, &h, &obj));
    }
    out
}

/// Random instance with integer entries: `A, b, c` in `[-r, r]`, `D` in `[0, r]`.
pub fn random_instance(rng: &mut impl Rng, n: usize, m: usize, r: i32) -> AvlpProblem<f64> {
    let mut ent = |lo: i32| rng.gen_range(lo..=r) as f64;
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| ent(-r)).collect()).collect();
    let d: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| ent(0)).collect()).collect();
    let b: Vec<f64> = (0..m).map(|_| ent(-r)).collect();
    let c: Vec<f64> = (0..n).map(|_| ent(-r)).collect();
    AvlpProblem::from_rows(&a, &d, b, c).unwrap()
}

pub fn random_sized(rng: &mut impl Rng, max_n: usize, max_m: usize, r: i32) -> AvlpProblem<f64> {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    random_instance(rng, n, m, r)
}

/// Proptest strategy for small integer instances.
pub fn instance(max_n: usize, max_m: usize, r: i32) -> impl Strategy<Value = AvlpProblem<f64>> {
    (1..=max_n, 1..=max_m).prop_flat_map(move |(n, m)| {
        (
            prop::collection::vec(-r..=r, m * n),
            prop::collection::vec(0..=r, m * n),
            prop::collection::vec(-r..=r, m),
            prop::collection::vec(-r..=r, n),
        )
            .prop_map(move |(a, d, b, c)| {
                let conv = |v: Vec<i32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
                AvlpProblem::new(
                    Matrix::from_row_major(m, n, conv(a)).unwrap(),
                    Matrix::from_row_major(m, n, conv(d)).unwrap(),
                    conv(b),
                    conv(c),
                )
                .unwrap()
            })
    })
}

/// The 1-norm unit ball written as four rows `10 s^T x - e^T |x| <= 9`.
pub fn manhattan() -> AvlpProblem<f64> {
    AvlpProblem::from_rows(
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

/// Signed-sum gadget: `-e <= x <= e`, `|x| >= e`, `a^T x <= 0`, maximizing
/// `a^T x`. The optimum is 0 exactly when `a` has a balanced signing.
pub fn set_partition(a: &[f64]) -> AvlpProblem<f64> {
    let n = a.len();
    let mut rows_a = Vec::new();
    let mut rows_d = Vec::new();
    let mut b = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows_a.push(e.clone());
        rows_d.push(vec![0.0; n]);
        b.push(1.0);
        rows_a.push(e.iter().map(|v| -v).collect());
        rows_d.push(vec![0.0; n]);
        b.push(1.0);
        rows_a.push(vec![0.0; n]);
        rows_d.push(e);
        b.push(-1.0);
    }
    rows_a.push(a.to_vec());
    rows_d.push(vec![0.0; n]);
    b.push(0.0);
    AvlpProblem::from_rows(&rows_a, &rows_d, b, a.to_vec()).unwrap()
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Exact membership of a rational point in the solution box.
pub fn box_contains(bx: &[avlp::Interval<f64>], x: &[Q]) -> bool {
    bx.iter().zip(x).all(|(iv, v)| q(iv.lo()) <= *v && *v <= q(iv.hi()))
}

/// Random square interval system with a well-conditioned midpoint and
/// small radii, plus a right-hand side.
pub fn random_interval_system(rng: &mut impl Rng, n: usize) -> (Matrix<f64>, Matrix<f64>, Vec<f64>) {
    let mut mid = Matrix::zeros(n, n);
    let mut rad = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v: f64 = rng.gen_range(-2..=2) as f64;
            mid[(i, j)] = if i == j { v + 4.0 * n as f64 } else { v };
            rad[(i, j)] = rng.gen_range(0..=4) as f64 / 32.0;
        }
    }
    let rhs = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    (mid, rad, rhs)
}

/// A realization inside `[mid ± rad]` on a dyadic grid, so exact solves
/// stay cheap; corners half the time.
pub fn sample_realization(rng: &mut impl Rng, mid: &Matrix<f64>, rad: &Matrix<f64>) -> Vec<Vec<Q>> {
    let corner = rng.gen_bool(0.5);
    (0..mid.rows())
        .map(|i| {
            (0..mid.cols())
                .map(|j| {
                    let t: f64 = if corner {
                        if rng.gen_bool(0.5) {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        f64::from(rng.gen_range(-16..=16)) / 16.0
                    };
                    q(mid[(i, j)] + t * rad[(i, j)])
                })
                .collect()
        })
        .collect()
}

/// Integer matrix from nested `i64` rows.
pub fn int_matrix(rows: &[Vec<i64>]) -> avlp::IntMatrix {
    avlp::IntMatrix::from_rows(rows).unwrap()
}

/// Random `A` in `[-r, r]` and rank-one `D = u v^T` with `u, v` in `[0, 2]`
/// and both nonzero.
pub fn random_rank_one(rng: &mut impl Rng, m: usize, n: usize, r: i64) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let a = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(-r..=r)).collect())
        .collect();
    let nonzero = |rng: &mut dyn rand::RngCore, k: usize| -> Vec<i64> {
        loop {
            let v: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=2)).collect();
            if v.iter().any(|&t| t != 0) {
                return v;
            }
        }
    };
    let u = nonzero(rng, m);
    let v = nonzero(rng, n);
    let d = u.iter().map(|&ui| v.iter().map(|&vj| ui * vj).collect()).collect();
    (a, d)
}

/// Checks `2 det(M^{i0}) = det(M^{i+}) + det(M^{i-})` for a random square
/// pair, a random sign vector and a random index.
pub fn det_linearity_trial(rng: &mut impl Rng) -> bool {
    use avlp::integrality::det_exact;
    use avlp::IntMatrix;
    let n = rng.gen_range(1..=5);
    let a: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-4..=4)).collect())
        .collect();
    let d: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..=3)).collect()).collect();
    let (a, d) = (int_matrix(&a), int_matrix(&d));
    let mut s: Vec<i8> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
    let i = rng.gen_range(0..n);
    let mut det_at = |v: i8| {
        s[i] = v;
        let m = IntMatrix::shifted(&a, &d, &avlp::SignVector::new(s.clone()).unwrap()).transpose();
        det_exact(&m).unwrap()
    };
    let (d0, dp, dm) = (det_at(0), det_at(1), det_at(-1));
    d0 * 2 == dp + dm
}

/// Cone of `w >= 0` with `(A - D)^T w <= c <= (A + D)^T w`, capped by
/// `e^T w <= 10`; returns optimal points for a few random objectives.
pub fn dual_cone_points(p: &AvlpProblem<f64>, rng: &mut impl Rng, count: usize) -> Vec<Vec<f64>> {
    use avlp::{solve_lp, LinearProgram, LpOutcome};
    let (m, n) = (p.m(), p.n());
    let mut rows = Vec::new();
    let mut h = Vec::new();
    for j in 0..n {
        rows.push((0..m).map(|i| p.a()[(i, j)] - p.d()[(i, j)]).collect::<Vec<_>>());
        h.push(p.c()[j]);
        rows.push((0..m).map(|i| -(p.a()[(i, j)] + p.d()[(i, j)])).collect());
        h.push(-p.c()[j]);
    }
    for i in 0..m {
        let mut r = vec![0.0; m];
        r[i] = -1.0;
        rows.push(r);
        h.push(0.0);
    }
    rows.push(vec![1.0; m]);
    h.push(10.0);
    let mut out = Vec::new();
    for _ in 0..count {
        let obj: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let lp = LinearProgram::from_rows(m, &rows, h.clone(), obj).unwrap();
        if let LpOutcome::Optimal { x, .. } = solve_lp(&lp).unwrap() {
            out.push(x.iter().map(|v| v.max(0.0)).collect());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KktSearch {
    pub trials: usize,
    pub valid: usize,
    pub valid_noncomplementary: usize,
}

/// Random KKT candidates of the QP: `w` from convex combinations of dual
/// cone points (or plain random `w` when the cone is empty), the primal
/// part from the stationarity equations, optionally perturbed at one index,
/// and `b` chosen so that complementary slackness holds.
pub fn kkt_perturbation_search(p: &AvlpProblem<f64>, rng: &mut impl Rng, trials: usize) -> KktSearch {
    use avlp::qpkkt::{build_qp, verify_kkt, KktPoint};
    use avlp::reformulate::Alpha;
    let (m, n) = (p.m(), p.n());
    let pool = dual_cone_points(p, rng, 8);
    let mut out = KktSearch {
        trials,
        ..KktSearch::default()
    };
    let qps: Vec<_> = [0.5, 1.0, 3.7, 20.0]
        .iter()
        .map(|&a| build_qp(p, Alpha::Fixed(a)).unwrap())
        .collect();
    for _ in 0..trials {
        let qp = &qps[rng.gen_range(0..qps.len())];
        let alpha = qp.alpha;
        let w: Vec<f64> = if pool.is_empty() || rng.gen_bool(0.1) {
            (0..m)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        rng.gen_range(0.0..3.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        } else {
            let weights: Vec<f64> = pool.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = weights.iter().sum::<f64>().max(1e-12);
            let scale = rng.gen_range(0.1..=2.0);
            (0..m)
                .map(|i| scale * pool.iter().zip(&weights).map(|(pt, wt)| pt[i] * wt).sum::<f64>() / total)
                .collect()
        };
        let lw = qp.lower.tr_mul_vec(&w);
        let uw = qp.upper.tr_mul_vec(&w);
        let c = p.c();
        let mut x1: Vec<f64> = (0..n).map(|j| (uw[j] - c[j]).max(0.0) / alpha).collect();
        let mut x2: Vec<f64> = (0..n).map(|j| (c[j] - lw[j]).max(0.0) / alpha).collect();
        if rng.gen_bool(0.5) {
            let j = rng.gen_range(0..n);
            let eta = rng.gen_range(0.0..0.5);
            if rng.gen_bool(0.5) {
                x1[j] += eta;
            } else {
                x2[j] += eta;
            }
        }
        let u: Vec<f64> = (0..n).map(|j| -c[j] + alpha * x2[j] + lw[j]).collect();
        let v: Vec<f64> = (0..n).map(|j| c[j] + alpha * x1[j] - uw[j]).collect();
        let lx = qp.lower.mul_vec(&x1);
        let ux = qp.upper.mul_vec(&x2);
        let b: Vec<f64> = (0..m)
            .map(|i| lx[i] - ux[i] + if w[i] > 0.0 { 0.0 } else { rng.gen_range(0.0..2.0) })
            .collect();
        let pt = KktPoint { x1, x2, u, v, w };
        let verdict = verify_kkt(qp, &b, &pt, 1e-9).unwrap();
        if verdict.valid {
            out.valid += 1;
            if !verdict.complementary {
                out.valid_noncomplementary += 1;
            }
        }
    }
    out
}

/// Random union of 2 to 4 pieces in dimension 1 or 2; each piece is a box
/// or a single half-plane with small integer data.
pub fn random_union(rng: &mut impl Rng) -> avlp::reformulate::UnionOfPolyhedra<f64> {
    use avlp::reformulate::{Polyhedron, UnionOfPolyhedra};
    let n = rng.gen_range(1..=2);
    let m = rng.gen_range(2..=4);
    let pieces = (0..m)
        .map(|_| {
            if rng.gen_bool(0.5) {
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for j in 0..n {
                    let lo = rng.gen_range(-3..=2) as f64;
                    let w = rng.gen_range(0..=2) as f64;
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    rows.push(e.clone());
                    rhs.push(lo + w);
                    e[j] = -1.0;
                    rows.push(e);
                    rhs.push(-lo);
                }
                Polyhedron::from_rows(n, &rows, rhs).unwrap()
            } else {
                let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect();
                Polyhedron::from_rows(n, &[g], vec![rng.gen_range(-2..=2) as f64]).unwrap()
            }
        })
        .collect();
    UnionOfPolyhedra::new(pieces).unwrap()
}

/// At least 200 grid points: 201 on `[-5, 5]` in 1-D, 15 x 15 on `[-3.5, 3.5]^2` in 2-D.
pub fn union_grid(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        (-100..=100).map(|k| vec![f64::from(k) / 20.0]).collect()
    } else {
        (-7..=7)
            .cartesian_product(-7..=7)
            .map(|(a, b)| vec![f64::from(a) / 2.0, f64::from(b) / 2.0])
            .collect()
    }
}
