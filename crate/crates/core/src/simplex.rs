//! Dense two-phase simplex for `max obj^T x  s.t.  G x <= h` with free `x`.
//!
//! Free variables are split as `x = x⁺ - x⁻`, every row gets a slack, and
//! rows with negative right-hand side get an artificial variable for phase 1.
//! Dantzig pricing is used until `2 (k + d)` consecutive degenerate pivots
//! have been made, after which the phase finishes under Bland's rule.
//!
//! Every outcome carries a certificate: primal point and dual multipliers for
//! `Optimal`, a Farkas vector for `Infeasible`, and a recession direction for
//! `Unbounded`.

use serde::Serialize;

use crate::error::SimplexError;
use crate::matrix::Matrix;
use crate::scalar::{dot, max_abs, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearProgram<T> {
    g: Matrix<T>,
    h: Vec<T>,
    obj: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(g: Matrix<T>, h: Vec<T>, obj: Vec<T>) -> Result<Self, SimplexError> {
        if g.rows() != h.len() {
            return Err(SimplexError::Dimension(format!(
                "G has {} rows, h has {} entries",
                g.rows(),
                h.len()
            )));
        }
        if g.cols() != obj.len() {
            return Err(SimplexError::Dimension(format!(
                "G has {} columns, objective has {} entries",
                g.cols(),
                obj.len()
            )));
        }
        Ok(Self { g, h, obj })
    }

    /// Builds from nested rows; `d` fixes the width when there are no rows.
    pub fn from_rows(d: usize, rows: &[Vec<T>], h: Vec<T>, obj: Vec<T>) -> Result<Self, SimplexError> {
        let g = if rows.is_empty() {
            Matrix::zeros(0, d)
        } else {
            Matrix::from_rows(rows).map_err(|e| SimplexError::Dimension(e.to_string()))?
        };
        Self::new(g, h, obj)
    }

    pub fn g(&self) -> &Matrix<T> {
        &self.g
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn obj(&self) -> &[T] {
        &self.obj
    }

    pub fn num_vars(&self) -> usize {
        self.g.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.g.rows()
    }

    /// Magnitude used to scale certificate tolerances.
    pub fn scale(&self) -> T {
        T::one()
            .max(self.g.max_abs())
            .max(max_abs(&self.h))
            .max(max_abs(&self.obj))
    }

    /// Checks `G x <= h` within `tol (1 + |h_i|)`.
    pub fn is_feasible(&self, x: &[T], tol: T) -> bool {
        self.g
            .mul_vec(x)
            .iter()
            .zip(&self.h)
            .all(|(&gx, &hi)| gx - hi <= tol * (T::one() + hi.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LpOutcome<T> {
    Optimal {
        x: Vec<T>,
        value: T,
        /// `y >= 0` with `G^T y = obj` and `y^T (h - G x) = 0`.
        duals: Vec<T>,
    },
    Infeasible {
        /// `y >= 0`, `y^T G = 0`, `y^T h < 0`.
        farkas: Vec<T>,
    },
    Unbounded {
        /// `G r <= 0`, `obj^T r > 0`.
        ray: Vec<T>,
    },
}

impl<T: Scalar> LpOutcome<T> {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal { .. } => LpStatus::Optimal,
            LpOutcome::Infeasible { .. } => LpStatus::Infeasible,
            LpOutcome::Unbounded { .. } => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<T> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[T]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }

    /// Re-verifies the attached certificate by substitution.
    pub fn verify(&self, lp: &LinearProgram<T>) -> bool {
        let tol = T::cert_tol() * lp.scale();
        match self {
            LpOutcome::Optimal { x, value, duals } => {
                if !lp.is_feasible(x, T::cert_tol()) {
                    return false;
                }
                if (dot(lp.obj(), x) - *value).abs() > tol * (T::one() + value.abs()) {
                    return false;
                }
                if duals.iter().any(|&y| y < -tol) {
                    return false;
                }
                let gty = lp.g().tr_mul_vec(duals);
                let dual_value = dot(lp.h(), duals);
                gty.iter().zip(lp.obj()).all(|(&a, &b)| (a - b).abs() <= tol)
                    && (dual_value - *value).abs() <= tol * (T::one() + value.abs())
            }
            LpOutcome::Infeasible { farkas } => {
                if farkas.iter().any(|&y| y < -tol) {
                    return false;
                }
                let ytg = lp.g().tr_mul_vec(farkas);
                let norm = max_abs(farkas).max(T::min_positive_value());
                ytg.iter().all(|&v| v.abs() <= tol * norm) && dot(lp.h(), farkas) < T::zero()
            }
            LpOutcome::Unbounded { ray } => {
                let norm = max_abs(ray).max(T::min_positive_value());
                lp.g().mul_vec(ray).iter().all(|&v| v <= tol * norm) && dot(lp.obj(), ray) > T::zero()
            }
        }
    }
}

/// Solves the LP.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>, SimplexError> {
    if lp
        .g
        .as_slice()
        .iter()
        .chain(&lp.h)
        .chain(&lp.obj)
        .any(|v| !v.is_finite())
    {
        return Err(SimplexError::NonFinite);
    }
    Tableau::new(lp).run()
}

/// Splits `E x = f` into two inequality blocks and solves
/// `max obj^T x  s.t.  G x <= h,  E x = f`.
pub fn solve_lp_with_equalities<T: Scalar>(
    g: &Matrix<T>,
    h: &[T],
    e: &Matrix<T>,
    f: &[T],
    obj: &[T],
) -> Result<LpOutcome<T>, SimplexError> {
    let d = obj.len();
    if e.rows() > 0 && e.cols() != d {
        return Err(SimplexError::Dimension(format!(
            "E has {} columns, objective has {d}",
            e.cols()
        )));
    }
    if e.rows() != f.len() {
        return Err(SimplexError::Dimension(format!(
            "E has {} rows, f has {} entries",
            e.rows(),
            f.len()
        )));
    }
    let mut rows: Vec<Vec<T>> = g.iter_rows().map(<[T]>::to_vec).collect();
    let mut rhs = h.to_vec();
    for (i, r) in e.iter_rows().enumerate() {
        rows.push(r.to_vec());
        rhs.push(f[i]);
        rows.push(r.iter().map(|&v| -v).collect());
        rhs.push(-f[i]);
    }
    let lp = LinearProgram::from_rows(d, &rows, rhs, obj.to_vec())?;
    solve_lp(&lp)
}

struct Tableau<'a, T> {
    lp: &'a LinearProgram<T>,
    k: usize,
    d: usize,
    /// Number of structural + slack + artificial columns.
    ncols: usize,
    width: usize,
    /// `k` constraint rows of width `ncols + 1` (last entry is the rhs).
    t: Vec<T>,
    basis: Vec<usize>,
    /// Initial basic column for each row (slack or artificial).
    start: Vec<usize>,
    sigma: Vec<T>,
    first_art: usize,
    tol: T,
    pivots: usize,
    pivot_cap: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

impl<'a, T: Scalar> Tableau<'a, T> {
    fn new(lp: &'a LinearProgram<T>) -> Self {
        let k = lp.num_rows();
        let d = lp.num_vars();
        let sigma: Vec<T> =
            lp.h.iter()
                .map(|&h| if h < T::zero() { -T::one() } else { T::one() })
                .collect();
        let n_art = sigma.iter().filter(|&&s| s < T::zero()).count();
        let first_art = 2 * d + k;
        let ncols = first_art + n_art;
        let width = ncols + 1;
        let mut t = vec![T::zero(); k * width];
        let mut basis = vec![0; k];
        let mut next_art = first_art;
        for i in 0..k {
            let s = sigma[i];
            let row = &mut t[i * width..(i + 1) * width];
            for j in 0..d {
                let gij = lp.g[(i, j)];
                row[j] = s * gij;
                row[d + j] = -s * gij;
            }
            row[2 * d + i] = s;
            row[ncols] = s * lp.h[i];
            if s < T::zero() {
                row[next_art] = T::one();
                basis[i] = next_art;
                next_art += 1;
            } else {
                basis[i] = 2 * d + i;
            }
        }
        let start = basis.clone();
        Self {
            lp,
            k,
            d,
            ncols,
            width,
            t,
            basis,
            start,
            sigma,
            first_art,
            tol: T::pivot_tol(),
            pivots: 0,
            pivot_cap: 50 * (k + 2 * d + n_art + 10) * (k + 2 * d + 10),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.t[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> T {
        self.t[i * self.width + self.ncols]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.at(r, q);
        for j in 0..w {
            self.t[r * w + j] = self.t[r * w + j] / piv;
        }
        self.t[r * w + q] = T::one();
        for i in 0..self.k {
            if i == r {
                continue;
            }
            let f = self.at(i, q);
            if f == T::zero() {
                continue;
            }
            for j in 0..w {
                let v = self.t[i * w + j] - f * self.t[r * w + j];
                self.t[i * w + j] = v;
            }
            self.t[i * w + q] = T::zero();
        }
        self.basis[r] = q;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut dj = cost.to_vec();
        for i in 0..self.k {
            let cb = cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            for (j, v) in dj.iter_mut().enumerate() {
                *v = *v - cb * self.at(i, j);
            }
        }
        dj
    }

    /// Maximizes `cost^T z` from the current basis over allowed columns.
    fn optimize(&mut self, cost: &[T], allowed: &[bool]) -> Result<PhaseEnd, SimplexError> {
        let degenerate_limit = 2 * (self.k + self.d);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let cscale = T::one().max(max_abs(cost));
        loop {
            if self.pivots > self.pivot_cap {
                return Err(SimplexError::IterationLimit(self.pivot_cap));
            }
            let dj = self.reduced_costs(cost);
            let enter_tol = self.tol * cscale;
            let entering = if bland {
                (0..self.ncols).find(|&j| allowed[j] && dj[j] > enter_tol)
            } else {
                let mut best: Option<(usize, T)> = None;
                for j in 0..self.ncols {
                    if allowed[j] && dj[j] > enter_tol && best.is_none_or(|(_, v)| dj[j] > v) {
                        best = Some((j, dj[j]));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(q) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.k {
                let a = self.at(i, q);
                if a > self.tol {
                    let ratio = self.rhs(i).max(T::zero()) / a;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - self.tol || (ratio <= best + self.tol && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded(q));
            };
            if ratio <= self.tol {
                degenerate_run += 1;
                if degenerate_run > degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q);
        }
    }

    /// `π_i = c_{start(i)} - d_{start(i)}` mapped back to the original rows.
    fn row_multipliers(&self, cost: &[T]) -> Vec<T> {
        let dj = self.reduced_costs(cost);
        (0..self.k)
            .map(|i| {
                let j = self.start[i];
                self.sigma[i] * (cost[j] - dj[j])
            })
            .collect()
    }

    fn primal(&self) -> Vec<T> {
        let mut z = vec![T::zero(); self.ncols];
        for i in 0..self.k {
            z[self.basis[i]] = self.rhs(i);
        }
        (0..self.d).map(|j| z[j] - z[self.d + j]).collect()
    }

    fn run(mut self) -> Result<LpOutcome<T>, SimplexError> {
        let has_art = self.ncols > self.first_art;
        if has_art {
            let mut cost = vec![T::zero(); self.ncols];
            for c in cost.iter_mut().skip(self.first_art) {
                *c = -T::one();
            }
            let allowed = vec![true; self.ncols];
            // phase 1 is bounded by construction
            self.optimize(&cost, &allowed)?;
            let infeas: T = (0..self.k)
                .filter(|&i| self.basis[i] >= self.first_art)
                .map(|i| self.rhs(i))
                .sum();
            let h_scale = T::one().max(max_abs(&self.lp.h));
            if infeas > T::feas_tol() * h_scale {
                let pi = self.row_multipliers(&cost);
                let mut y: Vec<T> = pi.iter().map(|&v| v.max(T::zero())).collect();
                let norm = max_abs(&y);
                if norm > T::zero() {
                    y.iter_mut().for_each(|v| *v = *v / norm);
                }
                return Ok(LpOutcome::Infeasible { farkas: y });
            }
            self.drive_out_artificials();
        }

        let mut cost = vec![T::zero(); self.ncols];
        for j in 0..self.d {
            cost[j] = self.lp.obj[j];
            cost[self.d + j] = -self.lp.obj[j];
        }
        let allowed: Vec<bool> = (0..self.ncols).map(|j| j < self.first_art).collect();
        match self.optimize(&cost, &allowed)? {
            PhaseEnd::Unbounded(q) => {
                let mut dz = vec![T::zero(); self.ncols];
                dz[q] = T::one();
                for i in 0..self.k {
                    dz[self.basis[i]] = -self.at(i, q);
                }
                let mut ray: Vec<T> = (0..self.d).map(|j| dz[j] - dz[self.d + j]).collect();
                let norm = max_abs(&ray);
                if norm > T::zero() {
                    ray.iter_mut().for_each(|v| *v = *v / norm);
                }
                Ok(LpOutcome::Unbounded { ray })
            }
            PhaseEnd::Optimal => {
                let x = self.primal();
                let value = dot(&self.lp.obj, &x);
                let duals = self
                    .row_multipliers(&cost)
                    .into_iter()
                    .map(|v| v.max(T::zero()))
                    .collect();
                Ok(LpOutcome::Optimal { x, value, duals })
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.k {
            if self.basis[r] < self.first_art {
                continue;
            }
            if let Some(q) = (0..self.first_art).find(|&j| self.at(r, j).abs() > self.tol) {
                self.pivot(r, q);
            }
            // otherwise the row is redundant; its artificial stays basic at zero
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(d: usize, rows: &[Vec<f64>], h: Vec<f64>, obj: Vec<f64>) -> LinearProgram<f64> {
        LinearProgram::from_rows(d, rows, h, obj).unwrap()
    }

    #[test]
    fn box_optimum() {
        let p = lp(
            2,
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0],
        );
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status(), LpStatus::Optimal);
        let x = out.point().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        assert!((out.value().unwrap() - 2.0).abs() < 1e-12);
        assert!(out.verify(&p));
    }

    #[test]
    fn unbounded_ray() {
        let p = lp(1, &[vec![-1.0]], vec![0.0], vec![1.0]);
        match solve_lp(&p).unwrap() {
            LpOutcome::Unbounded { ray } => assert!((ray[0] - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_farkas() {
        let p = lp(1, &[vec![1.0], vec![-1.0]], vec![-1.0, 0.0], vec![0.0]);
        let out = solve_lp(&p).unwrap();
        match &out {
            LpOutcome::Infeasible { farkas } => {
                assert!((farkas[0] - farkas[1]).abs() < 1e-12);
                assert!(farkas[0] > 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(out.verify(&p));
    }

    #[test]
    fn equalities_wrapper() {
        let none = Matrix::<f64>::zeros(0, 1);
        let e = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let out = solve_lp_with_equalities(&none, &[], &e, &[2.0], &[1.0]).unwrap();
        assert!((out.point().unwrap()[0] - 2.0).abs() < 1e-12);

        let g = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let out = solve_lp_with_equalities(&g, &[1.0], &e, &[2.0], &[1.0]).unwrap();
        assert_eq!(out.status(), LpStatus::Infeasible);

        let empty = Matrix::<f64>::zeros(0, 1);
        let a = solve_lp_with_equalities(&g, &[1.0], &empty, &[], &[1.0]).unwrap();
        let b = solve_lp(&lp(1, &[vec![1.0]], vec![1.0], vec![1.0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_rows_and_no_vars() {
        let p = lp(2, &[], vec![], vec![0.0, 0.0]);
        assert_eq!(solve_lp(&p).unwrap().status(), LpStatus::Optimal);
        let p = lp(2, &[], vec![], vec![0.0, -1.0]);
        assert_eq!(solve_lp(&p).unwrap().status(), LpStatus::Unbounded);
        let p = LinearProgram::new(Matrix::zeros(1, 0), vec![-1.0], vec![]).unwrap();
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status(), LpStatus::Infeasible);
        assert!(out.verify(&p));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance, written as max with free vars
        // restricted by explicit nonnegativity rows.
        let rows = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0],
        ];
        let p = lp(
            4,
            &rows,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.75, -150.0, 0.02, -6.0],
        );
        let out = solve_lp(&p).unwrap();
        assert!((out.value().unwrap() - 0.05).abs() < 1e-9);
        assert!(out.verify(&p));
    }

    #[test]
    fn deterministic() {
        let p = lp(
            2,
            &[vec![1.0, 2.0], vec![3.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![4.0, 6.0, 0.0, 0.0],
            vec![1.0, 1.0],
        );
        assert_eq!(solve_lp(&p).unwrap(), solve_lp(&p).unwrap());
    }

    #[test]
    fn rejects_non_finite() {
        let p = lp(1, &[vec![f64::NAN]], vec![1.0], vec![1.0]);
        assert_eq!(solve_lp(&p), Err(SimplexError::NonFinite));
    }

    #[test]
    fn single_precision() {
        let p = LinearProgram::<f32>::from_rows(
            2,
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]],
            vec![1.0, 2.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let out = solve_lp(&p).unwrap();
        assert!((out.value().unwrap() - 3.0).abs() < 1e-5);
        assert!(out.verify(&p));
    }
}
