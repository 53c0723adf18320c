//! Planar pieces of the feasible set for plotting: for `n = 2`, each
//! quadrant's polygon clipped to a box.

use serde::Serialize;

use crate::error::AvlpError;
use crate::problem::{AvlpProblem, SignOrder, SignVector};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundingBox<T> {
    pub lo: [T; 2],
    pub hi: [T; 2],
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(lo: [T; 2], hi: [T; 2]) -> Result<Self, AvlpError> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(AvlpError::Precondition(
                "box must have lo < hi in both coordinates".into(),
            ));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]^2`.
    pub fn symmetric(r: T) -> Result<Self, AvlpError> {
        Self::new([-r, -r], [r, r])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthantPolygon<T> {
    pub sign: SignVector,
    /// Counterclockwise, without repeating the first vertex.
    pub vertices: Vec<[T; 2]>,
}

impl<T: Scalar> OrthantPolygon<T> {
    /// Shoelace area; positive for counterclockwise order.
    pub fn signed_area(&self) -> T {
        let v = &self.vertices;
        let k = v.len();
        let twice = (0..k).fold(T::zero(), |acc, i| {
            let (p, q) = (v[i], v[(i + 1) % k]);
            acc + p[0] * q[1] - q[0] * p[1]
        });
        twice / T::lit(2.0)
    }
}

/// Keeps the part of a convex polygon with `g . x <= h`.
fn clip<T: Scalar>(poly: &[[T; 2]], g: [T; 2], h: T, tol: T) -> Vec<[T; 2]> {
    let val = |p: &[T; 2]| g[0] * p[0] + g[1] * p[1] - h;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (vp, vq) = (val(&p), val(&q));
        if vp <= tol {
            out.push(p);
        }
        if (vp < -tol && vq > tol) || (vp > tol && vq < -tol) {
            let t = vp / (vp - vq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn dedup<T: Scalar>(poly: Vec<[T; 2]>, tol: T) -> Vec<[T; 2]> {
    let same = |a: &[T; 2], b: &[T; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;
    let mut out: Vec<[T; 2]> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().is_none_or(|l| !same(l, &p)) {
            out.push(p);
        }
    }
    while out.len() > 1 && same(&out[0], out.last().unwrap()) {
        out.pop();
    }
    out
}

/// One polygon per quadrant `s`: `{x in box : s ∘ x >= 0, (A - D diag(s)) x <= b}`.
/// Quadrants whose piece has empty interior are omitted.
pub fn orthant_polygons<T: Scalar>(
    p: &AvlpProblem<T>,
    bbox: &BoundingBox<T>,
) -> Result<Vec<OrthantPolygon<T>>, AvlpError> {
    if p.n() != 2 {
        return Err(AvlpError::Dimension(format!(
            "polygon export needs n = 2, got {}",
            p.n()
        )));
    }
    let span = (bbox.hi[0] - bbox.lo[0]).max(bbox.hi[1] - bbox.lo[1]);
    let tol = T::feas_tol() * span;
    let mut out = Vec::new();
    for s in SignVector::enumerate(2, &[0, 1], 1, SignOrder::PlusFirst) {
        let mut poly = vec![
            [bbox.lo[0], bbox.lo[1]],
            [bbox.hi[0], bbox.lo[1]],
            [bbox.hi[0], bbox.hi[1]],
            [bbox.lo[0], bbox.hi[1]],
        ];
        let sv = s.to_scalars::<T>();
        poly = clip(&poly, [-sv[0], T::zero()], T::zero(), tol);
        poly = clip(&poly, [T::zero(), -sv[1]], T::zero(), tol);
        let g = p.shifted_matrix(&s);
        for i in 0..p.m() {
            if poly.is_empty() {
                break;
            }
            let scale = T::one() + g[(i, 0)].abs().max(g[(i, 1)].abs()).max(p.b()[i].abs());
            poly = clip(&poly, [g[(i, 0)], g[(i, 1)]], p.b()[i], tol * scale);
        }
        let piece = OrthantPolygon {
            sign: s,
            vertices: dedup(poly, tol),
        };
        if piece.vertices.len() >= 3 && piece.signed_area() > tol * span {
            out.push(piece);
        }
    }
    Ok(out)
}
