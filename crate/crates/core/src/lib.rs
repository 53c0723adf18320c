//! Absolute value linear programs: maximize `c^T x` subject to
//! `A x - D |x| <= b` with `D >= 0`.
//!
//! The feasible set is a union of at most `2^n` convex polyhedra, one per
//! orthant, so [`solve_exact`] solves one LP per sign vector. The remaining
//! modules analyze the feasible set, compile other models into this form,
//! and certify special cases (integral vertices, basis stability).

pub mod analysis;
pub mod error;
pub mod exact;
pub mod integrality;
pub mod interval;
pub mod matrix;
pub mod polygon;
pub mod problem;
pub mod qpkkt;
pub mod reformulate;
pub mod scalar;
pub mod simplex;
pub mod stability;

pub use error::{AvlpError, SimplexError};
pub use exact::{find_feasible, relaxation_bound, solve_exact, vertex_candidacy, Candidacy, SolveReport};
pub use integrality::{integrality_full, integrality_rank_one, IntMatrix, IntegralityReport};
pub use interval::{enclose_solutions, Interval, IntervalMatrix};
pub use matrix::Matrix;
pub use polygon::{orthant_polygons, BoundingBox, OrthantPolygon};
pub use problem::{membership, normalize, AvlpProblem, Membership, RawProblem, SignVector};
pub use scalar::Scalar;
pub use simplex::{solve_lp, LinearProgram, LpOutcome, LpStatus};
pub use stability::{basis_stability_check, StabilityReport};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type AvlpProblem64 = AvlpProblem<f64>;
pub type AvlpProblem32 = AvlpProblem<f32>;
pub type SolveReport64 = SolveReport<f64>;
pub type SolveReport32 = SolveReport<f32>;
pub type Interval64 = Interval<f64>;
pub type IntervalMatrix64 = IntervalMatrix<f64>;
pub type StabilityReport64 = StabilityReport<f64>;
