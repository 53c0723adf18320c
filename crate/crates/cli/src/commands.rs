use std::fmt::Write as _;
use std::path::Path;

use avlp::analysis::{
    bounded_for_all_b, connected_sufficient, convexity_vertex_check, feasible_for_all_b, AnalysisReport, VertexLimits,
};
use avlp::integrality::{extended_signs_check, integrality_full_with_budget, DEFAULT_BUDGET};
use avlp::qpkkt::{build_qp, construct_kkt_counterexample, kkt_aggregate_check, kkt_global_property, KktProperty};
use avlp::reformulate::{
    disjunction_eq_to_avlp, disjunction_ineq_to_avlp, ilp01_to_avlp, orthant_convex_to_avlp, union_to_avlp, Alpha,
    Encoding, EqMode,
};
use avlp::stability::midpoint_basis;
use avlp::{
    basis_stability_check, integrality_rank_one, orthant_polygons, relaxation_bound, solve_exact, BoundingBox,
    IntMatrix, LpOutcome, LpStatus, Matrix, SignVector,
};
use serde::Serialize;
use serde_json::json;

use crate::io::{self, CliError, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNBOUNDED: i32 = 3;
pub const EXIT_KKT_FAILS: i32 = 4;

/// Rendered output and the process exit code.
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

pub fn solve(path: &Path, relax: bool, text: bool) -> Result<Outcome, CliError> {
    let (_, p) = io::load_problem(path)?;
    let report = solve_exact(&p)?;
    let relaxation = relax.then(|| relaxation_bound(&p)).transpose()?;
    let code = match report.status {
        LpStatus::Optimal => EXIT_OK,
        LpStatus::Infeasible => EXIT_INFEASIBLE,
        LpStatus::Unbounded => EXIT_UNBOUNDED,
    };
    let out = if text {
        let mut s = format!("status: {:?}\n", report.status).to_lowercase();
        if let Some(f) = report.f_star {
            writeln!(s, "f*: {f}").unwrap();
        }
        if let Some(x) = &report.x_star {
            writeln!(s, "x*: {x:?}").unwrap();
        }
        if let Some(r) = &report.ray {
            writeln!(s, "ray: {r:?}").unwrap();
        }
        if let Some(sign) = &report.witness_sign {
            writeln!(s, "orthant: {sign}").unwrap();
        }
        writeln!(s, "orthants solved: {}", report.orthants_solved).unwrap();
        match &relaxation {
            Some(LpOutcome::Optimal { value, .. }) => writeln!(s, "relaxation bound: {value}").unwrap(),
            Some(other) => writeln!(s, "relaxation: {:?}", other.status()).unwrap(),
            None => {}
        }
        s.trim_end().to_string()
    } else {
        #[derive(Serialize)]
        struct Body<'a, R: Serialize> {
            #[serde(flatten)]
            report: &'a R,
            #[serde(skip_serializing_if = "Option::is_none")]
            relaxation: Option<&'a LpOutcome<f64>>,
        }
        io::report(
            "solve",
            &Body {
                report: &report,
                relaxation: relaxation.as_ref(),
            },
        )?
    };
    Ok(Outcome { text: out, code })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckFlags {
    pub bounded: bool,
    pub feasible_all_b: bool,
    pub connected: bool,
    pub convexity: bool,
}

impl CheckFlags {
    fn or_all(self) -> Self {
        if self.bounded || self.feasible_all_b || self.connected || self.convexity {
            self
        } else {
            Self {
                bounded: true,
                feasible_all_b: true,
                connected: true,
                convexity: true,
            }
        }
    }
}

pub fn check(path: &Path, flags: CheckFlags) -> Result<Outcome, CliError> {
    let (_, p) = io::load_problem(path)?;
    let flags = flags.or_all();
    let report = AnalysisReport {
        bounded_all_b: flags.bounded.then(|| bounded_for_all_b(&p)).transpose()?,
        feasible_all_b: flags.feasible_all_b.then(|| feasible_for_all_b(&p)).transpose()?,
        connected_sufficient: flags.connected.then(|| connected_sufficient(&p)).transpose()?,
        convexity_necessary: flags
            .convexity
            .then(|| convexity_vertex_check(&p, VertexLimits::default()))
            .transpose()?,
    };
    Ok(Outcome::ok(io::report("check", &report)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReformKind {
    Ilp01,
    DisjIneq,
    DisjEq,
    Union,
    OrthantConvex,
}

/// Serializes an encoding as a problem file with the variable roles attached.
fn encoding_json(enc: &Encoding<f64>, extra: serde_json::Map<String, serde_json::Value>) -> Result<String, CliError> {
    let mut value = serde_json::to_value(ProblemFile::from_problem(&enc.problem)).expect("problem file serializes");
    let obj = value.as_object_mut().expect("object");
    obj.insert(
        "original_vars".into(),
        json!([enc.original_vars.start, enc.original_vars.end]),
    );
    obj.insert(
        "aux".into(),
        enc.aux
            .iter()
            .map(|a| json!({"role": a.role, "vars": [a.vars.start, a.vars.end]}))
            .collect(),
    );
    obj.extend(extra);
    serde_json::to_string_pretty(&value).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn reformulate(kind: ReformKind, input: &Path, mode: EqMode) -> Result<Outcome, CliError> {
    let mut extra = serde_json::Map::new();
    let enc = match kind {
        ReformKind::Ilp01 => {
            let inp: io::Ilp01Input = io::read_json(input)?;
            ilp01_to_avlp(&inp.matrix()?, &inp.b, &inp.c)?
        }
        ReformKind::DisjIneq => {
            let inp: io::DisjIneqInput = io::read_json(input)?;
            disjunction_ineq_to_avlp(inp.n, &inp.terms()?)?
        }
        ReformKind::DisjEq => {
            let inp: io::DisjEqInput = io::read_json(input)?;
            let (f, g) = inp.systems()?;
            extra.insert("mode".into(), json!(mode));
            disjunction_eq_to_avlp(inp.n, &f, &g, mode)?
        }
        ReformKind::Union => {
            let inp: io::UnionInput = io::read_json(input)?;
            union_to_avlp(&inp.union()?)?
        }
        ReformKind::OrthantConvex => {
            let inp: io::OrthantConvexInput = io::read_json(input)?;
            let alpha = inp.alpha.map_or(Alpha::Auto, Alpha::Fixed);
            let out = orthant_convex_to_avlp(inp.n, &inp.pieces()?, alpha)?;
            if !out.uncovered.is_empty() {
                let list: Vec<String> = out.uncovered.iter().map(SignVector::to_string).collect();
                return Err(CliError::Usage(format!(
                    "verification failed: no excluding row found for orthant(s) {}",
                    list.join(" ")
                )));
            }
            extra.insert("alpha".into(), json!(out.alpha));
            extra.insert("excluded".into(), json!(out.excluded));
            out.encoding
        }
    };
    Ok(Outcome::ok(encoding_json(&enc, extra)?))
}

pub fn polygon2d(path: &Path, bbox: Option<[f64; 4]>) -> Result<Outcome, CliError> {
    let (_, p) = io::load_problem(path)?;
    let bbox = match bbox {
        Some([x0, y0, x1, y1]) => BoundingBox::new([x0, y0], [x1, y1])?,
        None => BoundingBox::symmetric(10.0)?,
    };
    let mut csv = String::from("s1,s2,vertex_index,x1,x2");
    for poly in orthant_polygons(&p, &bbox)? {
        for (k, v) in poly.vertices.iter().enumerate() {
            write!(csv, "\n{},{},{k},{},{}", poly.sign.get(0), poly.sign.get(1), v[0], v[1]).unwrap();
        }
    }
    Ok(Outcome::ok(csv))
}

pub fn kkt(path: &Path, alpha: Alpha<f64>, export_qp: Option<&Path>, aggregate: bool) -> Result<Outcome, CliError> {
    let (_, p) = io::load_problem(path)?;
    let q = build_qp(&p, alpha)?;
    if let Some(out) = export_qp {
        let rows = |m: &Matrix<f64>| m.iter_rows().map(<[f64]>::to_vec).collect::<Vec<_>>();
        let qp = json!({
            "schema_version": io::SCHEMA_VERSION,
            "sense": "max",
            "variables": {"x1": p.n(), "x2": p.n(), "lower_bound": 0.0},
            "constraints": {"x1": rows(&q.lower), "minus_x2": rows(&q.upper), "rhs": q.b},
            "objective": {"x1": q.c, "x2": q.c.iter().map(|v| -v).collect::<Vec<_>>(), "x1_x2": -q.alpha},
            "alpha": q.alpha,
        });
        let text = serde_json::to_string_pretty(&qp).map_err(|e| CliError::Usage(e.to_string()))?;
        io::emit(Some(out), &text)?;
    }
    let property = kkt_global_property(&p)?;
    let mut body = serde_json::Map::new();
    body.insert("alpha".into(), json!(q.alpha));
    body.insert("property".into(), serde_json::to_value(&property).expect("serializes"));
    if aggregate {
        body.insert("aggregate_witness".into(), json!(kkt_aggregate_check(&p)?));
    }
    let code = match &property {
        KktProperty::Holds => EXIT_OK,
        KktProperty::Fails { w, .. } => {
            let (b, point) = construct_kkt_counterexample(&p, w, q.alpha)?;
            body.insert("counterexample".into(), json!({"b": b, "point": point}));
            EXIT_KKT_FAILS
        }
    };
    Ok(Outcome {
        text: io::report("kkt", &body)?,
        code,
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegralityFlags {
    pub rank_one: bool,
    pub extended: bool,
    pub budget: Option<u64>,
}

pub fn integrality(path: &Path, flags: IntegralityFlags) -> Result<Outcome, CliError> {
    let (file, p) = io::load_problem(path)?;
    if !file.integer {
        return Err(CliError::field(
            "integer",
            "integrality needs integral data marked \"integer\": true",
        ));
    }
    let a = IntMatrix::from_scalar(p.a())?;
    let d = IntMatrix::from_scalar(p.d())?;
    let report = if flags.rank_one {
        integrality_rank_one(&a, &d)?
    } else {
        integrality_full_with_budget(&a, &d, flags.budget.unwrap_or(DEFAULT_BUDGET))?
    };
    let mut body = serde_json::to_value(&report)
        .expect("serializes")
        .as_object()
        .cloned()
        .unwrap_or_default();
    // The extended check presupposes the ±1 verdict.
    if flags.extended && report.is_integral() {
        body.insert("extended_signs_unimodular".into(), json!(extended_signs_check(&a, &d)?));
    }
    Ok(Outcome::ok(io::report("integrality", &body)?))
}

pub fn stability(path: &Path, basis: Option<Vec<usize>>) -> Result<Outcome, CliError> {
    let (_, p) = io::load_problem(path)?;
    let basis = match basis {
        Some(b) => b,
        None => midpoint_basis(&p)?,
    };
    let report = basis_stability_check(&p, &basis)?;
    Ok(Outcome::ok(io::report("stability", &report)?))
}
