//! End-to-end acceptance checks. Runs without the libtest harness so that
//! each criterion prints exactly one PASS/FAIL line.

mod support;

use std::process::ExitCode;
use std::time::Instant;

use avlp::integrality::{integrality_full, integrality_rank_one, IntegralityVerdict};
use avlp::interval::enclose_solutions;
use avlp::qpkkt::{build_qp, construct_kkt_counterexample, kkt_global_property, verify_kkt, KktProperty};
use avlp::reformulate::{
    ceil_log2, orthant_convex_to_avlp, union_membership, union_to_avlp, AffineRow, Alpha, AuxBlock, AuxRole, Encoding,
    OrthantPiece,
};
use avlp::stability::{basis_stability_check, stable_optimal_value};
use avlp::{
    membership, orthant_polygons, relaxation_bound, solve_exact, AvlpError, AvlpProblem, BoundingBox, IntervalMatrix,
    LpOutcome, LpStatus, SignVector,
};
use rand::Rng;
use support::*;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus() -> Vec<AvlpProblem<f64>> {
    let mut r = rng(1);
    (0..500).map(|_| random_sized(&mut r, 3, 5, 3)).collect()
}

fn oracle_equivalence(corpus: &[AvlpProblem<f64>]) -> Outcome {
    let mut optimal = 0;
    for (k, p) in corpus.iter().enumerate() {
        let r = solve_exact(p).map_err(|e| format!("instance {k}: {e}"))?;
        match avlp_oracle(p) {
            Oracle::Infeasible => ensure(r.status == LpStatus::Infeasible, || {
                format!("instance {k}: {:?} vs infeasible", r.status)
            })?,
            Oracle::Unbounded => ensure(r.status == LpStatus::Unbounded, || {
                format!("instance {k}: {:?} vs unbounded", r.status)
            })?,
            Oracle::Optimal(v) => {
                let got = r
                    .f_star
                    .ok_or_else(|| format!("instance {k}: {:?} vs optimal", r.status))?;
                ensure(approx(got, f(&v), 1e-6), || format!("instance {k}: {got} vs {}", f(&v)))?;
                optimal += 1;
            }
        }
    }
    Ok(format!("{} instances, {optimal} optimal", corpus.len()))
}

fn manhattan_ball() -> Outcome {
    let p = manhattan();
    let points: [([f64; 2], bool); 8] = [
        ([0.0, 0.0], true),
        ([1.0, 0.0], true),
        ([0.0, -1.0], true),
        ([0.5, 0.5], true),
        ([-0.25, 0.75], true),
        ([1.0, 1.0], false),
        ([0.6, -0.6], false),
        ([-1.5, 0.0], false),
    ];
    for (x, inside) in points {
        ensure(membership(&p, &x, 1e-9).feasible == inside, || {
            format!("membership wrong at {x:?}")
        })?;
    }
    let f_star = solve_exact(&p).map_err(|e| e.to_string())?.f_star.ok_or("no optimum")?;
    ensure((f_star - 1.0).abs() <= 1e-9, || format!("f* = {f_star}"))?;
    let polys = orthant_polygons(&p, &BoundingBox::symmetric(10.0).unwrap()).map_err(|e| e.to_string())?;
    ensure(polys.len() == 4, || format!("{} pieces", polys.len()))?;
    for poly in &polys {
        let s = poly.sign.entries();
        let mut want = vec![[0.0, 0.0], [f64::from(s[0]), 0.0], [0.0, f64::from(s[1])]];
        let mut got = poly.vertices.clone();
        ensure(got.len() == 3 && poly.signed_area() > 0.0, || {
            format!("piece {} is {got:?}", poly.sign)
        })?;
        let key = |v: &[f64; 2]| (v[0].to_bits(), v[1].to_bits());
        for v in got.iter_mut().chain(want.iter_mut()) {
            *v = [v[0] + 0.0, v[1] + 0.0];
        }
        got.sort_by_key(key);
        want.sort_by_key(key);
        let close = got
            .iter()
            .zip(&want)
            .all(|(a, b)| (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        ensure(close, || format!("piece {} is {got:?}", poly.sign))?;
    }
    Ok(format!("8 points, f* = {f_star}, 4 triangles"))
}

fn set_partition_fixtures() -> Outcome {
    let balanced = solve_exact(&set_partition(&[1.0, 1.0, 2.0])).map_err(|e| e.to_string())?;
    let odd = solve_exact(&set_partition(&[1.0, 1.0, 1.0])).map_err(|e| e.to_string())?;
    let (fb, fo) = (balanced.f_star.ok_or("no optimum")?, odd.f_star.ok_or("no optimum")?);
    ensure(fb.abs() <= 1e-9, || format!("(1,1,2) gives {fb}"))?;
    ensure((fo + 1.0).abs() <= 1e-9, || format!("(1,1,1) gives {fo}"))?;
    Ok(format!("(1,1,2) -> {fb}, (1,1,1) -> {fo}"))
}

fn half_line_example() -> Outcome {
    let p = AvlpProblem::from_rows(
        &[vec![1.0, 0.0, 1.0], vec![-1.0, 1.0, -1.0], vec![0.0, -1.0, 0.0]],
        &[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]],
        vec![-1.0, 0.0, -1.0],
        vec![0.0; 3],
    )
    .unwrap();
    let enc = Encoding::new(
        p,
        2,
        vec![AuxBlock {
            role: AuxRole::Selector,
            vars: 2..3,
        }],
    )
    .unwrap();
    for (x, inside) in [
        ([-2.0, 2.0], true),
        ([2.0, 2.0], true),
        ([3.0, 1.0], true),
        ([0.0, 1.0], false),
        ([1.0, 2.0], false),
    ] {
        let got = enc.contains(&x, 1e-9).map_err(|e| e.to_string())?;
        ensure(got == inside, || format!("{x:?} classified as {got}"))?;
    }
    let row = |g: [f64; 2], h: f64| AffineRow::new(g.to_vec(), h);
    let pieces = vec![
        OrthantPiece {
            sign: SignVector::new(vec![1, 1]).unwrap(),
            rows: vec![row([-1.0, 1.0], 0.0), row([0.0, -1.0], -1.0)],
        },
        OrthantPiece {
            sign: SignVector::new(vec![-1, 1]).unwrap(),
            rows: vec![row([1.0, 0.0], -1.0), row([0.0, -1.0], -1.0)],
        },
    ];
    ensure(
        matches!(
            orthant_convex_to_avlp(2, &pieces, Alpha::Auto),
            Err(AvlpError::Verification(_))
        ),
        || "auto alpha did not fail verification".into(),
    )?;
    for alpha in [1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
        ensure(orthant_convex_to_avlp(2, &pieces, Alpha::Fixed(alpha)).is_err(), || {
            format!("alpha {alpha} verified")
        })?;
    }
    Ok("5 points classified, no alpha up to the cap verifies".into())
}

fn union_encoding() -> Outcome {
    let mut r = rng(5);
    let mut points = 0;
    for k in 0..50 {
        let u = random_union(&mut r);
        let enc = union_to_avlp(&u).map_err(|e| e.to_string())?;
        ensure(enc.n_aux() == ceil_log2(u.pieces().len()), || {
            format!("union {k}: {} aux", enc.n_aux())
        })?;
        for x in union_grid(u.n()) {
            let got = union_membership(&enc, &x).map_err(|e| e.to_string())?;
            ensure(got == u.contains(&x, 1e-7), || format!("union {k} disagrees at {x:?}"))?;
            points += 1;
        }
    }
    Ok(format!("50 unions, {points} points, 0 disagreements"))
}

fn kkt_round_trip() -> Outcome {
    let p = AvlpProblem::from_rows(&[vec![0.0]], &[vec![1.0]], vec![0.0], vec![1.0]).unwrap();
    let KktProperty::Fails { w, .. } = kkt_global_property(&p).map_err(|e| e.to_string())? else {
        return Err("property holds on the fixture".into());
    };
    let (b, pt) = construct_kkt_counterexample(&p, &w, 1.0).map_err(|e| e.to_string())?;
    let q = build_qp(&p, Alpha::Fixed(1.0)).map_err(|e| e.to_string())?;
    let verdict = verify_kkt(&q, &b, &pt, 1e-9).map_err(|e| e.to_string())?;
    ensure(verdict.valid, || {
        format!("counterexample invalid: {:?}", verdict.violations)
    })?;
    ensure(!verdict.complementary, || "counterexample is complementary".into())?;
    let x = [pt.x1[0] - pt.x2[0]];
    ensure(!membership(&p.with_rhs(b).unwrap(), &x, 1e-9).feasible, || {
        format!("{x:?} is feasible")
    })?;

    let mut r = rng(6);
    let (mut instances, mut valid) = (0, 0);
    while instances < 100 {
        let p = random_sized(&mut r, 3, 4, 3);
        if kkt_global_property(&p).map_err(|e| e.to_string())? != KktProperty::Holds {
            continue;
        }
        let s = kkt_perturbation_search(&p, &mut r, 10_000);
        ensure(s.valid_noncomplementary == 0, || format!("instance {instances}: {s:?}"))?;
        valid += s.valid;
        instances += 1;
    }
    Ok(format!(
        "witness w = {:?}; 100 instances, {valid} valid points, all complementary",
        w
    ))
}

fn integrality_checks() -> Outcome {
    let diag = integrality_full(
        &int_matrix(&[vec![-1, 0], vec![0, -1]]),
        &int_matrix(&[vec![0, 0], vec![0, 1]]),
    )
    .map_err(|e| e.to_string())?;
    let IntegralityVerdict::NotIntegral { sign, det, .. } = &diag.verdict else {
        return Err("A=-I, D=diag(0,1) reported integral".into());
    };
    ensure(sign.entries() == [1, 1] && *det == 2.into(), || {
        format!("witness {sign}, det {det}")
    })?;
    let (a, d) = (
        int_matrix(&[vec![0, 0], vec![1, 1]]),
        int_matrix(&[vec![1, 1], vec![0, 0]]),
    );
    let full = integrality_full(&a, &d).map_err(|e| e.to_string())?;
    let IntegralityVerdict::NotIntegral { sign, .. } = &full.verdict else {
        return Err("rank-one fixture reported integral".into());
    };
    ensure(sign.entries() == [1, -1], || format!("witness {sign}"))?;
    ensure(
        !integrality_rank_one(&a, &d).map_err(|e| e.to_string())?.is_integral(),
        || "rank-one check passed".into(),
    )?;

    let mut r = rng(7);
    for k in 0..200 {
        let n = r.gen_range(1..=3);
        let m = r.gen_range(n..=4);
        let (a, d) = random_rank_one(&mut r, m, n, 2);
        let (a, d) = (int_matrix(&a), int_matrix(&d));
        let full = integrality_full(&a, &d).map_err(|e| e.to_string())?.is_integral();
        let one = integrality_rank_one(&a, &d).map_err(|e| e.to_string())?.is_integral();
        ensure(full == one, || {
            format!("rank-one instance {k}: full {full}, rank-one {one}")
        })?;
    }
    for k in 0..1000 {
        ensure(det_linearity_trial(&mut r), || {
            format!("determinant identity fails on trial {k}")
        })?;
    }
    Ok("fixture witnesses (1,1) and (1,-1); 200 rank-one agreements; 1000 identities".into())
}

fn basis_stability() -> Outcome {
    let p = AvlpProblem::<f64>::from_rows(
        &[vec![1.0], vec![-1.0]],
        &[vec![0.1], vec![0.0]],
        vec![1.0, 0.0],
        vec![1.0],
    )
    .unwrap();
    let rep = basis_stability_check(&p, &[0]).map_err(|e| e.to_string())?;
    ensure(rep.is_stable(), || {
        format!("{:?} / {:?}", rep.condition1, rep.condition2)
    })?;
    let (f_stable, _) = stable_optimal_value(&p, &[0]).map_err(|e| e.to_string())?;
    let f_exact = solve_exact(&p).map_err(|e| e.to_string())?.f_star.ok_or("no optimum")?;
    ensure((f_stable - 1.0 / 0.9).abs() <= 1e-10, || format!("f* = {f_stable}"))?;
    ensure((f_stable - f_exact).abs() <= 1e-10, || {
        format!("stable {f_stable} vs exact {f_exact}")
    })?;

    let mut r = rng(8);
    let (mut systems, mut samples) = (0, 0);
    while systems < 100 {
        let n = r.gen_range(1..=4);
        let (mid, rad, rhs) = random_interval_system(&mut r, n);
        let Ok(bx) = enclose_solutions(&IntervalMatrix::new(mid.clone(), rad.clone()).unwrap(), &rhs) else {
            continue;
        };
        systems += 1;
        let rq: Vec<Q> = rhs.iter().map(|&v| q(v)).collect();
        for _ in 0..10 {
            let x = solve_q(&sample_realization(&mut r, &mid, &rad), &rq).ok_or("singular realization")?;
            ensure(box_contains(&bx, &x), || {
                format!("system {systems}: box misses a solution")
            })?;
            samples += 1;
        }
    }
    Ok(format!(
        "f* = {f_stable}; 100 systems, {samples} sampled solutions enclosed"
    ))
}

fn relaxation_dominance(corpus: &[AvlpProblem<f64>]) -> Outcome {
    let mut compared = 0;
    for (k, p) in corpus.iter().enumerate() {
        let Some(f_star) = solve_exact(p).map_err(|e| e.to_string())?.f_star else {
            continue;
        };
        match relaxation_bound(p).map_err(|e| e.to_string())? {
            LpOutcome::Optimal { value, .. } => {
                ensure(value >= f_star - 1e-7 * (1.0 + f_star.abs()), || {
                    format!("instance {k}: {value} < {f_star}")
                })?;
            }
            LpOutcome::Unbounded { .. } => {}
            LpOutcome::Infeasible { .. } => return Err(format!("instance {k}: relaxation infeasible")),
        }
        compared += 1;
    }
    let p = set_partition(&[1.0, 1.0, 1.0]);
    let relaxed = relaxation_bound(&p)
        .map_err(|e| e.to_string())?
        .value()
        .ok_or("relaxation not optimal")?;
    let exact = solve_exact(&p).map_err(|e| e.to_string())?.f_star.ok_or("no optimum")?;
    ensure(relaxed.abs() < 1e-9 && (exact + 1.0).abs() < 1e-9, || {
        format!("strict case {relaxed} vs {exact}")
    })?;
    Ok(format!(
        "{compared} optimal instances; strict case {relaxed} vs {exact}"
    ))
}

fn main() -> ExitCode {
    let corpus = corpus();
    let criteria: Vec<Criterion> = vec![
        (
            "exact solver matches the enumeration oracle",
            Box::new(|| oracle_equivalence(&corpus)),
        ),
        (
            "1-norm ball membership, optimum and quadrant triangles",
            Box::new(manhattan_ball),
        ),
        ("signed-sum partition fixtures", Box::new(set_partition_fixtures)),
        (
            "half-line set encoding and non-representability",
            Box::new(half_line_example),
        ),
        ("union encoding on random unions", Box::new(union_encoding)),
        (
            "KKT counterexample round trip and perturbation search",
            Box::new(kkt_round_trip),
        ),
        (
            "integrality fixtures, rank-one agreement, determinant identity",
            Box::new(integrality_checks),
        ),
        (
            "basis stability fixture and enclosure soundness",
            Box::new(basis_stability),
        ),
        (
            "relaxation dominates the exact optimum",
            Box::new(|| relaxation_dominance(&corpus)),
        ),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.2}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{secs:.2}s]", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
