//! File formats: the problem JSON, reformulation inputs, and report output.

use std::fs;
use std::path::{Path, PathBuf};

use avlp::reformulate::{AffineRow, OrthantPiece, Polyhedron, UnionOfPolyhedra};
use avlp::{normalize, AvlpError, AvlpProblem, Matrix, RawProblem, SignVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error(transparent)]
    Avlp(#[from] AvlpError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

fn is_false(v: &bool) -> bool {
    !*v
}

/// On-disk problem: row-major `A` and `D`, plus flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Data is integral; required by `integrality`.
    #[serde(default, skip_serializing_if = "is_false")]
    pub integer: bool,
    /// `D` may have negative entries; the problem is normalized on load.
    #[serde(default, skip_serializing_if = "is_false")]
    pub raw: bool,
}

fn check_len(field: &str, got: usize, want: usize, what: &str) -> Result<(), CliError> {
    if got != want {
        return Err(CliError::field(
            field,
            format!("has {got} entries, expected {what} = {want}"),
        ));
    }
    Ok(())
}

impl ProblemFile {
    pub fn from_problem(p: &AvlpProblem<f64>) -> Self {
        Self {
            n: p.n(),
            m: p.m(),
            a: p.a().as_slice().to_vec(),
            d: p.d().as_slice().to_vec(),
            b: p.b().to_vec(),
            c: p.c().to_vec(),
            integer: false,
            raw: false,
        }
    }

    pub fn to_problem(&self) -> Result<AvlpProblem<f64>, CliError> {
        let (m, n) = (self.m, self.n);
        check_len("A", self.a.len(), m * n, "m*n")?;
        check_len("D", self.d.len(), m * n, "m*n")?;
        check_len("b", self.b.len(), m, "m")?;
        check_len("c", self.c.len(), n, "n")?;
        for (field, v) in [("A", &self.a), ("D", &self.d), ("b", &self.b), ("c", &self.c)] {
            if let Some(i) = v.iter().position(|t| !t.is_finite()) {
                return Err(CliError::field(field, format!("entry {i} is not finite")));
            }
        }
        if let Some(i) = self.integer.then(|| self.nonintegral_entry()).flatten() {
            return Err(CliError::field(
                i.0,
                format!("entry {} = {} is not an integer", i.1, i.2),
            ));
        }
        let a = Matrix::from_row_major(m, n, self.a.clone())?;
        let d = Matrix::from_row_major(m, n, self.d.clone())?;
        if self.raw {
            return Ok(normalize(&RawProblem::new(a, d, self.b.clone(), self.c.clone())?)?);
        }
        if let Some(i) = self.d.iter().position(|&t| t < 0.0) {
            return Err(CliError::field(
                "D",
                format!("entry {i} = {} is negative (set \"raw\": true to normalize)", self.d[i]),
            ));
        }
        Ok(AvlpProblem::new(a, d, self.b.clone(), self.c.clone())?)
    }

    fn nonintegral_entry(&self) -> Option<(&'static str, usize, f64)> {
        [("A", &self.a), ("D", &self.d), ("b", &self.b), ("c", &self.c)]
            .into_iter()
            .find_map(|(f, v)| v.iter().position(|t| t.fract() != 0.0).map(|i| (f, i, v[i])))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_problem(path: &Path) -> Result<(ProblemFile, AvlpProblem<f64>), CliError> {
    let file: ProblemFile = read_json(path)?;
    let p = file.to_problem()?;
    Ok((file, p))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Pretty JSON with `schema_version` and `command` in front.
pub fn report<T: Serialize>(command: &str, body: &T) -> Result<String, CliError> {
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    out.insert("command".into(), command.into());
    match serde_json::to_value(body).map_err(|e| CliError::Usage(e.to_string()))? {
        serde_json::Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("result".into(), other);
        }
    }
    serde_json::to_string_pretty(&out).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Deserialize)]
pub struct Ilp01Input {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Ilp01Input {
    pub fn matrix(&self) -> Result<Matrix<f64>, CliError> {
        check_len("A", self.a.len(), self.m * self.n, "m*n")?;
        check_len("b", self.b.len(), self.m, "m")?;
        check_len("c", self.c.len(), self.n, "n")?;
        Ok(Matrix::from_row_major(self.m, self.n, self.a.clone())?)
    }
}

#[derive(Debug, Deserialize)]
pub struct RowInput {
    pub g: Vec<f64>,
    pub h: f64,
}

fn rows(field: &str, n: usize, input: &[RowInput]) -> Result<Vec<AffineRow<f64>>, CliError> {
    input
        .iter()
        .enumerate()
        .map(|(i, r)| {
            check_len(&format!("{field}[{i}].g"), r.g.len(), n, "n")?;
            Ok(AffineRow::new(r.g.clone(), r.h))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
pub struct DisjIneqInput {
    pub n: usize,
    pub rows: Vec<RowInput>,
}

impl DisjIneqInput {
    pub fn terms(&self) -> Result<Vec<AffineRow<f64>>, CliError> {
        rows("rows", self.n, &self.rows)
    }
}

type Rows = Vec<AffineRow<f64>>;

#[derive(Debug, Deserialize)]
pub struct DisjEqInput {
    pub n: usize,
    #[serde(rename = "F")]
    pub f: Vec<RowInput>,
    #[serde(rename = "G")]
    pub g: Vec<RowInput>,
}

impl DisjEqInput {
    pub fn systems(&self) -> Result<(Rows, Rows), CliError> {
        Ok((rows("F", self.n, &self.f)?, rows("G", self.n, &self.g)?))
    }
}

#[derive(Debug, Deserialize)]
pub struct PieceInput {
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

#[derive(Debug, Deserialize)]
pub struct UnionInput {
    pub n: usize,
    pub pieces: Vec<PieceInput>,
}

impl UnionInput {
    pub fn union(&self) -> Result<UnionOfPolyhedra<f64>, CliError> {
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, piece)| {
                check_len(&format!("pieces[{k}].h"), piece.h.len(), piece.g.len(), "rows of G")?;
                for (i, r) in piece.g.iter().enumerate() {
                    check_len(&format!("pieces[{k}].G[{i}]"), r.len(), self.n, "n")?;
                }
                Ok(Polyhedron::from_rows(self.n, &piece.g, piece.h.clone())?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(UnionOfPolyhedra::new(pieces)?)
    }
}

#[derive(Debug, Deserialize)]
pub struct HalfspaceInput {
    pub a: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Deserialize)]
pub struct OrthantPieceInput {
    pub sign: Vec<i8>,
    pub rows: Vec<HalfspaceInput>,
}

#[derive(Debug, Deserialize)]
pub struct OrthantConvexInput {
    pub n: usize,
    pub pieces: Vec<OrthantPieceInput>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

impl OrthantConvexInput {
    pub fn pieces(&self) -> Result<Vec<OrthantPiece<f64>>, CliError> {
        self.pieces
            .iter()
            .enumerate()
            .map(|(k, piece)| {
                check_len(&format!("pieces[{k}].sign"), piece.sign.len(), self.n, "n")?;
                let rows = piece
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        check_len(&format!("pieces[{k}].rows[{i}].a"), r.a.len(), self.n, "n")?;
                        Ok(AffineRow::new(r.a.clone(), r.beta))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(OrthantPiece {
                    sign: SignVector::new(piece.sign.clone())?,
                    rows,
                })
            })
            .collect()
    }
}
