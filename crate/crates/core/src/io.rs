//! Problem files.
//!
//! A problem file is a JSON document:
//!
//! ```text
//! {
//!   "m": 1,
//!   "dims": [2],
//!   "hermitian": true,
//!   "family": "example",
//!   "id": "example-1",
//!   "matrices": [
//!     [
//!       [
//!         [[1.0000000000000000e0, 0.0000000000000000e0], [0.0000000000000000e0, 0.0000000000000000e0]],
//!         [[0.0000000000000000e0, 0.0000000000000000e0], [2.0000000000000000e0, 0.0000000000000000e0]]
//!       ],
//!       ...
//!     ]
//!   ]
//! }
//! ```
//!
//! `matrices[k][l]` is `A[k][l]` as a list of rows; each entry is a
//! `[re, im]` pair. `family` and `id` are optional. The writer emits 17
//! significant digits, so a write/read round trip is exact, and its output
//! is canonical: writing a file that was read back reproduces it byte for
//! byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{MepError, Result};
use crate::problem::{CMatrix, MepProblem};

/// A problem plus optional metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub problem: MepProblem,
    pub family: Option<String>,
    pub id: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    m: usize,
    dims: Vec<usize>,
    hermitian: bool,
    #[serde(default)]
    family: Option<String>,
    #[serde(default)]
    id: Option<String>,
    matrices: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl ProblemFile {
    pub fn new(problem: MepProblem) -> Self {
        Self {
            problem,
            family: None,
            id: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).map_err(|e| MepError::Format(e.to_string()))?;
        if raw.matrices.len() != raw.m || raw.dims.len() != raw.m {
            return Err(MepError::DimensionMismatch(format!(
                "m = {} but {} dims and {} equations",
                raw.m,
                raw.dims.len(),
                raw.matrices.len()
            )));
        }
        let mut matrices = Vec::with_capacity(raw.m);
        for (k, (row, &n)) in raw.matrices.into_iter().zip(&raw.dims).enumerate() {
            let mut converted = Vec::with_capacity(row.len());
            for (l, rows) in row.into_iter().enumerate() {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(MepError::DimensionMismatch(format!("A[{k}][{l}] is not {n}x{n}")));
                }
                let mut a = CMatrix::zeros(n, n);
                for (i, r) in rows.iter().enumerate() {
                    for (j, &[re, im]) in r.iter().enumerate() {
                        if !re.is_finite() || !im.is_finite() {
                            return Err(MepError::Format(format!("A[{k}][{l}] has a non-finite entry")));
                        }
                        a[(i, j)] = Complex64::new(re, im);
                    }
                }
                converted.push(a);
            }
            matrices.push(converted);
        }
        Ok(Self {
            problem: MepProblem::new(matrices, raw.hermitian)?,
            family: raw.family,
            id: raw.id,
        })
    }

    pub fn to_json(&self) -> String {
        let p = &self.problem;
        let mut out = String::new();
        let dims: Vec<String> = p.dims().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"m\": {},", p.m());
        let _ = writeln!(out, "  \"dims\": [{}],", dims.join(", "));
        let _ = writeln!(out, "  \"hermitian\": {},", p.is_hermitian());
        if let Some(family) = &self.family {
            let _ = writeln!(out, "  \"family\": {},", json_string(family));
        }
        if let Some(id) = &self.id {
            let _ = writeln!(out, "  \"id\": {},", json_string(id));
        }
        let _ = writeln!(out, "  \"matrices\": [");
        for k in 0..p.m() {
            let _ = writeln!(out, "    [");
            for l in 0..=p.m() {
                let a = p.matrix(k, l);
                let _ = writeln!(out, "      [");
                for i in 0..a.nrows() {
                    let entries: Vec<String> = (0..a.ncols())
                        .map(|j| format!("[{:.16e}, {:.16e}]", a[(i, j)].re, a[(i, j)].im))
                        .collect();
                    let sep = if i + 1 < a.nrows() { "," } else { "" };
                    let _ = writeln!(out, "        [{}]{sep}", entries.join(", "));
                }
                let sep = if l < p.m() { "," } else { "" };
                let _ = writeln!(out, "      ]{sep}");
            }
            let sep = if k + 1 < p.m() { "," } else { "" };
            let _ = writeln!(out, "    ]{sep}");
        }
        let _ = writeln!(out, "  ]");
        let _ = writeln!(out, "}}");
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| MepError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| MepError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn read_problem(path: &Path) -> Result<MepProblem> {
    Ok(ProblemFile::read(path)?.problem)
}

pub fn write_problem(problem: &MepProblem, path: &Path) -> Result<()> {
    ProblemFile::new(problem.clone()).write(path)
}
