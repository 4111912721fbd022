//! Problem definition files.
//!
//! ```json
//! {
//!   "A": [[2, 0], [0, -2]],
//!   "m": 2,
//!   "c": ["0", "1"],
//!   "C": [["0", "1"], ["1", "2"]],
//!   "H": [["1/2", "0"]],
//!   "K": [["0", "0"]],
//!   "Z": {"X": [[0.0]], "Y": [[1.0]]},
//!   "S": [[1]],
//!   "U": [["3", "1"]],
//!   "T": [["1"]]
//! }
//! ```
//!
//! `A` is an integer matrix given as rows, or flat in row-major order
//! together with `m`. Matrices with m rows (`C`, `H`, `K`, `U`) are listed
//! column by column, so `C` is the list c_0, …, c_n. n×n matrices (`X`, `Y`,
//! `S`, `T`) are listed by rows. Rationals are strings "p/q" (plain JSON
//! integers are accepted too); entries of `X` and `Y` may also be floats.

use std::path::Path;

use nalgebra::DMatrix;
use serde_json::Value;
use thiserror::Error;

use crate::cone::{validate_frame, ConeError, ConeFrame};
use crate::exact::{parse_rat, to_f64, Rat, RatMatrix};
use crate::quadspace::{QuadError, QuadraticSpace};
use crate::theta::{Characteristics, SiegelPoint, ThetaError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("cannot read problem file: {0}")]
    Io(String),
    #[error("problem file is not valid JSON: {0}")]
    Json(String),
    #[error("field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("field `{field}` is required for this command")]
    Missing { field: &'static str },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

fn field_err(path: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Field { path: path.into(), message: message.into() }
}

/// A parsed problem file. Optional fields stay `None` until a command needs them.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: QuadraticSpace,
    pub c: Option<Vec<Rat>>,
    pub frame_columns: Option<RatMatrix>,
    pub h: Option<RatMatrix>,
    pub k: Option<RatMatrix>,
    pub z: Option<(DMatrix<f64>, DMatrix<f64>)>,
    pub s: Option<RatMatrix>,
    pub u: Option<RatMatrix>,
    pub t: Option<RatMatrix>,
    pub raw: Value,
}

fn rational(v: &Value, path: &str) -> Result<Rat, ProblemError> {
    match v {
        Value::String(s) => parse_rat(s).map_err(|e| field_err(path, e.to_string())),
        Value::Number(n) if n.is_i64() => Ok(Rat::from_integer(n.as_i64().unwrap().into())),
        _ => Err(field_err(path, "expected a rational string \"p/q\"")),
    }
}

fn real(v: &Value, path: &str) -> Result<f64, ProblemError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| field_err(path, "number out of range")),
        Value::String(_) => rational(v, path).map(|r| to_f64(&r)),
        _ => Err(field_err(path, "expected a number")),
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ProblemError> {
    v.as_array().ok_or_else(|| field_err(path, "expected an array"))
}

fn rat_vector(v: &Value, path: &str, len: usize) -> Result<Vec<Rat>, ProblemError> {
    let items = array(v, path)?;
    if items.len() != len {
        return Err(field_err(path, format!("expected {len} entries, got {}", items.len())));
    }
    items.iter().enumerate().map(|(i, x)| rational(x, &format!("{path}[{i}]"))).collect()
}

/// m × cols matrix from a list of columns.
fn rat_columns(v: &Value, path: &str, m: usize) -> Result<RatMatrix, ProblemError> {
    let cols = array(v, path)?;
    if cols.is_empty() {
        return Err(field_err(path, "expected at least one column"));
    }
    let cols: Vec<Vec<Rat>> =
        cols.iter().enumerate().map(|(j, c)| rat_vector(c, &format!("{path}[{j}]"), m)).collect::<Result<_, _>>()?;
    Ok(RatMatrix::from_columns(&cols).expect("columns have equal length"))
}

fn square_rows<T>(
    v: &Value,
    path: &str,
    n: Option<usize>,
    entry: impl Fn(&Value, &str) -> Result<T, ProblemError>,
) -> Result<Vec<Vec<T>>, ProblemError> {
    let rows = array(v, path)?;
    let n = n.unwrap_or(rows.len());
    if rows.len() != n || n == 0 {
        return Err(field_err(path, format!("expected {n} rows, got {}", rows.len())));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let p = format!("{path}[{i}]");
            let items = array(r, &p)?;
            if items.len() != n {
                return Err(field_err(&p, format!("expected {n} entries, got {}", items.len())));
            }
            items.iter().enumerate().map(|(j, x)| entry(x, &format!("{p}[{j}]"))).collect()
        })
        .collect()
}

fn parse_gram(root: &Value) -> Result<Vec<Vec<i64>>, ProblemError> {
    let a = root.get("A").ok_or(ProblemError::Missing { field: "A" })?;
    let items = array(a, "A")?;
    let m_field = match root.get("m") {
        None => None,
        Some(v) => Some(v.as_u64().filter(|&m| m > 0).ok_or_else(|| field_err("m", "expected a positive integer"))? as usize),
    };
    let int = |v: &Value, p: &str| v.as_i64().ok_or_else(|| field_err(p, "expected an integer"));
    let rows: Vec<Vec<i64>> = if items.iter().all(Value::is_array) {
        square_rows(a, "A", m_field, int)?
    } else {
        let m = m_field.ok_or_else(|| field_err("m", "required when A is given flat"))?;
        if items.len() != m * m {
            return Err(field_err("A", format!("expected {} entries for m = {m}, got {}", m * m, items.len())));
        }
        let flat: Vec<i64> = items.iter().enumerate().map(|(i, x)| int(x, &format!("A[{i}]"))).collect::<Result<_, _>>()?;
        flat.chunks(m).map(<[i64]>::to_vec).collect()
    };
    if let Some(m) = m_field {
        if rows.len() != m {
            return Err(field_err("m", format!("A has {} rows but m = {m}", rows.len())));
        }
    }
    Ok(rows)
}

impl Problem {
    pub fn from_path(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ProblemError> {
        let root: Value = serde_json::from_str(text).map_err(|e| ProblemError::Json(e.to_string()))?;
        Self::from_value(root)
    }

    pub fn from_value(root: Value) -> Result<Self, ProblemError> {
        if !root.is_object() {
            return Err(field_err("$", "expected an object"));
        }
        let rows = parse_gram(&root)?;
        let space = QuadraticSpace::new(&rows)?;
        let m = space.dim();
        let c = root.get("c").map(|v| rat_vector(v, "c", m)).transpose()?;
        let frame_columns = root.get("C").map(|v| rat_columns(v, "C", m)).transpose()?;
        let h = root.get("H").map(|v| rat_columns(v, "H", m)).transpose()?;
        let k = root.get("K").map(|v| rat_columns(v, "K", m)).transpose()?;
        let u = root.get("U").map(|v| rat_columns(v, "U", m)).transpose()?;
        let genus = frame_columns.as_ref().map(|c| c.ncols() - 1).filter(|&n| n > 0);
        let n_hint = genus.or(h.as_ref().map(RatMatrix::ncols)).or(u.as_ref().map(RatMatrix::ncols));
        for (name, mat) in [("H", &h), ("K", &k), ("U", &u)] {
            if let (Some(mat), Some(n)) = (mat, n_hint) {
                if mat.ncols() != n {
                    return Err(field_err(name, format!("expected {n} columns, got {}", mat.ncols())));
                }
            }
        }
        if let Some(c) = &frame_columns {
            if c.ncols() < 2 {
                return Err(field_err("C", "a frame needs at least two vectors"));
            }
        }
        let z = match root.get("Z") {
            None => None,
            Some(zv) => {
                let x = zv.get("X").ok_or_else(|| field_err("Z", "missing `X`"))?;
                let y = zv.get("Y").ok_or_else(|| field_err("Z", "missing `Y`"))?;
                let xr = square_rows(x, "Z.X", n_hint, real)?;
                let yr = square_rows(y, "Z.Y", Some(xr.len()), real)?;
                let to_mat = |r: Vec<Vec<f64>>| DMatrix::from_fn(r.len(), r.len(), |i, j| r[i][j]);
                Some((to_mat(xr), to_mat(yr)))
            }
        };
        let rat_square = |name: &str| -> Result<Option<RatMatrix>, ProblemError> {
            root.get(name)
                .map(|v| square_rows(v, name, n_hint, rational).map(|r| RatMatrix::from_rows(&r).expect("square")))
                .transpose()
        };
        let s = rat_square("S")?;
        let t = rat_square("T")?;
        Ok(Self { space, c, frame_columns, h, k, z, s, u, t, raw: root })
    }

    /// Genus n from C, else from H or U, else 1.
    pub fn genus(&self) -> usize {
        self.frame_columns
            .as_ref()
            .map(|c| c.ncols() - 1)
            .or(self.h.as_ref().map(RatMatrix::ncols))
            .or(self.u.as_ref().map(RatMatrix::ncols))
            .unwrap_or(1)
    }

    pub fn require_frame(&self) -> Result<ConeFrame, ProblemError> {
        let c = self.frame_columns.as_ref().ok_or(ProblemError::Missing { field: "C" })?;
        self.space.require_lorentzian()?;
        Ok(validate_frame(&self.space, c)?)
    }

    pub fn characteristics(&self) -> Result<Characteristics, ProblemError> {
        let (m, n) = (self.space.dim(), self.genus());
        let h = self.h.clone().unwrap_or_else(|| RatMatrix::zeros(m, n));
        let k = self.k.clone().unwrap_or_else(|| RatMatrix::zeros(m, n));
        Ok(Characteristics::new(h, k)?)
    }

    /// Z from the file, or iI_n.
    pub fn siegel_point(&self) -> Result<SiegelPoint, ProblemError> {
        let n = self.genus();
        let (x, y) = self.z.clone().unwrap_or_else(|| (DMatrix::zeros(n, n), DMatrix::identity(n, n)));
        if x.nrows() != n {
            return Err(field_err("Z", format!("expected {n}×{n}, got {}×{}", x.nrows(), x.ncols())));
        }
        Ok(SiegelPoint::new(x, y)?)
    }

    /// S from the file, or I_n.
    pub fn translation(&self) -> RatMatrix {
        self.s.clone().unwrap_or_else(|| RatMatrix::identity(self.genus()))
    }

    pub fn require_u(&self) -> Result<&RatMatrix, ProblemError> {
        self.u.as_ref().ok_or(ProblemError::Missing { field: "U" })
    }

    pub fn require_t(&self) -> Result<&RatMatrix, ProblemError> {
        self.t.as_ref().ok_or(ProblemError::Missing { field: "T" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    const BASIC: &str = r#"{"A": [[2, 0], [0, -2]], "m": 2, "C": [["0", "1"], ["1", "2"]], "H": [["1/2", "0"]]}"#;

    #[test]
    fn parses_basic_file() {
        let p = Problem::from_json_str(BASIC).unwrap();
        assert_eq!(p.space.signature(), (1, 1));
        assert_eq!(p.genus(), 1);
        let f = p.require_frame().unwrap();
        assert!(f.is_certified());
        assert_eq!(p.h.as_ref().unwrap().column(0), vec![rat(1, 2), int(0)]);
        let ch = p.characteristics().unwrap();
        assert!(ch.k.is_zero());
        let z = p.siegel_point().unwrap();
        assert_eq!(z.y()[(0, 0)], 1.0);
        assert_eq!(p.translation(), RatMatrix::identity(1));
    }

    #[test]
    fn flat_gram_with_m() {
        let p = Problem::from_json_str(r#"{"A": [2, 0, 0, 2, 0, 0, 0, 0, -2], "m": 3}"#);
        assert!(p.is_err());
        let p = Problem::from_json_str(r#"{"A": [2, 0, 0, 0, 2, 0, 0, 0, -2], "m": 3}"#).unwrap();
        assert_eq!(p.space.signature(), (2, 1));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = r#"{"A": [[2, 0], [0, -2]], "C": [["0", "1"], ["1", "x"]]}"#;
        match Problem::from_json_str(bad) {
            Err(ProblemError::Field { path, .. }) => assert_eq!(path, "C[1][1]"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"A": [[2, 0], [0, -2]], "H": [["1/0", "0"]]}"#;
        match Problem::from_json_str(bad) {
            Err(ProblemError::Field { path, .. }) => assert_eq!(path, "H[0][0]"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"A": [[2, 1], [0, -2]]}"#;
        assert!(matches!(Problem::from_json_str(bad), Err(ProblemError::Quad(QuadError::NonSymmetric))));
        assert!(matches!(Problem::from_json_str("[1]"), Err(ProblemError::Field { .. })));
        assert!(matches!(Problem::from_json_str("{"), Err(ProblemError::Json(_))));
        let p = Problem::from_json_str(r#"{"A": [[2, 0], [0, -2]]}"#).unwrap();
        assert_eq!(p.require_frame().unwrap_err(), ProblemError::Missing { field: "C" });
    }

    #[test]
    fn z_and_square_fields() {
        let text = r#"{"A": [[2, 0, 0], [0, 2, 0], [0, 0, -2]],
            "C": [["0","0","1"], ["1","0","2"], ["0","1","2"]],
            "Z": {"X": [[0, "1/4"], [0.25, 0]], "Y": [[1, 0], [0, 2]]},
            "S": [[1, 0], [0, 2]], "T": [["1", "1/2"], ["1/2", "2"]]}"#;
        let p = Problem::from_json_str(text).unwrap();
        assert_eq!(p.genus(), 2);
        let z = p.siegel_point().unwrap();
        assert_eq!(z.x()[(0, 1)], 0.25);
        assert_eq!(p.t.unwrap()[(0, 1)], rat(1, 2));
        let bad = r#"{"A": [[2, 0], [0, -2]], "C": [["0", "1"], ["1", "2"]], "S": [[1, 0], [0, 1]]}"#;
        assert!(matches!(Problem::from_json_str(bad), Err(ProblemError::Field { .. })));
    }
}
