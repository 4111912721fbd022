//! Exact rational matrices.
//!
//! Everything that decides a sign (signature, cone membership, the x_i data of
//! a frame) goes through this module so that no tolerance is ever involved.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRatError {
    #[error("malformed rational `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"`, `"p"` or a decimal-free integer literal.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p = BigInt::from_str(num).map_err(|_| ParseRatError::Malformed(s.to_string()))?;
    let q = BigInt::from_str(den).map_err(|_| ParseRatError::Malformed(s.to_string()))?;
    if q.is_zero() {
        return Err(ParseRatError::ZeroDenominator(s.to_string()));
    }
    Ok(Rat::new(p, q))
}

/// `"p/q"` in lowest terms, `"p"` for integers.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

pub fn to_f64(r: &Rat) -> f64 {
    // BigRational::to_f64 rounds correctly for moderate sizes; fall back to the
    // quotient of the parts for the rest.
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Inertia triple of a symmetric matrix: (positive, negative, zero) counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn is_positive_definite(&self) -> bool {
        self.negative == 0 && self.zero == 0
    }
}

/// Dense row-major matrix over the rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Rat::one() } else { Rat::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<Rat>]) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Some(Self { rows: r, cols: c, data: rows.iter().flatten().cloned().collect() })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged integer rows");
        Self::from_fn(r, c, |i, j| int(rows[i][j]))
    }

    /// Builds an m×k matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Rat>]) -> Option<Self> {
        let k = cols.len();
        let m = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != m) {
            return None;
        }
        Some(Self::from_fn(m, k, |i, j| cols[j][i].clone()))
    }

    pub fn column_vector(v: &[Rat]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[Rat] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Rat>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(Rat::zero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape());
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape());
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: &Rat) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn neg(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a).collect() }
    }

    pub fn trace(&self) -> Rat {
        (0..self.rows.min(self.cols)).fold(Rat::zero(), |acc, i| acc + &self[(i, i)])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.denom().is_one())
    }

    /// Least common multiple of all entry denominators.
    pub fn common_denominator(&self) -> BigInt {
        use num_integer::Integer;
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(&self[(i, j)]))
    }

    /// Determinant by Gaussian elimination with exact pivots.
    pub fn det(&self) -> Rat {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Rat::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a[i * n + k].is_zero()) else {
                return Rat::zero();
            };
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k].clone();
            det *= &pivot;
            for i in k + 1..n {
                if a[i * n + k].is_zero() {
                    continue;
                }
                let factor = &a[i * n + k] / &pivot;
                for j in k..n {
                    let d = &factor * &a[k * n + j];
                    a[i * n + j] -= d;
                }
            }
        }
        det
    }

    pub fn rank(&self) -> usize {
        let (r, c) = self.shape();
        let mut a = self.data.clone();
        let mut rank = 0;
        for col in 0..c {
            let Some(p) = (rank..r).find(|&i| !a[i * c + col].is_zero()) else {
                continue;
            };
            for j in 0..c {
                a.swap(rank * c + j, p * c + j);
            }
            let pivot = a[rank * c + col].clone();
            for i in rank + 1..r {
                if a[i * c + col].is_zero() {
                    continue;
                }
                let factor = &a[i * c + col] / &pivot;
                for j in col..c {
                    let d = &factor * &a[rank * c + j];
                    a[i * c + j] -= d;
                }
            }
            rank += 1;
            if rank == r {
                break;
            }
        }
        rank
    }

    /// Exact inverse, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n).find(|&i| !a[(i, k)].is_zero())?;
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                    inv.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[(k, k)].clone();
            for j in 0..n {
                a[(k, j)] = &a[(k, j)] / &pivot;
                inv[(k, j)] = &inv[(k, j)] / &pivot;
            }
            for i in 0..n {
                if i == k || a[(i, k)].is_zero() {
                    continue;
                }
                let f = a[(i, k)].clone();
                for j in 0..n {
                    let da = &f * &a[(k, j)];
                    let di = &f * &inv[(k, j)];
                    a[(i, j)] -= da;
                    inv[(i, j)] -= di;
                }
            }
        }
        Some(inv)
    }

    /// Inertia of a symmetric matrix via pivoted LDLᵀ.
    ///
    /// Uses 1×1 pivots on nonzero diagonal entries and falls back to a 2×2
    /// block `[[0, a], [a, 0]]` (one positive, one negative eigenvalue) when
    /// the remaining diagonal vanishes. Sylvester's law makes the pivot signs
    /// the inertia.
    pub fn inertia(&self) -> Inertia {
        assert!(self.is_symmetric(), "inertia of a non-symmetric matrix");
        let mut s = self.clone();
        let mut active: Vec<usize> = (0..self.rows).collect();
        let mut inertia = Inertia { positive: 0, negative: 0, zero: 0 };
        while !active.is_empty() {
            if let Some(pos) = active.iter().position(|&i| !s[(i, i)].is_zero()) {
                let p = active.remove(pos);
                let d = s[(p, p)].clone();
                if d.is_positive() {
                    inertia.positive += 1;
                } else {
                    inertia.negative += 1;
                }
                for &i in &active {
                    if s[(i, p)].is_zero() {
                        continue;
                    }
                    let f = &s[(i, p)] / &d;
                    for &j in &active {
                        let delta = &f * &s[(p, j)];
                        s[(i, j)] -= delta;
                    }
                }
                continue;
            }
            let pair = active
                .iter()
                .enumerate()
                .flat_map(|(a, &i)| active[a + 1..].iter().map(move |&j| (i, j)))
                .find(|&(i, j)| !s[(i, j)].is_zero());
            let Some((p, q)) = pair else {
                inertia.zero += active.len();
                break;
            };
            active.retain(|&i| i != p && i != q);
            inertia.positive += 1;
            inertia.negative += 1;
            // Block E = [[0, e], [e, 0]], E⁻¹ = [[0, 1/e], [1/e, 0]].
            let e_inv = Rat::one() / &s[(p, q)];
            let col_p: Vec<Rat> = active.iter().map(|&i| s[(i, p)].clone()).collect();
            let col_q: Vec<Rat> = active.iter().map(|&i| s[(i, q)].clone()).collect();
            for (a, &i) in active.iter().enumerate() {
                for (b, &j) in active.iter().enumerate() {
                    let delta = (&col_p[a] * &col_q[b] + &col_q[a] * &col_p[b]) * &e_inv;
                    s[(i, j)] -= delta;
                }
            }
        }
        inertia
    }

    pub fn is_positive_definite(&self) -> bool {
        self.is_symmetric() && self.inertia().is_positive_definite()
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(format_rat).collect();
            write!(f, "{}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

pub fn dot(u: &[Rat], v: &[Rat]) -> Rat {
    u.iter().zip(v).fold(Rat::zero(), |acc, (a, b)| acc + a * b)
}

/// Determinant of a small integer matrix, exact via fraction-free Bareiss
/// elimination in `i128`. Returns `None` on overflow.
pub fn det_i128(mut a: Vec<i128>, n: usize) -> Option<i128> {
    if n == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            let p = (k + 1..n).find(|&i| a[i * n + k] != 0);
            match p {
                None => return Some(0),
                Some(p) => {
                    for j in 0..n {
                        a.swap(k * n + j, p * n + j);
                    }
                    sign = -sign;
                }
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[i * n + j]
                    .checked_mul(a[k * n + k])?
                    .checked_sub(a[i * n + k].checked_mul(a[k * n + j])?)?;
                a[i * n + j] = t / prev;
            }
        }
        prev = a[k * n + k];
    }
    a[n * n - 1].checked_mul(sign)
}
