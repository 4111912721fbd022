//! The quadratic space (ℝ^m, Q) with Q(u) = ½ uᵀAu for an even symmetric
//! integer matrix A, together with the splitting A = A⁺ + A⁻ along a
//! negative vector and the positive definite pair forms Q⁺_{k,l}.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exact::{dot, int, to_f64, Rat, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("matrix is not square ({0}×{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric")]
    NonSymmetric,
    #[error("diagonal entry {0} is odd; A must be even")]
    OddDiagonal(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("signature ({0},{1}) is not Lorentzian (m-1,1)")]
    NotLorentzian(usize, usize),
    #[error("vector is not negative: Q(c) = {0}")]
    NotNegativeVector(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cone vectors {0} and {1} are linearly dependent")]
    LinearlyDependent(usize, usize),
    #[error("vector {0} is not in the negative cone")]
    NotInCone(usize),
    #[error("majorant is not positive definite")]
    MajorantNotDefinite,
}

/// Counts of positive and negative eigenvalues of a symmetric nonsingular matrix.
pub fn signature(a: &RatMatrix) -> Result<(usize, usize), QuadError> {
    if !a.is_square() {
        return Err(QuadError::NotSquare(a.nrows(), a.ncols()));
    }
    if !a.is_symmetric() {
        return Err(QuadError::NonSymmetric);
    }
    let inertia = a.inertia();
    if inertia.zero > 0 {
        return Err(QuadError::Singular);
    }
    Ok((inertia.positive, inertia.negative))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticSpace {
    a: RatMatrix,
    a_int: Vec<i64>,
    m: usize,
    sig: (usize, usize),
    det: BigInt,
}

impl QuadraticSpace {
    /// Validates an even symmetric nonsingular integer matrix given by rows.
    pub fn new(rows: &[Vec<i64>]) -> Result<Self, QuadError> {
        let m = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(QuadError::NotSquare(m, bad.len()));
        }
        let a = RatMatrix::from_fn(m, m, |i, j| int(rows[i][j]));
        if let Some(i) = (0..m).find(|&i| rows[i][i] % 2 != 0) {
            if a.is_symmetric() {
                return Err(QuadError::OddDiagonal(i));
            }
        }
        let sig = signature(&a)?;
        let det = a.det().to_integer();
        Ok(Self { a, a_int: rows.iter().flatten().copied().collect(), m, sig, det })
    }

    /// Like [`QuadraticSpace::new`] but also insists on signature (m-1, 1).
    pub fn lorentzian(rows: &[Vec<i64>]) -> Result<Self, QuadError> {
        let s = Self::new(rows)?;
        s.require_lorentzian()?;
        Ok(s)
    }

    pub fn require_lorentzian(&self) -> Result<(), QuadError> {
        if self.sig == (self.m - 1, 1) {
            Ok(())
        } else {
            Err(QuadError::NotLorentzian(self.sig.0, self.sig.1))
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn signature(&self) -> (usize, usize) {
        self.sig
    }

    pub fn gram(&self) -> &RatMatrix {
        &self.a
    }

    /// Row-major integer entries of A.
    pub fn gram_int(&self) -> &[i64] {
        &self.a_int
    }

    pub fn gram_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.m, &self.a_int.iter().map(|&x| x as f64).collect::<Vec<_>>())
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    /// |det A|.
    pub fn abs_det(&self) -> BigInt {
        self.det.abs()
    }

    fn check_len(&self, v: &[Rat]) -> Result<(), QuadError> {
        if v.len() == self.m {
            Ok(())
        } else {
            Err(QuadError::DimensionMismatch { expected: self.m, got: v.len() })
        }
    }

    /// B(u, v) = uᵀAv.
    pub fn b(&self, u: &[Rat], v: &[Rat]) -> Rat {
        dot(u, &self.a.mul_vec(v))
    }

    /// Q(u) = ½ uᵀAu.
    pub fn q(&self, u: &[Rat]) -> Rat {
        self.b(u, u) / int(2)
    }

    /// 𝐐(U) = ½ tr(UᵀAU) = Σ_j Q(u_j).
    pub fn q_matrix(&self, u: &RatMatrix) -> Rat {
        u.columns().iter().fold(Rat::zero(), |acc, col| acc + self.q(col))
    }

    pub fn b_f64(&self, u: &[f64], v: &[f64]) -> f64 {
        let m = self.m;
        let mut s = 0.0;
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                row += self.a_int[i * m + j] as f64 * v[j];
            }
            s += u[i] * row;
        }
        s
    }

    pub fn q_f64(&self, u: &[f64]) -> f64 {
        0.5 * self.b_f64(u, u)
    }

    /// Splits A along a vector c with Q(c) < 0.
    pub fn split(&self, c: &[Rat]) -> Result<SplitData, QuadError> {
        self.check_len(c)?;
        let qc = self.q(c);
        if !qc.is_negative() {
            return Err(QuadError::NotNegativeVector(crate::exact::format_rat(&qc)));
        }
        let ac = self.a.mul_vec(c);
        let two_q = &qc * int(2);
        let a_minus = RatMatrix::from_fn(self.m, self.m, |i, j| &ac[i] * &ac[j] / &two_q);
        let a_plus = self.a.sub(&a_minus);
        let majorant = a_plus.sub(&a_minus);
        if !majorant.is_positive_definite() {
            return Err(QuadError::MajorantNotDefinite);
        }
        Ok(SplitData { c: c.to_vec(), q_c: qc, a: self.a.clone(), a_minus, a_plus, majorant })
    }

    /// The pair form Q⁺_{k,l}, positive definite for independent c_k, c_l in one cone component.
    pub fn pair_form(&self, k: usize, ck: &[Rat], l: usize, cl: &[Rat]) -> Result<PairForm, QuadError> {
        self.check_len(ck)?;
        self.check_len(cl)?;
        let qk = self.q(ck);
        let ql = self.q(cl);
        if !qk.is_negative() {
            return Err(QuadError::NotInCone(k));
        }
        if !ql.is_negative() {
            return Err(QuadError::NotInCone(l));
        }
        let bkl = self.b(ck, cl);
        if !bkl.is_negative() {
            return Err(QuadError::NotInCone(l));
        }
        let denom = int(4) * &qk * &ql - &bkl * &bkl;
        if denom.is_zero() {
            return Err(QuadError::LinearlyDependent(k, l));
        }
        let coefficient = &bkl / &denom;
        let ak = self.a.mul_vec(ck);
        let al = self.a.mul_vec(cl);
        // Q⁺(v) = ½vᵀAv + κ (c_kᵀAv)(c_lᵀAv) = ½ vᵀ [A + κ(Ac_k c_lᵀA + Ac_l c_kᵀA)] v
        let gram = RatMatrix::from_fn(self.m, self.m, |i, j| {
            &self.a[(i, j)] + &coefficient * (&ak[i] * &al[j] + &al[i] * &ak[j])
        });
        Ok(PairForm { k, l, coefficient, gram })
    }
}

/// A⁻ = AccᵀA / 2Q(c), A⁺ = A − A⁻ and the majorant M = A⁺ − A⁻.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitData {
    pub c: Vec<Rat>,
    pub q_c: Rat,
    a: RatMatrix,
    pub a_minus: RatMatrix,
    pub a_plus: RatMatrix,
    pub majorant: RatMatrix,
}

impl SplitData {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    fn half_trace(form: &RatMatrix, u: &RatMatrix) -> Rat {
        u.transpose().mul(form).mul(u).trace() / int(2)
    }

    /// 𝐐⁻(U) = ½ tr(UᵀA⁻U) ≤ 0.
    pub fn q_minus(&self, u: &RatMatrix) -> Rat {
        Self::half_trace(&self.a_minus, u)
    }

    /// 𝐐⁺(U) = ½ tr(UᵀA⁺U) ≥ 0.
    pub fn q_plus(&self, u: &RatMatrix) -> Rat {
        Self::half_trace(&self.a_plus, u)
    }

    /// Decomposes U = U^⊥ + U^c with u_j^c = B(c,u_j)/(2Q(c)) · c.
    pub fn project(&self, u: &RatMatrix) -> Result<(RatMatrix, RatMatrix), QuadError> {
        if u.nrows() != self.dim() {
            return Err(QuadError::DimensionMismatch { expected: self.dim(), got: u.nrows() });
        }
        let ac = self.a.mul_vec(&self.c);
        let two_q = &self.q_c * int(2);
        let mut u_c = RatMatrix::zeros(u.nrows(), u.ncols());
        for j in 0..u.ncols() {
            let ratio = dot(&u.column(j), &ac) / &two_q;
            for i in 0..u.nrows() {
                u_c[(i, j)] = &ratio * &self.c[i];
            }
        }
        Ok((u.sub(&u_c), u_c))
    }

    pub fn majorant_f64(&self) -> DMatrix<f64> {
        self.majorant.to_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairForm {
    pub k: usize,
    pub l: usize,
    /// κ = B(c_k,c_l) / (4Q(c_k)Q(c_l) − B(c_k,c_l)²).
    pub coefficient: Rat,
    /// G with Q⁺_{k,l}(v) = ½ vᵀGv, same convention as A.
    pub gram: RatMatrix,
}

impl PairForm {
    pub fn eval(&self, v: &[Rat]) -> Rat {
        dot(v, &self.gram.mul_vec(v)) / int(2)
    }

    /// Smallest λ with Q⁺(v) ≥ λ|v|², i.e. half the smallest eigenvalue of G.
    pub fn min_ratio(&self) -> f64 {
        let g = self.gram.to_f64();
        let eig = nalgebra::SymmetricEigen::new(g);
        0.5 * eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.gram.is_positive_definite()
    }
}

pub(crate) fn rat_vec_f64(v: &[Rat]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}
