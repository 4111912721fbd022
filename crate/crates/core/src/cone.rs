//! Cone frames C = (c_0 … c_n), the sign data x_i and the locally constant
//! function f supported on the component C_A.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{det_i128, int, Rat, RatMatrix};
use crate::quadspace::{QuadError, QuadraticSpace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FrameViolation {
    /// Q(c_i) ≥ 0.
    NotInCone(usize),
    /// B(c_i, c_j) ≥ 0 for the pair (i, j).
    MixedComponents(usize, usize),
    RankDeficient,
    /// n ≥ m.
    GenusTooLarge,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConeError {
    #[error("invalid cone frame: {0:?}")]
    InvalidFrame(Vec<FrameViolation>),
    #[error("frame needs at least two columns, got {0}")]
    TooFewColumns(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// A validated (or explicitly unchecked) cone frame.
#[derive(Debug, Clone)]
pub struct ConeFrame {
    space: Arc<QuadraticSpace>,
    c: RatMatrix,
    n: usize,
    /// B(c_i, c_j).
    gram: RatMatrix,
    /// A·C scaled to integers by a positive factor; only signs of x_i are read from it.
    ac_int: Vec<i128>,
    certified: bool,
}

/// Validates the frame, listing every violated condition on failure.
pub fn validate_frame(space: &QuadraticSpace, c: &RatMatrix) -> Result<ConeFrame, ConeError> {
    let frame = ConeFrame::unchecked(space, c)?;
    let violations = frame.violations();
    if violations.is_empty() {
        Ok(ConeFrame { certified: true, ..frame })
    } else {
        Err(ConeError::InvalidFrame(violations))
    }
}

impl ConeFrame {
    /// Builds a frame without certifying the cone conditions. f and x_i are
    /// still well defined; this is how degenerate frames are studied.
    pub fn unchecked(space: &QuadraticSpace, c: &RatMatrix) -> Result<Self, ConeError> {
        if c.nrows() != space.dim() {
            return Err(ConeError::DimensionMismatch { expected: space.dim(), got: c.nrows() });
        }
        if c.ncols() < 2 {
            return Err(ConeError::TooFewColumns(c.ncols()));
        }
        let ac = space.gram().mul(c);
        let gram = c.transpose().mul(&ac);
        let den = c.common_denominator();
        let ac_int = ac
            .data()
            .iter()
            .map(|x| (x * Rat::from_integer(den.clone())).to_integer().to_i128().expect("frame entries too large"))
            .collect();
        Ok(Self { space: Arc::new(space.clone()), c: c.clone(), n: c.ncols() - 1, gram, ac_int, certified: false })
    }

    fn violations(&self) -> Vec<FrameViolation> {
        let mut out = Vec::new();
        let m = self.space.dim();
        if self.n >= m {
            out.push(FrameViolation::GenusTooLarge);
        }
        for i in 0..=self.n {
            if !self.gram[(i, i)].is_negative() {
                out.push(FrameViolation::NotInCone(i));
            }
        }
        for i in 0..=self.n {
            for j in i + 1..=self.n {
                if !self.gram[(i, j)].is_negative() {
                    out.push(FrameViolation::MixedComponents(i, j));
                }
            }
        }
        if self.c.rank() < self.n + 1 {
            out.push(FrameViolation::RankDeficient);
        }
        out
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    pub fn genus(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn columns(&self) -> &RatMatrix {
        &self.c
    }

    pub fn vector(&self, i: usize) -> Vec<Rat> {
        self.c.column(i)
    }

    /// Gram data B(c_i, c_j).
    pub fn gram(&self) -> &RatMatrix {
        &self.gram
    }

    /// C̃_i: the frame with column i removed.
    pub fn without(&self, i: usize) -> RatMatrix {
        let keep: Vec<usize> = (0..=self.n).filter(|&j| j != i).collect();
        self.c.select_columns(&keep)
    }

    fn check_u(&self, u: &RatMatrix) -> Result<(), ConeError> {
        if u.shape() != (self.dim(), self.n) {
            return Err(ConeError::DimensionMismatch { expected: self.dim() * self.n, got: u.nrows() * u.ncols() });
        }
        Ok(())
    }

    /// 𝒙_i = UᵀAc_i and x_i = (−1)^i det(UᵀAC̃_i).
    pub fn x_data(&self, u: &RatMatrix) -> Result<XData, ConeError> {
        self.check_u(u)?;
        let w = u.transpose().mul(self.space.gram()).mul(&self.c);
        let xvecs = w.columns();
        let x = (0..=self.n)
            .map(|i| {
                let keep: Vec<usize> = (0..=self.n).filter(|&j| j != i).collect();
                let d = w.select_columns(&keep).det();
                if i % 2 == 0 {
                    d
                } else {
                    -d
                }
            })
            .collect();
        Ok(XData { xvecs, x })
    }

    pub fn f_value(&self, u: &RatMatrix) -> Result<FValue, ConeError> {
        let xd = self.x_data(u)?;
        let signs: Vec<i8> = xd.x.iter().map(sign_of).collect();
        Ok(f_from_signs(&signs))
    }

    /// f for U = scaled/d with `scaled` an integer m×n matrix (row-major) and
    /// d > 0. Signs are invariant under positive scaling, so d never enters.
    pub fn f_scaled(&self, scaled: &[i128]) -> f64 {
        let m = self.dim();
        let n = self.n;
        debug_assert_eq!(scaled.len(), m * n);
        // W = scaledᵀ · (A C)_int, n × (n+1)
        let mut w = vec![0i128; n * (n + 1)];
        let mut overflow = false;
        'outer: for j in 0..n {
            for i in 0..=n {
                let mut acc = 0i128;
                for r in 0..m {
                    let term = scaled[r * n + j].checked_mul(self.ac_int[r * (n + 1) + i]);
                    match term.and_then(|t| acc.checked_add(t)) {
                        Some(v) => acc = v,
                        None => {
                            overflow = true;
                            break 'outer;
                        }
                    }
                }
                w[j * (n + 1) + i] = acc;
            }
        }
        let mut signs = Vec::with_capacity(n + 1);
        if !overflow {
            for i in 0..=n {
                let minor: Vec<i128> = (0..n)
                    .flat_map(|j| (0..=n).filter(move |&k| k != i).map(move |k| (j, k)))
                    .map(|(j, k)| w[j * (n + 1) + k])
                    .collect();
                match det_i128(minor, n) {
                    Some(d) => {
                        let s = d.signum() as i8;
                        signs.push(if i % 2 == 0 { s } else { -s });
                    }
                    None => {
                        overflow = true;
                        break;
                    }
                }
            }
        }
        if overflow {
            let u = RatMatrix::from_fn(m, n, |r, j| Rat::from_integer(BigInt::from(scaled[r * n + j])));
            return self.f_value(&u).map(|f| f.as_f64()).unwrap_or(0.0);
        }
        f_from_signs(&signs).as_f64()
    }

    /// Lower bound λ* with Q(u_j) ≥ λ*·|u_j|² on every column of every U ∈ C_A.
    ///
    /// Minimum over independent pairs of half the smallest eigenvalue of the
    /// pair form's Gram matrix, shrunk by 1 − 10⁻⁸.
    pub fn enum_bound(&self) -> Result<f64, ConeError> {
        let mut best = f64::INFINITY;
        for k in 0..=self.n {
            for l in k + 1..=self.n {
                match self.space.pair_form(k, &self.vector(k), l, &self.vector(l)) {
                    Ok(pf) => best = best.min(pf.min_ratio()),
                    Err(QuadError::LinearlyDependent(..)) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if !best.is_finite() || best <= 0.0 {
            return Err(ConeError::InvalidFrame(vec![FrameViolation::RankDeficient]));
        }
        Ok(best * (1.0 - 1e-8))
    }
}

fn sign_of(r: &Rat) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XData {
    pub xvecs: Vec<Vec<Rat>>,
    pub x: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FValue {
    /// Dyadic value in [−1, 1].
    pub value: Rat,
    pub in_component: bool,
}

impl FValue {
    pub fn as_f64(&self) -> f64 {
        crate::exact::to_f64(&self.value)
    }
}

/// f = Π(1+sgn x_i)/2 − Π(1−sgn x_i)/2, evaluated through the sign pattern.
pub fn f_from_signs(signs: &[i8]) -> FValue {
    let pos = signs.iter().filter(|&&s| s > 0).count();
    let neg = signs.iter().filter(|&&s| s < 0).count();
    let zero = signs.len() - pos - neg;
    let in_component = (pos == 0 || neg == 0) && zero < signs.len();
    if !in_component {
        return FValue { value: Rat::zero(), in_component };
    }
    // each zero sign contributes a factor 1/2 to the surviving product
    let mag = Rat::new(BigInt::one(), BigInt::one() << zero);
    let value = if pos > 0 { mag } else { -mag };
    FValue { value, in_component }
}

/// For n = 1 the frame function reduces to (sgn B(c_1,u) − sgn B(c_0,u)) / 2.
pub fn f_genus_one(space: &QuadraticSpace, c0: &[Rat], c1: &[Rat], u: &[Rat]) -> Rat {
    let s = |v: &[Rat]| int(sign_of(&space.b(v, u)) as i64);
    (s(c1) - s(c0)) / int(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn hyperbolic() -> QuadraticSpace {
        QuadraticSpace::lorentzian(&[vec![2, 0], vec![0, -2]]).unwrap()
    }

    fn cols(cs: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_columns(&cs.iter().map(|c| c.iter().map(|&x| int(x)).collect()).collect::<Vec<_>>()).unwrap()
    }

    fn frame() -> ConeFrame {
        validate_frame(&hyperbolic(), &cols(&[&[0, 1], &[1, 2]])).unwrap()
    }

    fn col(u: &[i64]) -> RatMatrix {
        cols(&[u])
    }

    #[test]
    fn validates_examples() {
        let f = frame();
        assert!(f.is_certified());
        assert_eq!(f.gram()[(0, 1)], int(-4));
        assert_eq!(f.gram()[(1, 1)], int(-6));
        let s = hyperbolic();
        match validate_frame(&s, &cols(&[&[0, 1], &[0, 2]])) {
            Err(ConeError::InvalidFrame(v)) => assert_eq!(v, vec![FrameViolation::RankDeficient]),
            other => panic!("{other:?}"),
        }
        match validate_frame(&s, &cols(&[&[0, 1], &[1, 0]])) {
            Err(ConeError::InvalidFrame(v)) => assert!(v.contains(&FrameViolation::NotInCone(1))),
            other => panic!("{other:?}"),
        }
        match validate_frame(&s, &cols(&[&[0, 1], &[0, -1]])) {
            Err(ConeError::InvalidFrame(v)) => assert!(v.contains(&FrameViolation::MixedComponents(0, 1))),
            other => panic!("{other:?}"),
        }
        match validate_frame(&s, &cols(&[&[0, 1], &[1, 2], &[1, 3]])) {
            Err(ConeError::InvalidFrame(v)) => assert!(v.contains(&FrameViolation::GenusTooLarge)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(validate_frame(&s, &cols(&[&[0, 1]])), Err(ConeError::TooFewColumns(1))));
    }

    #[test]
    fn x_data_examples() {
        let f = frame();
        let xd = f.x_data(&col(&[3, 1])).unwrap();
        assert_eq!(xd.x, vec![int(2), int(2)]);
        assert_eq!(xd.xvecs, vec![vec![int(-2)], vec![int(2)]]);
        assert_eq!(f.x_data(&col(&[1, 0])).unwrap().x, vec![int(2), int(0)]);
        assert_eq!(f.x_data(&col(&[0, 0])).unwrap().x, vec![int(0), int(0)]);
        assert!(f.x_data(&RatMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn f_value_examples() {
        let f = frame();
        assert_eq!(f.f_value(&col(&[3, 1])).unwrap(), FValue { value: int(1), in_component: true });
        assert_eq!(f.f_value(&col(&[1, 0])).unwrap(), FValue { value: rat(1, 2), in_component: true });
        assert_eq!(f.x_data(&col(&[1, 3])).unwrap().x, vec![int(-10), int(6)]);
        assert_eq!(f.f_value(&col(&[1, 3])).unwrap(), FValue { value: int(0), in_component: false });
        assert_eq!(f.f_value(&col(&[0, 0])).unwrap().in_component, false);
    }

    #[test]
    fn case_table() {
        assert_eq!(f_from_signs(&[1, 1, 1]).value, int(1));
        assert_eq!(f_from_signs(&[-1, -1, -1]).value, int(-1));
        assert_eq!(f_from_signs(&[1, 0, 1]).value, rat(1, 2));
        assert_eq!(f_from_signs(&[0, -1, 0]).value, rat(-1, 4));
        assert_eq!(f_from_signs(&[0, 0, 0]).value, int(0));
        assert_eq!(f_from_signs(&[1, -1, 0]).value, int(0));
    }

    #[test]
    fn scaled_path_agrees_with_exact() {
        let f = frame();
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                let exact = f.f_value(&col(&[a, b])).unwrap().as_f64();
                assert_eq!(f.f_scaled(&[a as i128 * 3, b as i128 * 3]), exact);
            }
        }
    }

    #[test]
    fn genus_one_closed_form() {
        let f = frame();
        let s = hyperbolic();
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                let u = [int(a), int(b)];
                assert_eq!(
                    f.f_value(&col(&[a, b])).unwrap().value,
                    f_genus_one(&s, &f.vector(0), &f.vector(1), &u)
                );
            }
        }
    }

    #[test]
    fn enum_bound_example() {
        let f = frame();
        let lam = f.enum_bound().unwrap();
        // eigenvalues of [[1,-2],[-2,7]] are 4 ± √13
        let oracle: f64 = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::<f64>::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 7.0]))
            .eigenvalues
            .min();
        assert!((lam - oracle).abs() < 1e-7);
        assert!(lam > 0.0);
        let scaled = validate_frame(&hyperbolic(), &cols(&[&[0, 3], &[5, 10]])).unwrap();
        assert!((scaled.enum_bound().unwrap() - lam).abs() < 1e-12);
    }
}
