//! Truncated theta sums
//! θ(Z) = Σ_{U ∈ H + ℤ^{m×n}} p(UY^{1/2}) exp(πi tr(UᵀAUZ) + 2πi tr(KᵀAU))
//! for p = f (holomorphic) and p = g (modular).

pub mod cosets;
pub mod enumerate;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cone::{ConeError, ConeFrame};
use crate::exact::{Rat, RatMatrix};
use crate::quadspace::{QuadError, QuadraticSpace};
use crate::simplex::{g_n1_weighted, g_value_weighted, weighted_tail_bound, CubatureConfig, Rule, SimplexChart, SimplexError};
use crate::summation::ComplexSum;
pub use cosets::{cosets, smith_normal_form, CosetSet, SmithForm};
pub use enumerate::{enumerate, shifted, trace_form, LatticePoint, DEFAULT_POINT_CAP};

/// Smallest truncation target accepted.
pub const EPS_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("series produced a non-finite partial sum")]
    NonFinite,
    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("eps must be at least {EPS_FLOOR:e}, got {0:e}")]
    EpsTooSmall(f64),
    #[error("projected {projected:.3e} lattice points exceeds the cap of {cap}")]
    RadiusTooLarge { projected: f64, cap: u64 },
    #[error("T must be symmetric with 2T integral and even on the diagonal")]
    NotSemiIntegral,
    #[error("the closed-form kernel needs genus 1, got {0}")]
    ClosedFormGenus(usize),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Characteristics H, K ∈ ℚ^{m×n}.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristics {
    pub h: RatMatrix,
    pub k: RatMatrix,
}

impl Characteristics {
    pub fn zero(m: usize, n: usize) -> Self {
        Self { h: RatMatrix::zeros(m, n), k: RatMatrix::zeros(m, n) }
    }

    pub fn new(h: RatMatrix, k: RatMatrix) -> Result<Self, ThetaError> {
        if h.shape() != k.shape() {
            return Err(ThetaError::DimensionMismatch(format!("H is {:?}, K is {:?}", h.shape(), k.shape())));
        }
        Ok(Self { h, k })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.h.shape()
    }

    /// K̃ = K + HS.
    pub fn translated(&self, s: &RatMatrix) -> Self {
        Self { h: self.h.clone(), k: self.k.add(&self.h.mul(s)) }
    }
}

/// Z = X + iY in the Siegel upper half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    y_half: DMatrix<f64>,
}

fn is_symmetric(s: &DMatrix<f64>) -> bool {
    let scale = s.amax().max(1.0);
    s.is_square() && (s - s.transpose()).amax() <= 1e-12 * scale
}

fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

impl SiegelPoint {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self, ThetaError> {
        if !x.is_square() || x.shape() != y.shape() || x.nrows() == 0 {
            return Err(ThetaError::DimensionMismatch(format!("X is {:?}, Y is {:?}", x.shape(), y.shape())));
        }
        if !is_symmetric(&x) {
            return Err(ThetaError::NotSymmetric("X"));
        }
        if !is_symmetric(&y) {
            return Err(ThetaError::NotSymmetric("Y"));
        }
        let x = symmetrize(&x);
        let y = symmetrize(&y);
        if y.clone().cholesky().is_none() {
            return Err(ThetaError::NotPositiveDefinite("Y"));
        }
        let eig = y.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(ThetaError::NotPositiveDefinite("Y"));
        }
        let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let y_half = symmetrize(&(&eig.eigenvectors * root * eig.eigenvectors.transpose()));
        Ok(Self { x, y, y_half })
    }

    /// z = x + iy at genus one.
    pub fn scalar(x: f64, y: f64) -> Result<Self, ThetaError> {
        Self::new(DMatrix::from_element(1, 1, x), DMatrix::from_element(1, 1, y))
    }

    pub fn from_complex(z: &DMatrix<Complex64>) -> Result<Self, ThetaError> {
        Self::new(z.map(|c| c.re), z.map(|c| c.im))
    }

    pub fn genus(&self) -> usize {
        self.x.nrows()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn y_half(&self) -> &DMatrix<f64> {
        &self.y_half
    }

    pub fn z(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.genus(), self.genus(), |i, j| Complex64::new(self.x[(i, j)], self.y[(i, j)]))
    }

    pub fn min_eigenvalue_y(&self) -> f64 {
        self.y.clone().symmetric_eigen().eigenvalues.min()
    }

    /// −Z⁻¹.
    pub fn neg_inverse(&self) -> Result<Self, ThetaError> {
        let inv = self.z().try_inverse().ok_or(ThetaError::NotPositiveDefinite("Y"))?;
        let w = inv.map(|c| -c);
        let w = (&w + w.transpose()).map(|c| c * 0.5);
        Self::from_complex(&w)
    }

    /// Z + S.
    pub fn translate(&self, s: &DMatrix<f64>) -> Result<Self, ThetaError> {
        Self::new(&self.x + s, self.y.clone())
    }
}

/// A truncated theta value; `tail_bound` is the change under the last
/// doubling of the radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: u64,
    pub radius: f64,
    /// Σ |kernel error|·|exponential| over the summed terms (θ_g only).
    #[serde(skip)]
    pub kernel_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaOptions {
    pub eps: f64,
    pub point_cap: u64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self { eps: 1e-8, point_cap: DEFAULT_POINT_CAP }
    }
}

impl ThetaOptions {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }
}

/// How g is evaluated inside θ_g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Cubature { rule: Rule, config: CubatureConfig },
    /// Error-function closed form, genus one only.
    ClosedForm,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Cubature { rule: Rule::default(), config: CubatureConfig::default() }
    }
}

impl Kernel {
    pub fn with_rule(rule: Rule) -> Self {
        Kernel::Cubature { rule, config: CubatureConfig::default() }
    }
}

struct Setup {
    a: DMatrix<f64>,
    h: DMatrix<f64>,
    k: DMatrix<f64>,
    h_rat: RatMatrix,
}

impl Setup {
    fn new(frame: &ConeFrame, ch: &Characteristics, z: &SiegelPoint) -> Result<Self, ThetaError> {
        let (m, n) = (frame.dim(), frame.genus());
        if ch.shape() != (m, n) {
            return Err(ThetaError::DimensionMismatch(format!("characteristics are {:?}, expected {:?}", ch.shape(), (m, n))));
        }
        if z.genus() != n {
            return Err(ThetaError::DimensionMismatch(format!("Z has genus {}, frame has genus {n}", z.genus())));
        }
        Ok(Self { a: frame.space().gram_f64(), h: ch.h.to_f64(), k: ch.k.to_f64(), h_rat: ch.h.clone() })
    }

    /// (log|exp|, arg exp) of πi tr(UᵀAUZ) + 2πi tr(KᵀAU).
    fn log_exponential(&self, u: &DMatrix<f64>, z: &SiegelPoint) -> (f64, f64) {
        let au = &self.a * u;
        let g = u.transpose() * &au;
        let re = g.component_mul(z.x()).sum();
        let im = g.component_mul(z.y()).sum();
        let lin = self.k.component_mul(&au).sum();
        let pi = std::f64::consts::PI;
        (-pi * im, pi * re + 2.0 * pi * lin)
    }

    fn exponential(&self, u: &DMatrix<f64>, z: &SiegelPoint) -> Complex64 {
        let (log_mod, phase) = self.log_exponential(u, z);
        Complex64::from_polar(log_mod.exp(), phase)
    }
}

fn check_eps(eps: f64) -> Result<(), ThetaError> {
    if !(eps >= EPS_FLOOR) {
        return Err(ThetaError::EpsTooSmall(eps));
    }
    Ok(())
}

/// Starting radius of the doubling search.
pub fn initial_radius(eps: f64) -> f64 {
    ((1.0 / eps).ln() / std::f64::consts::PI).max(1.0)
}

/// Sums `term` over the enumerated points, doubling the radius until the sum
/// moves by less than eps/10.
fn doubling_sum<E, T>(eps: f64, enumerate_at: E, term: T) -> Result<ThetaValue, ThetaError>
where
    E: Fn(f64) -> Result<Vec<LatticePoint>, ThetaError>,
    T: Fn(&[i64], usize) -> Result<(Complex64, f64), ThetaError> + Sync,
{
    let mut cache: BTreeMap<Vec<i64>, (Complex64, f64)> = BTreeMap::new();
    let mut r = initial_radius(eps);
    loop {
        let outer = 2.0 * r;
        let pts = enumerate_at(outer)?;
        let fresh: Vec<&LatticePoint> = pts.iter().filter(|p| !cache.contains_key(&p.offset)).collect();
        let computed: Vec<Result<(Complex64, f64), ThetaError>> = fresh.par_iter().map(|p| term(&p.offset, pts.len())).collect();
        for (p, t) in fresh.iter().zip(computed) {
            cache.insert(p.offset.clone(), t?);
        }
        let mut inner = ComplexSum::default();
        let mut full = ComplexSum::default();
        let mut kernel_error = 0.0;
        for p in &pts {
            let (t, e) = cache[&p.offset];
            if p.norm <= r {
                inner.add(t);
            }
            full.add(t);
            kernel_error += e;
        }
        let change = (full.total() - inner.total()).norm();
        if !change.is_finite() || !full.total().is_finite() {
            return Err(ThetaError::NonFinite);
        }
        if change < eps / 10.0 {
            return Ok(ThetaValue {
                value: full.total(),
                tail_bound: change,
                terms: pts.len() as u64,
                radius: outer,
                kernel_error,
            });
        }
        r = outer;
    }
}

fn integer_scaled(h: &RatMatrix, offset: &[i64]) -> Vec<i128> {
    let den = h.common_denominator();
    let d = den.to_i128().expect("denominator fits i128");
    h.data()
        .iter()
        .zip(offset)
        .map(|(x, &o)| (x * Rat::from_integer(den.clone())).to_integer().to_i128().expect("entry fits i128") + d * o as i128)
        .collect()
}

/// Holomorphic series θ_f; f(UY^{1/2}) = f(U) so only signs of U enter.
pub fn theta_f(
    frame: &ConeFrame,
    ch: &Characteristics,
    z: &SiegelPoint,
    opts: &ThetaOptions,
) -> Result<ThetaValue, ThetaError> {
    check_eps(opts.eps)?;
    let setup = Setup::new(frame, ch, z)?;
    let (m, n) = (frame.dim(), frame.genus());
    let lambda = match frame.enum_bound() {
        Ok(l) => l,
        // no independent pair: the frame is rank deficient and f vanishes
        Err(ConeError::InvalidFrame(_)) if frame.columns().rank() < n + 1 => {
            return Ok(ThetaValue { value: Complex64::zero(), tail_bound: 0.0, terms: 0, radius: 0.0, kernel_error: 0.0 })
        }
        Err(e) => return Err(e.into()),
    };
    let m_form = DMatrix::from_diagonal_element(m, m, 2.0 * lambda);
    doubling_sum(
        opts.eps,
        |r| enumerate(&m_form, z.y(), &setup.h, r, opts.point_cap),
        |offset, _| {
            let f = frame.f_scaled(&integer_scaled(&setup.h_rat, offset));
            if f == 0.0 {
                return Ok((Complex64::zero(), 0.0));
            }
            let u = shifted(&setup.h, offset);
            Ok((setup.exponential(&u, z) * f, 0.0))
        },
    )
}

/// μ with M_c ≥ μ·I over the vertices and barycenter of the frame, times 0.9.
pub fn g_truncation_scale(frame: &ConeFrame) -> Result<f64, ThetaError> {
    let space = frame.space();
    let n = frame.genus();
    let mut samples: Vec<Vec<Rat>> = (0..=n).map(|i| frame.vector(i)).collect();
    let m = frame.dim();
    let denom = Rat::from_integer(BigInt::from(n as i64 + 1));
    let bary: Vec<Rat> = (0..m).map(|r| samples.iter().map(|c| c[r].clone()).sum::<Rat>() / &denom).collect();
    samples.push(bary);
    let mut mu = f64::INFINITY;
    for c in &samples {
        let split = space.split(c)?;
        mu = mu.min(split.majorant_f64().symmetric_eigen().eigenvalues.min());
    }
    Ok(0.9 * mu)
}

/// Modular series θ_g.
pub fn theta_g(
    frame: &ConeFrame,
    ch: &Characteristics,
    z: &SiegelPoint,
    opts: &ThetaOptions,
    kernel: &Kernel,
) -> Result<ThetaValue, ThetaError> {
    check_eps(opts.eps)?;
    let setup = Setup::new(frame, ch, z)?;
    let (m, n) = (frame.dim(), frame.genus());
    if matches!(kernel, Kernel::ClosedForm) && n != 1 {
        return Err(ThetaError::ClosedFormGenus(n));
    }
    let chart = SimplexChart::new(frame)?;
    let mu = g_truncation_scale(frame)?;
    let m_form = DMatrix::from_diagonal_element(m, m, mu);
    doubling_sum(
        opts.eps,
        |r| enumerate(&m_form, z.y(), &setup.h, r, opts.point_cap),
        |offset, count| {
            let u = shifted(&setup.h, offset);
            let v = &u * z.y_half();
            // the modulus rides inside the kernel: far timelike U pair a huge modulus with a vanishing g
            let (log_mod, phase) = setup.log_exponential(&u, z);
            let (weighted, err) = match kernel {
                Kernel::ClosedForm => (g_n1_weighted(frame, v.as_slice(), log_mod)?, 0.0),
                Kernel::Cubature { rule, config } => {
                    // each term may spend an equal share of eps/10, judged against its own size
                    let share = opts.eps / (10.0 * count as f64);
                    let scale = log_mod.exp().min(weighted_tail_bound(&chart, &v, log_mod)?);
                    let on_g = config.relaxed(share / scale);
                    let weighted = CubatureConfig { tol: share.max(config.tol * scale), ..on_g };
                    let r = g_value_weighted(&chart, &v, rule, &weighted, log_mod)?;
                    (r.value, r.error_estimate)
                }
            };
            Ok((Complex64::from_polar(weighted, phase), err))
        },
    )
}

/// Rational tr(KᵀAU) reduced mod 1, as a float in [0, 1).
fn linear_phase(space: &QuadraticSpace, k: &RatMatrix, u: &RatMatrix) -> f64 {
    let t = k.transpose().mul(space.gram()).mul(u).trace();
    crate::exact::to_f64(&(t.clone() - t.floor()))
}

/// Coefficient a(T) = Σ f(U)·e(tr(KᵀAU)) over integral U with UᵀAU = 2T.
pub fn fourier_coefficient(frame: &ConeFrame, k: &RatMatrix, t: &RatMatrix) -> Result<Complex64, ThetaError> {
    let (m, n) = (frame.dim(), frame.genus());
    if k.shape() != (m, n) {
        return Err(ThetaError::DimensionMismatch(format!("K is {:?}, expected {:?}", k.shape(), (m, n))));
    }
    if t.shape() != (n, n) {
        return Err(ThetaError::DimensionMismatch(format!("T is {:?}, expected {:?}", t.shape(), (n, n))));
    }
    let two_t = t.scale(&Rat::from_integer(2.into()));
    if !t.is_symmetric() || !two_t.is_integral() || (0..n).any(|i| two_t[(i, i)].to_integer().is_odd()) {
        return Err(ThetaError::NotSemiIntegral);
    }
    if (0..n).any(|i| t[(i, i)].is_negative()) {
        return Ok(Complex64::zero());
    }
    let target: Vec<i64> = two_t.data().iter().map(|x| x.to_integer().to_i64().expect("T fits i64")).collect();
    let mut sum = ComplexSum::default();
    support_terms(frame, k, crate::exact::to_f64(&two_t.trace()), |gram, term| {
        if gram == target {
            sum.add(term);
        }
    })?;
    Ok(sum.total())
}

/// All coefficients a(T) with tr T ≤ max_trace whose defining sum is non-empty, ordered by
/// (tr T, entries). One enumeration serves every T.
pub fn fourier_expansion(
    frame: &ConeFrame,
    k: &RatMatrix,
    max_trace: u32,
) -> Result<Vec<(RatMatrix, Complex64)>, ThetaError> {
    let (m, n) = (frame.dim(), frame.genus());
    if k.shape() != (m, n) {
        return Err(ThetaError::DimensionMismatch(format!("K is {:?}, expected {:?}", k.shape(), (m, n))));
    }
    let mut sums: BTreeMap<(i64, Vec<i64>), ComplexSum> = BTreeMap::new();
    support_terms(frame, k, 2.0 * max_trace as f64, |gram, term| {
        let trace: i64 = (0..n).map(|i| gram[i * n + i]).sum();
        if trace <= 2 * max_trace as i64 {
            sums.entry((trace, gram)).or_default().add(term);
        }
    })?;
    Ok(sums
        .into_iter()
        .map(|((_, gram), sum)| {
            let t = RatMatrix::from_fn(n, n, |i, j| Rat::new(BigInt::from(gram[i * n + j]), BigInt::from(2)));
            (t, sum.total())
        })
        .collect())
}

/// Visits f(U)·e(tr(KᵀAU)) with UᵀAU for every integral U in the support with tr UᵀAU ≤ two_trace.
fn support_terms(
    frame: &ConeFrame,
    k: &RatMatrix,
    two_trace: f64,
    mut visit: impl FnMut(Vec<i64>, Complex64),
) -> Result<(), ThetaError> {
    let (m, n) = (frame.dim(), frame.genus());
    let lambda = match frame.enum_bound() {
        Ok(l) => l,
        Err(ConeError::InvalidFrame(_)) if frame.columns().rank() < n + 1 => return Ok(()),
        Err(e) => return Err(e.into()),
    };
    // on the support Q(u_j) ≥ λ*|u_j|², so Σ 2λ*|u_j|² ≤ 2 tr T
    let radius = two_trace * (1.0 + 1e-9) + 1e-9;
    let m_form = DMatrix::from_diagonal_element(m, m, 2.0 * lambda);
    let pts = enumerate(&m_form, &DMatrix::identity(n, n), &DMatrix::zeros(m, n), radius, DEFAULT_POINT_CAP)?;
    let a = frame.space().gram_int();
    for p in &pts {
        let scaled: Vec<i128> = p.offset.iter().map(|&x| x as i128).collect();
        let f = frame.f_scaled(&scaled);
        if f == 0.0 {
            continue;
        }
        let u = RatMatrix::from_fn(m, n, |i, j| Rat::from_integer(BigInt::from(p.offset[i * n + j])));
        let phase = 2.0 * std::f64::consts::PI * linear_phase(frame.space(), k, &u);
        visit(gram_of(a, m, n, &p.offset), Complex64::from_polar(f, phase));
    }
    Ok(())
}

/// UᵀAU for integral U (row-major offsets).
fn gram_of(a: &[i64], m: usize, n: usize, u: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; n * n];
    for j in 0..n {
        for l in 0..n {
            let mut acc = 0i64;
            for r in 0..m {
                for s in 0..m {
                    acc += u[r * n + j] * a[r * m + s] * u[s * n + l];
                }
            }
            out[j * n + l] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::validate_frame;
    use crate::exact::{int, rat};

    fn hyperbolic() -> ConeFrame {
        let space = QuadraticSpace::lorentzian(&[vec![2, 0], vec![0, -2]]).unwrap();
        let c = RatMatrix::from_int_rows(&[&[0, 1], &[1, 2]]);
        validate_frame(&space, &c).unwrap()
    }

    /// Brute-force θ_f over a box using the exact f.
    fn brute_theta_f(frame: &ConeFrame, ch: &Characteristics, z: Complex64, bx: i64) -> Complex64 {
        let a = frame.space().gram_f64();
        let k = ch.k.to_f64();
        let h = ch.h.to_f64();
        let mut s = ComplexSum::default();
        for p in -bx..=bx {
            for q in -bx..=bx {
                let ur = RatMatrix::from_fn(2, 1, |i, _| ch.h[(i, 0)].clone() + int(if i == 0 { p } else { q }));
                let f = frame.f_value(&ur).unwrap().as_f64();
                if f == 0.0 {
                    continue;
                }
                let u = DMatrix::from_column_slice(2, 1, &[h[(0, 0)] + p as f64, h[(1, 0)] + q as f64]);
                let qv = (u.transpose() * &a * &u)[(0, 0)];
                let lin = (k.transpose() * &a * &u)[(0, 0)];
                let arg = Complex64::i() * std::f64::consts::PI * (z * qv + 2.0 * lin);
                s.add(arg.exp() * f);
            }
        }
        s.total()
    }

    #[test]
    fn siegel_point_validation() {
        assert!(SiegelPoint::scalar(0.0, 1.0).is_ok());
        assert_eq!(SiegelPoint::scalar(0.0, -1.0), Err(ThetaError::NotPositiveDefinite("Y")));
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(SiegelPoint::new(x, DMatrix::identity(2, 2)), Err(ThetaError::NotSymmetric("X")));
        let y = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let z = SiegelPoint::new(DMatrix::zeros(2, 2), y.clone()).unwrap();
        assert!((z.y_half() * z.y_half() - &y).amax() < 1e-14);
        let w = z.neg_inverse().unwrap();
        let prod = z.z() * w.z();
        assert!((prod + DMatrix::<Complex64>::identity(2, 2)).iter().all(|c| c.norm() < 1e-13));
    }

    #[test]
    fn theta_f_real_at_imaginary_axis_and_matches_box() {
        let frame = hyperbolic();
        let ch = Characteristics::zero(2, 1);
        let z = SiegelPoint::scalar(0.0, 2.0).unwrap();
        let t = theta_f(&frame, &ch, &z, &ThetaOptions::with_eps(1e-10)).unwrap();
        assert!(t.value.im.abs() < 1e-12);
        let brute = brute_theta_f(&frame, &ch, Complex64::new(0.0, 2.0), 20);
        assert!((t.value - brute).norm() < 1e-10);
        assert!(t.tail_bound < 1e-11);
    }

    #[test]
    fn theta_f_with_characteristics_matches_box() {
        let frame = hyperbolic();
        let h = RatMatrix::from_rows(&[vec![rat(1, 3)], vec![rat(1, 5)]]).unwrap();
        let k = RatMatrix::from_rows(&[vec![rat(1, 4)], vec![rat(-1, 7)]]).unwrap();
        let ch = Characteristics::new(h, k).unwrap();
        let z = Complex64::new(0.3, 0.35);
        let t = theta_f(&frame, &ch, &SiegelPoint::scalar(z.re, z.im).unwrap(), &ThetaOptions::with_eps(1e-10)).unwrap();
        let brute = brute_theta_f(&frame, &ch, z, 25);
        assert!(brute.norm() > 1e-3);
        assert!((t.value - brute).norm() < 1e-9, "{} vs {}", t.value, brute);
    }

    #[test]
    fn theta_f_of_rank_deficient_frame_vanishes() {
        let space = QuadraticSpace::lorentzian(&[vec![2, 0], vec![0, -2]]).unwrap();
        let frame = ConeFrame::unchecked(&space, &RatMatrix::from_int_rows(&[&[0, 0], &[1, 2]])).unwrap();
        let t = theta_f(&frame, &Characteristics::zero(2, 1), &SiegelPoint::scalar(0.1, 1.0).unwrap(), &ThetaOptions::default())
            .unwrap();
        assert_eq!(t.value, Complex64::zero());
    }

    #[test]
    fn theta_g_closed_form_agrees_with_cubature() {
        let frame = hyperbolic();
        let h = RatMatrix::from_rows(&[vec![rat(1, 3)], vec![rat(1, 5)]]).unwrap();
        let k = RatMatrix::from_rows(&[vec![rat(1, 4)], vec![rat(0, 1)]]).unwrap();
        let ch = Characteristics::new(h, k).unwrap();
        let z = SiegelPoint::scalar(0.2, 1.1).unwrap();
        let opts = ThetaOptions::with_eps(1e-9);
        let a = theta_g(&frame, &ch, &z, &opts, &Kernel::default()).unwrap();
        let b = theta_g(&frame, &ch, &z, &opts, &Kernel::ClosedForm).unwrap();
        assert!(b.value.norm() > 1e-3);
        assert!((a.value - b.value).norm() < 1e-8);
    }

    #[test]
    fn theta_g_real_at_imaginary_axis() {
        let frame = hyperbolic();
        let t = theta_g(
            &frame,
            &Characteristics::zero(2, 1),
            &SiegelPoint::scalar(0.0, 1.0).unwrap(),
            &ThetaOptions::default(),
            &Kernel::ClosedForm,
        )
        .unwrap();
        assert!(t.value.im.abs() < 1e-12);
    }

    #[test]
    fn eps_floor_enforced() {
        let frame = hyperbolic();
        let r = theta_f(&frame, &Characteristics::zero(2, 1), &SiegelPoint::scalar(0.0, 1.0).unwrap(), &ThetaOptions::with_eps(1e-11));
        assert_eq!(r, Err(ThetaError::EpsTooSmall(1e-11)));
    }

    #[test]
    fn fourier_coefficient_matches_box() {
        let frame = hyperbolic();
        let k = RatMatrix::zeros(2, 1);
        for nu in 0..8 {
            let t = RatMatrix::from_rows(&[vec![int(nu)]]).unwrap();
            let got = fourier_coefficient(&frame, &k, &t).unwrap();
            let mut want = 0.0;
            for p in -10i64..=10 {
                for q in -10i64..=10 {
                    if p * p - q * q != nu {
                        continue;
                    }
                    let u = RatMatrix::from_int_rows(&[&[p], &[q]]);
                    want += frame.f_value(&u).unwrap().as_f64();
                }
            }
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12, "nu={nu}: {got} vs {want}");
        }
        let neg = RatMatrix::from_rows(&[vec![int(-1)]]).unwrap();
        assert_eq!(fourier_coefficient(&frame, &k, &neg).unwrap(), Complex64::zero());
        let half = RatMatrix::from_rows(&[vec![rat(1, 2)]]).unwrap();
        assert_eq!(fourier_coefficient(&frame, &k, &half), Err(ThetaError::NotSemiIntegral));
    }

    #[test]
    fn expansion_agrees_with_single_coefficients() {
        let frame = hyperbolic();
        let k = RatMatrix::from_rows(&[vec![rat(1, 3)], vec![rat(1, 4)]]).unwrap();
        let expansion = fourier_expansion(&frame, &k, 12).unwrap();
        assert!(expansion.windows(2).all(|w| w[0].0[(0, 0)] <= w[1].0[(0, 0)]));
        for nu in 0..=12 {
            let t = RatMatrix::from_rows(&[vec![int(nu)]]).unwrap();
            let single = fourier_coefficient(&frame, &k, &t).unwrap();
            let batch = expansion.iter().find(|(tt, _)| *tt == t).map_or(Complex64::zero(), |(_, a)| *a);
            assert!((single - batch).norm() < 1e-14, "nu={nu}");
        }
        assert!(expansion.iter().any(|(_, a)| a.norm() > 0.1));
    }

    #[test]
    fn theta_value_json_shape() {
        let v = ThetaValue { value: Complex64::new(1.5, -2.0), tail_bound: 0.0, terms: 3, radius: 4.0, kernel_error: 0.1 };
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"value":[1.5,-2.0],"tail_bound":0.0,"terms":3,"radius":4.0}"#);
    }
}
