//! Numerical checks of the transformation laws of θ_g under Z ↦ Z + S and
//! Z ↦ −Z⁻¹, and of the limit g(UY^{1/2}) → f(U).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cone::{ConeError, ConeFrame};
use crate::exact::{format_rat, to_f64, Rat, RatMatrix};
use crate::simplex::{g_n1, g_value_with, SimplexChart, SimplexError};
use crate::theta::{cosets, theta_g, Characteristics, Kernel, SiegelPoint, ThetaError, ThetaOptions, ThetaValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("S must be a symmetric integral {0}×{0} matrix")]
    InvalidTranslation(usize),
    #[error("y grid must be non-empty with positive entries")]
    InvalidGrid,
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Translate,
    Invert,
    Limit,
}

impl Law {
    pub fn as_str(&self) -> &'static str {
        match self {
            Law::Translate => "translate",
            Law::Invert => "invert",
            Law::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    pub law: Law,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub branch_note: String,
    pub branch_ambiguity: bool,
    pub details: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, Value>,
}

impl TransformReport {
    fn new(law: Law, lhs: Complex64, rhs: Complex64, tolerance: f64) -> Self {
        let abs_err = (lhs - rhs).norm();
        let rel_err = abs_err / lhs.norm().max(rhs.norm()).max(1e-30);
        Self {
            law,
            lhs,
            rhs,
            abs_err,
            rel_err,
            tolerance,
            pass: abs_err < tolerance,
            branch_note: String::new(),
            branch_ambiguity: false,
            details: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }
}

/// Verification thresholds added on top of the truncation budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub translate: f64,
    pub invert_phase: f64,
    pub invert_modulus: f64,
    pub limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { translate: 1e-8, invert_phase: 1e-4, invert_modulus: 1e-6, limit: 1e-3 }
    }
}

pub const DEFAULT_Y_GRID: [f64; 5] = [1.0, 4.0, 25.0, 100.0, 1e4];

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn rat_matrix_json(r: &RatMatrix) -> Value {
    Value::from((0..r.nrows()).map(|i| r.row(i).iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn float_matrix_json(r: &DMatrix<f64>) -> Value {
    Value::from((0..r.nrows()).map(|i| (0..r.ncols()).map(|j| r[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn echo_frame(frame: &ConeFrame, out: &mut BTreeMap<String, Value>) {
    out.insert("A".into(), json!(frame.space().gram_int().chunks(frame.dim()).collect::<Vec<_>>()));
    out.insert("C".into(), rat_matrix_json(frame.columns()));
}

fn echo_point(z: &SiegelPoint, out: &mut BTreeMap<String, Value>) {
    out.insert("X".into(), float_matrix_json(z.x()));
    out.insert("Y".into(), float_matrix_json(z.y()));
}

fn echo_chars(ch: &Characteristics, out: &mut BTreeMap<String, Value>) {
    out.insert("H".into(), rat_matrix_json(&ch.h));
    out.insert("K".into(), rat_matrix_json(&ch.k));
}

fn theta_json(t: &ThetaValue) -> Value {
    json!({"value": cjson(t.value), "tail_bound": t.tail_bound, "terms": t.terms, "radius": t.radius, "kernel_error": t.kernel_error})
}

/// e^{πi·r} for rational r, reduced mod 2 exactly before rounding.
fn exp_pi_i(r: &Rat) -> Complex64 {
    let two = Rat::from_integer(2.into());
    let reduced = r - (r / &two).floor() * &two;
    Complex64::from_polar(1.0, PI * to_f64(&reduced))
}

/// tr(HᵀAHS) and tr(S₀·1_{nm}·A₀·H).
pub fn translation_exponents(a: &RatMatrix, h: &RatMatrix, s: &RatMatrix) -> (Rat, Rat) {
    let (m, n) = h.shape();
    let quad = h.transpose().mul(a).mul(h).mul(s).trace();
    let s0 = RatMatrix::from_fn(n, n, |i, j| if i == j { s[(i, i)].clone() } else { Rat::zero() });
    let a0 = RatMatrix::from_fn(m, m, |i, j| if i == j { a[(i, i)].clone() } else { Rat::zero() });
    let ones = RatMatrix::from_fn(n, m, |_, _| Rat::from_integer(1.into()));
    let diag = s0.mul(&ones).mul(&a0).mul(h).trace();
    (quad, diag)
}

/// θ_{H,K}(Z + S) against exp(−πi tr(HᵀAHS) − πi tr(S₀1_{nm}A₀H))·θ_{H,K+HS}(Z).
///
/// The report also carries the residual with the multiplier
/// exp(−πi tr(HᵀAHS)) alone under `even_lattice_*`.
pub fn verify_translate(
    frame: &ConeFrame,
    ch: &Characteristics,
    s: &RatMatrix,
    z: &SiegelPoint,
    opts: &ThetaOptions,
    kernel: &Kernel,
    tol: &Tolerances,
) -> Result<TransformReport, VerifyError> {
    let n = frame.genus();
    if s.shape() != (n, n) || !s.is_symmetric() || !s.is_integral() {
        return Err(VerifyError::InvalidTranslation(n));
    }
    let shifted = z.translate(&s.to_f64())?;
    let lhs = theta_g(frame, ch, &shifted, opts, kernel)?;
    let tilde = ch.translated(s);
    let base = theta_g(frame, &tilde, z, opts, kernel)?;
    let (quad, diag) = translation_exponents(frame.space().gram(), &ch.h, s);
    let multiplier = exp_pi_i(&-(quad.clone() + diag.clone()));
    let even_multiplier = exp_pi_i(&-quad.clone());
    let budget = 2.0 * (lhs.tail_bound + base.tail_bound + lhs.kernel_error + base.kernel_error);
    let mut report = TransformReport::new(Law::Translate, lhs.value, multiplier * base.value, tol.translate + budget);
    report.branch_note = "no branch choice involved".into();
    let even_err = (lhs.value - even_multiplier * base.value).norm();
    report.details.insert("multiplier".into(), cjson(multiplier));
    report.details.insert("exponent_quadratic".into(), Value::from(format_rat(&quad)));
    report.details.insert("exponent_diagonal".into(), Value::from(format_rat(&diag)));
    report.details.insert("even_lattice_multiplier".into(), cjson(even_multiplier));
    report.details.insert("even_lattice_abs_err".into(), Value::from(even_err));
    report.details.insert("even_lattice_pass".into(), Value::from(even_err < report.tolerance));
    report.details.insert("lhs_theta".into(), theta_json(&lhs));
    report.details.insert("rhs_theta".into(), theta_json(&base));
    echo_frame(frame, &mut report.inputs);
    echo_chars(ch, &mut report.inputs);
    echo_point(z, &mut report.inputs);
    report.inputs.insert("S".into(), rat_matrix_json(s));
    Ok(report)
}

/// det Z^{e} continued along Z(t) = (1 − t)·iI + t·Z from arg det(iI) = nπ/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuedPower {
    pub value: Complex64,
    /// Continued argument of det Z.
    pub arg: f64,
    /// The argument swept more than π from its start, or a step could not be
    /// resolved.
    pub ambiguous: bool,
}

pub fn det_power_continued(z: &SiegelPoint, exponent: f64) -> ContinuedPower {
    let n = z.genus();
    let target = z.z();
    let start = DMatrix::<Complex64>::from_diagonal_element(n, n, Complex64::i());
    let det_at = |t: f64| (&start * Complex64::from(1.0 - t) + &target * Complex64::from(t)).determinant();
    let mut arg = n as f64 * PI / 2.0;
    let mut prev = det_at(0.0);
    let mut t = 0.0;
    let mut step: f64 = 1.0 / 64.0;
    let mut ambiguous = false;
    while t < 1.0 {
        let next_t = (t + step).min(1.0);
        let next = det_at(next_t);
        let delta = (next / prev).arg();
        if delta.abs() > PI / 8.0 {
            if step > 1e-9 {
                step /= 2.0;
                continue;
            }
            ambiguous = true;
        }
        arg += delta;
        prev = next;
        t = next_t;
        if delta.abs() < PI / 64.0 {
            step = (step * 2.0).min(1.0 / 16.0);
        }
    }
    let det = prev;
    // the segment stays in the upper half-space, so det Z(t) never vanishes;
    // a sweep of more than π means Z is far from iI and the branch is suspect
    if (arg - n as f64 * PI / 2.0).abs() > PI {
        ambiguous = true;
    }
    let value = Complex64::from_polar(det.norm().powf(exponent), arg * exponent);
    ContinuedPower { value, arg, ambiguous }
}

/// θ_{H,K}(−Z⁻¹) against
/// i^{−mn/2}·e^{iπn/2}·|det A|^{−n/2}·det Z^{m/2}·e^{2πi tr(HᵀAK)}·Σ_J θ_{J+K,−H}(Z).
pub fn verify_invert(
    frame: &ConeFrame,
    ch: &Characteristics,
    z: &SiegelPoint,
    opts: &ThetaOptions,
    kernel: &Kernel,
    tol: &Tolerances,
) -> Result<TransformReport, VerifyError> {
    let (m, n) = (frame.dim(), frame.genus());
    let inverted = z.neg_inverse()?;
    let lhs = theta_g(frame, ch, &inverted, opts, kernel)?;
    let reps = cosets(frame.space(), n);
    let minus_h = ch.h.neg();
    let mut sum = Complex64::zero();
    let mut budget = 2.0 * (lhs.tail_bound + lhs.kernel_error);
    let mut per_coset = Vec::with_capacity(reps.len());
    for j in &reps.representatives {
        let shifted = Characteristics::new(j.add(&ch.k), minus_h.clone())?;
        let t = theta_g(frame, &shifted, z, opts, kernel)?;
        sum += t.value;
        budget += 2.0 * (t.tail_bound + t.kernel_error);
        per_coset.push(cjson(t.value));
    }
    let abs_det = frame.space().abs_det().to_f64().expect("det fits f64");
    let power = det_power_continued(z, m as f64 / 2.0);
    let hak = ch.h.transpose().mul(frame.space().gram()).mul(&ch.k).trace();
    let mn = (m * n) as f64;
    let multiplier = Complex64::from_polar(1.0, -PI * mn / 4.0)
        * Complex64::from_polar(1.0, PI * n as f64 / 2.0)
        * abs_det.powf(-(n as f64) / 2.0)
        * power.value
        * exp_pi_i(&(hak * Rat::from_integer(2.into())));
    let rhs = multiplier * sum;
    // budgets on the coset side are scaled by the multiplier's modulus
    let budget = budget * multiplier.norm().max(1.0);
    let mut report = TransformReport::new(Law::Invert, lhs.value, rhs, tol.invert_phase + budget);
    let modulus_err = (lhs.value.norm() - rhs.norm()).abs();
    let modulus_pass = modulus_err < tol.invert_modulus + budget;
    report.pass = report.pass && modulus_pass;
    report.branch_ambiguity = power.ambiguous;
    report.branch_note = format!(
        "det Z^(m/2) continued from det(iI)^(m/2) = exp(i*pi*m*n/4) along the segment from iI; arg det Z = {:.12}; \
         (-1)^(n/2) taken as exp(i*pi*n/2)",
        power.arg
    );
    report.details.insert("multiplier".into(), cjson(multiplier));
    report.details.insert("det_z_power".into(), cjson(power.value));
    report.details.insert("coset_count".into(), Value::from(reps.len()));
    report.details.insert("coset_values".into(), Value::from(per_coset));
    report.details.insert("modulus_abs_err".into(), Value::from(modulus_err));
    report.details.insert("modulus_tolerance".into(), Value::from(tol.invert_modulus + budget));
    report.details.insert("modulus_pass".into(), Value::from(modulus_pass));
    report.details.insert("lhs_theta".into(), theta_json(&lhs));
    echo_frame(frame, &mut report.inputs);
    echo_chars(ch, &mut report.inputs);
    echo_point(z, &mut report.inputs);
    Ok(report)
}

/// g at U·√y for a scalar y, through the chosen kernel.
pub fn g_scaled(frame: &ConeFrame, chart: &SimplexChart, u: &DMatrix<f64>, y: f64, kernel: &Kernel) -> Result<(f64, f64), VerifyError> {
    let v = u * y.sqrt();
    match kernel {
        Kernel::ClosedForm => Ok((g_n1(frame, v.as_slice())?, 0.0)),
        Kernel::Cubature { rule, config } => {
            let r = g_value_with(chart, &v, rule, config)?;
            Ok((r.value, r.error_estimate))
        }
    }
}

/// |g(U√y) − f(U)| along `y_grid`; with one vanishing x_i the target f(U)
/// is ±1/2.
pub fn verify_limit(
    frame: &ConeFrame,
    u: &RatMatrix,
    y_grid: &[f64],
    kernel: &Kernel,
    tol: &Tolerances,
) -> Result<TransformReport, VerifyError> {
    let identity = DMatrix::identity(frame.genus(), frame.genus());
    verify_limit_along(frame, u, &identity, y_grid, kernel, tol)
}

/// As [`verify_limit`] with Y = y·Y₀ for a positive definite direction Y₀.
/// f(UY₀^{1/2}) = f(U) because det Y₀^{1/2} > 0, so the target is unchanged.
pub fn verify_limit_along(
    frame: &ConeFrame,
    u: &RatMatrix,
    direction: &DMatrix<f64>,
    y_grid: &[f64],
    kernel: &Kernel,
    tol: &Tolerances,
) -> Result<TransformReport, VerifyError> {
    if y_grid.is_empty() || y_grid.iter().any(|&y| !(y > 0.0) || !y.is_finite()) {
        return Err(VerifyError::InvalidGrid);
    }
    let dir = SiegelPoint::new(DMatrix::zeros(direction.nrows(), direction.ncols()), direction.clone())?;
    if dir.genus() != frame.genus() {
        return Err(ThetaError::DimensionMismatch(format!("direction is {}x{0}, frame has genus {}", dir.genus(), frame.genus())).into());
    }
    let xd = frame.x_data(u)?;
    let zeros = xd.x.iter().filter(|x| x.is_zero()).count();
    let target = frame.f_value(u)?;
    let target_f = target.as_f64();
    let chart = SimplexChart::new(frame)?;
    let uf = u.to_f64() * dir.y_half();
    let mut series = Vec::with_capacity(y_grid.len());
    let mut last = (0.0, 0.0);
    let mut gaps = Vec::new();
    for &y in y_grid {
        let (g, err) = g_scaled(frame, &chart, &uf, y, kernel)?;
        let gap = (g - target_f).abs();
        series.push(json!({"y": y, "g": g, "gap": gap, "kernel_error": err}));
        gaps.push((y, gap));
        last = (g, err);
    }
    let decay = if gaps.len() >= 2 {
        let (y0, g0) = gaps[gaps.len() - 2];
        let (y1, g1) = gaps[gaps.len() - 1];
        if g0 > 0.0 && g1 > 0.0 {
            Value::from((g1.ln() - g0.ln()) / (y1 - y0))
        } else {
            Value::Null
        }
    } else {
        Value::Null
    };
    let mut report =
        TransformReport::new(Law::Limit, Complex64::from(last.0), Complex64::from(target_f), tol.limit + last.1);
    report.branch_note = match zeros {
        0 => "generic: all x_i nonzero".into(),
        1 => "facet: one x_i vanishes, target f(U) = +-1/2".into(),
        _ => "lower-dimensional face: several x_i vanish, the limit is a solid angle and f(U) is only a reference".into(),
    };
    report.details.insert("series".into(), Value::from(series));
    report.details.insert("decay_rate".into(), decay);
    report.details.insert("zero_count".into(), Value::from(zeros));
    report.details.insert("f".into(), Value::from(format_rat(&target.value)));
    echo_frame(frame, &mut report.inputs);
    report.inputs.insert("U".into(), rat_matrix_json(u));
    report.inputs.insert("y_grid".into(), Value::from(y_grid.to_vec()));
    report.inputs.insert("Y_direction".into(), float_matrix_json(direction));
    Ok(report)
}
