//! The kernel g: a signed Gaussian integral over the curved simplex X_n,
//! evaluated by pulling back to T_n through the chart
//! c(t) = c_0 + Σ t_i (c_i − c_0).

pub mod cubature;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::cone::ConeFrame;
use crate::exact::{Rat, RatMatrix};
use crate::quadspace::SplitData;
use crate::summation::KahanSum;
use cubature::{integrate_adaptive, reference_subdivision, Simplex, SimplexRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("closed form requires genus 1, frame has genus {0}")]
    WrongGenus(usize),
    #[error("chart leaves the negative cone: Q(c(t)) = {0}")]
    ChartDegenerate(f64),
    #[error("cubature rule `{0}` is unavailable")]
    RuleUnavailable(String),
    #[error("integrand is not finite")]
    NonFinite,
    #[error("cubature budget of {0} evaluations exceeded (error estimate {1:e})")]
    CubatureBudgetExceeded(u64, f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// E(x) = 2∫₀ˣ exp(−πv²) dv = erf(√π x).
///
/// The error function comes from `libm` (the musl/FreeBSD implementation).
pub fn erf_like(x: f64) -> f64 {
    libm::erf(std::f64::consts::PI.sqrt() * x)
}

/// Closed form of g at genus one:
/// ½[E(B(c₁,u)/√(−Q(c₁))) − E(B(c₀,u)/√(−Q(c₀)))].
pub fn g_n1(frame: &ConeFrame, u: &[f64]) -> Result<f64, SimplexError> {
    g_n1_weighted(frame, u, 0.0)
}

/// g_n1(u)·e^{log_weight}, with the weight folded into the Gaussian tails so that
/// a huge weight times a vanishing kernel stays finite.
pub fn g_n1_weighted(frame: &ConeFrame, u: &[f64], log_weight: f64) -> Result<f64, SimplexError> {
    if frame.genus() != 1 {
        return Err(SimplexError::WrongGenus(frame.genus()));
    }
    if u.len() != frame.dim() {
        return Err(SimplexError::DimensionMismatch { expected: frame.dim(), got: u.len() });
    }
    let space = frame.space();
    let arg = |i: usize| {
        let c = crate::quadspace::rat_vec_f64(&frame.vector(i));
        space.b_f64(&c, u) / (-space.q_f64(&c)).sqrt()
    };
    let (a, b) = (arg(1), arg(0));
    let s = std::f64::consts::PI.sqrt();
    // erfc(s·x)·e^{w} = erfcx(s·x)·e^{w − πx²}
    let tail = |x: f64| erfcx(s * x) * (log_weight - std::f64::consts::PI * x * x).exp();
    let value = if a > 0.0 && b > 0.0 {
        0.5 * (tail(b) - tail(a))
    } else if a < 0.0 && b < 0.0 {
        0.5 * (tail(-a) - tail(-b))
    } else {
        0.5 * (erf_like(a) - erf_like(b)) * log_weight.exp()
    };
    if !value.is_finite() {
        return Err(SimplexError::NonFinite);
    }
    Ok(value)
}

/// Scaled complementary error function e^{x²}·erfc(x) for x ≥ 0.
fn erfcx(x: f64) -> f64 {
    if x < 10.0 {
        return libm::erfc(x) * (x * x).exp();
    }
    // asymptotic series; at x ≥ 10 twelve terms are exact to rounding
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
    }
    sum / (x * std::f64::consts::PI.sqrt())
}

/// Cubature rule descriptor: `gm:<degree>` or `mc:<samples>:<seed>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    GrundmannMoller { degree: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

impl Default for Rule {
    fn default() -> Self {
        Rule::GrundmannMoller { degree: 7 }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::GrundmannMoller { degree } => write!(f, "gm:{degree}"),
            Rule::MonteCarlo { samples, seed } => write!(f, "mc:{samples}:{seed}"),
        }
    }
}

impl FromStr for Rule {
    type Err = SimplexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimplexError::RuleUnavailable(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["gm", d] => {
                let degree: usize = d.parse().map_err(|_| bad())?;
                if degree % 2 == 0 || degree > 31 {
                    return Err(bad());
                }
                Ok(Rule::GrundmannMoller { degree })
            }
            ["mc", n, seed] => {
                let samples: u64 = n.parse().map_err(|_| bad())?;
                let seed: u64 = seed.parse().map_err(|_| bad())?;
                if samples == 0 {
                    return Err(bad());
                }
                Ok(Rule::MonteCarlo { samples, seed })
            }
            _ => Err(bad()),
        }
    }
}

/// Tolerances for the adaptive Grundmann–Möller path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureConfig {
    /// Target for the summed a-posteriori error.
    pub tol: f64,
    pub max_evals: u64,
    /// Initial subdivision resolves features of this size in v-space.
    pub feature_width: f64,
    /// Upper bound on the number of initial pieces.
    pub max_initial_pieces: usize,
}

impl Default for CubatureConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_evals: 20_000_000, feature_width: 0.5, max_initial_pieces: 1 << 16 }
    }
}

impl CubatureConfig {
    /// Loosest target handed out by [`CubatureConfig::relaxed`].
    pub const LOOSEST_TOL: f64 = 1e-3;

    /// Copy aimed at `tol` (clamped to [self.tol, LOOSEST_TOL]); the initial
    /// grid coarsens by one feature width per decade gained.
    pub fn relaxed(&self, tol: f64) -> Self {
        let tol = if tol.is_nan() { self.tol } else { tol.clamp(self.tol, Self::LOOSEST_TOL.max(self.tol)) };
        let decades = (tol / self.tol).log10().max(0.0);
        Self { tol, feature_width: self.feature_width * (1.0 + decades), ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GResult {
    pub value: f64,
    pub error_estimate: f64,
    pub rule_used: String,
    pub evaluations: u64,
}

/// Floating copy of the frame data needed to evaluate the pullback.
#[derive(Debug, Clone)]
pub struct SimplexChart {
    m: usize,
    n: usize,
    a: DMatrix<f64>,
    /// m × (n+1)
    c: DMatrix<f64>,
    /// B(c_i, c_j)
    gram: DMatrix<f64>,
}

impl SimplexChart {
    pub fn new(frame: &ConeFrame) -> Result<Self, SimplexError> {
        let a = frame.space().gram_f64();
        let c = frame.columns().to_f64();
        let gram = c.transpose() * &a * &c;
        let chart = Self { m: frame.dim(), n: frame.genus(), a, c, gram };
        // Q(c(t)) is a quadratic form in barycentric weights with all Gram
        // entries negative on valid frames; check the vertices regardless.
        for i in 0..=chart.n {
            let q = 0.5 * chart.gram[(i, i)];
            if q >= 0.0 {
                return Err(SimplexError::ChartDegenerate(q));
            }
        }
        Ok(chart)
    }

    pub fn genus(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// The integrand data for a fixed U (m × n).
    pub fn integrand(&self, u: &DMatrix<f64>) -> Result<ChartIntegrand<'_>, SimplexError> {
        if u.shape() != (self.m, self.n) {
            return Err(SimplexError::DimensionMismatch { expected: self.m * self.n, got: u.len() });
        }
        let w = u.transpose() * &self.a * &self.c;
        Ok(ChartIntegrand { chart: self, w, log_weight: 0.0 })
    }

    /// v(t) = UᵀAc(t)/√(−Q(c(t))) and the Jacobian determinant of t ↦ v.
    pub fn v_map(&self, u: &DMatrix<f64>, t: &[f64]) -> Result<(Vec<f64>, f64), SimplexError> {
        if t.len() != self.n {
            return Err(SimplexError::DimensionMismatch { expected: self.n, got: t.len() });
        }
        self.integrand(u)?.v_and_jac(t)
    }

    /// Images 𝒙_i/√(−Q(c_i)) of the vertices of T_n.
    pub fn vertex_images(&self, u: &DMatrix<f64>) -> Result<Vec<Vec<f64>>, SimplexError> {
        let ig = self.integrand(u)?;
        Ok((0..=self.n)
            .map(|i| {
                let s = (-0.5 * self.gram[(i, i)]).sqrt();
                (0..self.n).map(|j| ig.w[(j, i)] / s).collect()
            })
            .collect())
    }
}

pub struct ChartIntegrand<'a> {
    chart: &'a SimplexChart,
    /// W = UᵀAC, n × (n+1): column i holds B(c_i, u_j).
    w: DMatrix<f64>,
    /// Added to the exponent of every integrand value.
    log_weight: f64,
}

impl ChartIntegrand<'_> {
    fn barycentric(&self, t: &[f64]) -> Vec<f64> {
        let mut lam = Vec::with_capacity(self.chart.n + 1);
        lam.push(1.0 - t.iter().sum::<f64>());
        lam.extend_from_slice(t);
        lam
    }

    pub fn v_and_jac(&self, t: &[f64]) -> Result<(Vec<f64>, f64), SimplexError> {
        let n = self.chart.n;
        let lam = self.barycentric(t);
        let g = &self.chart.gram;
        // B(c, c_i) for the current c
        let gl: Vec<f64> = (0..=n).map(|i| (0..=n).map(|k| g[(i, k)] * lam[k]).sum()).collect();
        let q: f64 = 0.5 * lam.iter().zip(&gl).map(|(a, b)| a * b).sum::<f64>();
        if !(q < 0.0) {
            return Err(SimplexError::ChartDegenerate(q));
        }
        let neg_q = -q;
        let s = neg_q.sqrt();
        // B(c, u_j)
        let bcu: Vec<f64> = (0..n).map(|j| (0..=n).map(|i| self.w[(j, i)] * lam[i]).sum()).collect();
        let v: Vec<f64> = bcu.iter().map(|b| b / s).collect();
        // ∂v_j/∂t_l = B(u_j^⊥, c_l − c_0)/√(−Q(c))
        let two_q = 2.0 * q;
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let ratio = bcu[j] / two_q;
            for l in 0..n {
                let b_u_dc = self.w[(j, l + 1)] - self.w[(j, 0)];
                let b_c_dc = gl[l + 1] - gl[0];
                jm[(j, l)] = b_u_dc - ratio * b_c_dc;
            }
        }
        let jac = jm.determinant() / neg_q.powf(n as f64 / 2.0);
        Ok((v, jac))
    }

    /// Upper bound for |∫ exp(w − π|v|²)·jac| from the distance of the image to the origin,
    /// assuming t ↦ v(t) does not fold over itself.
    pub fn tail_bound(&self) -> f64 {
        let n = self.chart.n;
        let g = &self.chart.gram;
        // −Q(c(λ)) = ½Σλ_iλ_j(−G_ij) ≤ ½max(−G_ij) on the simplex
        let max_d = (0..=n).flat_map(|i| (0..=n).map(move |j| -0.5 * g[(i, j)])).fold(0.0, f64::max);
        let x = std::f64::consts::PI * hull_distance_sq(&self.w) / max_d * (1.0 - 1e-9);
        // P(|N|² ≥ x) for the density e^{−π|v|²} in ℝⁿ, rounded up to an even dimension
        let (mut term, mut series) = (1.0, 1.0);
        for k in 1..n.div_ceil(2) {
            term *= x / k as f64;
            series += term;
        }
        (self.log_weight - x).exp() * series
    }

    /// exp(w − π|v(t)|²)·jac(t) for the log-weight w.
    pub fn eval(&self, t: &[f64]) -> f64 {
        match self.v_and_jac(t) {
            Ok((v, jac)) => {
                let r2: f64 = v.iter().map(|x| x * x).sum();
                (self.log_weight - std::f64::consts::PI * r2).exp() * jac
            }
            Err(_) => f64::NAN,
        }
    }
}

/// [`ChartIntegrand::tail_bound`] for U with the weight e^{log_weight}.
pub fn weighted_tail_bound(chart: &SimplexChart, u: &DMatrix<f64>, log_weight: f64) -> Result<f64, SimplexError> {
    let mut integrand = chart.integrand(u)?;
    integrand.log_weight = log_weight;
    Ok(integrand.tail_bound())
}

/// Squared distance from the origin to the convex hull of the columns of `w`.
fn hull_distance_sq(w: &DMatrix<f64>) -> f64 {
    let k = w.ncols();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s = idx.len();
        // minimise |Σλ_i w_i|² on Σλ_i = 1: [2WᵀW 1; 1ᵀ 0]
        let mut sys = DMatrix::<f64>::zeros(s + 1, s + 1);
        let mut rhs = DVector::<f64>::zeros(s + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sys[(a, b)] = 2.0 * w.column(i).dot(&w.column(j));
            }
            sys[(a, s)] = 1.0;
            sys[(s, a)] = 1.0;
        }
        rhs[s] = 1.0;
        let Some(sol) = sys.lu().solve(&rhs) else { continue };
        if sol.rows(0, s).iter().any(|&l| !(l >= -1e-12)) {
            continue;
        }
        let p = idx.iter().enumerate().fold(DVector::<f64>::zeros(w.nrows()), |acc, (a, &i)| acc + w.column(i) * sol[a]);
        best = best.min(p.norm_squared());
    }
    best
}

/// g(U) = ∫_{T_n} exp(−π|v(t)|²) jac(t) dt.
pub fn g_value(chart: &SimplexChart, u: &DMatrix<f64>, rule: &Rule) -> Result<GResult, SimplexError> {
    g_value_with(chart, u, rule, &CubatureConfig::default())
}

pub fn g_value_with(
    chart: &SimplexChart,
    u: &DMatrix<f64>,
    rule: &Rule,
    config: &CubatureConfig,
) -> Result<GResult, SimplexError> {
    g_value_weighted(chart, u, rule, config, 0.0)
}

/// g(U)·e^{log_weight} and its error estimate on the same scale; `config.tol` is absolute on that scale.
pub fn g_value_weighted(
    chart: &SimplexChart,
    u: &DMatrix<f64>,
    rule: &Rule,
    config: &CubatureConfig,
    log_weight: f64,
) -> Result<GResult, SimplexError> {
    let mut integrand = chart.integrand(u)?;
    integrand.log_weight = log_weight;
    let n = chart.n;
    if u.iter().all(|&x| x == 0.0) {
        return Ok(GResult { value: 0.0, error_estimate: 0.0, rule_used: rule.to_string(), evaluations: 0 });
    }
    let out = match *rule {
        Rule::GrundmannMoller { degree } => {
            let gm = SimplexRule::grundmann_moller(n, degree)
                .ok_or_else(|| SimplexError::RuleUnavailable(rule.to_string()))?;
            let bound = integrand.tail_bound();
            if bound <= config.tol {
                return Ok(GResult { value: 0.0, error_estimate: bound, rule_used: rule.to_string(), evaluations: 0 });
            }
            let k = initial_resolution(chart, u, config)?;
            let pieces = Simplex::unit(n).subdivide(&reference_subdivision(n, k));
            let res = integrate_adaptive(&gm, pieces, |t| integrand.eval(t), config.tol, config.max_evals);
            if !res.value.is_finite() {
                return Err(SimplexError::NonFinite);
            }
            if !res.converged {
                return Err(SimplexError::CubatureBudgetExceeded(res.evaluations, res.error));
            }
            GResult { value: res.value, error_estimate: res.error, rule_used: rule.to_string(), evaluations: res.evaluations }
        }
        Rule::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut sum = KahanSum::default();
            let mut sum_sq = KahanSum::default();
            let mut t = vec![0.0; n];
            for _ in 0..samples {
                uniform_on_simplex(&mut rng, &mut t);
                let y = integrand.eval(&t);
                sum.add(y);
                sum_sq.add(y * y);
            }
            let nf = samples as f64;
            let mean = sum.total() / nf;
            let var = (sum_sq.total() / nf - mean * mean).max(0.0);
            let vol = Simplex::unit(n).volume;
            if !mean.is_finite() {
                return Err(SimplexError::NonFinite);
            }
            GResult {
                value: mean * vol,
                error_estimate: (var / nf).sqrt() * vol,
                rule_used: rule.to_string(),
                evaluations: samples,
            }
        }
    };
    Ok(out)
}

/// Uniform subdivision level k so each initial piece spans about
/// `feature_width` in v-space, capped by `max_initial_pieces`.
fn initial_resolution(chart: &SimplexChart, u: &DMatrix<f64>, config: &CubatureConfig) -> Result<usize, SimplexError> {
    let n = chart.n;
    let verts = chart.vertex_images(u)?;
    let mut spread: f64 = 0.0;
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            let d: f64 = verts[i].iter().zip(&verts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            spread = spread.max(d);
        }
    }
    let want = (spread / config.feature_width).ceil().max(1.0) as usize;
    let cap = (config.max_initial_pieces as f64).powf(1.0 / n as f64).floor().max(1.0) as usize;
    Ok(want.min(cap))
}

fn uniform_on_simplex(rng: &mut impl Rng, t: &mut [f64]) {
    // normalised exponential spacings are Dirichlet(1, …, 1)
    let e0: f64 = Exp1.sample(rng);
    let mut total = e0;
    for x in t.iter_mut() {
        *x = Exp1.sample(rng);
        total += *x;
    }
    for x in t.iter_mut() {
        *x /= total;
    }
}

/// Maximal minors det((AU^⊥)_k) indexed by strictly increasing 0-based row
/// multi-indices k of length n. Empty when n > m.
pub fn wedge_coeffs(split: &SplitData, a: &RatMatrix, u: &RatMatrix) -> BTreeMap<Vec<usize>, Rat> {
    let (perp, _) = split.project(u).expect("U must have m rows");
    let au = a.mul(&perp);
    let m = au.nrows();
    let n = au.ncols();
    let mut out = BTreeMap::new();
    for k in increasing_indices(m, n) {
        let det = au.select_rows(&k).det();
        out.insert(k, det);
    }
    out
}

/// All strictly increasing index tuples of length n drawn from 0..m.
pub fn increasing_indices(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n <= m {
        rec(0, m, n, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Signed Gaussian measure ∫ exp(−π|v|²) dv of the affine simplex with the
/// given n+1 vertices in ℝ^n; the sign is the orientation of
/// (p_1 − p_0, …, p_n − p_0). Seeded Monte Carlo.
pub fn gaussian_affine_simplex(vertices: &[Vec<f64>], samples: u64, seed: u64) -> MonteCarloEstimate {
    let n = vertices.len() - 1;
    let edges = DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - vertices[0][i]);
    let det = edges.determinant();
    if det == 0.0 || samples == 0 {
        return MonteCarloEstimate { value: 0.0, std_error: 0.0 };
    }
    let lu = edges.lu();
    let normal = Normal::new(0.0, (0.5 / std::f64::consts::PI).sqrt()).expect("valid deviation");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p0 = DVector::from_column_slice(&vertices[0]);
    let mut hits = 0u64;
    let mut x = DVector::<f64>::zeros(n);
    for _ in 0..samples {
        for k in 0..n {
            x[k] = normal.sample(&mut rng);
        }
        let rhs = &x - &p0;
        if let Some(lam) = lu.solve(&rhs) {
            if lam.iter().all(|&l| l >= 0.0) && lam.sum() <= 1.0 {
                hits += 1;
            }
        }
    }
    let p = hits as f64 / samples as f64;
    let sign = det.signum();
    MonteCarloEstimate { value: sign * p, std_error: (p * (1.0 - p) / samples as f64).sqrt() }
}
