//! Lattice points of a shifted lattice H + ℤ^{m×n} inside the ellipsoid
//! tr(UᵀMUY) ≤ R.
//!
//! Each column is enumerated separately (Fincke–Pohst on M), the columns are
//! combined with a running lower bound λ_min(Y)·Σ u_jᵀMu_j, and every
//! candidate passes the exact trace test before it is emitted.

use nalgebra::DMatrix;

use super::ThetaError;

/// Offsets N (row-major, m×n) with U = H + N, and the value tr(UᵀMUY).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub offset: Vec<i64>,
    pub norm: f64,
}

/// Default ceiling on the projected number of lattice points.
pub const DEFAULT_POINT_CAP: u64 = 100_000_000;

/// tr(UᵀMUY).
pub fn trace_form(m_form: &DMatrix<f64>, y: &DMatrix<f64>, u: &DMatrix<f64>) -> f64 {
    let mu = m_form * u;
    let g = u.transpose() * mu;
    // tr(G·Y) with both symmetric
    g.component_mul(&y.transpose()).sum()
}

/// Shifted matrix U = H + N as floats.
pub fn shifted(h: &DMatrix<f64>, offset: &[i64]) -> DMatrix<f64> {
    let (m, n) = h.shape();
    DMatrix::from_fn(m, n, |i, j| h[(i, j)] + offset[i * n + j] as f64)
}

fn unit_ball_volume(d: usize) -> f64 {
    // V_d = π^{d/2} / Γ(d/2 + 1), via the recurrence V_d = 2π/d · V_{d−2}
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Projected number of points: ellipsoid volume plus one.
pub fn projected_count(m_form: &DMatrix<f64>, y: &DMatrix<f64>, radius: f64) -> f64 {
    let m = m_form.nrows();
    let n = y.nrows();
    let d = m * n;
    let det = m_form.determinant().powi(n as i32) * y.determinant().powi(m as i32);
    unit_ball_volume(d) * radius.max(0.0).powf(d as f64 / 2.0) / det.sqrt() + 1.0
}

fn min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    s.clone().symmetric_eigen().eigenvalues.min()
}

/// Integer vectors n with (h + n)ᵀM(h + n) ≤ bound, paired with that value.
fn column_points(upper: &DMatrix<f64>, h: &[f64], bound: f64, cap: u64) -> Result<Vec<(Vec<i64>, f64)>, ThetaError> {
    let m = h.len();
    let mut out = Vec::new();
    let mut x = vec![0.0; m];
    let mut nv = vec![0i64; m];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        upper: &DMatrix<f64>,
        h: &[f64],
        rem: f64,
        x: &mut [f64],
        nv: &mut [i64],
        out: &mut Vec<(Vec<i64>, f64)>,
        cap: u64,
        bound: f64,
    ) -> Result<(), ThetaError> {
        let m = h.len();
        let rii = upper[(i, i)];
        let s: f64 = (i + 1..m).map(|j| upper[(i, j)] * x[j]).sum();
        let width = rem.max(0.0).sqrt();
        let slack = 1e-9 * (1.0 + width + s.abs());
        let lo = ((-s - width) / rii - h[i] - slack).ceil() as i64;
        let hi = ((-s + width) / rii - h[i] + slack).floor() as i64;
        for k in lo..=hi {
            nv[i] = k;
            x[i] = h[i] + k as f64;
            let t = rii * x[i] + s;
            let left = rem - t * t;
            if left < -slack * (1.0 + rem.abs()) {
                continue;
            }
            if i == 0 {
                let q: f64 = (0..m)
                    .map(|r| {
                        let row: f64 = (r..m).map(|c| upper[(r, c)] * x[c]).sum();
                        row * row
                    })
                    .sum();
                out.push((nv.to_vec(), q));
                if out.len() as u64 > cap {
                    return Err(ThetaError::RadiusTooLarge { projected: out.len() as f64, cap });
                }
            } else {
                rec(i - 1, upper, h, left, x, nv, out, cap, bound)?;
            }
        }
        Ok(())
    }
    if m == 0 {
        return Ok(vec![(Vec::new(), 0.0)]);
    }
    rec(m - 1, upper, h, bound, &mut x, &mut nv, &mut out, cap, bound)?;
    Ok(out)
}

/// All U ∈ H + ℤ^{m×n} with tr(UᵀMUY) ≤ R, sorted lexicographically by offset.
pub fn enumerate(
    m_form: &DMatrix<f64>,
    y: &DMatrix<f64>,
    h: &DMatrix<f64>,
    radius: f64,
    cap: u64,
) -> Result<Vec<LatticePoint>, ThetaError> {
    let (m, n) = h.shape();
    if m_form.shape() != (m, m) || y.shape() != (n, n) {
        return Err(ThetaError::DimensionMismatch(format!(
            "M is {:?}, Y is {:?}, H is {:?}",
            m_form.shape(),
            y.shape(),
            h.shape()
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ThetaError::InvalidRadius(radius));
    }
    let projected = projected_count(m_form, y, radius);
    if projected > cap as f64 {
        return Err(ThetaError::RadiusTooLarge { projected, cap });
    }
    let chol = m_form.clone().cholesky().ok_or(ThetaError::NotPositiveDefinite("M"))?;
    let upper = chol.l().transpose();
    let lam = min_eigenvalue(y) * (1.0 - 1e-12);
    if !(lam > 0.0) {
        return Err(ThetaError::NotPositiveDefinite("Y"));
    }
    let col_bound = radius / lam * (1.0 + 1e-9);
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let hj: Vec<f64> = (0..m).map(|i| h[(i, j)]).collect();
        let mut pts = column_points(&upper, &hj, col_bound, cap)?;
        pts.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        columns.push(pts);
    }

    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    combine(0, 0.0, lam, radius, &columns, &mut choice, &mut |choice| {
        let mut offset = vec![0i64; m * n];
        for (j, &c) in choice.iter().enumerate() {
            for i in 0..m {
                offset[i * n + j] = columns[j][c].0[i];
            }
        }
        let u = shifted(h, &offset);
        let norm = trace_form(m_form, y, &u);
        if norm <= radius {
            out.push(LatticePoint { offset, norm });
            if out.len() as u64 > cap {
                return Err(ThetaError::RadiusTooLarge { projected: out.len() as f64, cap });
            }
        }
        Ok(())
    })?;
    out.sort_by(|a, b| a.offset.cmp(&b.offset));
    Ok(out)
}

fn combine(
    j: usize,
    partial: f64,
    lam: f64,
    radius: f64,
    columns: &[Vec<(Vec<i64>, f64)>],
    choice: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]) -> Result<(), ThetaError>,
) -> Result<(), ThetaError> {
    if j == columns.len() {
        return emit(choice);
    }
    for (idx, (_, q)) in columns[j].iter().enumerate() {
        let next = partial + lam * q;
        // columns are sorted by q, so the rest only grow
        if next > radius * (1.0 + 1e-9) {
            break;
        }
        choice[j] = idx;
        combine(j + 1, next, lam, radius, columns, choice, emit)?;
    }
    Ok(())
}
