//! Grundmann–Möller rules on the unit simplex T_n and a deterministic
//! globally adaptive integrator built on dyadic (Freudenthal) subdivision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::summation::KahanSum;

/// A symmetric rule on T_n = {t ≥ 0, Σt ≤ 1}; weights sum to one, so the
/// integral is `volume · Σ w f(t)`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    pub degree: usize,
    /// Nodes in t-coordinates (barycentric weight of vertex 0 is 1 − Σt).
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// All compositions of `total` into `parts` non-negative integers, in
/// lexicographic order.
fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(parts - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl SimplexRule {
    /// Grundmann–Möller rule of odd degree `2s + 1` on T_n.
    pub fn grundmann_moller(dim: usize, degree: usize) -> Option<Self> {
        if dim == 0 || degree % 2 == 0 || degree > 31 {
            return None;
        }
        let s = (degree - 1) / 2;
        let d = degree as f64;
        let n = dim as f64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 0..=s {
            let denom = d + n - 2.0 * i as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * 2f64.powi(-2 * s as i32) * denom.powi(degree as i32)
                / (factorial(i) * factorial(degree + dim - i))
                * factorial(dim);
            for beta in compositions(dim + 1, s - i) {
                let bary: Vec<f64> = beta.iter().map(|&b| (2.0 * b as f64 + 1.0) / denom).collect();
                nodes.push(bary[1..].to_vec());
                weights.push(w);
            }
        }
        Some(Self { dim, degree, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule on the simplex with the given n+1 vertices.
    pub fn apply(&self, simplex: &Simplex, f: &mut impl FnMut(&[f64]) -> f64) -> f64 {
        let n = self.dim;
        let mut acc = KahanSum::default();
        let mut x = vec![0.0; n];
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            for k in 0..n {
                let mut v = simplex.vertices[0][k];
                for (i, ti) in node.iter().enumerate() {
                    v += ti * (simplex.vertices[i + 1][k] - simplex.vertices[0][k]);
                }
                x[k] = v;
            }
            acc.add(w * f(&x));
        }
        acc.total() * simplex.volume
    }
}

/// A simplex in ℝ^n given by n+1 vertices, with its (unsigned) volume.
#[derive(Debug, Clone)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub volume: f64,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Self {
        let n = vertices.len() - 1;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - vertices[0][i]);
        let volume = m.determinant().abs() / factorial(n);
        Self { vertices, volume }
    }

    /// The reference simplex T_n.
    pub fn unit(n: usize) -> Self {
        let mut vertices = vec![vec![0.0; n]];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            vertices.push(e);
        }
        Self { vertices, volume: 1.0 / factorial(n) }
    }

    fn map(&self, t: &[f64]) -> Vec<f64> {
        let n = t.len();
        (0..n)
            .map(|k| {
                self.vertices[0][k]
                    + t.iter().enumerate().map(|(i, ti)| ti * (self.vertices[i + 1][k] - self.vertices[0][k])).sum::<f64>()
            })
            .collect()
    }

    /// Splits into k^n congruent children via the pattern of [`reference_subdivision`].
    pub fn subdivide(&self, pattern: &[Vec<Vec<f64>>]) -> Vec<Simplex> {
        let child_volume = self.volume / pattern.len() as f64;
        pattern
            .iter()
            .map(|verts| Simplex { vertices: verts.iter().map(|t| self.map(t)).collect(), volume: child_volume })
            .collect()
    }
}

/// Vertex sets (in t-coordinates of T_n) of the uniform subdivision of T_n into
/// k^n simplices.
///
/// T_n is the image of the Kuhn simplex {1 ≥ y_1 ≥ … ≥ y_n ≥ 0} under
/// t_i = y_i − y_{i+1}; the Freudenthal triangulation of the k-grid restricted
/// to k·K gives the children.
pub fn reference_subdivision(n: usize, k: usize) -> Vec<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let perms = permutations(n);
    let mut corner = vec![0usize; n];
    loop {
        for perm in &perms {
            let mut verts: Vec<Vec<usize>> = Vec::with_capacity(n + 1);
            let mut p = corner.clone();
            verts.push(p.clone());
            for &axis in perm {
                p[axis] += 1;
                verts.push(p.clone());
            }
            // barycenter strictly inside k·K
            let bary: Vec<f64> =
                (0..n).map(|i| verts.iter().map(|v| v[i] as f64).sum::<f64>() / (n + 1) as f64).collect();
            let inside = bary[0] < k as f64
                && bary[n - 1] > 0.0
                && bary.windows(2).all(|w| w[0] > w[1]);
            if inside {
                out.push(
                    verts
                        .iter()
                        .map(|y| {
                            (0..n)
                                .map(|i| {
                                    let next = if i + 1 < n { y[i + 1] } else { 0 };
                                    (y[i] as f64 - next as f64) / k as f64
                                })
                                .collect()
                        })
                        .collect(),
                );
            }
        }
        // advance the corner odometer
        let mut i = 0;
        while i < n {
            corner[i] += 1;
            if corner[i] < k {
                break;
            }
            corner[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOutcome {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
    pub converged: bool,
}

struct Region {
    simplex: Simplex,
    value: f64,
    error: f64,
    seq: u64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Deterministic globally adaptive cubature over `initial` simplices.
///
/// Each region carries the rule applied to its 2^n dyadic children as value
/// and the difference to the rule on the region itself as error; the region
/// with the largest error is split until the summed error drops below `tol`
/// or the evaluation budget runs out.
pub fn integrate_adaptive(
    rule: &SimplexRule,
    initial: Vec<Simplex>,
    mut f: impl FnMut(&[f64]) -> f64,
    tol: f64,
    max_evals: u64,
) -> AdaptiveOutcome {
    let n = rule.dim;
    let halves = reference_subdivision(n, 2);
    let per_region = (rule.len() * (1 + halves.len())) as u64;
    let mut evals = 0u64;
    let mut seq = 0u64;
    let estimate = |s: Simplex, f: &mut dyn FnMut(&[f64]) -> f64, seq: &mut u64| {
        let coarse = rule.apply(&s, &mut |x| f(x));
        let mut fine = KahanSum::default();
        for child in s.subdivide(&halves) {
            fine.add(rule.apply(&child, &mut |x| f(x)));
        }
        let value = fine.total();
        *seq += 1;
        Region { simplex: s, value, error: (value - coarse).abs(), seq: *seq }
    };
    let mut heap = BinaryHeap::new();
    for s in initial {
        heap.push(estimate(s, &mut f, &mut seq));
        evals += per_region;
    }
    let total_error = |heap: &BinaryHeap<Region>| {
        let mut e = KahanSum::default();
        for r in heap.iter() {
            e.add(r.error);
        }
        e.total()
    };
    let mut err = total_error(&heap);
    let mut converged = err <= tol;
    while !converged && evals + per_region * halves.len() as u64 <= max_evals {
        let Some(worst) = heap.pop() else { break };
        err -= worst.error;
        for child in worst.simplex.subdivide(&halves) {
            let r = estimate(child, &mut f, &mut seq);
            err += r.error;
            heap.push(r);
            evals += per_region;
        }
        if err <= tol {
            // refresh the running total to shed accumulated rounding
            err = total_error(&heap);
            converged = err <= tol;
        }
    }
    // sum in creation order so the result does not depend on heap layout
    let mut regions: Vec<Region> = heap.into_vec();
    regions.sort_by_key(|r| r.seq);
    let mut value = KahanSum::default();
    let mut error = KahanSum::default();
    for r in &regions {
        value.add(r.value);
        error.add(r.error);
    }
    AdaptiveOutcome { value: value.total(), error: error.total(), evaluations: evals, converged }
}
