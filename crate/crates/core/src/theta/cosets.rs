//! Representatives of A⁻¹ℤ^{m×n} modulo ℤ^{m×n} from the Smith normal form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::exact::{format_rat, Rat, RatMatrix};
use crate::quadspace::QuadraticSpace;

/// P·A·Q = diag(d_1 | d_2 | …) with P, Q unimodular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub diag: Vec<i128>,
    pub left: Vec<Vec<i128>>,
    pub right: Vec<Vec<i128>>,
}

fn identity(m: usize) -> Vec<Vec<i128>> {
    (0..m).map(|i| (0..m).map(|j| i128::from(i == j)).collect()).collect()
}

pub fn smith_normal_form(a: &[Vec<i128>]) -> SmithForm {
    let m = a.len();
    let mut d = a.to_vec();
    let mut p = identity(m);
    let mut q = identity(m);
    for t in 0..m {
        loop {
            let pivot = (t..m)
                .flat_map(|i| (t..m).map(move |j| (i, j)))
                .filter(|&(i, j)| d[i][j] != 0)
                .min_by_key(|&(i, j)| (d[i][j].abs(), i, j));
            let Some((pi, pj)) = pivot else { break };
            d.swap(t, pi);
            p.swap(t, pi);
            for row in d.iter_mut() {
                row.swap(t, pj);
            }
            for row in q.iter_mut() {
                row.swap(t, pj);
            }
            let piv = d[t][t];
            let mut clean = true;
            for i in t + 1..m {
                let f = Integer::div_floor(&d[i][t], &piv);
                if f != 0 {
                    for k in 0..m {
                        d[i][k] -= f * d[t][k];
                        p[i][k] -= f * p[t][k];
                    }
                }
                clean &= d[i][t] == 0;
            }
            for j in t + 1..m {
                let f = Integer::div_floor(&d[t][j], &piv);
                if f != 0 {
                    for row in d.iter_mut() {
                        row[j] -= f * row[t];
                    }
                    for row in q.iter_mut() {
                        row[j] -= f * row[t];
                    }
                }
                clean &= d[t][j] == 0;
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..m).find(|&i| (t + 1..m).any(|j| d[i][j] % piv != 0));
            match offender {
                Some(i) => {
                    for k in 0..m {
                        d[t][k] += d[i][k];
                        p[t][k] += p[i][k];
                    }
                }
                None => break,
            }
        }
        if d[t][t] < 0 {
            for k in 0..m {
                d[t][k] = -d[t][k];
                p[t][k] = -p[t][k];
            }
        }
    }
    SmithForm { diag: (0..m).map(|i| d[i][i]).collect(), left: p, right: q }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosetSet {
    #[serde(serialize_with = "serialize_reps")]
    pub representatives: Vec<RatMatrix>,
}

fn serialize_reps<S: serde::Serializer>(reps: &[RatMatrix], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(reps.len()))?;
    for r in reps {
        let cols: Vec<Vec<String>> = r.columns().iter().map(|c| c.iter().map(format_rat).collect()).collect();
        seq.serialize_element(&cols)?;
    }
    seq.end()
}

impl CosetSet {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

fn frac(r: Rat) -> Rat {
    let fl = r.floor();
    r - fl
}

/// Representatives of A⁻¹ℤ^m / ℤ^m with entries in [0, 1).
pub fn vector_cosets(space: &QuadraticSpace) -> Vec<Vec<Rat>> {
    let m = space.dim();
    let a: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| space.gram_int()[i * m + j] as i128).collect()).collect();
    let snf = smith_normal_form(&a);
    // A⁻¹ℤ^m = Q·D⁻¹ℤ^m
    let mut reps = Vec::new();
    let mut e = vec![0i128; m];
    loop {
        let scaled: Vec<Rat> =
            (0..m).map(|k| Rat::new(BigInt::from(e[k]), BigInt::from(snf.diag[k]))).collect();
        let v: Vec<Rat> = (0..m)
            .map(|i| {
                let mut acc = Rat::zero();
                for (k, s) in scaled.iter().enumerate() {
                    acc += s * Rat::from_integer(BigInt::from(snf.right[i][k]));
                }
                frac(acc)
            })
            .collect();
        reps.push(v);
        let mut k = m;
        loop {
            if k == 0 {
                return reps;
            }
            k -= 1;
            if e[k] + 1 < snf.diag[k] {
                e[k] += 1;
                break;
            }
            e[k] = 0;
        }
    }
}

/// Representatives J of A⁻¹ℤ^{m×n} mod ℤ^{m×n}; |det A|^n of them.
pub fn cosets(space: &QuadraticSpace, n: usize) -> CosetSet {
    let m = space.dim();
    let cols = vector_cosets(space);
    let mut reps = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        reps.push(RatMatrix::from_fn(m, n, |i, j| cols[idx[j]][i].clone()));
        let mut k = n;
        loop {
            if k == 0 {
                return CosetSet { representatives: reps };
            }
            k -= 1;
            if idx[k] + 1 < cols.len() {
                idx[k] += 1;
                break;
            }
            idx[k] = 0;
        }
    }
}
