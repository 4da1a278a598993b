//! Exact rational evaluation of the convergence constants.

use hmmlab::bounds::BoundConstants;
use num_rational::Ratio;

use super::data;

pub type Q = Ratio<i64>;

pub struct ExactConstants {
    pub pi: Vec<Q>,
    pub flags: Vec<usize>,
    pub p_star: Q,
    pub q_star: Q,
    pub r_star: Q,
    pub eta: Q,
    /// `alpha_1 = exp(alpha1_exponent)`.
    pub alpha1_exponent: Q,
    /// `alpha_2 = alpha2_base ^ eta`.
    pub alpha2_base: Q,
}

pub fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

impl ExactConstants {
    /// Largest deviation of `c` from the exact values.
    pub fn mismatch(&self, c: &BoundConstants) -> f64 {
        let alpha1 = to_f64(self.alpha1_exponent).exp();
        let alpha2 = to_f64(self.alpha2_base).powf(to_f64(self.eta));
        [
            (c.p_star, to_f64(self.p_star)),
            (c.q_star, to_f64(self.q_star)),
            (c.r_star, to_f64(self.r_star)),
            (c.eta, to_f64(self.eta)),
            (c.alpha1, alpha1),
            (c.alpha2, alpha2),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
    }
}

/// Matrices of a model file as exact rationals, one per symbol.
pub fn exact_matrices(name: &str) -> Vec<Vec<Vec<Q>>> {
    let text = std::fs::read_to_string(data(name)).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let parse = |v: &serde_json::Value| -> Q {
        match v {
            serde_json::Value::String(s) => s.parse().unwrap(),
            serde_json::Value::Number(n) => Q::from_integer(n.as_i64().expect("integer or fraction string")),
            _ => panic!("bad entry {v}"),
        }
    };
    doc["alphabet"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| {
            doc["matrices"][x.as_str().unwrap()]
                .as_array()
                .unwrap()
                .iter()
                .map(|row| row.as_array().unwrap().iter().map(parse).collect())
                .collect()
        })
        .collect()
}

/// Stationary vector by Gauss-Jordan on `T^T - I` with its last row set to ones.
pub fn exact_pi(t: &[Vec<Q>]) -> Vec<Q> {
    let n = t.len();
    let (zero, one) = (Q::from_integer(0), Q::from_integer(1));
    let mut a: Vec<Vec<Q>> = (0..n)
        .map(|r| {
            let mut row: Vec<Q> = (0..n).map(|c| t[c][r] - if r == c { one } else { zero }).collect();
            row.push(zero);
            row
        })
        .collect();
    a[n - 1] = vec![one; n + 1];
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != zero).unwrap();
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Constants with the lexicographically least flag of each state.
pub fn exact_constants(name: &str) -> ExactConstants {
    let mats = exact_matrices(name);
    let n = mats[0].len();
    let zero = Q::from_integer(0);
    let t: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| mats.iter().map(|m| m[i][j]).sum()).collect()).collect();
    let pi = exact_pi(&t);
    let emits = |i: usize, x: usize| -> Q { mats[x][i].iter().copied().sum() };
    let flags: Vec<usize> = (0..n)
        .map(|k| {
            (0..mats.len())
                .find(|&x| {
                    let gens: Vec<usize> = (0..n).filter(|&i| emits(i, x) != zero).collect();
                    !gens.is_empty() && gens.iter().all(|&i| mats[x][i][k] != zero)
                })
                .expect("flag-state model")
        })
        .collect();
    let p_star = flags
        .iter()
        .enumerate()
        .map(|(j, &y)| (0..n).map(|i| pi[i] * mats[y][i][j]).sum::<Q>() / pi[j])
        .min()
        .unwrap();
    let q_star = flags
        .iter()
        .enumerate()
        .flat_map(|(j, &y)| {
            let mats = &mats;
            (0..n).filter(move |&i| emits(i, y) != zero).map(move |i| mats[y][i][j] / emits(i, y))
        })
        .min()
        .unwrap();
    let r_star = *pi.iter().min().unwrap() / *pi.iter().max().unwrap();
    let size = Q::from_integer(n as i64);
    let two = Q::from_integer(2);
    let eta = p_star * r_star / (two * size);
    let alpha1_exponent = -(p_star * r_star) * (p_star * r_star) / (two * size * size);
    let alpha2_base = Q::from_integer(1) - q_star * q_star;
    ExactConstants { pi, flags, p_star, q_star, r_star, eta, alpha1_exponent, alpha2_base }
}
