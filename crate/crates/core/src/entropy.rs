//! Exact block entropies and the entropy-rate sandwich.
//!
//! Every quantity here is computed by enumerating the process language
//! `L_t(M)` as a depth-first tree of words, pruning words of probability
//! zero. Each tree node carries the matrix `T^(w_1) ... T^(w_t)`, whose row
//! `i` is the unnormalized forward vector from start state `i`.
//!
//! For a conditioning length `t` the table stores
//!
//! * `lower = L(t) = H(X_t | X_0^{t-1}, S_0)`, averaged over `S_0 ~ pi`,
//! * `upper = h(t+1) = H(X_t | X_0^{t-1})`,
//!
//! and the entropy rate always lies in `[lower, upper]`.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{EdgeEmittingHmm, Word};

/// Default cap on the number of enumerated tree nodes.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// One word of `L_t(M)` with its stationary probability and forward rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WordRecord {
    pub word: Word,
    pub probability: f64,
    /// Row `i` is `e_i T^(w_1) ... T^(w_t)`.
    pub forward: DMatrix<f64>,
}

/// Visits every node of the pruned word tree up to depth `max_depth` in
/// lexicographic depth-first order. The callback sees the word, its
/// stationary probability and its forward matrix. The empty word is
/// visited first. Returns the number of nodes below the root.
pub fn walk_words<F>(model: &EdgeEmittingHmm, pi: &[f64], max_depth: usize, cap: usize, mut visit: F) -> Result<usize>
where
    F: FnMut(&[usize], f64, &DMatrix<f64>),
{
    let n = model.num_states();
    let m = model.num_symbols();
    let mut nodes = 0usize;
    let mut word: Word = Vec::new();
    let identity = DMatrix::<f64>::identity(n, n);
    visit(&word, 1.0, &identity);
    // stack of (depth, symbol, forward matrix of the word ending in symbol)
    let mut stack: Vec<(usize, usize, DMatrix<f64>)> = Vec::new();
    let push_children = |stack: &mut Vec<(usize, usize, DMatrix<f64>)>, depth: usize, forward: &DMatrix<f64>| {
        for x in (0..m).rev() {
            let next = forward * model.matrix(x);
            if next.iter().any(|&p| p != 0.0) {
                stack.push((depth + 1, x, next));
            }
        }
    };
    if max_depth > 0 {
        push_children(&mut stack, 0, &identity);
    }
    while let Some((depth, x, forward)) = stack.pop() {
        nodes += 1;
        if nodes > cap {
            return Err(Error::Budget { cap });
        }
        word.truncate(depth - 1);
        word.push(x);
        let probability = stationary_mass(pi, &forward);
        visit(&word, probability, &forward);
        if depth < max_depth {
            push_children(&mut stack, depth, &forward);
        }
    }
    Ok(nodes)
}

/// All words of `L_t(M)` in lexicographic order.
pub fn enumerate_words(model: &EdgeEmittingHmm, t: usize, cap: usize) -> Result<Vec<WordRecord>> {
    let pi = model.stationary_distribution()?;
    let mut out = Vec::new();
    walk_words(model, pi.weights(), t, cap, |word, probability, forward| {
        if word.len() == t {
            out.push(WordRecord { word: word.to_vec(), probability, forward: forward.clone() });
        }
    })?;
    Ok(out)
}

fn stationary_mass(pi: &[f64], forward: &DMatrix<f64>) -> f64 {
    let n = forward.nrows();
    let mut total = 0.0;
    for i in 0..n {
        if pi[i] != 0.0 {
            total += pi[i] * forward.row(i).sum();
        }
    }
    total
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.log2()).sum::<f64>()
}

/// `total * H(u / total)` for an unnormalized vector `u` with sum `total`.
fn scaled_entropy(u: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    -u.iter().filter(|&&q| q > 0.0).map(|&q| q * (q / total).log2()).sum::<f64>()
}

/// Sum by recursive halving; fixes the rounding pattern for a given order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len if len <= 8 => values.iter().sum(),
        len => {
            let (a, b) = values.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub t: usize,
    /// `H(X_1^t)` in bits.
    pub block_entropy: f64,
    /// `h(t) = H(X_1^t) - H(X_1^{t-1})`.
    pub h: f64,
    /// `L(t)`.
    pub lower: f64,
    /// `h(t+1)`, computed from the length-`t` predictive distributions.
    pub upper: f64,
    /// `h(t+1) - L(t)`.
    pub gap: f64,
    pub word_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTable {
    pub rows: Vec<EntropyRow>,
}

impl EntropyTable {
    pub fn row(&self, t: usize) -> Option<&EntropyRow> {
        self.rows.iter().find(|r| r.t == t)
    }

    /// `h(t)` for `1 <= t <= t_max + 1`.
    pub fn h(&self, t: usize) -> Option<f64> {
        match self.row(t) {
            Some(r) => Some(r.h),
            None => self.row(t.checked_sub(1)?).map(|r| r.upper),
        }
    }

    /// `[L(t), h(t+1)]`, which contains the entropy rate.
    pub fn interval(&self, t: usize) -> Option<(f64, f64)> {
        self.row(t).map(|r| (r.lower, r.upper))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,block_entropy,h,lower,gap,word_count\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.t, r.block_entropy, r.h, r.lower, r.gap, r.word_count));
        }
        out
    }
}

/// Entropy table for `t = 1..=t_max`.
pub fn h_estimates(model: &EdgeEmittingHmm, t_max: usize, cap: usize) -> Result<EntropyTable> {
    let pi = model.stationary_distribution()?;
    let pi = pi.weights();
    let n = model.num_states();
    let emission = model.emission_rows();
    let levels = t_max + 1;
    let mut block = vec![Vec::new(); levels];
    let mut lower = vec![Vec::new(); levels];
    let mut upper = vec![Vec::new(); levels];
    let mut u = vec![0.0; model.num_symbols()];
    walk_words(model, pi, t_max, cap, |word, p, forward| {
        let d = word.len();
        if p > 0.0 {
            block[d].push(-p * p.log2());
        }
        // L: each start state on its own
        let mut l = 0.0;
        for i in 0..n {
            let pi_i = pi[i];
            if pi_i == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|v| *v = 0.0);
            let mut mass = 0.0;
            for j in 0..n {
                let f = forward[(i, j)];
                if f != 0.0 {
                    mass += f;
                    for (v, e) in u.iter_mut().zip(&emission[j]) {
                        *v += f * e;
                    }
                }
            }
            l += pi_i * scaled_entropy(&u, mass);
        }
        lower[d].push(l);
        // h(t+1): the stationary belief
        u.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            let a: f64 = (0..n).map(|i| pi[i] * forward[(i, j)]).sum();
            if a != 0.0 {
                for (v, e) in u.iter_mut().zip(&emission[j]) {
                    *v += a * e;
                }
            }
        }
        upper[d].push(scaled_entropy(&u, p));
    })?;

    let mut rows = Vec::with_capacity(t_max);
    let mut previous = 0.0;
    for t in 1..=t_max {
        let block_entropy = pairwise_sum(&block[t]);
        let (lo, up) = (pairwise_sum(&lower[t]), pairwise_sum(&upper[t]));
        rows.push(EntropyRow {
            t,
            block_entropy,
            h: block_entropy - previous,
            lower: lo,
            upper: up,
            gap: up - lo,
            word_count: lower[t].len(),
        });
        previous = block_entropy;
    }
    Ok(EntropyTable { rows })
}

/// `[L(t), h(t+1)]`.
pub fn entropy_interval(model: &EdgeEmittingHmm, t: usize, cap: usize) -> Result<(f64, f64)> {
    let table = h_estimates(model, t, cap)?;
    Ok(table.interval(t).expect("row t was computed"))
}

/// Closed-form entropy rate `sum_i pi_i H(P_i(X_0))` of a unifilar model.
pub fn unifilar_exact_entropy(model: &EdgeEmittingHmm) -> Result<f64> {
    let top = model.support_graph();
    for i in 0..model.num_states() {
        for x in 0..model.num_symbols() {
            if top.successors(i, x).len() > 1 {
                return Err(Error::NotUnifilar {
                    state: model.states()[i].clone(),
                    symbol: model.alphabet()[x].clone(),
                });
            }
        }
    }
    let pi = model.stationary_distribution()?;
    Ok(model
        .emission_rows()
        .iter()
        .zip(pi.weights())
        .map(|(row, p)| p * entropy_bits(row))
        .sum())
}

/// Empirical decay rate of `gap(t)` over `window`: `2^slope` of the
/// least-squares line through `(t, log2 gap(t))`. A zero gap gives rate 0.
pub fn fit_convergence_rate(table: &EntropyTable, window: RangeInclusive<usize>) -> Result<f64> {
    let points: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| window.contains(&r.t))
        .map(|r| (r.t as f64, r.gap))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    if points.iter().any(|&(_, g)| g <= 0.0) {
        return Ok(0.0);
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, g)| (t, g.log2())).collect();
    Ok(2f64.powf(least_squares_slope(&logs)))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
