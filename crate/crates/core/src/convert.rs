//! Conversions between state-emitting and edge-emitting presentations.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hmm::{join_symbols, vec_mat, EdgeEmittingHmm, Model, StateEmittingHmm};

/// Pass threshold for [`check_output_equivalence`].
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;

/// `T'^(x)_ij = T_ij * O_jx`.
pub fn state_to_edge(model: &StateEmittingHmm) -> EdgeEmittingHmm {
    let n = model.num_states();
    let (t, o) = (model.transition(), model.observation());
    let matrices = (0..model.num_symbols())
        .map(|x| DMatrix::from_fn(n, n, |i, j| t[(i, j)] * o[(j, x)]))
        .collect();
    EdgeEmittingHmm::new(model.states().to_vec(), model.alphabet().to_vec(), matrices)
        .expect("a valid state-emitting model converts to a valid edge-emitting one")
}

/// Functional state-emitting model over the pairs `(i, x)` with `P_i(x) > 0`.
pub fn edge_to_state(model: &EdgeEmittingHmm) -> StateEmittingHmm {
    let emission = model.emission_rows();
    let pairs: Vec<(usize, usize)> = (0..model.num_states())
        .flat_map(|i| (0..model.num_symbols()).map(move |x| (i, x)))
        .filter(|&(i, x)| emission[i][x] > 0.0)
        .collect();
    let k = pairs.len();
    let transition = DMatrix::from_fn(k, k, |a, b| {
        let ((i, x), (j, y)) = (pairs[a], pairs[b]);
        model.matrix(x)[(i, j)] / emission[i][x] * emission[j][y]
    });
    let observation = DMatrix::from_fn(k, model.num_symbols(), |a, y| if pairs[a].1 == y { 1.0 } else { 0.0 });
    let states = pairs
        .iter()
        .map(|&(i, x)| format!("({},{})", model.states()[i], model.alphabet()[x]))
        .collect();
    StateEmittingHmm::new(states, model.alphabet().to_vec(), transition, observation)
        .expect("conversion preserves stochasticity")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub max_len: usize,
    pub max_discrepancy: f64,
    /// Word attaining the maximum discrepancy.
    pub worst_word: Option<String>,
    /// First word, by length then lexicographically, whose probabilities differ beyond tolerance.
    pub distinguishing_word: Option<String>,
    pub pass: bool,
}

/// Largest gap between stationary word probabilities of two models over all
/// words of length at most `max_len`. Symbols are matched by name.
pub fn check_output_equivalence(left: &Model, right: &Model, max_len: usize) -> Result<EquivalenceReport> {
    let (l, r) = (left.to_edge(), right.to_edge());
    let (pl, pr) = (l.stationary_distribution()?, r.stationary_distribution()?);
    let mut symbols: Vec<String> = l.alphabet().to_vec();
    symbols.extend(r.alphabet().iter().filter(|s| !l.alphabet().contains(s)).cloned());
    let lookup = |m: &EdgeEmittingHmm| -> Vec<Option<usize>> {
        symbols.iter().map(|s| m.alphabet().iter().position(|a| a == s)).collect()
    };
    let (map_l, map_r) = (lookup(&l), lookup(&r));
    let step = |m: &EdgeEmittingHmm, map: &[Option<usize>], v: &[f64], x: usize| match map[x] {
        Some(y) => vec_mat(v, m.matrix(y)),
        None => vec![0.0; v.len()],
    };

    let mut report = EquivalenceReport {
        max_len,
        max_discrepancy: 0.0,
        worst_word: None,
        distinguishing_word: None,
        pass: true,
    };
    // breadth-first so the distinguishing word is the shortest, lexicographically least one
    let mut level: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = vec![(Vec::new(), pl.weights().to_vec(), pr.weights().to_vec())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (word, vl, vr) in &level {
            for x in 0..symbols.len() {
                let (al, ar) = (step(&l, &map_l, vl, x), step(&r, &map_r, vr, x));
                let (ql, qr): (f64, f64) = (al.iter().sum(), ar.iter().sum());
                if ql == 0.0 && qr == 0.0 {
                    continue;
                }
                let mut w = word.clone();
                w.push(x);
                let diff = (ql - qr).abs();
                let name = || join_symbols(&symbols, &w);
                if diff > report.max_discrepancy {
                    report.max_discrepancy = diff;
                    report.worst_word = Some(name());
                }
                if diff > EQUIVALENCE_TOLERANCE && report.distinguishing_word.is_none() {
                    report.distinguishing_word = Some(name());
                }
                next.push((w, al, ar));
            }
        }
        level = next;
    }
    report.pass = report.max_discrepancy <= EQUIVALENCE_TOLERANCE;
    Ok(report)
}

/// Checks `delta_i(w)` of `model` against `delta'_i(w)` of `state_to_edge(model)`
/// for every state and every word of length at most `max_len`.
pub fn check_delta_equivalence(model: &StateEmittingHmm, max_len: usize) -> bool {
    let converted = state_to_edge(model).support_graph();
    let m = model.num_symbols();
    (0..model.num_states()).all(|i| {
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        while let Some(word) = stack.pop() {
            let direct = model.delta(i, &word);
            let via_edge: BTreeSet<usize> = converted.delta(i, &word);
            if direct != via_edge {
                return false;
            }
            if word.len() < max_len && !direct.is_empty() {
                for x in (0..m).rev() {
                    let mut w = word.clone();
                    w.push(x);
                    stack.push(w);
                }
            }
        }
        true
    })
}
