//! Core model types and forward computations.
//!
//! An [`EdgeEmittingHmm`] stores one `|S| x |S|` matrix per symbol, entry
//! `(i, j)` of matrix `x` being the probability of moving from `i` to `j`
//! while emitting `x`. A [`StateEmittingHmm`] stores a transition matrix and
//! an observation matrix. Structural questions never look at probability
//! values, only at which entries are exactly zero (see [`Topology`]).

use std::collections::{BTreeSet, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;
use crate::{DISTRIBUTION_TOLERANCE, INPUT_TOLERANCE};

/// A word as a sequence of symbol indices.
pub type Word = Vec<usize>;

/// Probability vector over states or symbols, or the all-zero null distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::NegativeEntry { location: "distribution".into(), value: w });
        }
        let total: f64 = weights.iter().sum();
        if total != 0.0 && (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::BadReference(format!("distribution sums to {total}")));
        }
        Ok(Self(weights))
    }

    /// Normalizes `weights`; a zero vector becomes the null distribution.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        } else {
            weights.iter_mut().for_each(|w| *w = 0.0);
        }
        Self(weights)
    }

    pub fn point(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn null(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn is_null(&self) -> bool {
        self.0.iter().all(|&w| w == 0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices with positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i).collect()
    }
}

/// Edge-emitting HMM `(S, X, {T^(x)})`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEmittingHmm {
    states: Vec<String>,
    alphabet: Vec<String>,
    matrices: Vec<DMatrix<f64>>,
}

impl EdgeEmittingHmm {
    /// Validates and builds a model; `matrices[x]` belongs to `alphabet[x]`.
    pub fn new(states: Vec<String>, alphabet: Vec<String>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        check_unique("state", &states)?;
        check_unique("symbol", &alphabet)?;
        let n = states.len();
        if n == 0 {
            return Err(Error::BadReference("model has no states".into()));
        }
        if matrices.len() != alphabet.len() {
            return Err(Error::BadReference(format!(
                "{} matrices for {} symbols",
                matrices.len(),
                alphabet.len()
            )));
        }
        for (x, m) in matrices.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::BadReference(format!(
                    "matrix for {:?} is {}x{}, expected {n}x{n}",
                    alphabet[x],
                    m.nrows(),
                    m.ncols()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    let location = || format!("T^({})[{},{}]", alphabet[x], states[i], states[j]);
                    check_entry(m[(i, j)], location)?;
                }
            }
        }
        for i in 0..n {
            let sum: f64 = matrices.iter().map(|m| m.row(i).sum()).sum();
            if (sum - 1.0).abs() > INPUT_TOLERANCE {
                return Err(Error::NonStochasticRow { state: states[i].clone(), sum });
            }
        }
        for (x, m) in matrices.iter().enumerate() {
            if m.iter().all(|&p| p == 0.0) {
                return Err(Error::UnusedSymbol(alphabet[x].clone()));
            }
        }
        Ok(Self { states, alphabet, matrices })
    }

    /// Builds from nested rows: `rows[x][i][j]`.
    pub fn from_rows(states: &[&str], alphabet: &[&str], rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = states.len();
        let matrices = rows
            .iter()
            .map(|m| {
                if m.len() != n || m.iter().any(|r| r.len() != n) {
                    return Err(Error::BadReference("ragged matrix".into()));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| m[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            states.iter().map(|s| s.to_string()).collect(),
            alphabet.iter().map(|s| s.to_string()).collect(),
            matrices,
        )
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn matrix(&self, symbol: usize) -> &DMatrix<f64> {
        &self.matrices[symbol]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn symbol_index(&self, name: &str) -> Result<usize> {
        self.alphabet.iter().position(|s| s == name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::BadReference(format!("unknown state {name:?}")))
    }

    /// Reads a word: one character per symbol when every symbol is a single
    /// character, otherwise whitespace-separated symbol names.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        if self.alphabet.iter().all(|s| s.chars().count() == 1) {
            text.chars().filter(|c| !c.is_whitespace()).map(|c| self.symbol_index(&c.to_string())).collect()
        } else {
            text.split_whitespace().map(|s| self.symbol_index(s)).collect()
        }
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        join_symbols(&self.alphabet, word)
    }

    /// `T = sum_x T^(x)`.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.num_states();
        self.matrices.iter().fold(DMatrix::zeros(n, n), |acc, m| acc + m)
    }

    /// `emission[i][x] = P_i(X_0 = x)`, the row sums of each `T^(x)`.
    pub fn emission_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|i| self.matrices.iter().map(|m| m.row(i).sum()).collect())
            .collect()
    }

    /// Labeled edges at the strictly positive entries.
    pub fn support_graph(&self) -> Topology {
        let n = self.num_states();
        let edges = self.matrices.iter().enumerate().flat_map(|(x, m)| {
            (0..n).flat_map(move |i| (0..n).filter(move |&j| m[(i, j)] > 0.0).map(move |j| (i, j, x)))
        });
        Topology::new(self.states.clone(), self.alphabet.clone(), edges.collect::<Vec<_>>())
            .expect("indices come from the model")
    }

    /// Solves `pi (T - I) = 0`, `sum(pi) = 1` by LU decomposition.
    pub fn stationary_distribution(&self) -> Result<Distribution> {
        if !self.support_graph().irreducible() {
            return Err(Error::NotIrreducible);
        }
        let n = self.num_states();
        let t = self.transition_matrix();
        let mut a = t.transpose() - DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or(Error::NotIrreducible)?;
        let mut w: Vec<f64> = pi.iter().map(|&p| p.max(0.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= total);
        Ok(Distribution(w))
    }

    /// Row vector `init * T^(w_1) ... T^(w_n)`.
    pub fn forward(&self, init: &[f64], word: &[usize]) -> Vec<f64> {
        let mut v = init.to_vec();
        for &x in word {
            v = vec_mat(&v, &self.matrices[x]);
        }
        v
    }

    /// `P_init(w)`; the empty word has probability 1.
    pub fn word_probability(&self, init: &Distribution, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        self.forward(init.weights(), word).iter().sum()
    }

    /// Belief over the current state after observing `word` from `init`.
    pub fn phi(&self, init: &Distribution, word: &[usize]) -> Distribution {
        Distribution::from_unnormalized(self.forward(init.weights(), word))
    }

    /// `P_belief(X_0 = x)` for each symbol.
    pub fn next_symbol_distribution(&self, belief: &Distribution) -> Result<Distribution> {
        if belief.is_null() {
            return Err(Error::NullBelief);
        }
        let emission = self.emission_rows();
        let mut out = vec![0.0; self.num_symbols()];
        for (i, &b) in belief.weights().iter().enumerate() {
            for (o, e) in out.iter_mut().zip(&emission[i]) {
                *o += b * e;
            }
        }
        Ok(Distribution(out))
    }

    pub fn delta(&self, state: usize, word: &[usize]) -> BTreeSet<usize> {
        self.support_graph().delta(state, word)
    }
}

/// State-emitting HMM `(S, X, T, O)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEmittingHmm {
    states: Vec<String>,
    alphabet: Vec<String>,
    transition: DMatrix<f64>,
    observation: DMatrix<f64>,
}

impl StateEmittingHmm {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        transition: DMatrix<f64>,
        observation: DMatrix<f64>,
    ) -> Result<Self> {
        check_unique("state", &states)?;
        check_unique("symbol", &alphabet)?;
        let (n, m) = (states.len(), alphabet.len());
        if n == 0 {
            return Err(Error::BadReference("model has no states".into()));
        }
        if transition.shape() != (n, n) {
            return Err(Error::BadReference(format!("transition matrix must be {n}x{n}")));
        }
        if observation.shape() != (n, m) {
            return Err(Error::BadReference(format!("observation matrix must be {n}x{m}")));
        }
        for i in 0..n {
            for j in 0..n {
                check_entry(transition[(i, j)], || format!("T[{},{}]", states[i], states[j]))?;
            }
            for x in 0..m {
                check_entry(observation[(i, x)], || format!("O[{},{}]", states[i], alphabet[x]))?;
            }
        }
        for i in 0..n {
            for sum in [transition.row(i).sum(), observation.row(i).sum()] {
                if (sum - 1.0).abs() > INPUT_TOLERANCE {
                    return Err(Error::NonStochasticRow { state: states[i].clone(), sum });
                }
            }
        }
        // a symbol counts as emitted only if some state emitting it can be entered
        let entered: Vec<bool> = (0..n).map(|j| (0..n).any(|i| transition[(i, j)] > 0.0)).collect();
        for x in 0..m {
            if !(0..n).any(|j| entered[j] && observation[(j, x)] > 0.0) {
                return Err(Error::UnusedSymbol(alphabet[x].clone()));
            }
        }
        Ok(Self { states, alphabet, transition, observation })
    }

    pub fn from_rows(states: &[&str], alphabet: &[&str], transition: &[Vec<f64>], observation: &[Vec<f64>]) -> Result<Self> {
        let (n, m) = (states.len(), alphabet.len());
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::BadReference("ragged transition matrix".into()));
        }
        if observation.len() != n || observation.iter().any(|r| r.len() != m) {
            return Err(Error::BadReference("ragged observation matrix".into()));
        }
        Self::new(
            states.iter().map(|s| s.to_string()).collect(),
            alphabet.iter().map(|s| s.to_string()).collect(),
            DMatrix::from_fn(n, n, |i, j| transition[i][j]),
            DMatrix::from_fn(n, m, |i, x| observation[i][x]),
        )
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn observation(&self) -> &DMatrix<f64> {
        &self.observation
    }

    /// Edge `(i, j, x)` iff `T_ij > 0` and `O_jx > 0`.
    pub fn support_graph(&self) -> Topology {
        let (n, m) = (self.num_states(), self.num_symbols());
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.transition[(i, j)] > 0.0 {
                    edges.extend((0..m).filter(|&x| self.observation[(j, x)] > 0.0).map(|x| (i, j, x)));
                }
            }
        }
        Topology::new(self.states.clone(), self.alphabet.clone(), edges).expect("indices come from the model")
    }

    /// `delta_i(w) = { j : P_i(X_1^|w| = w, S_|w| = j) > 0 }`, evaluated on
    /// `T` and `O` directly.
    pub fn delta(&self, state: usize, word: &[usize]) -> BTreeSet<usize> {
        let n = self.num_states();
        let mut set = vec![false; n];
        set[state] = true;
        for &x in word {
            let mut next = vec![false; n];
            for i in (0..n).filter(|&i| set[i]) {
                for j in 0..n {
                    if self.transition[(i, j)] > 0.0 && self.observation[(j, x)] > 0.0 {
                        next[j] = true;
                    }
                }
            }
            set = next;
        }
        crate::topology::to_set(&set)
    }
}

/// A validated model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Edge(EdgeEmittingHmm),
    State(StateEmittingHmm),
}

impl Model {
    /// The edge-emitting presentation (identity for edge models).
    pub fn to_edge(&self) -> EdgeEmittingHmm {
        match self {
            Model::Edge(m) => m.clone(),
            Model::State(m) => crate::convert::state_to_edge(m),
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Model::Edge(m) => m.states(),
            Model::State(m) => m.states(),
        }
    }

    pub fn alphabet(&self) -> &[String] {
        match self {
            Model::Edge(m) => m.alphabet(),
            Model::State(m) => m.alphabet(),
        }
    }

    pub fn support_graph(&self) -> Topology {
        match self {
            Model::Edge(m) => m.support_graph(),
            Model::State(m) => m.support_graph(),
        }
    }

    pub fn stationary_distribution(&self) -> Result<Distribution> {
        self.to_edge().stationary_distribution()
    }

    /// Stationary word probability (state-emitting models via the edge conversion).
    pub fn word_probability(&self, init: &Distribution, word: &[usize]) -> f64 {
        match self {
            Model::Edge(m) => m.word_probability(init, word),
            Model::State(m) => crate::convert::state_to_edge(m).word_probability(init, word),
        }
    }
}

/// Concatenates symbol names, separating with spaces unless all are single characters.
pub fn join_symbols(alphabet: &[String], word: &[usize]) -> String {
    let single = alphabet.iter().all(|s| s.chars().count() == 1);
    let parts: Vec<&str> = word.iter().map(|&x| alphabet[x].as_str()).collect();
    if single {
        parts.concat()
    } else {
        parts.join(" ")
    }
}

pub(crate) fn vec_mat(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.ncols();
    let mut out = vec![0.0; n];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += vi * m[(i, j)];
        }
    }
    out
}

fn check_entry(value: f64, location: impl Fn() -> String) -> Result<()> {
    if value.is_nan() || value < 0.0 {
        return Err(Error::NegativeEntry { location: location(), value });
    }
    if value > 1.0 + INPUT_TOLERANCE {
        return Err(Error::EntryAboveOne { location: location(), value });
    }
    Ok(())
}

fn check_unique(kind: &str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::BadReference(format!("duplicate {kind} {id:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn ex1() -> EdgeEmittingHmm {
        let (t, s) = (1.0 / 3.0, 1.0 / 6.0);
        EdgeEmittingHmm::from_rows(
            &["1", "2", "3"],
            &["a", "b", "c"],
            &[
                vec![vec![0.0, t, t], vec![0.0; 3], vec![0.0; 3]],
                vec![vec![t, 0.0, 0.0], vec![t, 0.0, t], vec![s, s, 0.0]],
                vec![vec![0.0; 3], vec![s, 0.0, s], vec![t, t, 0.0]],
            ],
        )
        .unwrap()
    }

    pub fn cycle2() -> EdgeEmittingHmm {
        EdgeEmittingHmm::from_rows(
            &["1", "2"],
            &["a", "b"],
            &[vec![vec![0.0, 1.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![1.0, 0.0]]],
        )
        .unwrap()
    }
}
