#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use hmmlab::hmm::EdgeEmittingHmm;
use hmmlab::io::read_model;
use hmmlab::Topology;
use nalgebra::DMatrix;
use proptest::prelude::*;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load(name: &str) -> EdgeEmittingHmm {
    read_model(&data(name)).unwrap().to_edge()
}

/// Edge-emitting model from an edge mask and raw positive weights.
/// `None` when a state has no outgoing edge or a symbol is unused.
pub fn build(n: usize, m: usize, mask: &[bool], weights: &[f64]) -> Option<EdgeEmittingHmm> {
    let mut matrices = vec![DMatrix::zeros(n, n); m];
    for i in 0..n {
        let idx: Vec<usize> = (0..n * m).map(|k| i * n * m + k).filter(|&k| mask[k]).collect();
        let total: f64 = idx.iter().map(|&k| weights[k]).sum();
        if idx.is_empty() {
            return None;
        }
        for k in idx {
            let (j, x) = ((k % (n * m)) / m, k % m);
            matrices[x][(i, j)] = weights[k] / total;
        }
    }
    let top = Topology::indexed(n, m, []).unwrap();
    EdgeEmittingHmm::new(top.states().to_vec(), top.alphabet().to_vec(), matrices).ok()
}

pub fn topology(n: usize, m: usize, mask: &[bool]) -> Topology {
    let edges = (0..n * n * m).filter(|&k| mask[k]).map(|k| (k / (n * m), (k % (n * m)) / m, k % m));
    Topology::indexed(n, m, edges).unwrap()
}

/// Models with `n` states in `states` and `m` symbols in `symbols`, any topology.
pub fn models(states: std::ops::RangeInclusive<usize>, symbols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = EdgeEmittingHmm> {
    (states, symbols)
        .prop_flat_map(|(n, m)| {
            let k = n * n * m;
            (Just(n), Just(m), prop::collection::vec(prop::bool::weighted(0.6), k), prop::collection::vec(0.05f64..1.0, k))
        })
        .prop_filter_map("dead state or unused symbol", |(n, m, mask, w)| build(n, m, &mask, &w))
}

pub fn irreducible_models(states: std::ops::RangeInclusive<usize>, symbols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = EdgeEmittingHmm> {
    models(states, symbols).prop_filter("reducible", |m| m.support_graph().irreducible())
}

pub fn topologies(states: std::ops::RangeInclusive<usize>, symbols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Topology> {
    (states, symbols).prop_flat_map(|(n, m)| {
        prop::collection::vec(any::<bool>(), n * n * m).prop_map(move |mask| topology(n, m, &mask))
    })
}

/// Probability vectors of length `len`.
pub fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("zero vector", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
    })
}

/// Every word of length `t` over `m` symbols, lexicographic.
pub fn all_words(m: usize, t: usize) -> Vec<Vec<usize>> {
    let mut words = vec![Vec::new()];
    for _ in 0..t {
        words = words
            .into_iter()
            .flat_map(|w| {
                (0..m).map(move |x| {
                    let mut v = w.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    words
}
