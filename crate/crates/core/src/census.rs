//! Random topologies and a Monte Carlo census of path-mergeability.
//!
//! Sample `k` of a run with seed `s` is drawn from its own ChaCha8 stream
//! seeded with `s ^ k`, so samples are independent of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::EdgeEmittingHmm;
use crate::structure::is_path_mergeable;
use crate::topology::Topology;

pub const DEFAULT_SEED: u64 = 42;
/// Draws allowed per accepted sample before giving up.
pub const DEFAULT_REJECTION_FACTOR: u64 = 1000;
/// Decay constant of the typicality bound, `(3/4)^{1/4}`, about 0.931.
pub fn overlay_base() -> f64 {
    0.75f64.powf(0.25)
}

const CHUNK: u64 = 1024;

/// Rng of sample `k`.
pub fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ k)
}

/// Each of the `n * n * m` labeled edges present independently with probability 1/2.
pub fn random_topology<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Topology {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for x in 0..m {
                if rng.gen::<bool>() {
                    edges.push((i, j, x));
                }
            }
        }
    }
    Topology::indexed(n, m, edges).expect("indices in range")
}

/// Uniform(0,1] weights on the outgoing edges of each state, normalized.
///
/// Symbols that label no edge are dropped from the alphabet.
pub fn random_hmm<R: Rng + ?Sized>(top: &Topology, rng: &mut R) -> Result<EdgeEmittingHmm> {
    let n = top.num_states();
    if let Some(dead) = (0..n).find(|&i| top.out_degree(i) == 0) {
        return Err(Error::DeadState(dead));
    }
    let used: Vec<usize> = (0..top.num_symbols()).filter(|&x| top.edges().iter().any(|e| e.2 == x)).collect();
    let mut matrices = vec![nalgebra::DMatrix::zeros(n, n); used.len()];
    for i in 0..n {
        let out: Vec<_> = top.edges().iter().filter(|e| e.0 == i).copied().collect();
        let weights: Vec<f64> = out.iter().map(|_| 1.0 - rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        for (&(_, j, x), w) in out.iter().zip(weights) {
            let slot = used.binary_search(&x).expect("used symbol");
            matrices[slot][(i, j)] = w / total;
        }
    }
    let alphabet = used.iter().map(|&x| top.alphabet()[x].clone()).collect();
    EdgeEmittingHmm::new(top.states().to_vec(), alphabet, matrices)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub samples_drawn: u64,
    pub irreducible_count: usize,
    pub path_mergeable_count: usize,
    pub fraction: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95: f64,
}

impl CensusReport {
    /// `1 - c * 0.931^n`.
    pub fn overlay(&self, c: f64) -> f64 {
        1.0 - c * overlay_base().powi(self.n as i32)
    }
}

/// Rejection-samples `target` irreducible topologies and counts the path-mergeable ones.
pub fn census(n: usize, m: usize, target: usize, seed: u64) -> Result<CensusReport> {
    census_budgeted(n, m, target, seed, (target as u64).saturating_mul(DEFAULT_REJECTION_FACTOR).max(CHUNK))
}

pub fn census_budgeted(n: usize, m: usize, target: usize, seed: u64, max_draws: u64) -> Result<CensusReport> {
    assert!(n >= 1 && m >= 1, "census needs at least one state and one symbol");
    let mut accepted = 0usize;
    let mut mergeable = 0usize;
    let mut drawn = 0u64;
    while accepted < target {
        if drawn >= max_draws {
            return Err(Error::RejectionBudgetExceeded { draws: drawn, target });
        }
        let end = (drawn + CHUNK).min(max_draws);
        let outcomes: Vec<Option<bool>> = (drawn..end)
            .into_par_iter()
            .map(|k| {
                let top = random_topology(n, m, &mut sample_rng(seed, k));
                top.irreducible().then(|| is_path_mergeable(&top))
            })
            .collect();
        for outcome in outcomes {
            drawn += 1;
            if let Some(ok) = outcome {
                accepted += 1;
                mergeable += usize::from(ok);
                if accepted == target {
                    break;
                }
            }
        }
    }
    let fraction = if target == 0 { 0.0 } else { mergeable as f64 / target as f64 };
    let ci95 = if target == 0 { 0.0 } else { 1.96 * (fraction * (1.0 - fraction) / target as f64).sqrt() };
    Ok(CensusReport {
        n,
        m,
        seed,
        samples_drawn: drawn,
        irreducible_count: accepted,
        path_mergeable_count: mergeable,
        fraction,
        ci95,
    })
}
