//! Block models: length-`n` output words as single symbols.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::walk_words;
use crate::error::{Error, Result};
use crate::hmm::{join_symbols, EdgeEmittingHmm};
use crate::structure::{flag_symbols, FlagAssignment};
use crate::topology::gcd;

/// Default upper bound on the block length searched by [`minimal_flag_block`].
pub const DEFAULT_MAX_BLOCK: usize = 8;
/// Largest block alphabet `|L_n(M)|` that will be built.
pub const MAX_BLOCK_ALPHABET: usize = 5000;
/// Pass threshold for [`check_block_consistency`].
pub const BLOCK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    pub n: usize,
    /// Block symbols as words of the base model.
    pub words: Vec<Vec<usize>>,
    /// `M^n`, with symbol `w` carrying `Q^(w)_ij = P_i(X_0^{n-1} = w, S_n = j)`.
    pub model: EdgeEmittingHmm,
    /// Set when `gcd(n, per(M)) != 1`, so `M^n` need not be irreducible.
    pub period_warning: bool,
}

/// Builds `M^n` over the alphabet `L_n(M)`, in lexicographic order.
pub fn block_model(base: &EdgeEmittingHmm, n: usize) -> Result<BlockModel> {
    block_model_capped(base, n, MAX_BLOCK_ALPHABET)
}

pub fn block_model_capped(base: &EdgeEmittingHmm, n: usize, max_alphabet: usize) -> Result<BlockModel> {
    assert!(n >= 1, "block length must be positive");
    let top = base.support_graph();
    let period = top.period()?;
    let pi = base.stationary_distribution()?;
    let mut words = Vec::new();
    let mut matrices = Vec::new();
    let mut overflow = false;
    walk_words(base, pi.weights(), n, usize::MAX, |word, p, forward| {
        if word.len() == n && p > 0.0 {
            if words.len() >= max_alphabet {
                overflow = true;
                return;
            }
            words.push(word.to_vec());
            matrices.push(forward.clone());
        }
    })?;
    if overflow {
        return Err(Error::Budget { cap: max_alphabet });
    }
    let alphabet = words.iter().map(|w| join_symbols(base.alphabet(), w)).collect();
    let model = EdgeEmittingHmm::new(base.states().to_vec(), alphabet, matrices)?;
    Ok(BlockModel { n, words, model, period_warning: gcd(n, period) != 1 })
}

/// Largest `|P_M(w_0 ... w_{t-1}) - P_{M^n}(w_0^{t-1})|` over all block words of length `t`.
pub fn check_block_consistency(base: &EdgeEmittingHmm, n: usize, t: usize) -> Result<f64> {
    let period = base.support_graph().period()?;
    if gcd(n, period) != 1 {
        return Err(Error::PeriodClash { n, period });
    }
    let block = block_model(base, n)?;
    let pi = base.stationary_distribution()?;
    let pi_block = block.model.stationary_distribution()?;
    let k = block.words.len();
    let mut worst: f64 = 0.0;
    let mut index = vec![0usize; t];
    loop {
        let flat: Vec<usize> = index.iter().flat_map(|&b| block.words[b].iter().copied()).collect();
        let p_base = base.word_probability(&pi, &flat);
        let p_block = block.model.word_probability(&pi_block, &index);
        worst = worst.max((p_base - p_block).abs());
        // odometer over W^t
        let mut pos = t;
        loop {
            if pos == 0 {
                return Ok(worst);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < k {
                break;
            }
            index[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagBlockSearch {
    pub period: usize,
    /// `(n, flag-state?)` for every `n <= n_max` coprime to the period that was examined.
    pub checked: Vec<(usize, bool)>,
    /// Least flag-state block length, if any within the bound.
    pub found: Option<usize>,
    /// Flag assignment of `M^found`.
    pub flags: Option<FlagAssignment>,
}

/// Least `n <= n_max`, coprime to the period, with `M^n` flag-state.
pub fn minimal_flag_block(base: &EdgeEmittingHmm, n_max: usize) -> Result<FlagBlockSearch> {
    let period = base.support_graph().period()?;
    let candidates: Vec<usize> = (1..=n_max).filter(|&n| gcd(n, period) == 1).collect();
    let results: Vec<(usize, Result<FlagAssignment>)> = candidates
        .par_iter()
        .map(|&n| (n, block_model(base, n).map(|b| flag_symbols(&b.model.support_graph()))))
        .collect();
    let mut search = FlagBlockSearch { period, checked: Vec::new(), found: None, flags: None };
    for (n, result) in results {
        let flags = result?;
        let ok = flags.is_flag_state();
        search.checked.push((n, ok));
        if ok {
            search.found = Some(n);
            search.flags = Some(flags);
            break;
        }
    }
    Ok(search)
}

/// `Q^(w)` summed over the block alphabet.
pub fn block_transition_sum(block: &BlockModel) -> DMatrix<f64> {
    block.model.transition_matrix()
}
