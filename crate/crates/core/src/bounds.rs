//! Convergence constants for flag-state models and enumeration checks of the
//! inequalities behind them.
//!
//! Given a flag `y_j` for every state `j`:
//!
//! ```text
//! p_j = P(X_0 = y_j | S_1 = j)                 p* = min p_j
//! q_j = min_{i : P_i(y_j) > 0} P_i(S_1 = j | X_0 = y_j)   q* = min q_j
//! r*  = min_{i,j} pi_i / pi_j
//! eta = p* r* / (2|S|)
//! alpha_1 = exp(-(p* r*)^2 / (2|S|^2))      alpha_2 = (1 - q*^2)^eta
//! ```
//!
//! and `h(t+1) - h <= |X| a^t log2(1/a^t) + alpha_1^t log2|X|` with `a = alpha_2`
//! for `t >= t0`. The checks here never assume `h` is known: they use
//! `h(t+1) - L(t)`, which is at least `h(t+1) - h`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::blocks::block_model;
use crate::entropy::{entropy_bits, fit_convergence_rate, h_estimates, walk_words};
use crate::error::{Error, Result};
use crate::hmm::{Distribution, EdgeEmittingHmm, Word};
use crate::structure::{flag_symbols, is_flag, FlagAssignment};
use crate::topology::Topology;

/// Slack on exact inequalities checked in floating point.
pub const CHECK_SLACK: f64 = 1e-12;
/// Relative slack in the maximal-suffix comparison of `N(w)`.
pub const SUFFIX_SLACK: f64 = 1e-12;
/// Cap on flag assignments examined by [`FlagStrategy::Optimize`].
pub const MAX_FLAG_ASSIGNMENTS: usize = 10_000;
/// Allowed excess of the fitted rate over `alpha^{1/n}`.
pub const RATE_FIT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Flag symbol `y_j` of each state.
    pub flags: Vec<usize>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub p_star: f64,
    pub q_star: f64,
    pub r_star: f64,
    pub eta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha: f64,
    /// First `t` covered by the bound; `u64::MAX` when `alpha_2` rounds to 1.
    pub t0: u64,
}

pub fn bound_constants(model: &EdgeEmittingHmm, flags: &[usize]) -> Result<BoundConstants> {
    let top = model.support_graph();
    let n = model.num_states();
    if flags.len() != n {
        return Err(Error::NotFlagState(format!("{} flags for {n} states", flags.len())));
    }
    for (k, &y) in flags.iter().enumerate() {
        if y >= model.num_symbols() || !is_flag(&top, y, k) {
            return Err(Error::NotFlagState(format!("symbol {y} is not a flag for state {}", model.states()[k])));
        }
    }
    let pi = model.stationary_distribution()?;
    let pi = pi.weights();
    let emission = model.emission_rows();
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for (j, &y) in flags.iter().enumerate() {
        let t = model.matrix(y);
        let inflow: f64 = (0..n).map(|i| pi[i] * t[(i, j)]).sum();
        p.push(inflow / pi[j]);
        let qj = (0..n)
            .filter(|&i| emission[i][y] > 0.0)
            .map(|i| t[(i, j)] / emission[i][y])
            .fold(f64::INFINITY, f64::min);
        q.push(qj);
    }
    let p_star = p.iter().copied().fold(f64::INFINITY, f64::min);
    let q_star = q.iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, hi) = pi.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let r_star = lo / hi;
    let size = n as f64;
    let eta = p_star * r_star / (2.0 * size);
    let alpha1 = (-(p_star * r_star).powi(2) / (2.0 * size * size)).exp();
    let alpha2 = (1.0 - q_star * q_star).max(0.0).powf(eta);
    let t0 = if alpha2 == 0.0 {
        1
    } else if alpha2 >= 1.0 {
        u64::MAX
    } else {
        ((-1.0 / alpha2.ln()).ceil() as u64).max(1)
    };
    Ok(BoundConstants {
        flags: flags.to_vec(),
        p,
        q,
        p_star,
        q_star,
        r_star,
        eta,
        alpha1,
        alpha2,
        alpha: alpha1.max(alpha2),
        t0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagStrategy {
    /// Smallest flag symbol of each state.
    #[default]
    Lex,
    /// Exhaustive search for the assignment with the least `alpha`.
    Optimize,
}

pub fn choose_flags(model: &EdgeEmittingHmm, strategy: FlagStrategy) -> Result<FlagAssignment> {
    let base = flag_symbols(&model.support_graph());
    if let Some(k) = base.chosen.iter().position(Option::is_none) {
        return Err(Error::NotFlagState(format!("state {} has no flag symbol", model.states()[k])));
    }
    match strategy {
        FlagStrategy::Lex => Ok(base),
        FlagStrategy::Optimize => {
            let total = base.flags.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.len())).unwrap_or(usize::MAX);
            if total > MAX_FLAG_ASSIGNMENTS {
                return Err(Error::SearchTooLarge(total));
            }
            let mut index = vec![0usize; base.flags.len()];
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let choice: Vec<usize> = index.iter().zip(&base.flags).map(|(&i, f)| f[i]).collect();
                let alpha = bound_constants(model, &choice)?.alpha;
                // lexicographic order of enumeration keeps the first of equal assignments
                if best.as_ref().is_none_or(|(b, _)| alpha < b * (1.0 - CHECK_SLACK)) {
                    best = Some((alpha, choice));
                }
                let mut pos = index.len();
                loop {
                    if pos == 0 {
                        let (_, choice) = best.expect("at least one assignment");
                        return base.with_choice(choice);
                    }
                    pos -= 1;
                    index[pos] += 1;
                    if index[pos] < base.flags[pos].len() {
                        break;
                    }
                    index[pos] = 0;
                }
            }
        }
    }
}

/// Lex flags followed by their constants.
pub fn default_constants(model: &EdgeEmittingHmm) -> Result<BoundConstants> {
    let flags = choose_flags(model, FlagStrategy::Lex)?;
    bound_constants(model, &flags.chosen_flags().expect("flag-state"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: Word,
    pub probability: f64,
    pub n: usize,
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtReport {
    pub t: usize,
    pub mass_good: f64,
    pub mass_bad: f64,
    pub words: Vec<WordCount>,
    /// Largest `TV(phi_k(w), phi_k'(w))` over `w` in `G_t` and generating states `k, k'`.
    pub max_tv_good: f64,
}

/// `N(w)`: positions `tau` where `w_tau` is the flag of some state `k` whose
/// probability of generating the rest of `w` is maximal among all states.
pub fn flag_count(model: &EdgeEmittingHmm, flags: &[usize], word: &[usize]) -> usize {
    let n = model.num_states();
    let t = word.len();
    let mut suffix = vec![1.0; n];
    let mut count = 0;
    for tau in (0..t).rev() {
        // suffix holds P_j(w_{tau+1} .. w_{t-1})
        let max = suffix.iter().copied().fold(0.0f64, f64::max);
        let x = word[tau];
        let hit = flags
            .iter()
            .enumerate()
            .any(|(k, &y)| y == x && suffix[k] >= max * (1.0 - SUFFIX_SLACK));
        if hit {
            count += 1;
        }
        let m = model.matrix(x);
        suffix = (0..n).map(|i| (0..n).map(|j| m[(i, j)] * suffix[j]).sum()).collect();
    }
    count
}

pub fn gt_report(model: &EdgeEmittingHmm, constants: &BoundConstants, t: usize, cap: usize) -> Result<GtReport> {
    let pi = model.stationary_distribution()?;
    let n = model.num_states();
    let threshold = constants.eta * t as f64;
    let mut words = Vec::new();
    let (mut good_mass, mut bad_mass) = (Vec::new(), Vec::new());
    let mut max_tv: f64 = 0.0;
    walk_words(model, pi.weights(), t, cap, |word, probability, forward| {
        if word.len() != t {
            return;
        }
        let count = flag_count(model, &constants.flags, word);
        let good = count as f64 >= threshold;
        if good {
            good_mass.push(probability);
            let beliefs: Vec<Vec<f64>> = (0..n)
                .filter_map(|i| {
                    let row: Vec<f64> = forward.row(i).iter().copied().collect();
                    let mass: f64 = row.iter().sum();
                    (mass > 0.0).then(|| row.iter().map(|v| v / mass).collect())
                })
                .collect();
            for a in 0..beliefs.len() {
                for b in a + 1..beliefs.len() {
                    max_tv = max_tv.max(half_l1(&beliefs[a], &beliefs[b]));
                }
            }
        } else {
            bad_mass.push(probability);
        }
        words.push(WordCount { word: word.to_vec(), probability, n: count, good });
    })?;
    Ok(GtReport {
        t,
        mass_good: crate::entropy::pairwise_sum(&good_mass),
        mass_bad: crate::entropy::pairwise_sum(&bad_mass),
        words,
        max_tv_good: max_tv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `P(G_t^c) <= alpha_1^t` for each `t`.
pub fn check_lemma_gt(
    model: &EdgeEmittingHmm,
    constants: &BoundConstants,
    t_range: RangeInclusive<usize>,
    cap: usize,
) -> Result<Vec<LemmaRow>> {
    t_range
        .map(|t| {
            let report = gt_report(model, constants, t, cap)?;
            let rhs = constants.alpha1.powi(t as i32);
            Ok(LemmaRow { t, lhs: report.mass_bad, rhs, pass: report.mass_bad <= rhs + CHECK_SLACK })
        })
        .collect()
}

/// `max TV(phi_k(w), phi_k'(w)) <= alpha_2^t` over good words, for each `t`.
pub fn check_lemma_tv(
    model: &EdgeEmittingHmm,
    constants: &BoundConstants,
    t_range: RangeInclusive<usize>,
    cap: usize,
) -> Result<Vec<LemmaRow>> {
    t_range
        .map(|t| {
            let report = gt_report(model, constants, t, cap)?;
            let rhs = constants.alpha2.powi(t as i32);
            Ok(LemmaRow { t, lhs: report.max_tv_good, rhs, pass: report.max_tv_good <= rhs + CHECK_SLACK })
        })
        .collect()
}

fn half_l1(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Total variation `||mu - nu||_1 / 2`.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::LengthMismatch(mu.len(), nu.len()));
    }
    Ok(half_l1(mu, nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `|H(mu) - H(nu)| <= N eps log2(1/eps)` with `eps = TV(mu, nu) <= 1/e`.
pub fn entropy_diff_check(mu: &[f64], nu: &[f64]) -> Result<InequalityCheck> {
    let eps = tv_distance(mu, nu)?;
    if eps > (-1.0f64).exp() + CHECK_SLACK {
        return Err(Error::EpsilonTooLarge(eps));
    }
    let lhs = (entropy_bits(mu) - entropy_bits(nu)).abs();
    let rhs = if eps > 0.0 { mu.len() as f64 * eps * (1.0 / eps).log2() } else { 0.0 };
    Ok(InequalityCheck { lhs, rhs, pass: lhs <= rhs + CHECK_SLACK })
}

/// Next-symbol distributions are no further apart than the beliefs producing them.
pub fn channel_contraction_check(model: &EdgeEmittingHmm, mu: &Distribution, nu: &Distribution) -> Result<InequalityCheck> {
    let rhs = tv_distance(mu.weights(), nu.weights())?;
    let (a, b) = (model.next_symbol_distribution(mu)?, model.next_symbol_distribution(nu)?);
    let lhs = tv_distance(a.weights(), b.weights())?;
    Ok(InequalityCheck { lhs, rhs, pass: lhs <= rhs + CHECK_SLACK })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Pass,
    /// The bound is at least `log2|X|` and so holds for any process.
    Vacuous,
    /// `t < t0`: the bound is not claimed.
    Outside,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub t: usize,
    /// `h(t+1) - L(t)`.
    pub proxy: f64,
    pub rhs: f64,
    pub in_hypothesis: bool,
    pub status: BoundStatus,
}

/// `|X| a^t log2(1/a^t) + alpha_1^t log2|X|`, `a = alpha_2`.
pub fn theorem_rhs(constants: &BoundConstants, symbols: usize, t: usize) -> f64 {
    let a = constants.alpha2.powi(t as i32);
    let first = if a > 0.0 { symbols as f64 * a * (1.0 / a).log2() } else { 0.0 };
    first + constants.alpha1.powi(t as i32) * (symbols as f64).log2()
}

pub fn check_theorem_bound(
    model: &EdgeEmittingHmm,
    constants: &BoundConstants,
    t_range: RangeInclusive<usize>,
    cap: usize,
) -> Result<Vec<TheoremRow>> {
    let table = h_estimates(model, *t_range.end(), cap)?;
    let symbols = model.num_symbols();
    let ceiling = (symbols as f64).log2();
    Ok(t_range
        .map(|t| {
            let row = table.row(t).expect("row computed");
            let rhs = theorem_rhs(constants, symbols, t);
            let in_hypothesis = t as u64 >= constants.t0;
            let status = if rhs >= ceiling {
                BoundStatus::Vacuous
            } else if !in_hypothesis {
                BoundStatus::Outside
            } else if row.gap <= rhs + CHECK_SLACK {
                BoundStatus::Pass
            } else {
                BoundStatus::Fail
            };
            TheoremRow { t, proxy: row.gap, rhs, in_hypothesis, status }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub n: usize,
    pub alpha: f64,
    /// `alpha^{1/n}`, the guaranteed rate for the base model.
    pub alpha_root: f64,
    /// Fitted decay rate of `gap(t)` of the base model.
    pub rho: f64,
    pub window: (usize, usize),
    pub within_bound: bool,
}

/// Compares the fitted decay of `gap(t)` with `alpha^{1/n}` from the constants of `M^n`.
pub fn theorem_rate_summary(model: &EdgeEmittingHmm, n: usize, t_max: usize, cap: usize) -> Result<RateSummary> {
    let lifted = if n == 1 { model.clone() } else { block_model(model, n)?.model };
    let constants = default_constants(&lifted)
        .map_err(|e| Error::NotFlagState(format!("block model of length {n}: {e}")))?;
    let table = h_estimates(model, t_max, cap)?;
    let window = (t_max.saturating_sub(5).max(1), t_max);
    let rho = fit_convergence_rate(&table, window.0..=window.1)?;
    let alpha_root = constants.alpha.powf(1.0 / n as f64);
    Ok(RateSummary {
        n,
        alpha: constants.alpha,
        alpha_root,
        rho,
        window,
        within_bound: rho <= alpha_root + RATE_FIT_TOLERANCE,
    })
}

/// Flags of `top` for state names, as `state -> symbol` pairs.
pub fn named_flags(top: &Topology, flags: &[usize]) -> Vec<(String, String)> {
    flags.iter().enumerate().map(|(k, &y)| (top.states()[k].clone(), top.alphabet()[y].clone())).collect()
}
