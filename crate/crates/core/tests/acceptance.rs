//! Acceptance criteria 1 to 9, one line each.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::oracle::exact_constants;
use common::{all_words, data, load};
use hmmlab::blocks::{block_model, check_block_consistency, minimal_flag_block};
use hmmlab::bounds::{
    bound_constants, channel_contraction_check, check_lemma_gt, check_lemma_tv, check_theorem_bound, choose_flags,
    default_constants, entropy_diff_check, BoundStatus, FlagStrategy,
};
use hmmlab::census::{census, random_hmm, random_topology, sample_rng, DEFAULT_SEED};
use hmmlab::cli::AnalyzeReport;
use hmmlab::convert::{check_delta_equivalence, check_output_equivalence, edge_to_state, state_to_edge};
use hmmlab::entropy::{entropy_bits, fit_convergence_rate, h_estimates, unifilar_exact_entropy, DEFAULT_NODE_CAP};
use hmmlab::hmm::{Distribution, EdgeEmittingHmm, Model, StateEmittingHmm};
use hmmlab::structure::{flag_symbols, is_path_mergeable};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let spent = start.elapsed();
    if spent > limit {
        Err(format!("took {spent:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn structure() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_hmmlab"))
        .arg("analyze")
        .arg(data("ex1.json"))
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "analyze exited with {:?}", out.status.code());
    let r: AnalyzeReport = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure!(r.path_mergeable && r.irreducible && r.period == Some(1), "structure {r:?}");
    let flags: Vec<(&str, &str)> = r.flag_assignment.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    ensure!(flags == [("1", "b"), ("2", "a"), ("3", "a")], "flags {flags:?}");
    let m = load("ex1.json");
    let pi = m.stationary_distribution().map_err(|e| e.to_string())?;
    let aa = m.word_probability(&pi, &m.parse_word("aa").unwrap());
    ensure!(aa == 0.0, "P(aa) = {aa}");
    within(Duration::from_secs(1), start)?;
    Ok(format!("flags {flags:?}, P(aa) = 0, {:?}", start.elapsed()))
}

fn stationary_and_constants() -> Outcome {
    let m = load("ex1.json");
    let pi = m.stationary_distribution().map_err(|e| e.to_string())?;
    let want = [3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0];
    let err = pi.weights().iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(err <= 1e-12, "pi off by {err}");
    let exact = exact_constants("ex1.json");
    let c = default_constants(&m).map_err(|e| e.to_string())?;
    ensure!(c.flags == exact.flags, "flags {:?} vs {:?}", c.flags, exact.flags);
    let mismatch = exact.mismatch(&c);
    ensure!(mismatch <= 1e-12, "constants off by {mismatch}");
    Ok(format!("pi error {err:.1e}, constants error {mismatch:.1e}"))
}

fn entropy_machinery() -> Outcome {
    let start = Instant::now();
    let m = load("ex1.json");
    let table = h_estimates(&m, 11, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    let mut sum = 0.0;
    for t in 1..=11 {
        let row = table.row(t).unwrap();
        sum += row.h;
        ensure!((row.block_entropy - sum).abs() <= 1e-9, "chain rule at t={t}");
        ensure!(table.h(t + 1).unwrap() <= row.h + 1e-12, "h increases at t={t}");
        for s in 1..=11 {
            ensure!(row.lower <= table.h(s + 1).unwrap(), "L({t}) > h({})", s + 1);
        }
    }
    let (g3, g10) = (table.row(3).unwrap().gap, table.row(10).unwrap().gap);
    ensure!(g10 < g3, "gap(10) = {g10} not below gap(3) = {g3}");
    let pi = m.stationary_distribution().unwrap();
    let mut worst: f64 = 0.0;
    for t in 1..=8 {
        let (mut block, mut upper) = (0.0, 0.0);
        for w in all_words(3, t) {
            let p = m.word_probability(&pi, &w);
            if p > 0.0 {
                block -= p * p.log2();
                upper += p * entropy_bits(m.next_symbol_distribution(&m.phi(&pi, &w)).unwrap().weights());
            }
        }
        let row = table.row(t).unwrap();
        worst = worst.max((row.block_entropy - block).abs()).max((row.upper - upper).abs());
    }
    ensure!(worst <= 1e-10, "naive scan differs by {worst}");
    within(Duration::from_secs(60), start)?;
    Ok(format!("gap(3) = {g3:.3e}, gap(10) = {g10:.3e}, naive error {worst:.1e}, {:?}", start.elapsed()))
}

/// The first `count` irreducible flag-state models with three states drawn from `seed`.
fn random_flag_state_models(count: usize, seed: u64) -> Vec<EdgeEmittingHmm> {
    let mut found = Vec::new();
    let mut k = 0;
    while found.len() < count {
        let mut rng = sample_rng(seed, k);
        k += 1;
        let top = random_topology(3, 2, &mut rng);
        if !top.irreducible() || !flag_symbols(&top).is_flag_state() {
            continue;
        }
        if let Ok(m) = random_hmm(&top, &mut rng) {
            if flag_symbols(&m.support_graph()).is_flag_state() {
                found.push(m);
            }
        }
    }
    found
}

fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn lemma_suite() -> Outcome {
    let start = Instant::now();
    let m = load("ex1.json");
    let c = default_constants(&m).map_err(|e| e.to_string())?;
    let gt = check_lemma_gt(&m, &c, 1..=10, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    let tv = check_lemma_tv(&m, &c, 1..=10, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    for row in gt.iter().chain(&tv) {
        ensure!(row.pass, "EX1 t={}: {} > {}", row.t, row.lhs, row.rhs);
    }
    let models = random_flag_state_models(50, 2024);
    for (k, model) in models.iter().enumerate() {
        let c = default_constants(model).map_err(|e| e.to_string())?;
        for row in check_lemma_gt(model, &c, 1..=8, DEFAULT_NODE_CAP).map_err(|e| e.to_string())? {
            ensure!(row.pass, "model {k} gt t={}: {} > {}", row.t, row.lhs, row.rhs);
        }
        for row in check_lemma_tv(model, &c, 1..=8, DEFAULT_NODE_CAP).map_err(|e| e.to_string())? {
            ensure!(row.pass, "model {k} tv t={}: {} > {}", row.t, row.lhs, row.rhs);
        }
    }
    let mut rng = sample_rng(99, 0);
    for i in 0..600 {
        let len = rng.gen_range(2..=6);
        let mu = random_distribution(&mut rng, len);
        let zeta = random_distribution(&mut rng, len);
        let l = rng.gen::<f64>() * (-1.0f64).exp();
        let nu: Vec<f64> = mu.iter().zip(&zeta).map(|(a, b)| (1.0 - l) * a + l * b).collect();
        let check = entropy_diff_check(&mu, &nu).map_err(|e| e.to_string())?;
        ensure!(check.pass, "entropy difference input {i}: {} > {}", check.lhs, check.rhs);
    }
    for i in 0..600 {
        let model = &models[i % models.len()];
        let n = model.num_states();
        let mu = Distribution::new(random_distribution(&mut rng, n)).unwrap();
        let nu = Distribution::new(random_distribution(&mut rng, n)).unwrap();
        let check = channel_contraction_check(model, &mu, &nu).map_err(|e| e.to_string())?;
        ensure!(check.pass, "contraction input {i}: {} > {}", check.lhs, check.rhs);
    }
    within(Duration::from_secs(300), start)?;
    Ok(format!("EX1 t<=10, 50 random models t<=8, 600 + 600 inequality inputs, {:?}", start.elapsed()))
}

fn theorem_bound() -> Outcome {
    for name in ["ex1.json", "cycle2.json", "high_q.json"] {
        let m = load(name);
        for strategy in [FlagStrategy::Lex, FlagStrategy::Optimize] {
            let flags = choose_flags(&m, strategy).map_err(|e| e.to_string())?;
            let c = bound_constants(&m, &flags.chosen_flags().unwrap()).map_err(|e| e.to_string())?;
            let rows = check_theorem_bound(&m, &c, 1..=10, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
            ensure!(rows.iter().all(|r| r.status != BoundStatus::Fail), "{name}: a row failed");
        }
    }
    let high = load("high_q.json");
    let flags = choose_flags(&high, FlagStrategy::Optimize).map_err(|e| e.to_string())?;
    let c = bound_constants(&high, &flags.chosen_flags().unwrap()).map_err(|e| e.to_string())?;
    ensure!(c.t0 <= 5, "high-q t0 = {}", c.t0);
    let rows = check_theorem_bound(&high, &c, c.t0 as usize..=10, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure!(r.status == BoundStatus::Pass, "high-q t={} is {:?} ({} vs {})", r.t, r.status, r.proxy, r.rhs);
    }
    let ex1 = load("ex1.json");
    let c1 = default_constants(&ex1).map_err(|e| e.to_string())?;
    ensure!(c1.t0 == 63, "EX1 t0 = {}", c1.t0);
    let rows1 = check_theorem_bound(&ex1, &c1, 1..=11, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    ensure!(rows1.iter().all(|r| r.status == BoundStatus::Vacuous), "EX1 rows not all vacuous");
    Ok(format!("high-q t0 = {}, alpha2 = {:.3e}, pass t = {}..10; EX1 vacuous t <= 11, t0 = 63", c.t0, c.alpha2, c.t0))
}

fn random_state_model<R: Rng>(rng: &mut R) -> Option<StateEmittingHmm> {
    let row = |rng: &mut R, len: usize| -> Option<Vec<f64>> {
        let r: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.6) { 1.0 - rng.gen::<f64>() } else { 0.0 }).collect();
        let s: f64 = r.iter().sum();
        (s > 0.0).then(|| r.iter().map(|v| v / s).collect())
    };
    let t: Option<Vec<Vec<f64>>> = (0..4).map(|_| row(rng, 4)).collect();
    let o: Option<Vec<Vec<f64>>> = (0..4).map(|_| row(rng, 2)).collect();
    StateEmittingHmm::from_rows(&["1", "2", "3", "4"], &["a", "b"], &t?, &o?).ok()
}

fn conversions() -> Outcome {
    let ex1 = load("ex1.json");
    let report = check_output_equivalence(&Model::Edge(ex1.clone()), &Model::State(edge_to_state(&ex1)), 6)
        .map_err(|e| e.to_string())?;
    ensure!(report.max_discrepancy <= 1e-10, "EX1 discrepancy {}", report.max_discrepancy);
    let mut rng = sample_rng(314, 0);
    let mut tested = 0;
    while tested < 100 {
        let Some(model) = random_state_model(&mut rng) else { continue };
        tested += 1;
        ensure!(check_delta_equivalence(&model, 5), "delta mismatch on model {tested}");
        let (a, b) = (model.support_graph(), state_to_edge(&model).support_graph());
        ensure!(is_path_mergeable(&a) == is_path_mergeable(&b), "path-mergeability changed on model {tested}");
        ensure!(
            flag_symbols(&a).is_flag_state() == flag_symbols(&b).is_flag_state(),
            "flag-state status changed on model {tested}"
        );
    }
    Ok(format!("EX1 discrepancy {:.1e}, 100 random state models", report.max_discrepancy))
}

fn blocks() -> Outcome {
    let (ex1, cycle2) = (load("ex1.json"), load("cycle2.json"));
    let d1 = check_block_consistency(&ex1, 2, 3).map_err(|e| e.to_string())?;
    let d2 = check_block_consistency(&cycle2, 3, 2).map_err(|e| e.to_string())?;
    ensure!(d1 <= 1e-10 && d2 <= 1e-10, "discrepancies {d1}, {d2}");
    let base = h_estimates(&ex1, 10, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    let lifted = block_model(&ex1, 2).map_err(|e| e.to_string())?;
    let blocks = h_estimates(&lifted.model, 5, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in 0..=4 {
        let g = blocks.h(t + 1).unwrap();
        let sum: f64 = (2 * t..2 * (t + 1)).map(|tau| base.h(tau + 1).unwrap()).sum();
        worst = worst.max((g - sum).abs());
    }
    ensure!(worst <= 1e-9, "block scaling off by {worst}");
    let found = minimal_flag_block(&ex1, 6).map_err(|e| e.to_string())?.found;
    ensure!(found == Some(1), "minimal flag block {found:?}");
    Ok(format!("consistency {d1:.1e} / {d2:.1e}, scaling error {worst:.1e}, minimal block 1"))
}

fn census_trend() -> Outcome {
    let start = Instant::now();
    let golden = [(3, 1875), (4, 1936), (5, 1974), (6, 1988)];
    let mut reports = Vec::new();
    for (n, mergeable) in golden {
        let r = census(n, 2, 2000, DEFAULT_SEED).map_err(|e| e.to_string())?;
        ensure!(r.path_mergeable_count == mergeable, "n={n}: {} mergeable, golden {mergeable}", r.path_mergeable_count);
        reports.push(r);
    }
    ensure!(reports[3].fraction >= reports[0].fraction, "fraction(6) < fraction(3)");
    for w in reports.windows(2) {
        ensure!(
            w[1].fraction + w[1].ci95 >= w[0].fraction - w[0].ci95,
            "n={} drops below n={} beyond the intervals",
            w[1].n,
            w[0].n
        );
    }
    within(Duration::from_secs(600), start)?;
    let fractions: Vec<String> = reports.iter().map(|r| format!("{:.4}", r.fraction)).collect();
    Ok(format!("fractions n=3..6: {}, {:?}", fractions.join(" "), start.elapsed()))
}

fn trivial_exactness() -> Outcome {
    let m = load("cycle2.json");
    let table = h_estimates(&m, 8, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    ensure!((table.h(1).unwrap() - 1.0).abs() <= 1e-12, "h(1) = {}", table.h(1).unwrap());
    for t in 2..=9 {
        ensure!(table.h(t).unwrap().abs() <= 1e-12, "h({t}) = {}", table.h(t).unwrap());
    }
    for row in &table.rows {
        ensure!(row.lower.abs() <= 1e-12, "L({}) = {}", row.t, row.lower);
        let (lo, hi) = table.interval(row.t).unwrap();
        ensure!(lo.abs() <= 1e-12 && hi.abs() <= 1e-12, "sandwich at t={} is [{lo}, {hi}]", row.t);
    }
    let exact = unifilar_exact_entropy(&m).map_err(|e| e.to_string())?;
    ensure!(exact.abs() <= 1e-12, "closed form {exact}");
    let rho = fit_convergence_rate(&table, 2..=8).map_err(|e| e.to_string())?;
    ensure!(rho == 0.0, "rho = {rho}");
    Ok("h(1) = 1, h(t>=2) = 0, L = 0, closed form 0, rho = 0".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("structural fidelity", structure),
        ("stationary and constants", stationary_and_constants),
        ("entropy machinery", entropy_machinery),
        ("lemma suite", lemma_suite),
        ("theorem bound", theorem_bound),
        ("conversions", conversions),
        ("blocks", blocks),
        ("census", census_trend),
        ("trivial exactness", trivial_exactness),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
