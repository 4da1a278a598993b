//! The `hmmlab` command line.
//!
//! Exit codes: 0 success, 1 a model or check failed, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::blocks::block_model;
use crate::bounds::{
    bound_constants, check_lemma_gt, check_lemma_tv, check_theorem_bound, choose_flags, BoundConstants, BoundStatus,
    FlagStrategy,
};
use crate::census::census;
use crate::convert::{edge_to_state, state_to_edge};
use crate::entropy::{fit_convergence_rate, h_estimates, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};
use crate::hmm::{join_symbols, Model};
use crate::io::{read_model, to_document};
use crate::structure::{
    construct_flag_word, flag_symbols, incompatible_pairs, path_mergeable_pairs, PairStatus, Witness,
};
use crate::topology::Topology;

pub const BUDGET_ENV: &str = "HMMLAB_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "hmmlab", version, about = "Structure, entropy-rate bounds and convergence constants of finite HMMs")]
struct Cli {
    /// Node cap for word enumeration (overrides HMMLAB_BUDGET)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    /// Worker threads for parallel stages
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file
    Validate { model: PathBuf },
    /// Irreducibility, period, pair table and flags
    Analyze {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Edge-emitting to state-emitting and back
    Convert {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Block model over words of length n
    Block {
        model: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Entropy table as CSV
    Entropy {
        model: PathBuf,
        #[arg(long)]
        tmax: usize,
        /// Fit the decay of the gap over t = a..b
        #[arg(long, value_parser = parse_range)]
        rate_window: Option<RangeInclusive<usize>>,
    },
    /// Convergence constants as JSON
    Bound {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Strategy::Lex)]
        strategy: Strategy,
    },
    /// Enumeration checks of the lemma inequalities and the bound
    Verify {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "gt,tv,thm")]
        lemmas: Vec<Check>,
        #[arg(long)]
        tmax: usize,
        #[arg(long, value_enum, default_value_t = Strategy::Lex)]
        strategy: Strategy,
    },
    /// Path-mergeable fraction of random irreducible topologies
    Census {
        #[arg(long, value_parser = parse_range)]
        n: RangeInclusive<usize>,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Add the column 1 - c * 0.931^n
        #[arg(long)]
        overlay: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Lex,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Gt,
    Tv,
    Thm,
}

fn parse_range(text: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let bad = || format!("expected N or A..B, got {text:?}");
    match text.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            if a > b || a == 0 {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let a: usize = text.trim().parse().map_err(|_| bad())?;
            if a == 0 {
                return Err(bad());
            }
            Ok(a..=a)
        }
    }
}

enum Failure {
    Usage(String),
    Model(Error),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Model(e.into())
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                2
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    let budget = match node_cap(cli.budget) {
        Ok(b) => b,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let (mut buf_out, mut buf_err) = (Vec::new(), Vec::new());
    let result = pool.install(|| dispatch(cli.command, budget, &mut buf_out, &mut buf_err));
    let _ = out.write_all(&buf_out);
    let _ = err.write_all(&buf_err);
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nUsage: hmmlab <COMMAND> [OPTIONS]; see hmmlab --help");
            2
        }
        Err(Failure::Model(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Check) => 1,
    }
}

fn node_cap(flag: Option<u64>) -> std::result::Result<usize, String> {
    if let Some(b) = flag {
        return Ok(b as usize);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(b) if b > 0 => Ok(b),
            _ => Err(format!("{BUDGET_ENV} must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(DEFAULT_NODE_CAP),
    }
}

fn load(path: &Path) -> std::result::Result<Model, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("no such model file: {}", path.display())));
    }
    Ok(read_model(path)?)
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match target {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn strategy(s: Strategy) -> FlagStrategy {
    match s {
        Strategy::Lex => FlagStrategy::Lex,
        Strategy::Optimize => FlagStrategy::Optimize,
    }
}

fn constants(model: &crate::hmm::EdgeEmittingHmm, s: Strategy) -> Result<BoundConstants> {
    let flags = choose_flags(model, strategy(s))?;
    bound_constants(model, &flags.chosen_flags().expect("flag-state"))
}

fn dispatch(command: Command, budget: usize, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Validate { model } => {
            let m = load(&model)?;
            let kind = if matches!(m, Model::Edge(_)) { "edge" } else { "state" };
            writeln!(out, "ok: {kind}-emitting, {} states, {} symbols", m.states().len(), m.alphabet().len())?;
        }
        Command::Analyze { model, format } => {
            let report = analyze(&load(&model)?.support_graph());
            match format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"))?,
                Format::Text => write!(out, "{}", report.to_text())?,
            }
        }
        Command::Convert { model, output } => {
            let converted = match load(&model)? {
                Model::Edge(m) => Model::State(edge_to_state(&m)),
                Model::State(m) => Model::Edge(state_to_edge(&m)),
            };
            emit(out, output.as_deref(), &to_document(&converted).to_json())?;
        }
        Command::Block { model, n, output } => {
            let block = block_model(&load(&model)?.to_edge(), n as usize)?;
            if block.period_warning {
                writeln!(err, "warning: block length {n} shares a factor with the period; the block model may be reducible")?;
            }
            emit(out, output.as_deref(), &to_document(&Model::Edge(block.model)).to_json())?;
        }
        Command::Entropy { model, tmax, rate_window } => {
            if tmax == 0 {
                return Err(Failure::Usage("--tmax must be positive".into()));
            }
            let m = load(&model)?.to_edge();
            let table = h_estimates(&m, tmax, budget)?;
            write!(out, "{}", table.to_csv())?;
            if let Some(w) = rate_window {
                if *w.end() > tmax {
                    return Err(Failure::Usage(format!("rate window ends after --tmax {tmax}")));
                }
                writeln!(out, "# rho={}", fit_convergence_rate(&table, w)?)?;
            }
        }
        Command::Bound { model, strategy: s } => {
            let m = load(&model)?.to_edge();
            let c = constants(&m, s)?;
            let report = BoundReport::new(&m.support_graph(), c);
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"))?;
        }
        Command::Verify { model, lemmas, tmax, strategy: s } => {
            if tmax == 0 {
                return Err(Failure::Usage("--tmax must be positive".into()));
            }
            let m = load(&model)?.to_edge();
            let c = constants(&m, s)?;
            let mut failed = false;
            writeln!(out, "check,t,lhs,rhs,status")?;
            for check in lemmas {
                let rows: Vec<(usize, f64, f64, &str)> = match check {
                    Check::Gt | Check::Tv => {
                        let rows = if check == Check::Gt {
                            check_lemma_gt(&m, &c, 1..=tmax, budget)?
                        } else {
                            check_lemma_tv(&m, &c, 1..=tmax, budget)?
                        };
                        rows.into_iter().map(|r| (r.t, r.lhs, r.rhs, if r.pass { "pass" } else { "fail" })).collect()
                    }
                    Check::Thm => check_theorem_bound(&m, &c, 1..=tmax, budget)?
                        .into_iter()
                        .map(|r| {
                            let status = match r.status {
                                BoundStatus::Pass => "pass",
                                BoundStatus::Vacuous => "vacuous",
                                BoundStatus::Outside => "outside",
                                BoundStatus::Fail => "fail",
                            };
                            (r.t, r.proxy, r.rhs, status)
                        })
                        .collect(),
                };
                let name = match check {
                    Check::Gt => "gt",
                    Check::Tv => "tv",
                    Check::Thm => "thm",
                };
                for (t, lhs, rhs, status) in rows {
                    failed |= status == "fail";
                    writeln!(out, "{name},{t},{lhs},{rhs},{status}")?;
                }
            }
            if failed {
                return Err(Failure::Check);
            }
        }
        Command::Census { n, m, samples, seed, overlay } => {
            if m == 0 || samples == 0 {
                return Err(Failure::Usage("--m and --samples must be positive".into()));
            }
            let header = if overlay.is_some() { ",overlay" } else { "" };
            writeln!(out, "n,m,irreducible_draws,mergeable,fraction,ci95{header}")?;
            for size in n {
                let r = census(size, m, samples, seed)?;
                write!(out, "{},{},{},{},{},{}", r.n, r.m, r.irreducible_count, r.path_mergeable_count, r.fraction, r.ci95)?;
                match overlay {
                    Some(c) => writeln!(out, ",{}", r.overlay(c))?,
                    None => writeln!(out)?,
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// State name to flag symbol name.
    pub flag_names: BTreeMap<String, String>,
    #[serde(flatten)]
    pub constants: BoundConstants,
}

impl BoundReport {
    pub fn new(top: &Topology, constants: BoundConstants) -> Self {
        let flag_names = constants
            .flags
            .iter()
            .enumerate()
            .map(|(k, &y)| (top.states()[k].clone(), top.alphabet()[y].clone()))
            .collect();
        Self { flag_names, constants }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: String,
    pub j: String,
    pub path_mergeable: bool,
    pub merge_word: Option<String>,
    pub merge_state: Option<String>,
    pub incompatible: bool,
    /// Length from which the pair shares no generable word.
    pub incompatible_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagWordReport {
    pub word: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub irreducible: bool,
    pub period: Option<usize>,
    pub path_mergeable: bool,
    pub flag_state: bool,
    /// All flag symbols of each state.
    pub flags: BTreeMap<String, Vec<String>>,
    /// Smallest flag symbol of each flag state.
    pub flag_assignment: BTreeMap<String, String>,
    pub flag_word: Option<FlagWordReport>,
    pub pairs: Vec<PairReport>,
    pub classification: String,
}

pub fn analyze(top: &Topology) -> AnalyzeReport {
    let states = top.states().to_vec();
    let alphabet = top.alphabet().to_vec();
    let irreducible = top.irreducible();
    let mergeable = path_mergeable_pairs(top);
    let incompatible = incompatible_pairs(top);
    let path_mergeable = mergeable.all(PairStatus::Mergeable);
    let flags = flag_symbols(top);
    let flag_state = flags.is_flag_state();
    let pairs = mergeable
        .entries
        .iter()
        .map(|(&(i, j), entry)| {
            let (merge_word, merge_state) = match &entry.witness {
                Some(Witness::Merge { word, state }) => {
                    (Some(join_symbols(&alphabet, word)), Some(states[*state].clone()))
                }
                _ => (None, None),
            };
            let inc = incompatible.get(i, j);
            let incompatible_from = match inc.and_then(|e| e.witness.as_ref()) {
                Some(Witness::Length(m)) => Some(*m),
                _ => None,
            };
            PairReport {
                i: states[i].clone(),
                j: states[j].clone(),
                path_mergeable: entry.status == PairStatus::Mergeable,
                merge_word,
                merge_state,
                incompatible: inc.is_some_and(|e| e.status == PairStatus::Incompatible),
                incompatible_from,
            }
        })
        .collect();
    let flag_word = construct_flag_word(top)
        .ok()
        .map(|(word, k)| FlagWordReport { word: join_symbols(&alphabet, &word), state: states[k].clone() });
    let classification = if !irreducible {
        "reducible"
    } else if flag_state {
        "flag-state"
    } else if path_mergeable {
        "path-mergeable"
    } else {
        "not path-mergeable"
    };
    AnalyzeReport {
        flags: flags
            .flags
            .iter()
            .enumerate()
            .map(|(k, f)| (states[k].clone(), f.iter().map(|&x| alphabet[x].clone()).collect()))
            .collect(),
        flag_assignment: flags
            .chosen
            .iter()
            .enumerate()
            .filter_map(|(k, y)| y.map(|y| (states[k].clone(), alphabet[y].clone())))
            .collect(),
        period: top.period().ok(),
        states,
        alphabet,
        irreducible,
        path_mergeable,
        flag_state,
        flag_word,
        pairs,
        classification: classification.into(),
    }
}

impl AnalyzeReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let yes = |b: bool| if b { "yes" } else { "no" };
        let period = self.period.map_or("-".to_string(), |p| p.to_string());
        s += &format!("{:<16}{}\n", "states", self.states.join(" "));
        s += &format!("{:<16}{}\n", "alphabet", self.alphabet.join(" "));
        s += &format!("{:<16}{}\n", "irreducible", yes(self.irreducible));
        s += &format!("{:<16}{}\n", "period", period);
        s += &format!("{:<16}{}\n", "path-mergeable", yes(self.path_mergeable));
        s += &format!("{:<16}{}\n", "flag-state", yes(self.flag_state));
        s += &format!("{:<16}{}\n", "class", self.classification);
        if let Some(fw) = &self.flag_word {
            s += &format!("{:<16}{} -> {}\n", "flag word", fw.word, fw.state);
        }
        s += "\nflags\n";
        for state in &self.states {
            let all = self.flags.get(state).map(|f| f.join(" ")).unwrap_or_default();
            let chosen = self.flag_assignment.get(state).map_or("-", String::as_str);
            s += &format!("  {state:<8}{chosen:<8}{{{all}}}\n");
        }
        s += "\npairs\n";
        for p in &self.pairs {
            let merge = match (&p.merge_word, &p.merge_state) {
                (Some(w), Some(k)) => format!("{w} -> {k}"),
                _ => "-".into(),
            };
            let inc = p.incompatible_from.map_or("-".to_string(), |m| format!("from {m}"));
            s += &format!("  {:<6}{:<6}{:<12}{:<8}{}\n", p.i, p.j, merge, yes(p.incompatible), inc);
        }
        s
    }
}
