//! Path-mergeability, flag symbols, incompatibility and flag-word construction.
//!
//! All tests run on the pair graph of a [`Topology`]: node `(i, j)` has an
//! edge on symbol `x` to every `(i', j')` with `i' in delta_i(x)` and
//! `j' in delta_j(x)`. A pair is path-mergeable iff a diagonal node `(k, k)`
//! is reachable from it, and incompatible iff no cycle is.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::Word;
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairStatus {
    Mergeable,
    NotMergeable,
    Incompatible,
    Compatible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    /// A merging word and the common state it reaches.
    Merge { word: Word, state: usize },
    /// Length from which the two states share no generable word.
    Length(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub status: PairStatus,
    pub witness: Option<Witness>,
}

/// One entry per unordered pair of distinct states, keyed `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTable {
    pub entries: BTreeMap<(usize, usize), PairEntry>,
}

impl PairTable {
    pub fn get(&self, i: usize, j: usize) -> Option<&PairEntry> {
        self.entries.get(&(i.min(j), i.max(j)))
    }

    pub fn count(&self, status: PairStatus) -> usize {
        self.entries.values().filter(|e| e.status == status).count()
    }

    /// True when every pair has `status` (vacuously for fewer than two states).
    pub fn all(&self, status: PairStatus) -> bool {
        self.entries.values().all(|e| e.status == status)
    }
}

struct PairGraph {
    n: usize,
    // succ[node][x] -> target nodes, node = i * n + j
    succ: Vec<Vec<Vec<usize>>>,
}

impl PairGraph {
    fn new(top: &Topology) -> Self {
        let (n, m) = (top.num_states(), top.num_symbols());
        let succ = (0..n * n)
            .map(|node| {
                let (i, j) = (node / n, node % n);
                (0..m)
                    .map(|x| {
                        let mut out = Vec::new();
                        for &a in top.successors(i, x) {
                            for &b in top.successors(j, x) {
                                out.push(a * n + b);
                            }
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        Self { n, succ }
    }

    fn node(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    fn is_diagonal(&self, node: usize) -> bool {
        node / self.n == node % self.n
    }
}

/// Marks every path-mergeable pair with a worklist over reversed pair edges,
/// seeded by the diagonal. Witnesses are shortest merging words.
pub fn path_mergeable_pairs(top: &Topology) -> PairTable {
    let graph = PairGraph::new(top);
    let n = top.num_states();
    let mut pred: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n * n];
    for (u, by_symbol) in graph.succ.iter().enumerate() {
        for (x, targets) in by_symbol.iter().enumerate() {
            for &v in targets {
                pred[v].push((u, x));
            }
        }
    }
    // next[u] = (symbol, successor) on a shortest path to the diagonal
    let mut next: Vec<Option<(usize, usize)>> = vec![None; n * n];
    let mut marked = vec![false; n * n];
    let mut queue = VecDeque::new();
    for k in 0..n {
        let d = graph.node(k, k);
        marked[d] = true;
        queue.push_back(d);
    }
    while let Some(v) = queue.pop_front() {
        for &(u, x) in &pred[v] {
            if !marked[u] {
                marked[u] = true;
                next[u] = Some((x, v));
                queue.push_back(u);
            }
        }
    }
    let mut entries = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let start = graph.node(i, j);
            let entry = if marked[start] {
                let mut word = Vec::new();
                let mut u = start;
                while let Some((x, v)) = next[u] {
                    word.push(x);
                    u = v;
                }
                PairEntry {
                    status: PairStatus::Mergeable,
                    witness: Some(Witness::Merge { word, state: u / n }),
                }
            } else {
                PairEntry { status: PairStatus::NotMergeable, witness: None }
            };
            entries.insert((i, j), entry);
        }
    }
    PairTable { entries }
}

pub fn is_path_mergeable(top: &Topology) -> bool {
    path_mergeable_pairs(top).all(PairStatus::Mergeable)
}

/// The table-filling procedure run sweep by sweep: returns the marked set
/// after initialization and after each inductive sweep until nothing changes.
pub fn mergeable_sweeps(top: &Topology) -> Vec<BTreeSet<(usize, usize)>> {
    let (n, m) = (top.num_states(), top.num_symbols());
    let meets = |i: usize, j: usize, x: usize| top.successors(i, x).iter().any(|a| top.successors(j, x).contains(a));
    let mut marked: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if (0..m).any(|x| meets(i, j, x)) {
                marked.insert((i, j));
            }
        }
    }
    let mut history = vec![marked.clone()];
    loop {
        let mut grown = marked.clone();
        for i in 0..n {
            for j in i + 1..n {
                if marked.contains(&(i, j)) {
                    continue;
                }
                let hit = (0..m).any(|x| {
                    top.successors(i, x).iter().any(|&a| {
                        top.successors(j, x).iter().any(|&b| a != b && marked.contains(&(a.min(b), a.max(b))))
                    })
                });
                if hit {
                    grown.insert((i, j));
                }
            }
        }
        if grown == marked {
            return history;
        }
        marked = grown;
        history.push(marked.clone());
    }
}

/// Direct search over all words of length at most `max_len` for one with
/// `delta_i(w) ∩ delta_j(w) ≠ ∅`. With `max_len >= |S|^2` the answer is exact.
pub fn brute_force_mergeable(top: &Topology, i: usize, j: usize, max_len: usize) -> bool {
    fn search(top: &Topology, a: &[bool], b: &[bool], depth: usize) -> bool {
        if a.iter().zip(b).any(|(&p, &q)| p && q) {
            return true;
        }
        if depth == 0 {
            return false;
        }
        (0..top.num_symbols()).any(|x| {
            let (na, nb) = (top.step(a, x), top.step(b, x));
            na.contains(&true) && nb.contains(&true) && search(top, &na, &nb, depth - 1)
        })
    }
    let n = top.num_states();
    let (mut a, mut b) = (vec![false; n], vec![false; n]);
    a[i] = true;
    b[j] = true;
    search(top, &a, &b, max_len)
}

/// Shortest merging word for `(i, j)`, lexicographically least among the
/// shortest, with the least state it merges into.
pub fn merge_word(top: &Topology, i: usize, j: usize) -> Result<(Word, usize)> {
    if i == j {
        return Ok((Vec::new(), i));
    }
    let graph = PairGraph::new(top);
    let n = top.num_states();
    let start = graph.node(i, j);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n * n];
    let mut seen = vec![false; n * n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    // queue order within a layer follows the lexicographic order of the
    // nodes' least words, so the first diagonal found carries the answer
    while let Some(u) = queue.pop_front() {
        for (x, targets) in graph.succ[u].iter().enumerate() {
            for &v in targets {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                parent[v] = Some((x, u));
                if graph.is_diagonal(v) {
                    let mut word = Vec::new();
                    let mut w = v;
                    while let Some((x, p)) = parent[w] {
                        word.push(x);
                        w = p;
                    }
                    word.reverse();
                    let (di, dj) = (top.delta(i, &word), top.delta(j, &word));
                    let k = *di.intersection(&dj).next().expect("path certifies a common state");
                    return Ok((word, k));
                }
                queue.push_back(v);
            }
        }
    }
    Err(Error::NotMergeable(i, j))
}

/// Flag symbols per state and the default (smallest) choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagAssignment {
    /// All flag symbols of each state.
    pub flags: Vec<Vec<usize>>,
    /// The chosen flag `y_k` of each state, if it has one.
    pub chosen: Vec<Option<usize>>,
}

impl FlagAssignment {
    pub fn is_flag_state(&self) -> bool {
        self.chosen.iter().all(Option::is_some)
    }

    /// The chosen flags when every state has one.
    pub fn chosen_flags(&self) -> Option<Vec<usize>> {
        self.chosen.iter().copied().collect()
    }

    /// Same flag sets with a different choice per state.
    pub fn with_choice(&self, chosen: Vec<usize>) -> Result<Self> {
        for (k, y) in chosen.iter().enumerate() {
            if !self.flags.get(k).is_some_and(|f| f.contains(y)) {
                return Err(Error::NotFlagState(format!("symbol {y} is not a flag for state {k}")));
            }
        }
        if chosen.len() != self.flags.len() {
            return Err(Error::NotFlagState("assignment does not cover every state".into()));
        }
        Ok(Self { flags: self.flags.clone(), chosen: chosen.into_iter().map(Some).collect() })
    }
}

/// True when some state can emit `x` and every such state can move to `k` on it.
pub fn is_flag(top: &Topology, x: usize, k: usize) -> bool {
    let mut generators = (0..top.num_states()).filter(|&i| !top.successors(i, x).is_empty()).peekable();
    generators.peek().is_some() && generators.all(|i| top.successors(i, x).contains(&k))
}

pub fn flag_symbols(top: &Topology) -> FlagAssignment {
    let flags: Vec<Vec<usize>> = (0..top.num_states())
        .map(|k| (0..top.num_symbols()).filter(|&x| is_flag(top, x, k)).collect())
        .collect();
    let chosen = flags.iter().map(|f| f.first().copied()).collect();
    FlagAssignment { flags, chosen }
}

/// True when `word` is generable and every state generating it can reach `k` on it.
pub fn is_flag_word(top: &Topology, word: &[usize], k: usize) -> bool {
    let mut any = false;
    for i in 0..top.num_states() {
        let d = top.delta_mask(i, word);
        if d.contains(&true) {
            any = true;
            if !d[k] {
                return false;
            }
        }
    }
    any
}

/// Pairs whose shared generable words have bounded length. The witness is
/// the first length at which they share none.
pub fn incompatible_pairs(top: &Topology) -> PairTable {
    let graph = PairGraph::new(top);
    let n = top.num_states();
    // longest[u]: None while unvisited; Some(None) if a cycle is reachable
    let mut longest: Vec<Option<Option<usize>>> = vec![None; n * n];
    let mut on_stack = vec![false; n * n];
    fn visit(g: &PairGraph, u: usize, longest: &mut [Option<Option<usize>>], on_stack: &mut [bool]) -> Option<usize> {
        if let Some(v) = longest[u] {
            return v;
        }
        if on_stack[u] {
            return None;
        }
        on_stack[u] = true;
        let mut best = Some(0);
        for targets in &g.succ[u] {
            for &v in targets {
                best = match (best, visit(g, v, longest, on_stack)) {
                    (Some(b), Some(l)) => Some(b.max(l + 1)),
                    _ => None,
                };
            }
        }
        on_stack[u] = false;
        longest[u] = Some(best);
        best
    }
    let mut entries = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let entry = match visit(&graph, graph.node(i, j), &mut longest, &mut on_stack) {
                Some(len) => PairEntry { status: PairStatus::Incompatible, witness: Some(Witness::Length(len + 1)) },
                None => PairEntry { status: PairStatus::Compatible, witness: None },
            };
            entries.insert((i, j), entry);
        }
    }
    PairTable { entries }
}

/// Builds a flag word by repeatedly merging the current target with the
/// least remaining state, dropping states that already reach the target or
/// can no longer generate the word.
pub fn construct_flag_word(top: &Topology) -> Result<(Word, usize)> {
    if !is_path_mergeable(top) {
        return Err(Error::NotPathMergeable);
    }
    let n = top.num_states();
    let mut word: Word = Vec::new();
    let mut target = 0usize;
    let mut remaining: BTreeSet<usize> = (1..n).collect();
    while let Some(&k) = remaining.iter().next() {
        let j = top.delta(k, &word).into_iter().next().expect("remaining states generate the word");
        let (w, merged) = merge_word(top, target, j)?;
        word.extend(w);
        target = merged;
        remaining.retain(|&s| {
            let d = top.delta_mask(s, &word);
            d.contains(&true) && !d[target]
        });
    }
    Ok((word, target))
}
