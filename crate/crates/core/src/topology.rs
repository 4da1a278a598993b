//! Labeled directed graphs: the support of an HMM without its probabilities.
//!
//! Every reachability notion in the crate (`delta`, path-mergeability, flag
//! symbols, incompatibility) is evaluated here, on booleans only.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// A labeled edge `(from, to, symbol)`, all as indices.
pub type Edge = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    states: Vec<String>,
    alphabet: Vec<String>,
    edges: BTreeSet<Edge>,
    // succ[state][symbol] -> sorted targets
    succ: Vec<Vec<Vec<usize>>>,
}

impl Topology {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        let n = states.len();
        let m = alphabet.len();
        let mut set = BTreeSet::new();
        for (i, j, x) in edges {
            if i >= n || j >= n {
                return Err(Error::BadReference(format!("edge ({i},{j}) outside {n} states")));
            }
            if x >= m {
                return Err(Error::BadReference(format!("symbol index {x} outside alphabet of {m}")));
            }
            set.insert((i, j, x));
        }
        let mut succ = vec![vec![Vec::new(); m]; n];
        for &(i, j, x) in &set {
            succ[i][x].push(j);
        }
        Ok(Self { states, alphabet, edges: set, succ })
    }

    /// Topology with states `0..n` and symbols `0..m` named by their indices.
    pub fn indexed(n: usize, m: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        Self::new(
            (1..=n).map(|i| i.to_string()).collect(),
            (0..m).map(symbol_name).collect(),
            edges,
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

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn successors(&self, state: usize, symbol: usize) -> &[usize] {
        &self.succ[state][symbol]
    }

    /// One step of the subset construction: states reachable from `set` on `symbol`.
    pub fn step(&self, set: &[bool], symbol: usize) -> Vec<bool> {
        let mut out = vec![false; self.num_states()];
        for (i, _) in set.iter().enumerate().filter(|(_, &b)| b) {
            for &j in &self.succ[i][symbol] {
                out[j] = true;
            }
        }
        out
    }

    /// `delta_i(w)`: the states `state` can reach while emitting `word`.
    pub fn delta(&self, state: usize, word: &[usize]) -> BTreeSet<usize> {
        to_set(&self.delta_mask(state, word))
    }

    pub fn delta_mask(&self, state: usize, word: &[usize]) -> Vec<bool> {
        let mut set = vec![false; self.num_states()];
        set[state] = true;
        for &x in word {
            set = self.step(&set, x);
            if !set.iter().any(|&b| b) {
                break;
            }
        }
        set
    }

    /// True when some state can emit `word`.
    pub fn generates(&self, word: &[usize]) -> bool {
        (0..self.num_states()).any(|i| self.delta_mask(i, word).iter().any(|&b| b))
    }

    /// Symbol-erased adjacency lists.
    pub fn state_graph(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.num_states()];
        for &(i, j, _) in &self.edges {
            adj[i].insert(j);
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Strong connectivity of the symbol-erased graph.
    pub fn irreducible(&self) -> bool {
        let n = self.num_states();
        if n == 0 {
            return false;
        }
        let adj = self.state_graph();
        let mut rev = vec![Vec::new(); n];
        for (i, targets) in adj.iter().enumerate() {
            for &j in targets {
                rev[j].push(i);
            }
        }
        let all = |g: &[Vec<usize>]| bfs_levels(g, 0).iter().all(Option::is_some);
        // a single state still needs a self-loop to carry a Markov chain
        all(&adj) && all(&rev) && !self.edges.is_empty()
    }

    /// gcd of all cycle lengths, from BFS level differences along every edge.
    pub fn period(&self) -> Result<usize> {
        if !self.irreducible() {
            return Err(Error::NotIrreducible);
        }
        let adj = self.state_graph();
        let level = bfs_levels(&adj, 0);
        let mut g = 0usize;
        for (i, targets) in adj.iter().enumerate() {
            let li = level[i].expect("irreducible");
            for &j in targets {
                let lj = level[j].expect("irreducible");
                g = gcd(g, (li + 1).abs_diff(lj));
            }
        }
        Ok(g.max(1))
    }

    /// Outgoing edge count per state.
    pub fn out_degree(&self, state: usize) -> usize {
        self.succ[state].iter().map(Vec::len).sum()
    }
}

/// Default name for symbol index `x`: `a`, `b`, ..., `z`, `s26`, ...
pub fn symbol_name(x: usize) -> String {
    if x < 26 {
        ((b'a' + x as u8) as char).to_string()
    } else {
        format!("s{x}")
    }
}

pub fn to_set(mask: &[bool]) -> BTreeSet<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bfs_levels(adj: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}
