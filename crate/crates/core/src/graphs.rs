//! MaxCut instances: graph generation, cut quality, dense quality tables and
//! exact brute-force optima.
//!
//! Bitstrings are packed into a `u64` index with vertex `i` stored in bit `i`,
//! which is also the qubit ordering used by the simulator.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::rng;
use crate::DEFAULT_MAX_QUBITS;

/// Goemans–Williamson worst-case approximation guarantee.
pub const GW_THRESHOLD: f64 = 0.8786;
/// Best known classical guarantee restricted to 3-regular graphs.
pub const GW_THRESHOLD_3_REGULAR: f64 = 0.9326;

const REGULAR_MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least one vertex")]
    Empty,
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge weight must be finite, got {0}")]
    BadWeight(f64),
    #[error("edge probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("no simple {d}-regular graph on {n} vertices (need n*d even and d < n)")]
    InfeasibleDegree { n: usize, d: usize },
    #[error("failed to sample a simple {d}-regular graph on {n} vertices after {attempts} attempts")]
    RegularSamplingExhausted { n: usize, d: usize, attempts: usize },
    #[error("bitstring has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{n} vertices exceeds the dense-table limit of {max}")]
    SizeLimit { n: usize, max: usize },
    #[error("approximation ratio undefined: optimum quality is zero")]
    ZeroOptimum,
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Simple undirected graph with per-edge weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl Graph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        Ok(Graph { n, edges: Vec::new(), weights: Vec::new() })
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_weighted_edges(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    pub fn from_weighted_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = Graph::new(n)?;
        let mut seen = HashSet::new();
        for (u, v, w) in edges {
            g.check_edge(u, v, w)?;
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            g.edges.push(key);
            g.weights.push(w);
        }
        Ok(g)
    }

    fn check_edge(&self, u: usize, v: usize, w: f64) -> Result<()> {
        for vertex in [u, v] {
            if vertex >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !w.is_finite() {
            return Err(GraphError::BadWeight(w));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        self.check_edge(u, v, w)?;
        let key = (u.min(v), u.max(v));
        if self.edges.contains(&key) {
            return Err(GraphError::DuplicateEdge(key.0, key.1));
        }
        self.edges.push(key);
        self.weights.push(w);
        Ok(())
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Self::path(n);
        }
        Self::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Cut quality of the packed bitstring `x` (bit `i` = side of vertex `i`).
    #[inline]
    pub fn cut_value(&self, x: u64) -> f64 {
        self.edges
            .iter()
            .zip(&self.weights)
            .filter(|(&(u, v), _)| ((x >> u) ^ (x >> v)) & 1 == 1)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Parses the text format: `n m` on the first data line, then `m` lines
    /// `u v [w]`. Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(GraphError::Parse { line: 0, msg: "missing header".into() })?;
        let nums: Vec<&str> = header.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(GraphError::Parse { line: hline, msg: "expected `n m`".into() });
        }
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|e| GraphError::Parse { line, msg: format!("{s:?}: {e}") })
        };
        let n = parse_usize(nums[0], hline)?;
        let m = parse_usize(nums[1], hline)?;
        let mut g = Graph::new(n)?;
        let mut seen = HashSet::new();
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 2 && f.len() != 3 {
                return Err(GraphError::Parse { line, msg: "expected `u v [w]`".into() });
            }
            let u = parse_usize(f[0], line)?;
            let v = parse_usize(f[1], line)?;
            let w = match f.get(2) {
                Some(s) => s.parse::<f64>().map_err(|e| GraphError::Parse { line, msg: format!("{s:?}: {e}") })?,
                None => 1.0,
            };
            g.check_edge(u, v, w)?;
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            g.edges.push(key);
            g.weights.push(w);
        }
        if g.edges.len() != m {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header declares {m} edges, found {}", g.edges.len()),
            });
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for (&(u, v), &w) in self.edges.iter().zip(&self.weights) {
            if w == 1.0 {
                out.push_str(&format!("{u} {v}\n"));
            } else {
                out.push_str(&format!("{u} {v} {w}\n"));
            }
        }
        out
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Erdős–Rényi G(n, p): every pair is included independently.
pub fn gen_er(n: usize, p_edge: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(GraphError::BadProbability(p_edge));
    }
    let mut g = Graph::new(n)?;
    let mut rng = rng::stream(seed, "graph/er", &[n as u64]);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p_edge {
                g.edges.push((u, v));
                g.weights.push(1.0);
            }
        }
    }
    Ok(g)
}

/// Uniform-ish random simple `d`-regular graph via the pairing model,
/// rejecting any pairing that produces a loop or a multi-edge.
pub fn gen_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if (n * d) % 2 == 1 || d >= n {
        return Err(GraphError::InfeasibleDegree { n, d });
    }
    let mut rng = rng::stream(seed, "graph/regular", &[n as u64, d as u64]);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..REGULAR_MAX_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut seen = HashSet::with_capacity(stubs.len() / 2);
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        edges.sort_unstable();
        let weights = vec![1.0; edges.len()];
        return Ok(Graph { n, edges, weights });
    }
    Err(GraphError::RegularSamplingExhausted { n, d, attempts: REGULAR_MAX_ATTEMPTS })
}

/// Quality of an explicit bitstring; `x[i]` is the side of vertex `i`.
pub fn quality(g: &Graph, x: &[bool]) -> Result<f64> {
    if x.len() != g.n {
        return Err(GraphError::LengthMismatch { expected: g.n, got: x.len() });
    }
    Ok(g.edges
        .iter()
        .zip(&g.weights)
        .filter(|(&(u, v), _)| x[u] != x[v])
        .map(|(_, &w)| w)
        .sum())
}

pub fn bits_to_index(x: &[bool]) -> u64 {
    x.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
}

pub fn index_to_bits(x: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (x >> i) & 1 == 1).collect()
}

fn check_size(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(GraphError::SizeLimit { n, max })
    } else {
        Ok(())
    }
}

/// Dense diagonal of the MaxCut observable: `values[x] = q(x)` for all `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityTable {
    n: usize,
    values: Vec<f64>,
    q_max: f64,
    mu: f64,
    sigma: f64,
}

impl QualityTable {
    pub fn build(g: &Graph) -> Result<Self> {
        Self::build_with(g, DEFAULT_MAX_QUBITS, Exec::default())
    }

    pub fn build_with(g: &Graph, max_n: usize, exec: Exec) -> Result<Self> {
        check_size(g.n, max_n)?;
        let mut values = vec![0.0; 1usize << g.n];
        exec.fill(&mut values, |x| g.cut_value(x as u64));
        Ok(Self::from_values_unchecked(g.n, values))
    }

    /// Wraps an arbitrary real diagonal of length `2^n`.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        check_size(n, DEFAULT_MAX_QUBITS)?;
        if values.len() != 1usize << n {
            return Err(GraphError::LengthMismatch { expected: 1 << n, got: values.len() });
        }
        Ok(Self::from_values_unchecked(n, values))
    }

    fn from_values_unchecked(n: usize, values: Vec<f64>) -> Self {
        let len = values.len() as f64;
        let mu = values.iter().sum::<f64>() / len;
        let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / len;
        let q_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        QualityTable { n, values, q_max, mu, sigma: var.sqrt() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    /// Mean of `q` over all bitstrings.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Population standard deviation of `q` over all bitstrings.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Monte Carlo estimate of the quality standard deviation from uniformly
/// random bitstrings; for instances too large for a dense table.
pub fn estimate_sigma(g: &Graph, samples: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, "graph/sigma", &[g.n as u64]);
    let mask = if g.n >= 64 { u64::MAX } else { (1u64 << g.n) - 1 };
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let q = g.cut_value(rng.random::<u64>() & mask);
        sum += q;
        sq += q * q;
    }
    let m = samples as f64;
    let mean = sum / m;
    (sq / m - mean * mean).max(0.0).sqrt()
}

/// Exact optimum with a maximizing bitstring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxcutSolution {
    pub q_max: f64,
    /// Packed maximizer with bit 0 equal to 0.
    pub witness: u64,
    pub n: usize,
}

impl MaxcutSolution {
    pub fn witness_bits(&self) -> Vec<bool> {
        index_to_bits(self.witness, self.n)
    }
}

impl fmt::Display for MaxcutSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = self.witness_bits().iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "q_max = {} witness = {}", self.q_max, bits)
    }
}

pub fn brute_force_maxcut(g: &Graph) -> Result<MaxcutSolution> {
    brute_force_maxcut_with(g, DEFAULT_MAX_QUBITS, Exec::default())
}

/// Scans the `2^(n-1)` bitstrings with vertex 0 on side 0. The range is cut
/// into fixed blocks, each reporting its first maximizer; blocks are reduced
/// in index order so the witness does not depend on the execution mode.
pub fn brute_force_maxcut_with(g: &Graph, max_n: usize, exec: Exec) -> Result<MaxcutSolution> {
    check_size(g.n, max_n)?;
    const BLOCK_BITS: usize = 12;
    let half = 1u64 << (g.n - 1);
    let block = 1u64 << BLOCK_BITS.min(g.n - 1);
    let blocks = (half / block) as usize;
    let partial = exec.map_range(blocks, |b| {
        let start = b as u64 * block;
        let mut best = (f64::NEG_INFINITY, 0u64);
        for y in start..start + block {
            let x = y << 1;
            let q = g.cut_value(x);
            if q > best.0 {
                best = (q, x);
            }
        }
        best
    });
    let (q_max, witness) = partial
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |acc, cand| if cand.0 > acc.0 { cand } else { acc });
    Ok(MaxcutSolution { q_max, witness, n: g.n })
}

/// `q_found / q_max`.
pub fn approx_ratio(q_found: f64, q_max: f64) -> Result<f64> {
    if q_max <= 0.0 {
        return Err(GraphError::ZeroOptimum);
    }
    Ok(q_found / q_max)
}
