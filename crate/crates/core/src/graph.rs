//! Rated undirected graphs and the named families used throughout the crate.
//!
//! Vertices are `0..n`. Edges are stored canonically (`u < v`, sorted
//! lexicographically) so that every derived artifact is deterministic.
//!
//! The two-layer construction used for the monotonicity counterexample maps
//! its 1-based labels `1..=2n` onto `0..2n`; the odd labels `1, 3, ...` of
//! the lower half become the even indices `0, 2, ...` below `n`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with its swap rate (units of 1/time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph from `(u, v, rate)` triples.
    ///
    /// Either orientation is accepted; self-loops, duplicate pairs,
    /// out-of-range endpoints and non-positive rates are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 vertices, got {n}")));
        }
        if n > 63 {
            return Err(Error::invalid("n", format!("at most 63 vertices supported, got {n}")));
        }
        let mut map = BTreeMap::new();
        for (a, b, rate) in edges {
            let (u, v) = (a.min(b), a.max(b));
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if u == v {
                return Err(Error::invalid("edges", format!("self-loop at vertex {u}")));
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::invalid(
                    "rate",
                    format!("edge ({u},{v}) has non-positive rate {rate}"),
                ));
            }
            if map.insert((u, v), rate).is_some() {
                return Err(Error::invalid("edges", format!("duplicate edge ({u},{v})")));
            }
        }
        let edges = map.into_iter().map(|((u, v), rate)| Edge { u, v, rate }).collect();
        Ok(Self { n, edges })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Largest vertex degree, `d` in the eigenvalue bound `2 * rate * level * d`.
    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2
    }

    /// The common rate if every edge carries the same one.
    pub fn uniform_rate(&self) -> Option<f64> {
        let first = self.edges.first()?.rate;
        self.edges.iter().all(|e| e.rate == first).then_some(first)
    }

    pub fn with_uniform_rate(&self, rate: f64) -> Result<Graph> {
        Graph::new(self.n, self.edges.iter().map(|e| (e.u, e.v, rate)))
    }

    /// Same edges, rate `1 / max_degree`.
    pub fn with_inverse_degree_rate(&self) -> Result<Graph> {
        self.with_uniform_rate(1.0 / self.max_degree() as f64)
    }

    pub fn total_rate(&self) -> f64 {
        self.edges.iter().map(|e| e.rate).sum()
    }

    /// Unrated edge set.
    pub fn edge_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.u, e.v)).collect()
    }

    /// True if every edge of `sub` is an edge of `self` with the same rate.
    pub fn contains_rated_edges_of(&self, sub: &Graph) -> bool {
        if sub.n != self.n {
            return false;
        }
        let rates: BTreeMap<(usize, usize), f64> = self.edges.iter().map(|e| ((e.u, e.v), e.rate)).collect();
        sub.edges.iter().all(|e| {
            rates
                .get(&(e.u, e.v))
                .is_some_and(|&r| (r - e.rate).abs() <= 1e-12 * r.max(e.rate))
        })
    }

    /// Stable 64-bit FNV-1a hash of the vertex count and rated edge list.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(&(self.n as u64).to_le_bytes());
        for e in &self.edges {
            feed(&(e.u as u64).to_le_bytes());
            feed(&(e.v as u64).to_le_bytes());
            feed(&e.rate.to_bits().to_le_bytes());
        }
        h
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            n: self.n,
            edges: self.edges.iter().map(|e| (e.u, e.v, e.rate)).collect(),
        };
        serde_json::to_string(&file).expect("graph serializes")
    }

    /// Parses `{"n": <int>, "edges": [[u, v, rate], ...]}`.
    ///
    /// Edges must already be canonical (`u < v`). Errors carry the line of
    /// the offending entry.
    pub fn from_json_str(text: &str) -> Result<Graph> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let top = |message: &str| Error::Parse {
            line: 1,
            message: message.to_string(),
        };
        let obj = raw.as_object().ok_or_else(|| top("expected a JSON object"))?;
        let n = obj
            .get("n")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Parse {
                line: key_line(text, "n"),
                message: "`n` must be a non-negative integer".into(),
            })? as usize;
        let edges = obj
            .get("edges")
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| Error::Parse {
                line: key_line(text, "edges"),
                message: "`edges` must be an array".into(),
            })?;
        let lines = array_element_lines(text, "edges");
        let mut triples = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for (i, entry) in edges.iter().enumerate() {
            let line = lines.get(i).copied().unwrap_or(1);
            let bad = |message: String| Error::Parse { line, message };
            let parts = entry
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| bad(format!("edge {i}: expected [u, v, rate]")))?;
            let u = parts[0]
                .as_u64()
                .ok_or_else(|| bad(format!("edge {i}: u must be a non-negative integer")))?
                as usize;
            let v = parts[1]
                .as_u64()
                .ok_or_else(|| bad(format!("edge {i}: v must be a non-negative integer")))?
                as usize;
            let rate = parts[2]
                .as_f64()
                .ok_or_else(|| bad(format!("edge {i}: rate must be a number")))?;
            if u >= v {
                return Err(bad(format!("edge {i}: need u < v, got ({u},{v})")));
            }
            if v >= n {
                return Err(bad(format!("edge {i}: vertex {v} out of range for n = {n}")));
            }
            if rate <= 0.0 {
                return Err(bad(format!("edge {i}: rate must be positive, got {rate}")));
            }
            if !seen.insert((u, v)) {
                return Err(bad(format!("edge {i}: duplicate edge ({u},{v})")));
            }
            triples.push((u, v, rate));
        }
        Graph::new(n, triples)
    }
}

#[derive(Serialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte].bytes().filter(|&b| b == b'\n').count() + 1
}

fn key_line(text: &str, key: &str) -> usize {
    text.find(&format!("\"{key}\"")).map_or(1, |pos| line_of(text, pos))
}

/// Line numbers of the top-level elements of the array stored under `key`.
fn array_element_lines(text: &str, key: &str) -> Vec<usize> {
    let Some(key_pos) = text.find(&format!("\"{key}\"")) else {
        return Vec::new();
    };
    let Some(open) = text[key_pos..].find('[').map(|p| p + key_pos) else {
        return Vec::new();
    };
    let mut lines = Vec::new();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    let mut expect_element = false;
    let mut line = line_of(text, open);
    for c in text[open..].chars() {
        if c == '\n' {
            line += 1;
        }
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        if expect_element && depth == 1 && !c.is_whitespace() && c != ']' {
            lines.push(line);
            expect_element = false;
        }
        match c {
            '"' => in_string = true,
            '[' | '{' => {
                depth += 1;
                if depth == 1 {
                    expect_element = true;
                }
            }
            ']' | '}' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            ',' if depth == 1 => expect_element = true,
            _ => {}
        }
    }
    lines
}

/// `K_n` with every edge at `rate`.
pub fn make_complete(n: usize, rate: f64) -> Result<Graph> {
    check_rate(rate)?;
    if n < 2 {
        return Err(Error::invalid("n", format!("complete graph needs n >= 2, got {n}")));
    }
    let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v, rate)));
    Graph::new(n, edges)
}

/// Cycle `0 - 1 - ... - (n-1) - 0`.
pub fn make_cycle(n: usize, rate: f64) -> Result<Graph> {
    check_rate(rate)?;
    if n < 3 {
        return Err(Error::invalid("n", format!("cycle needs n >= 3, got {n}")));
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n, rate)))
}

/// Cycle on `2 * half` vertices plus every chord among the upper half
/// `half..2*half`.
pub fn make_half_complete_cycle(half: usize, rate: f64) -> Result<Graph> {
    check_rate(rate)?;
    if half < 2 {
        return Err(Error::invalid("n", format!("half-size must be >= 2, got {half}")));
    }
    let n = 2 * half;
    let mut pairs: BTreeSet<(usize, usize)> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            (i.min(j), i.max(j))
        })
        .collect();
    for u in half..n {
        for v in (u + 1)..n {
            pairs.insert((u, v));
        }
    }
    Graph::new(n, pairs.into_iter().map(|(u, v)| (u, v, rate)))
}

/// Random connected graph: a uniformly shuffled spanning path-tree plus each
/// remaining pair independently with probability `extra_edge_prob`.
pub fn random_connected<R: Rng + ?Sized>(n: usize, extra_edge_prob: f64, rate: f64, rng: &mut R) -> Result<Graph> {
    check_rate(rate)?;
    if n < 2 {
        return Err(Error::invalid("n", format!("need n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&extra_edge_prob) {
        return Err(Error::invalid(
            "p",
            format!("probability out of range: {extra_edge_prob}"),
        ));
    }
    let mut pairs = BTreeSet::new();
    // random recursive tree: vertex i attaches to a uniformly chosen earlier vertex
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        let child = order[i];
        pairs.insert((parent.min(child), parent.max(child)));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if !pairs.contains(&(u, v)) && rng.random_bool(extra_edge_prob) {
                pairs.insert((u, v));
            }
        }
    }
    Graph::new(n, pairs.into_iter().map(|(u, v)| (u, v, rate)))
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("rate", format!("must be positive, got {rate}")))
    }
}
