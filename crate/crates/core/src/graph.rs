//! Undirected simple graphs, edge-list I/O and a seeded Barabási-Albert
//! generator.
//!
//! Nodes are labelled `0..n`. Adjacency is kept as sorted, deduplicated
//! neighbor lists so every consumer sees a canonical order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// A graph with `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from `(i, j)` pairs. Duplicates (in either orientation)
    /// collapse into one edge.
    pub fn from_edge_list<I>(edges: I, n: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        let n = self.node_count();
        for label in [i, j] {
            if label >= n {
                return Err(Error::NodeOutOfRange { label, n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        match self.adjacency[i].binary_search(&j) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adjacency[i].insert(pos, j);
                let pos = self.adjacency[j].binary_search(&i).unwrap_err();
                self.adjacency[j].insert(pos, i);
                Ok(true)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Neighbors of `i` in ascending label order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count() && self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Full scan of the symmetry and simplicity invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.node_count();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for w in nbrs.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidParams(format!(
                        "adjacency of {i} is not strictly sorted"
                    )));
                }
            }
            for &j in nbrs {
                if j >= n {
                    return Err(Error::NodeOutOfRange { label: j, n });
                }
                if j == i {
                    return Err(Error::SelfLoop(i));
                }
                if self.adjacency[j].binary_search(&i).is_err() {
                    return Err(Error::InvalidParams(format!("edge {i}-{j} is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Parses the whitespace-separated edge-list format. `#` starts a comment.
    /// When `n` is `None` the node count is the largest label plus one.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = |what: &str| -> Result<usize> {
                let tok = fields.next().ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    msg: format!("missing {what} label"),
                })?;
                tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad node label {tok:?}"),
                })
            };
            let i = next("first")?;
            let j = next("second")?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "expected exactly two labels".into(),
                });
            }
            edges.push((i, j));
        }
        let inferred = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        Self::from_edge_list(edges, n.unwrap_or(inferred))
    }

    /// Renders one `i j` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.node_count(),
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        Self::from_edge_list(json.edges.iter().map(|e| (e[0], e[1])), json.n)
    }
}

/// JSON form `{ "n": int, "edges": [[i, j], ...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeHistogram {
    pub counts: BTreeMap<usize, usize>,
    /// Power-law exponent from a least-squares fit of `ln count` on `ln k`,
    /// present only when at least three distinct positive degrees occur.
    pub exponent: Option<f64>,
}

impl DegreeHistogram {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn degree_histogram(g: &Graph) -> DegreeHistogram {
    let mut counts = BTreeMap::new();
    for d in g.degrees() {
        *counts.entry(d).or_insert(0) += 1;
    }
    let points: Vec<(f64, f64)> = counts
        .iter()
        .filter(|(&k, _)| k > 0)
        .map(|(&k, &c)| ((k as f64).ln(), (c as f64).ln()))
        .collect();
    let exponent = (points.len() >= 3).then(|| -least_squares_slope(&points));
    DegreeHistogram { counts, exponent }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Barabási-Albert parameters. `m0` is the number of seed nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaParams {
    pub n: usize,
    pub m: usize,
    pub m0: usize,
    pub seed: u64,
}

impl BaParams {
    /// Parameters with the default seed size `m0 = m`.
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self { n, m, m0: m, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if self.m > self.m0 {
            return Err(Error::InvalidParams(format!(
                "m = {} exceeds m0 = {}",
                self.m, self.m0
            )));
        }
        if self.m0 >= self.n {
            return Err(Error::InvalidParams(format!(
                "m0 = {} must be below n = {}",
                self.m0, self.n
            )));
        }
        Ok(())
    }

    /// Edge count produced by [`generate_ba`].
    pub fn expected_edges(&self) -> usize {
        let seed_edges = if self.m0 == self.m {
            0
        } else {
            self.m0 * (self.m0 - 1) / 2
        };
        seed_edges + self.m * (self.n - self.m0)
    }
}

/// Grows a Barabási-Albert graph.
///
/// With `m0 == m` the seed nodes start unconnected and the first arriving
/// node links to all of them; with `m0 > m` the seed is a clique. Every later
/// node picks `m` distinct targets, each draw landing on node `i` with
/// probability `k_i / sum k` (duplicates are redrawn).
///
/// Randomness comes from `ChaCha8Rng::seed_from_u64(seed)` so a seed names
/// the same graph on every platform.
pub fn generate_ba(params: &BaParams) -> Result<Graph> {
    params.validate()?;
    let BaParams { n, m, m0, seed } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(n);
    // Each node appears once per incident edge, so a uniform draw from this
    // pool is a degree-proportional draw.
    let mut pool: Vec<usize> = Vec::with_capacity(2 * params.expected_edges());

    let first_new = if m0 == m {
        for t in 0..m0 {
            g.add_edge(m0, t)?;
            pool.extend([m0, t]);
        }
        m0 + 1
    } else {
        for i in 0..m0 {
            for j in i + 1..m0 {
                g.add_edge(i, j)?;
                pool.extend([i, j]);
            }
        }
        m0
    };

    let mut targets = Vec::with_capacity(m);
    for v in first_new..n {
        targets.clear();
        while targets.len() < m {
            let t = pool[rng.random_range(0..pool.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            g.add_edge(v, t)?;
            pool.extend([v, t]);
        }
    }
    Ok(g)
}

/// Built-in graphs with published adjacency.
pub mod fixtures {
    use super::Graph;

    /// Four-node bridge network: 0-1, 0-2, 1-2, 1-3, 2-3.
    pub fn bridge() -> Graph {
        Graph::from_edge_list([(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], 4)
            .expect("static fixture")
    }

    /// Eight-node, twelve-edge preferential-attachment network used in the
    /// worked propagation tables.
    pub fn ba8() -> Graph {
        Graph::from_edge_list(
            [
                (0, 3),
                (0, 2),
                (1, 5),
                (1, 3),
                (2, 7),
                (2, 3),
                (3, 6),
                (3, 5),
                (3, 4),
                (4, 5),
                (5, 7),
                (6, 7),
            ],
            8,
        )
        .expect("static fixture")
    }

    /// Looks up a fixture by its CLI name.
    pub fn by_name(name: &str) -> Option<Graph> {
        match name {
            "fig6" | "bridge" => Some(bridge()),
            "fig7" | "ba8" => Some(ba8()),
            _ => None,
        }
    }

    pub const NAMES: &[&str] = &["fig6", "fig7"];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_degrees() {
        let g = fixtures::bridge();
        assert_eq!(g.degrees(), vec![2, 3, 3, 2]);
        assert_eq!(g.edge_count(), 5);
        g.check_invariants().unwrap();
    }

    #[test]
    fn ba8_degrees_and_histogram() {
        let g = fixtures::ba8();
        assert_eq!(g.degrees(), vec![2, 2, 3, 6, 2, 4, 2, 3]);
        assert_eq!(g.edge_count(), 12);
        let h = degree_histogram(&g);
        let expected: BTreeMap<_, _> = [(2, 4), (3, 2), (4, 1), (6, 1)].into_iter().collect();
        assert_eq!(h.counts, expected);
        assert!(h.exponent.is_some());
    }

    #[test]
    fn complete_graph_histogram() {
        let edges = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j)));
        let g = Graph::from_edge_list(edges, 4).unwrap();
        let h = degree_histogram(&g);
        assert_eq!(h.counts.into_iter().collect::<Vec<_>>(), vec![(3, 4)]);
        assert_eq!(h.exponent, None);
    }

    #[test]
    fn single_isolated_node() {
        let g = Graph::from_edge_list(std::iter::empty(), 1).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicates_collapse() {
        let g = Graph::from_edge_list([(0, 1), (1, 0), (0, 1)], 2).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_list_errors() {
        assert_eq!(
            Graph::from_edge_list([(0, 4)], 4),
            Err(Error::NodeOutOfRange { label: 4, n: 4 })
        );
        assert_eq!(Graph::from_edge_list([(2, 2)], 4), Err(Error::SelfLoop(2)));
    }

    #[test]
    fn parse_with_comments() {
        let text = "# header\n0 1\n\n1 2 # trailing\n  2 0\n";
        let g = Graph::parse_edge_list(text, None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        let g = Graph::parse_edge_list(text, Some(5)).unwrap();
        assert_eq!(g.node_count(), 5);
        assert!(matches!(
            Graph::parse_edge_list("0 x\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Graph::parse_edge_list("0 1 2\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn edge_list_text_and_json() {
        let g = fixtures::ba8();
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list(), None).unwrap(), g);
        let json = serde_json::to_string(&g.to_json()).unwrap();
        assert!(json.starts_with(r#"{"n":8,"edges":[[0,2],[0,3]"#));
        let back: GraphJson = serde_json::from_str(&json).unwrap();
        assert_eq!(Graph::from_json(&back).unwrap(), g);
    }

    #[test]
    fn ba_eight_nodes_twelve_edges() {
        for seed in 0..20 {
            let g = generate_ba(&BaParams::new(8, 2, seed)).unwrap();
            assert_eq!(g.node_count(), 8);
            assert_eq!(g.edge_count(), 12);
            assert!(g.is_connected());
            g.check_invariants().unwrap();
        }
    }

    #[test]
    fn ba_m1_is_tree() {
        let g = generate_ba(&BaParams::new(3, 1, 0)).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_connected());
    }

    #[test]
    fn ba_handshake() {
        let g = generate_ba(&BaParams::new(10, 2, 0)).unwrap();
        // count edges independently from the adjacency scan
        let mut independent = 0;
        for i in 0..10 {
            for j in i + 1..10 {
                if g.has_edge(i, j) {
                    independent += 1;
                }
            }
        }
        assert_eq!(g.degrees().iter().sum::<usize>(), 2 * independent);
        assert_eq!(independent, 16);
    }

    #[test]
    fn ba_clique_seed() {
        let p = BaParams {
            n: 12,
            m: 2,
            m0: 4,
            seed: 5,
        };
        let g = generate_ba(&p).unwrap();
        assert_eq!(g.edge_count(), 6 + 2 * 8);
        assert_eq!(g.edge_count(), p.expected_edges());
        assert!(g.is_connected());
    }

    #[test]
    fn ba_reproducible() {
        let p = BaParams::new(50, 2, 7);
        assert_eq!(generate_ba(&p).unwrap(), generate_ba(&p).unwrap());
        assert_eq!(degree_histogram(&generate_ba(&p).unwrap()).total(), 50);
        let other = generate_ba(&BaParams::new(50, 2, 8)).unwrap();
        assert_ne!(generate_ba(&p).unwrap(), other);
    }

    #[test]
    fn ba_invalid_params() {
        let bad = |n, m, m0| {
            generate_ba(&BaParams {
                n,
                m,
                m0,
                seed: 0,
            })
        };
        assert!(matches!(bad(8, 3, 2), Err(Error::InvalidParams(_))));
        assert!(matches!(bad(4, 2, 4), Err(Error::InvalidParams(_))));
        assert!(matches!(bad(4, 0, 1), Err(Error::InvalidParams(_))));
    }
}
