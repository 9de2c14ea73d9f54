//! Per-node propagation states.
//!
//! A node `i` with `Deg(i) = m` has `2^m` states. State `k` is identified
//! with the `m`-bit binary label of `k`; its most significant bit stands for
//! the largest neighbor label, its least significant bit for the smallest.
//! State 0 propagates to nobody.
//!
//! The PageRank mass of a non-empty state is the sum of the scores of the
//! neighbors it selects. The empty state gets half the smallest neighbor
//! score. Normalizing the masses over all states gives the state
//! probabilities.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rank::RankVector;
use crate::scalar::{round_to, Scalar};

/// Largest supported degree; a node of this degree has 2^30 states.
pub const MAX_STATE_BITS: usize = 30;

/// Fixed-length binary label, most significant coordinate first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector(Vec<bool>);

impl BinaryVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![false; m])
    }

    /// The `m`-bit label of `k`.
    pub fn from_index(k: usize, m: usize) -> Self {
        Self((0..m).rev().map(|b| k >> b & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Integer value of the label read as a binary number.
    pub fn value(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| acc << 1 | b as usize)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BinaryVector {
    /// Renders as `[1 0 1]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (p, &b) in self.0.iter().enumerate() {
            if p > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

/// Enumerates all `2^m` binary vectors by repeated binary addition, starting
/// at the zero vector and stopping once every coordinate is one.
pub fn bat_enumerate(m: usize) -> Result<Vec<BinaryVector>> {
    if m > MAX_STATE_BITS {
        return Err(Error::TooLarge {
            what: "vector length",
            got: m,
            limit: MAX_STATE_BITS,
        });
    }
    let mut x = vec![false; m];
    let mut out = Vec::with_capacity(1 << m);
    out.push(BinaryVector(x.clone()));
    let mut sum = 0;
    while sum < m {
        // add one at the last coordinate, carrying leftwards
        let mut i = m;
        loop {
            if !x[i - 1] {
                x[i - 1] = true;
                sum += 1;
                out.push(BinaryVector(x.clone()));
                break;
            }
            // i > 1 always holds here: the all-ones vector ends the outer loop
            x[i - 1] = false;
            sum -= 1;
            i -= 1;
        }
    }
    Ok(out)
}

/// Neighbors of `i` in descending label order.
pub fn neighbors_desc(g: &Graph, i: usize) -> Vec<usize> {
    g.neighbors(i).iter().rev().copied().collect()
}

/// The neighbors selected by state `k` of node `i`, largest label first.
pub fn state_members(i: usize, k: usize, g: &Graph) -> Result<Vec<usize>> {
    let nbrs = neighbors_desc(g, i);
    let m = nbrs.len();
    if m > MAX_STATE_BITS || k >> m != 0 {
        return Err(Error::IndexOutOfRange {
            node: i,
            index: k,
            count: 1usize.checked_shl(m as u32).unwrap_or(0),
        });
    }
    Ok(members_of(&nbrs, k).collect())
}

/// Members of state `k` given the descending neighbor list.
#[inline]
pub(crate) fn members_of(desc: &[usize], k: usize) -> impl Iterator<Item = usize> + '_ {
    let m = desc.len();
    desc.iter()
        .enumerate()
        .filter(move |(p, _)| k >> (m - 1 - p) & 1 == 1)
        .map(|(_, &j)| j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeStateTable<T> {
    pub node: usize,
    pub neighbors_desc: Vec<usize>,
    /// PageRank mass of each state.
    pub state_pr: Vec<T>,
    /// Normalized state probabilities.
    pub state_prob: Vec<T>,
    pub max_state_pr: T,
}

impl<T: Scalar> NodeStateTable<T> {
    pub fn degree(&self) -> usize {
        self.neighbors_desc.len()
    }

    /// `C(i) = 2^Deg(i)`.
    pub fn state_count(&self) -> usize {
        1 << self.degree()
    }

    pub fn members(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        members_of(&self.neighbors_desc, k)
    }

    pub fn mass_sum(&self) -> T {
        self.state_pr.iter().copied().sum()
    }

    pub fn to_json(&self) -> StateTableJson {
        let m = self.degree();
        let states = (0..self.state_count())
            .map(|k| StateJson {
                index: k,
                members: self.members(k).collect(),
                binary: BinaryVector::from_index(k, m).to_string(),
                pr: round_to(self.state_pr[k].as_f64(), 6),
                prob: round_to(self.state_prob[k].as_f64(), 6),
            })
            .collect();
        StateTableJson {
            node: self.node,
            neighbors: self.neighbors_desc.clone(),
            state_count: self.state_count(),
            max_state_pr: round_to(self.max_state_pr.as_f64(), 6),
            pr_sum: round_to(self.mass_sum().as_f64(), 6),
            states,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateTableJson {
    pub node: usize,
    pub neighbors: Vec<usize>,
    pub state_count: usize,
    pub max_state_pr: f64,
    pub pr_sum: f64,
    pub states: Vec<StateJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateJson {
    pub index: usize,
    pub members: Vec<usize>,
    pub binary: String,
    pub pr: f64,
    pub prob: f64,
}

fn check_ranks<T>(g: &Graph, ranks: &RankVector<T>) -> Result<()> {
    if ranks.scores.len() != g.node_count() {
        return Err(Error::TableMismatch(format!(
            "rank vector has {} entries for {} nodes",
            ranks.scores.len(),
            g.node_count()
        )));
    }
    Ok(())
}

pub fn build_state_table<T: Scalar>(
    i: usize,
    g: &Graph,
    ranks: &RankVector<T>,
) -> Result<NodeStateTable<T>> {
    check_ranks(g, ranks)?;
    if i >= g.node_count() {
        return Err(Error::NodeOutOfRange {
            label: i,
            n: g.node_count(),
        });
    }
    let desc = neighbors_desc(g, i);
    let m = desc.len();
    if m == 0 {
        return Err(Error::IsolatedNode(i));
    }
    if m > MAX_STATE_BITS {
        return Err(Error::TooLarge {
            what: "node degree",
            got: m,
            limit: MAX_STATE_BITS,
        });
    }
    let score = |p: usize| ranks.scores[desc[p]];
    let half = T::lit(0.5);

    let count = 1usize << m;
    let mut state_pr = vec![T::zero(); count];
    state_pr[0] = half * (0..m).map(score).fold(T::infinity(), T::min);
    for k in 1..count {
        // Clearing the lowest set bit drops the last selected neighbor in
        // descending order, so masses accumulate largest label first.
        let low = k.trailing_zeros() as usize;
        let rest = k & (k - 1);
        let last = score(m - 1 - low);
        state_pr[k] = if rest == 0 { last } else { state_pr[rest] + last };
    }
    let total: T = state_pr.iter().copied().sum();
    let state_prob = state_pr.iter().map(|&v| v / total).collect();
    Ok(NodeStateTable {
        node: i,
        max_state_pr: state_pr[count - 1],
        neighbors_desc: desc,
        state_pr,
        state_prob,
    })
}

/// Tables for every node of `g`.
pub fn build_all_tables<T: Scalar>(
    g: &Graph,
    ranks: &RankVector<T>,
) -> Result<Vec<NodeStateTable<T>>> {
    (0..g.node_count())
        .map(|i| build_state_table(i, g, ranks))
        .collect()
}

/// Score mass of the state that reaches every neighbor at once.
pub fn max_state_pagerank<T: Scalar>(i: usize, g: &Graph, ranks: &RankVector<T>) -> Result<T> {
    check_ranks(g, ranks)?;
    let desc = neighbors_desc(g, i);
    let (first, rest) = desc.split_first().ok_or(Error::IsolatedNode(i))?;
    Ok(rest
        .iter()
        .fold(ranks.scores[*first], |acc, &j| acc + ranks.scores[j]))
}

/// Ordered `(state, node)` pairs of a cascade, source first.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StateVectorTrace(pub Vec<(usize, usize)>);

impl StateVectorTrace {
    pub fn push(&mut self, state: usize, node: usize) {
        self.0.push((state, node));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Renders a trace as `(2/0, 4/2, 0/3)`: state before the slash, node after.
pub fn format_trace(t: &StateVectorTrace) -> Result<String> {
    if t.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let body: Vec<String> = t.0.iter().map(|(k, i)| format!("{k}/{i}")).collect();
    Ok(format!("({})", body.join(", ")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;
    use crate::rank::{pagerank, RankConfig};

    fn bridge_ranks() -> RankVector<f64> {
        pagerank(&fixtures::bridge(), &RankConfig::<f64>::default()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn bat_small() {
        let labels: Vec<String> = bat_enumerate(2)
            .unwrap()
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(labels, ["[0 0]", "[0 1]", "[1 0]", "[1 1]"]);
        assert_eq!(bat_enumerate(0).unwrap(), vec![BinaryVector::zeros(0)]);
    }

    #[test]
    fn bat_counts_like_integers() {
        let v = bat_enumerate(4).unwrap();
        assert_eq!(v.len(), 16);
        for (k, x) in v.iter().enumerate() {
            assert_eq!(x.value(), k);
            assert_eq!(*x, BinaryVector::from_index(k, 4));
        }
        assert_eq!(v.last().unwrap().count_ones(), 4);
    }

    #[test]
    fn bat_too_large() {
        assert!(matches!(bat_enumerate(31), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn members_follow_descending_labels() {
        let g = fixtures::bridge();
        assert_eq!(state_members(0, 2, &g).unwrap(), vec![2]);
        assert_eq!(state_members(1, 5, &g).unwrap(), vec![3, 0]);
        assert_eq!(state_members(2, 6, &g).unwrap(), vec![3, 1]);
        assert!(state_members(3, 0, &g).unwrap().is_empty());
        assert!(matches!(
            state_members(0, 4, &g),
            Err(Error::IndexOutOfRange { count: 4, .. })
        ));
    }

    #[test]
    fn bridge_node1_table() {
        let t = build_state_table(1, &fixtures::bridge(), &bridge_ranks()).unwrap();
        let pr = [
            0.102394, 0.204787, 0.295213, 0.5, 0.204787, 0.409574, 0.5, 0.704787,
        ];
        assert!(close(&t.state_pr, &pr, 1e-6));
        assert!((t.mass_sum() - 2.921542).abs() < 1e-6);
        assert!((t.state_prob[7] - 0.241238).abs() < 1e-6);
        assert_eq!(t.state_count(), 8);
    }

    #[test]
    fn bridge_node0_probabilities() {
        let t = build_state_table(0, &fixtures::bridge(), &bridge_ranks()).unwrap();
        let expect = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 4.0 / 9.0];
        assert!(close(&t.state_prob, &expect, 1e-12));
    }

    #[test]
    fn star_center_symmetry() {
        let g = Graph::from_edge_list([(0, 1), (0, 2)], 3).unwrap();
        let p = 0.3;
        let ranks = RankVector {
            scores: vec![0.4, p, p],
            damping: 0.85,
            personalization: None,
            iterations_used: 0,
            residual: 0.0,
        };
        let t = build_state_table(0, &g, &ranks).unwrap();
        assert!(close(&t.state_pr, &[p / 2.0, p, p, 2.0 * p], 1e-15));
        let expect = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 4.0 / 9.0];
        assert!(close(&t.state_prob, &expect, 1e-15));
    }

    #[test]
    fn max_state_matches_last_entry() {
        let g = fixtures::ba8();
        let ranks = pagerank(&g, &RankConfig::<f64>::default()).unwrap();
        for t in build_all_tables(&g, &ranks).unwrap() {
            let max = max_state_pagerank(t.node, &g, &ranks).unwrap();
            assert_eq!(t.max_state_pr, max);
            assert_eq!(t.state_pr[t.state_count() - 1], max);
        }
        let max3 = max_state_pagerank(3, &g, &ranks).unwrap();
        assert!((max3 - 0.6367).abs() < 5e-5);
    }

    #[test]
    fn leaf_max_state() {
        let g = Graph::from_edge_list([(0, 1), (1, 2)], 3).unwrap();
        let ranks = pagerank(&g, &RankConfig::<f64>::default()).unwrap();
        assert_eq!(max_state_pagerank(0, &g, &ranks).unwrap(), ranks[1]);
    }

    #[test]
    fn isolated_node_rejected() {
        let g = Graph::from_edge_list([(0, 1)], 3).unwrap();
        let ranks = pagerank(&g, &RankConfig::<f64>::default()).unwrap();
        assert_eq!(build_state_table(2, &g, &ranks), Err(Error::IsolatedNode(2)));
        assert_eq!(max_state_pagerank(2, &g, &ranks), Err(Error::IsolatedNode(2)));
    }

    #[test]
    fn traces() {
        let t = StateVectorTrace(vec![(2, 0), (4, 2), (0, 3)]);
        assert_eq!(format_trace(&t).unwrap(), "(2/0, 4/2, 0/3)");
        let t = StateVectorTrace(vec![(2, 1)]);
        assert_eq!(format_trace(&t).unwrap(), "(2/1)");
        assert_eq!(format_trace(&StateVectorTrace::default()), Err(Error::EmptyTrace));
    }

    #[test]
    fn json_layout() {
        let t = build_state_table(1, &fixtures::bridge(), &bridge_ranks()).unwrap();
        let json = serde_json::to_value(t.to_json()).unwrap();
        assert_eq!(json["neighbors"], serde_json::json!([3, 2, 0]));
        assert_eq!(json["states"][5]["binary"], "[1 0 1]");
        assert_eq!(json["states"][5]["members"], serde_json::json!([3, 0]));
        assert_eq!(json["states"][7]["prob"], 0.241238);
        // the published 2.921542 sums already-rounded entries
        assert!((json["pr_sum"].as_f64().unwrap() - 2.921542).abs() < 1e-5);
    }
}
