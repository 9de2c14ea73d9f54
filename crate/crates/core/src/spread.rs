//! Probability that a cascade from a source reaches at least `n_page` nodes.
//!
//! Every propagated node independently takes one of its states; the state
//! decides which neighbors it passes the information to. Nodes are visited in
//! the order they were reached. The search walks all state combinations
//! depth-first with an explicit stack, multiplying state probabilities along
//! the path, and adds a path's probability to the total as soon as the reached
//! set contains `n_page` nodes. Such a branch is not expanded further.
//!
//! The source never takes its empty state (it starts at state 1). A node whose
//! state adds no new nodes still contributes its state probability to the
//! path. A path that runs out of nodes to visit before reaching `n_page`
//! contributes nothing, and so does one whose waiting nodes cannot reach
//! enough new nodes; such branches are cut off early.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{round_to, Scalar};
use crate::states::{NodeStateTable, StateVectorTrace};

/// Trace recording is limited to graphs with at most this many nodes.
pub const TRACE_NODE_LIMIT: usize = 12;
/// [`oracle_spread`] refuses larger graphs.
pub const ORACLE_NODE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpreadQuery {
    pub source: usize,
    pub n_page: usize,
}

impl SpreadQuery {
    pub fn new(source: usize, n_page: usize) -> Self {
        Self { source, n_page }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.source >= n {
            return Err(Error::InvalidQuery(format!(
                "source {} not in a graph of {n} nodes",
                self.source
            )));
        }
        if self.n_page < 1 || self.n_page > n {
            return Err(Error::InvalidQuery(format!(
                "n_page {} outside 1..={n}",
                self.n_page
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpreadOptions {
    pub record_traces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadResult<T> {
    pub query: SpreadQuery,
    pub probability: T,
    /// Wall-clock seconds spent in the search.
    pub elapsed: f64,
    /// Number of node states evaluated.
    pub expansions: u64,
    /// Contributing state-vector traces, when requested.
    pub traces: Option<Vec<StateVectorTrace>>,
}

impl<T: Scalar> SpreadResult<T> {
    pub fn to_json(&self) -> SpreadJson {
        SpreadJson {
            source: self.query.source,
            n_page: self.query.n_page,
            probability: self.probability.as_f64(),
            elapsed_s: self.elapsed,
            expansions: self.expansions,
        }
    }
}

/// `{ "source", "n_page", "probability", "elapsed_s", "expansions" }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadJson {
    pub source: usize,
    pub n_page: usize,
    pub probability: f64,
    pub elapsed_s: f64,
    pub expansions: u64,
}

/// Mutable bookkeeping of the search.
///
/// The node visited at depth `d` is `propagated[d]`; `state_index[d]`,
/// `path_prob[d]` and `mark[d]` hold its current state, the probability of
/// the path leading to it, and the length of `propagated` before its own
/// state added anything.
#[derive(Debug, Clone)]
pub struct CascadeFrontier<T> {
    pub propagated: Vec<usize>,
    in_propagated: Vec<bool>,
    mark: Vec<usize>,
    pub state_index: Vec<usize>,
    pub path_prob: Vec<T>,
    /// Number of state transitions taken so far.
    pub stage: u64,
    pub accumulated: T,
    pub last_delta: T,
    /// Newly reached nodes of the current expansion.
    pub pending: Vec<usize>,
    depth: usize,
    // scratch space for the reachability bound
    seen: Vec<u32>,
    stamp: u32,
    queue: Vec<usize>,
}

impl<T: Scalar> CascadeFrontier<T> {
    fn new(source: usize, n: usize) -> Self {
        let mut in_propagated = vec![false; n];
        in_propagated[source] = true;
        Self {
            propagated: vec![source],
            in_propagated,
            mark: vec![1],
            state_index: vec![1],
            path_prob: vec![T::one()],
            stage: 0,
            accumulated: T::zero(),
            last_delta: T::zero(),
            pending: Vec::new(),
            depth: 0,
            seen: vec![0; n],
            stamp: 0,
            queue: Vec::new(),
        }
    }

    /// Whether the nodes still waiting to be visited could, between them,
    /// bring the propagated set up to `target`. Only unpropagated nodes
    /// reachable from the waiting ones through other unpropagated nodes can
    /// still be added.
    fn can_reach(&mut self, g: &Graph, target: usize) -> bool {
        let mut count = self.propagated.len();
        if count >= target {
            return true;
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.fill(0);
            self.stamp = 1;
        }
        self.queue.clear();
        self.queue.extend_from_slice(&self.propagated[self.depth + 1..]);
        while let Some(v) = self.queue.pop() {
            for &j in g.neighbors(v) {
                if !self.in_propagated[j] && self.seen[j] != self.stamp {
                    self.seen[j] = self.stamp;
                    count += 1;
                    if count >= target {
                        return true;
                    }
                    self.queue.push(j);
                }
            }
        }
        false
    }

    fn current(&self) -> usize {
        self.propagated[self.depth]
    }

    /// Drops nodes appended after the current node's restore point.
    fn rewind(&mut self) {
        let keep = self.mark[self.depth];
        for &v in &self.propagated[keep..] {
            self.in_propagated[v] = false;
        }
        self.propagated.truncate(keep);
    }

    fn descend(&mut self, prob: T) {
        self.depth += 1;
        let d = self.depth;
        let len = self.propagated.len();
        if self.state_index.len() <= d {
            self.state_index.push(0);
            self.path_prob.push(prob);
            self.mark.push(len);
        } else {
            self.state_index[d] = 0;
            self.path_prob[d] = prob;
            self.mark[d] = len;
        }
    }

    fn trace(&self) -> StateVectorTrace {
        StateVectorTrace(
            (0..=self.depth)
                .map(|d| (self.state_index[d], self.propagated[d]))
                .collect(),
        )
    }
}

fn check_tables<T: Scalar>(g: &Graph, tables: &[NodeStateTable<T>]) -> Result<()> {
    if tables.len() != g.node_count() {
        return Err(Error::TableMismatch(format!(
            "{} tables for {} nodes",
            tables.len(),
            g.node_count()
        )));
    }
    for (i, t) in tables.iter().enumerate() {
        if t.node != i || t.degree() != g.degree(i) || t.state_prob.len() != t.state_count() {
            return Err(Error::TableMismatch(format!("table {i} does not describe node {i}")));
        }
    }
    Ok(())
}

pub fn spread_probability<T: Scalar>(
    g: &Graph,
    tables: &[NodeStateTable<T>],
    q: SpreadQuery,
) -> Result<SpreadResult<T>> {
    spread_probability_with(g, tables, q, SpreadOptions::default())
}

pub fn spread_probability_with<T: Scalar>(
    g: &Graph,
    tables: &[NodeStateTable<T>],
    q: SpreadQuery,
    opts: SpreadOptions,
) -> Result<SpreadResult<T>> {
    let n = g.node_count();
    q.validate(n)?;
    check_tables(g, tables)?;
    if opts.record_traces && n > TRACE_NODE_LIMIT {
        return Err(Error::TooLarge {
            what: "graph for trace recording",
            got: n,
            limit: TRACE_NODE_LIMIT,
        });
    }
    let start = Instant::now();

    // The source alone already satisfies a one-node target.
    if q.n_page == 1 {
        return Ok(SpreadResult {
            query: q,
            probability: T::one(),
            elapsed: start.elapsed().as_secs_f64(),
            expansions: 0,
            traces: opts.record_traces.then(|| vec![StateVectorTrace(vec![(1, q.source)])]),
        });
    }

    let mut f = CascadeFrontier::new(q.source, n);
    let mut traces = opts.record_traces.then(Vec::new);
    let mut expansions = 0u64;

    loop {
        let table = &tables[f.current()];
        let state = f.state_index[f.depth];

        if state == table.state_count() {
            // exhausted: back up to the previous node and advance its state
            if f.depth == 0 {
                break;
            }
            f.depth -= 1;
            f.state_index[f.depth] += 1;
            continue;
        }

        f.rewind();
        expansions += 1;
        f.pending.clear();
        for j in table.members(state) {
            if !f.in_propagated[j] {
                f.pending.push(j);
            }
        }
        let prob = f.path_prob[f.depth] * table.state_prob[state];

        if !f.pending.is_empty() && f.propagated.len() + f.pending.len() >= q.n_page {
            f.last_delta = prob;
            f.accumulated = f.accumulated + prob;
            f.stage += 1;
            if let Some(traces) = traces.as_mut() {
                traces.push(f.trace());
            }
            f.state_index[f.depth] += 1;
            continue;
        }

        for &j in &f.pending {
            f.in_propagated[j] = true;
        }
        f.propagated.extend_from_slice(&f.pending);
        f.stage += 1;
        if f.depth + 1 < f.propagated.len() && f.can_reach(g, q.n_page) {
            f.descend(prob);
        } else {
            // nobody left who could carry the message far enough
            f.state_index[f.depth] += 1;
        }
    }

    Ok(SpreadResult {
        query: q,
        probability: f.accumulated,
        elapsed: start.elapsed().as_secs_f64(),
        expansions,
        traces,
    })
}

/// Plain recursive evaluation of the same quantity, for cross-checking
/// [`spread_probability`] on small graphs.
pub fn oracle_spread<T: Scalar>(
    g: &Graph,
    tables: &[NodeStateTable<T>],
    q: SpreadQuery,
) -> Result<T> {
    let n = g.node_count();
    if n > ORACLE_NODE_LIMIT {
        return Err(Error::TooLarge {
            what: "graph for oracle",
            got: n,
            limit: ORACLE_NODE_LIMIT,
        });
    }
    q.validate(n)?;
    check_tables(g, tables)?;
    if q.n_page == 1 {
        return Ok(T::one());
    }

    fn go<T: Scalar>(
        g: &Graph,
        tables: &[NodeStateTable<T>],
        order: &mut Vec<usize>,
        pos: usize,
        prob: T,
        target: usize,
        acc: &mut T,
    ) {
        let Some(&node) = order.get(pos) else {
            return;
        };
        // selection read straight off the sorted adjacency: bit b of the
        // state stands for the b-th smallest neighbor
        let nbrs = g.neighbors(node);
        let first = if pos == 0 { 1 } else { 0 };
        let len = order.len();
        for k in first..1usize << nbrs.len() {
            for b in (0..nbrs.len()).rev() {
                if k >> b & 1 == 1 && !order.contains(&nbrs[b]) {
                    order.push(nbrs[b]);
                }
            }
            let fresh = order.len() - len;
            let p = prob * tables[node].state_prob[k];
            if fresh > 0 && order.len() >= target {
                *acc = *acc + p;
            } else {
                go(g, tables, order, pos + 1, p, target, acc);
            }
            order.truncate(len);
        }
    }

    let mut acc = T::zero();
    go(g, tables, &mut vec![q.source], 0, T::one(), q.n_page, &mut acc);
    Ok(acc)
}

/// `probabilities[s][p]` is the probability that a cascade from `s` reaches
/// at least `p + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadMatrix<T> {
    pub probabilities: Vec<Vec<T>>,
    pub elapsed: Vec<Vec<f64>>,
    pub expansions: Vec<Vec<u64>>,
}

impl<T: Scalar> SpreadMatrix<T> {
    pub fn size(&self) -> usize {
        self.probabilities.len()
    }

    pub fn get(&self, source: usize, n_page: usize) -> T {
        self.probabilities[source][n_page - 1]
    }

    /// CSV with header `node,1,2,...,n`, one row per source, 4 decimals.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.probabilities)
    }
}

pub(crate) fn matrix_csv<T: Scalar>(rows: &[Vec<T>]) -> String {
    let n = rows.first().map_or(0, Vec::len);
    let mut out = String::from("node");
    for p in 1..=n {
        out.push_str(&format!(",{p}"));
    }
    out.push('\n');
    for (s, row) in rows.iter().enumerate() {
        out.push_str(&s.to_string());
        for v in row {
            out.push_str(&format!(",{:.4}", fix_negative_zero(round_to(v.as_f64(), 4))));
        }
        out.push('\n');
    }
    out
}

pub(crate) fn fix_negative_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Full `n x n` table over all sources and targets, computed on up to `jobs`
/// threads. The result does not depend on `jobs`.
pub fn spread_table<T: Scalar>(
    g: &Graph,
    tables: &[NodeStateTable<T>],
    jobs: usize,
) -> Result<SpreadMatrix<T>> {
    let n = g.node_count();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (1..=n).map(move |p| (s, p)))
        .collect();
    let run = || -> Result<Vec<SpreadResult<T>>> {
        cells
            .par_iter()
            .map(|&(s, p)| spread_probability(g, tables, SpreadQuery::new(s, p)))
            .collect()
    };
    let results = if jobs == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .install(run)?
    };

    let mut m = SpreadMatrix {
        probabilities: vec![vec![T::zero(); n]; n],
        elapsed: vec![vec![0.0; n]; n],
        expansions: vec![vec![0; n]; n],
    };
    for r in results {
        let (s, p) = (r.query.source, r.query.n_page - 1);
        m.probabilities[s][p] = r.probability;
        m.elapsed[s][p] = r.elapsed;
        m.expansions[s][p] = r.expansions;
    }
    Ok(m)
}
