//! Invariant suite run by the `verify` command and the property tests.

use std::fmt;

use crate::graph::Graph;
use crate::rank::RankVector;
use crate::spread::{oracle_spread, SpreadMatrix, SpreadQuery, ORACLE_NODE_LIMIT};
use crate::states::{bat_enumerate, max_state_pagerank, NodeStateTable};

pub const SUM_TOLERANCE: f64 = 1e-9;
pub const ORACLE_TOLERANCE: f64 = 1e-12;
/// Monotonicity is checked with this much slack for rounding in the sums.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    GraphStructure,
    RankSum,
    StateProbabilitySum,
    MaxStateMass,
    ProbabilityBounds,
    SinglePageCertain,
    Monotone,
    StrictDecrease,
    OracleEquivalence,
    BatCounting,
}

impl Invariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::GraphStructure => "graph-structure",
            Self::RankSum => "rank-sum",
            Self::StateProbabilitySum => "state-probability-sum",
            Self::MaxStateMass => "max-state-mass",
            Self::ProbabilityBounds => "probability-bounds",
            Self::SinglePageCertain => "single-page-certain",
            Self::Monotone => "monotone",
            Self::StrictDecrease => "strict-decrease",
            Self::OracleEquivalence => "oracle-equivalence",
            Self::BatCounting => "bat-counting",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: Invariant,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant.name(), self.detail)
    }
}

impl std::error::Error for Violation {}

fn fail<T>(invariant: Invariant, detail: String) -> Result<T, Violation> {
    Err(Violation { invariant, detail })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckStats {
    pub cells: usize,
    pub oracle_cells: usize,
}

pub fn check_ranks(g: &Graph, ranks: &RankVector<f64>) -> Result<(), Violation> {
    if let Err(e) = g.check_invariants() {
        return fail(Invariant::GraphStructure, e.to_string());
    }
    let sum = ranks.sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE || ranks.scores.iter().any(|&s| s < 0.0) {
        return fail(Invariant::RankSum, format!("scores sum to {sum}"));
    }
    Ok(())
}

pub fn check_tables(
    g: &Graph,
    ranks: &RankVector<f64>,
    tables: &[NodeStateTable<f64>],
) -> Result<(), Violation> {
    for t in tables {
        let sum: f64 = t.state_prob.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return fail(
                Invariant::StateProbabilitySum,
                format!("node {} state probabilities sum to {sum}", t.node),
            );
        }
        let last = t.state_pr[t.state_count() - 1];
        let direct = max_state_pagerank(t.node, g, ranks).unwrap_or(f64::NAN);
        if last != t.max_state_pr || last != direct {
            return fail(
                Invariant::MaxStateMass,
                format!("node {}: last state mass {last} vs {}", t.node, t.max_state_pr),
            );
        }
    }
    Ok(())
}

/// Bounds, the one-page rule, row monotonicity and, on connected graphs,
/// strict decrease from the first to the last column.
pub fn check_matrix(g: &Graph, m: &SpreadMatrix<f64>) -> Result<usize, Violation> {
    let n = g.node_count();
    for (s, row) in m.probabilities.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return fail(
                    Invariant::ProbabilityBounds,
                    format!("Pr({s}, {}) = {v}", p + 1),
                );
            }
        }
        if row[0] != 1.0 {
            return fail(Invariant::SinglePageCertain, format!("Pr({s}, 1) = {}", row[0]));
        }
        for p in 1..row.len() {
            if row[p] > row[p - 1] + MONOTONE_SLACK {
                return fail(
                    Invariant::Monotone,
                    format!("Pr({s}, {}) = {} > Pr({s}, {p}) = {}", p + 1, row[p], row[p - 1]),
                );
            }
        }
        if n >= 2 && g.is_connected() && row[n - 1] >= row[0] {
            return fail(
                Invariant::StrictDecrease,
                format!("Pr({s}, {n}) = {} is not below Pr({s}, 1)", row[n - 1]),
            );
        }
    }
    Ok(n * n)
}

pub fn check_oracle(
    g: &Graph,
    tables: &[NodeStateTable<f64>],
    m: &SpreadMatrix<f64>,
) -> Result<usize, Violation> {
    let n = g.node_count();
    if n > ORACLE_NODE_LIMIT {
        return Ok(0);
    }
    for s in 0..n {
        for p in 1..=n {
            let expect = oracle_spread(g, tables, SpreadQuery::new(s, p))
                .map_err(|e| Violation {
                    invariant: Invariant::OracleEquivalence,
                    detail: e.to_string(),
                })?;
            let got = m.get(s, p);
            if (got - expect).abs() > ORACLE_TOLERANCE {
                return fail(
                    Invariant::OracleEquivalence,
                    format!("Pr({s}, {p}): search {got} vs oracle {expect}"),
                );
            }
        }
    }
    Ok(n * n)
}

/// Binary-addition enumeration of every length up to `max_m` against
/// integer counting.
pub fn check_bat(max_m: usize) -> Result<(), Violation> {
    for m in 0..=max_m {
        let v = bat_enumerate(m).map_err(|e| Violation {
            invariant: Invariant::BatCounting,
            detail: e.to_string(),
        })?;
        if v.len() != 1 << m || v.iter().enumerate().any(|(k, x)| x.value() != k || x.len() != m)
        {
            return fail(Invariant::BatCounting, format!("m = {m}"));
        }
    }
    Ok(())
}

/// Runs every check on one graph whose matrix has already been computed.
pub fn check_all(
    g: &Graph,
    ranks: &RankVector<f64>,
    tables: &[NodeStateTable<f64>],
    m: &SpreadMatrix<f64>,
) -> Result<CheckStats, Violation> {
    check_ranks(g, ranks)?;
    check_tables(g, ranks, tables)?;
    let cells = check_matrix(g, m)?;
    let oracle_cells = check_oracle(g, tables, m)?;
    Ok(CheckStats {
        cells,
        oracle_cells,
    })
}
