//! Experiment reports: rank tables, spread matrices per preference case,
//! case-versus-baseline deltas and max-state rankings.
//!
//! Case 1 is plain PageRank. Case 2 prefers the highest-degree node and
//! Case 3 the lowest-scoring node under Case 1, ties going to the lowest
//! label. Custom cases carry an explicit preference vector.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rank::{indicator, pagerank, personalized_pagerank, RankConfig, RankVector};
use crate::scalar::round_to;
use crate::spread::{fix_negative_zero, spread_probability, SpreadQuery};
use crate::states::{build_all_tables, NodeStateTable};

/// Scores closer than this are treated as tied when ranking or picking nodes.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CaseKind {
    Uniform,
    HighestDegree,
    LowestRank,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSpec {
    pub label: String,
    pub kind: CaseKind,
    /// Normalized preference weights; `None` for plain PageRank.
    pub preference: Option<Vec<f64>>,
}

impl CaseSpec {
    pub fn uniform() -> Self {
        Self {
            label: "case1".into(),
            kind: CaseKind::Uniform,
            preference: None,
        }
    }

    pub fn custom(label: impl Into<String>, weights: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            kind: CaseKind::Custom,
            preference: Some(weights),
        }
    }

    /// Resolves case 1, 2 or 3 against `g`.
    pub fn numbered(number: u8, g: &Graph, cfg: &RankConfig<f64>) -> Result<Self> {
        let n = g.node_count();
        match number {
            1 => Ok(Self::uniform()),
            2 => {
                let node = highest_degree_node(g)?;
                Ok(Self {
                    label: "case2".into(),
                    kind: CaseKind::HighestDegree,
                    preference: Some(indicator(n, node)),
                })
            }
            3 => {
                let base = pagerank(g, cfg)?;
                let node = lowest_rank_node(&base)?;
                Ok(Self {
                    label: "case3".into(),
                    kind: CaseKind::LowestRank,
                    preference: Some(indicator(n, node)),
                })
            }
            other => Err(Error::InvalidParams(format!("unknown case {other}"))),
        }
    }

    /// Node carrying all the preference weight, if any.
    pub fn preferred_node(&self) -> Option<usize> {
        let p = self.preference.as_ref()?;
        let mut nonzero = p.iter().enumerate().filter(|(_, w)| **w > 0.0);
        match (nonzero.next(), nonzero.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }

    pub fn ranks(&self, g: &Graph, cfg: &RankConfig<f64>) -> Result<RankVector<f64>> {
        match &self.preference {
            None => pagerank(g, cfg),
            Some(p) => personalized_pagerank(g, p, cfg),
        }
    }
}

pub fn highest_degree_node(g: &Graph) -> Result<usize> {
    (0..g.node_count())
        .max_by(|&a, &b| g.degree(a).cmp(&g.degree(b)).then(b.cmp(&a)))
        .ok_or_else(|| Error::InvalidParams("graph has no nodes".into()))
}

pub fn lowest_rank_node(ranks: &RankVector<f64>) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in ranks.scores.iter().enumerate() {
        match best {
            Some(b) if s >= ranks.scores[b] - TIE_TOLERANCE => {}
            _ => best = Some(i),
        }
    }
    best.ok_or_else(|| Error::InvalidParams("empty rank vector".into()))
}

/// Competition ranking ("1224"): one plus the number of strictly larger
/// values, with values within [`TIE_TOLERANCE`] counted as equal.
pub fn competition_ranks(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|&v| 1 + values.iter().filter(|&&w| w > v + TIE_TOLERANCE).count())
        .collect()
}

#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub rank: RankConfig<f64>,
    pub cases: Vec<CaseSpec>,
    /// Sources to evaluate; all nodes when empty.
    pub sources: Vec<usize>,
    /// Targets to evaluate; `1..=n` when empty.
    pub n_pages: Vec<usize>,
    pub jobs: usize,
    pub include_timings: bool,
}

impl ReportConfig {
    pub fn new(cases: Vec<CaseSpec>) -> Self {
        Self {
            rank: RankConfig::default(),
            cases,
            sources: Vec::new(),
            n_pages: Vec::new(),
            jobs: 0,
            include_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub setup: CaseSpec,
    pub scores: Vec<f64>,
    pub max_state: Vec<f64>,
    /// `probabilities[a][b]` is the value for `sources[a]` and `n_pages[b]`.
    pub probabilities: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<Vec<Vec<f64>>>,
    pub max_state_rank: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankChange {
    pub node: usize,
    pub base: f64,
    pub case: f64,
    pub change: f64,
    pub base_rank: usize,
    pub case_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseDelta {
    pub label: String,
    pub base_label: String,
    /// Elementwise `case - base`, before any rounding.
    pub probabilities: Vec<Vec<f64>>,
    pub rank_changes: Vec<RankChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeInfo {
    pub node: usize,
    pub degree: usize,
    pub neighbors: Vec<usize>,
    pub state_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub damping: f64,
    pub nodes: Vec<NodeInfo>,
    pub sources: Vec<usize>,
    pub n_pages: Vec<usize>,
    pub cases: Vec<CaseResult>,
    pub deltas: Vec<CaseDelta>,
}

/// A case with its scores and state tables.
pub type RankedCase = (CaseSpec, RankVector<f64>, Vec<NodeStateTable<f64>>);

/// Rank tables and max-state values for each case, without spreading.
pub fn rank_cases(
    g: &Graph,
    cfg: &RankConfig<f64>,
    cases: &[CaseSpec],
) -> Result<Vec<RankedCase>> {
    cases
        .iter()
        .map(|setup| {
            let ranks = setup.ranks(g, cfg)?;
            let tables = build_all_tables(g, &ranks)?;
            Ok((setup.clone(), ranks, tables))
        })
        .collect()
}

pub fn node_info(g: &Graph) -> Vec<NodeInfo> {
    (0..g.node_count())
        .map(|i| NodeInfo {
            node: i,
            degree: g.degree(i),
            neighbors: g.neighbors(i).iter().rev().copied().collect(),
            state_count: 1usize.checked_shl(g.degree(i) as u32).unwrap_or(0),
        })
        .collect()
}

pub fn build_report(g: &Graph, cfg: &ReportConfig) -> Result<ExperimentReport> {
    let n = g.node_count();
    if cfg.cases.is_empty() {
        return Err(Error::InvalidParams("no cases requested".into()));
    }
    let sources: Vec<usize> = if cfg.sources.is_empty() {
        (0..n).collect()
    } else {
        cfg.sources.clone()
    };
    let n_pages: Vec<usize> = if cfg.n_pages.is_empty() {
        (1..=n).collect()
    } else {
        cfg.n_pages.clone()
    };
    let cells: Vec<(usize, usize)> = (0..sources.len())
        .flat_map(|a| (0..n_pages.len()).map(move |b| (a, b)))
        .collect();

    let pool = (cfg.jobs > 0)
        .then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs)
                .build()
                .map_err(|e| Error::InvalidParams(e.to_string()))
        })
        .transpose()?;

    let mut cases = Vec::with_capacity(cfg.cases.len());
    for (setup, ranks, tables) in rank_cases(g, &cfg.rank, &cfg.cases)? {
        let run = || -> Result<Vec<(f64, f64)>> {
            cells
                .par_iter()
                .map(|&(a, b)| {
                    let q = SpreadQuery::new(sources[a], n_pages[b]);
                    spread_probability(g, &tables, q).map(|r| (r.probability, r.elapsed))
                })
                .collect()
        };
        let values = match &pool {
            Some(pool) => pool.install(run)?,
            None => run()?,
        };
        let width = n_pages.len();
        let probabilities: Vec<Vec<f64>> = values
            .chunks(width.max(1))
            .map(|row| row.iter().map(|v| v.0).collect())
            .collect();
        let elapsed = cfg.include_timings.then(|| {
            values
                .chunks(width.max(1))
                .map(|row| row.iter().map(|v| v.1).collect())
                .collect()
        });
        let max_state: Vec<f64> = tables.iter().map(|t| t.max_state_pr).collect();
        cases.push(CaseResult {
            max_state_rank: competition_ranks(&max_state),
            setup,
            scores: ranks.scores,
            max_state,
            probabilities,
            elapsed,
        });
    }

    let base = &cases[0];
    let deltas = cases[1..]
        .iter()
        .map(|c| CaseDelta {
            label: c.setup.label.clone(),
            base_label: base.setup.label.clone(),
            probabilities: c
                .probabilities
                .iter()
                .zip(&base.probabilities)
                .map(|(r, b)| r.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
            rank_changes: (0..n)
                .map(|i| RankChange {
                    node: i,
                    base: base.max_state[i],
                    case: c.max_state[i],
                    change: c.max_state[i] - base.max_state[i],
                    base_rank: base.max_state_rank[i],
                    case_rank: c.max_state_rank[i],
                })
                .collect(),
        })
        .collect();

    Ok(ExperimentReport {
        damping: cfg.rank.damping,
        nodes: node_info(g),
        sources,
        n_pages,
        cases,
        deltas,
    })
}

fn f4(v: f64) -> String {
    format!("{:.4}", fix_negative_zero(round_to(v, 4)))
}

fn f6(v: f64) -> String {
    format!("{:.6}", fix_negative_zero(round_to(v, 6)))
}

fn set(nodes: &[usize]) -> String {
    let items: Vec<String> = nodes.iter().map(ToString::to_string).collect();
    format!("{{{}}}", items.join(" "))
}

impl ExperimentReport {
    fn matrix_csv(&self, rows: &[Vec<f64>], out: &mut String) {
        out.push_str("node");
        for p in &self.n_pages {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
        for (s, row) in self.sources.iter().zip(rows) {
            out.push_str(&s.to_string());
            for &v in row {
                let _ = write!(out, ",{}", f4(v));
            }
            out.push('\n');
        }
    }

    /// CSV sections separated by blank lines, each introduced by a `# title`
    /// line: rank table, one matrix per case, one delta matrix per
    /// non-baseline case, max-state ranking and rank changes.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# rank table (d = {})", self.damping);
        out.push_str("node,deg,neighbors,states");
        for c in &self.cases {
            let _ = write!(out, ",{0}_score,{0}_max_state", c.setup.label);
        }
        out.push('\n');
        for info in &self.nodes {
            let _ = write!(
                out,
                "{},{},{},{}",
                info.node,
                info.degree,
                set(&info.neighbors),
                info.state_count
            );
            for c in &self.cases {
                let _ = write!(out, ",{},{}", f6(c.scores[info.node]), f6(c.max_state[info.node]));
            }
            out.push('\n');
        }

        for c in &self.cases {
            let _ = writeln!(out, "\n# spread probabilities {}", c.setup.label);
            self.matrix_csv(&c.probabilities, &mut out);
            if let Some(elapsed) = &c.elapsed {
                let _ = writeln!(out, "\n# runtime seconds {}", c.setup.label);
                out.push_str("node");
                for p in &self.n_pages {
                    let _ = write!(out, ",{p}");
                }
                out.push('\n');
                for (s, row) in self.sources.iter().zip(elapsed) {
                    out.push_str(&s.to_string());
                    for v in row {
                        let _ = write!(out, ",{v:.4}");
                    }
                    out.push('\n');
                }
            }
        }
        for d in &self.deltas {
            let _ = writeln!(out, "\n# delta {} - {}", d.label, d.base_label);
            self.matrix_csv(&d.probabilities, &mut out);
        }

        out.push_str("\n# max-state ranking\nnode");
        for c in &self.cases {
            let _ = write!(out, ",{0}_max_state,{0}_rank", c.setup.label);
        }
        out.push('\n');
        for info in &self.nodes {
            out.push_str(&info.node.to_string());
            for c in &self.cases {
                let _ = write!(
                    out,
                    ",{},{}",
                    f4(c.max_state[info.node]),
                    c.max_state_rank[info.node]
                );
            }
            out.push('\n');
        }
        for d in &self.deltas {
            let _ = writeln!(out, "\n# rank change {} vs {}", d.label, d.base_label);
            out.push_str("node,base_max_state,case_max_state,change,rank_change\n");
            for r in &d.rank_changes {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}→{}",
                    r.node,
                    f4(r.base),
                    f4(r.case),
                    f4(r.change),
                    r.base_rank,
                    r.case_rank
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn case(&self, label: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.setup.label == label)
    }
}
