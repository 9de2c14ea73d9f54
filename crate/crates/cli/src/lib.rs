//! Command implementations behind the `batprop` binary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use batprop_core::check::{self, Violation};
use batprop_core::graph::GraphJson;
use batprop_core::report::{build_report, node_info, CaseSpec, ReportConfig};
use batprop_core::scalar::{round_to, round_sig};
use batprop_core::spread::{spread_probability_with, SpreadOptions, TRACE_NODE_LIMIT};
use batprop_core::{
    build_all_tables, degree_histogram, fixtures, format_trace, generate_ba, pagerank,
    personalized_pagerank, spread_table, BaParams, DegreeHistogram, Graph, RankConfig,
    SpreadQuery,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invariant violated: {0}")]
    Invariant(#[from] Violation),
    #[error(transparent)]
    Core(#[from] batprop_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use batprop_core::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Core(
                E::InvalidParams(_)
                | E::InvalidPreference(_)
                | E::InvalidQuery(_)
                | E::NodeOutOfRange { .. }
                | E::SelfLoop(_)
                | E::Parse { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "batprop", version, about = "Propagation probability on scale-free networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Barabási-Albert graph as an edge list.
    Generate(GenerateArgs),
    /// Print degrees, neighbor sets, PageRank and max-state values.
    Rank(RankArgs),
    /// Compute propagation probability matrices for one or more cases.
    Spread(SpreadArgs),
    /// Run the invariant suite over seeded random graphs.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Seed nodes (defaults to m).
    #[arg(long)]
    pub m0: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `csv` writes the edge-list text format, `json` the `{n, edges}` form.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct GraphArgs {
    /// Edge-list file (`.json` files use the `{n, edges}` form).
    #[arg(long, conflicts_with_all = ["fixture", "n"])]
    pub graph: Option<PathBuf>,
    /// Built-in graph: fig6 (bridge network) or fig7 (8-node BA network).
    #[arg(long, conflicts_with = "n")]
    pub fixture: Option<String>,
    /// Generate a BA graph with this many nodes.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    #[arg(long, requires = "n")]
    pub m0: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GraphArgs {
    pub fn is_given(&self) -> bool {
        self.graph.is_some() || self.fixture.is_some() || self.n.is_some()
    }

    pub fn load(&self) -> CliResult<Graph> {
        if let Some(path) = &self.graph {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            if path.extension().is_some_and(|e| e == "json") {
                let json: GraphJson = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                return Ok(Graph::from_json(&json)?);
            }
            return Ok(Graph::parse_edge_list(&text, None)?);
        }
        if let Some(name) = &self.fixture {
            return fixtures::by_name(name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown fixture {name:?} (known: {})",
                    fixtures::NAMES.join(", ")
                ))
            });
        }
        if let Some(n) = self.n {
            let m = self
                .m
                .ok_or_else(|| CliError::Usage("--n needs --m".into()))?;
            let params = BaParams {
                n,
                m,
                m0: self.m0.unwrap_or(m),
                seed: self.seed,
            };
            return Ok(generate_ba(&params)?);
        }
        Err(CliError::Usage(
            "give one of --graph, --fixture or --n/--m".into(),
        ))
    }
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0.85)]
    pub damping: f64,
    /// Preference weights as `node=weight[,node=weight...]`.
    #[arg(long)]
    pub prefer: Option<String>,
    /// Include per-node state tables (JSON output only).
    #[arg(long)]
    pub states: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpreadArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0.85)]
    pub damping: f64,
    /// Extra preference case as `node=weight[,...]`.
    #[arg(long)]
    pub prefer: Option<String>,
    /// Numbered cases: 1 plain PageRank, 2 highest-degree preference,
    /// 3 lowest-score preference.
    #[arg(long)]
    pub cases: Option<String>,
    /// Targets as `a..b` (inclusive), a single value or a list.
    #[arg(long)]
    pub npage: Option<String>,
    /// `all` or a comma-separated node list.
    #[arg(long, default_value = "all")]
    pub sources: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record contributing state vectors (graphs of at most 12 nodes).
    #[arg(long)]
    pub traces: bool,
    /// Include per-cell runtimes (makes the output non-reproducible).
    #[arg(long)]
    pub timings: bool,
    /// Worker threads for the matrix cells (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Verify this graph instead of random ones; `--seed` alone seeds the
    /// random graph sample.
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 50)]
    pub graphs: usize,
    #[arg(long, default_value_t = 10)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0.85)]
    pub damping: f64,
    /// Corrupts one state table before checking (negative control).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, stdout),
        Command::Rank(a) => cmd_rank(&a, stdout),
        Command::Spread(a) => cmd_spread(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
    }
}

/// Runs the CLI and maps errors to exit codes (1 invariant/runtime, 2 usage).
pub fn main_with_args<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn write_line(stdout: &mut dyn Write, line: &str) -> CliResult<()> {
    writeln!(stdout, "{line}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn histogram_line(h: &DegreeHistogram) -> String {
    let counts: Vec<String> = h.counts.iter().map(|(k, c)| format!("{k}:{c}")).collect();
    let mut line = format!("degree histogram: {}", counts.join(" "));
    if let Some(eta) = h.exponent {
        line.push_str(&format!(" (fitted exponent {eta:.4})"));
    }
    line
}

pub fn cmd_generate(a: &GenerateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = BaParams {
        n: a.n,
        m: a.m,
        m0: a.m0.unwrap_or(a.m),
        seed: a.seed,
    };
    let g = generate_ba(&params)?;
    let hist = degree_histogram(&g);
    let text = match a.format {
        Format::Csv => format!(
            "# barabasi-albert n={} m={} m0={} seed={} edges={}\n# {}\n{}",
            params.n,
            params.m,
            params.m0,
            params.seed,
            g.edge_count(),
            histogram_line(&hist),
            g.to_edge_list()
        ),
        Format::Json => {
            serde_json::to_string(&g.to_json()).expect("graph json") + "\n"
        }
    };
    emit(&a.out, &text, stdout)?;
    if a.out.is_some() {
        write_line(stdout, &format!("{} edges", g.edge_count()))?;
        write_line(stdout, &histogram_line(&hist))?;
    }
    Ok(())
}

/// Parses `node=weight[,node=weight...]` into a dense weight vector.
pub fn parse_prefer(arg: &str, n: usize) -> CliResult<Vec<f64>> {
    let mut w = vec![0.0; n];
    for item in arg.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (node, weight) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad --prefer entry {item:?}")))?;
        let node: usize = node
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad node in {item:?}")))?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad weight in {item:?}")))?;
        if node >= n {
            return Err(CliError::Usage(format!("node {node} not in graph of {n} nodes")));
        }
        w[node] += weight;
    }
    Ok(w)
}

/// Parses `a..b`, `a..=b` (both inclusive), a single value, or a list.
pub fn parse_npage(arg: &str, n: usize) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad --npage {arg:?}"));
    let values: Vec<usize> = if let Some((a, b)) = arg.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        arg.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if values.is_empty() || values.iter().any(|&p| p < 1 || p > n) {
        return Err(CliError::Usage(format!(
            "--npage values must lie in 1..={n}, got {arg:?}"
        )));
    }
    Ok(values)
}

pub fn parse_sources(arg: &str, n: usize) -> CliResult<Vec<usize>> {
    if arg.trim() == "all" {
        return Ok((0..n).collect());
    }
    let nodes: Vec<usize> = arg
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad --sources {arg:?}")))
        })
        .collect::<CliResult<_>>()?;
    if let Some(bad) = nodes.iter().find(|&&s| s >= n) {
        return Err(CliError::Usage(format!("source {bad} not in graph of {n} nodes")));
    }
    Ok(nodes)
}

fn rank_config(damping: f64) -> CliResult<RankConfig<f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(CliError::Usage(format!("--damping must lie in (0, 1), got {damping}")));
    }
    Ok(RankConfig::with_damping(damping))
}

#[derive(Debug, Serialize)]
struct RankRow {
    node: usize,
    deg: usize,
    neighbors: Vec<usize>,
    states: usize,
    pr: f64,
    pr_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppr_max: Option<f64>,
}

pub fn cmd_rank(a: &RankArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let g = a.graph.load()?;
    let cfg = rank_config(a.damping)?;
    let ranks = pagerank(&g, &cfg)?;
    let tables = build_all_tables(&g, &ranks)?;
    let personalized = match &a.prefer {
        Some(arg) => {
            let w = parse_prefer(arg, g.node_count())?;
            let ppr = personalized_pagerank(&g, &w, &cfg)?;
            let pt = build_all_tables(&g, &ppr)?;
            Some((ppr, pt))
        }
        None => None,
    };

    let rows: Vec<RankRow> = node_info(&g)
        .into_iter()
        .map(|info| {
            let i = info.node;
            RankRow {
                node: i,
                deg: info.degree,
                neighbors: info.neighbors,
                states: info.state_count,
                pr: round_to(ranks[i], 6),
                pr_max: round_to(tables[i].max_state_pr, 6),
                ppr: personalized.as_ref().map(|(p, _)| round_to(p[i], 6)),
                ppr_max: personalized
                    .as_ref()
                    .map(|(_, t)| round_to(t[i].max_state_pr, 6)),
            }
        })
        .collect();

    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("node,deg,neighbors,states,pr,pr_max");
            if personalized.is_some() {
                s.push_str(",ppr,ppr_max");
            }
            s.push('\n');
            for r in &rows {
                let nb: Vec<String> = r.neighbors.iter().map(ToString::to_string).collect();
                s.push_str(&format!(
                    "{},{},{{{}}},{},{:.6},{:.6}",
                    r.node,
                    r.deg,
                    nb.join(" "),
                    r.states,
                    r.pr,
                    r.pr_max
                ));
                if let (Some(p), Some(pm)) = (r.ppr, r.ppr_max) {
                    s.push_str(&format!(",{p:.6},{pm:.6}"));
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut doc = serde_json::json!({
                "d": round_sig(a.damping, 12),
                "nodes": rows,
                "rank": ranks.to_json(),
                "personalized": personalized.as_ref().map(|(p, _)| p.to_json()),
            });
            if a.states {
                doc["state_tables"] =
                    serde_json::to_value(tables.iter().map(|t| t.to_json()).collect::<Vec<_>>())
                        .expect("state tables");
                if let Some((_, pt)) = &personalized {
                    doc["personalized_state_tables"] = serde_json::to_value(
                        pt.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
                    )
                    .expect("state tables");
                }
            }
            serde_json::to_string_pretty(&doc).expect("rank json") + "\n"
        }
    };
    emit(&a.out, &text, stdout)
}

fn parse_cases(arg: &str) -> CliResult<Vec<u8>> {
    arg.split(',')
        .map(|s| match s.trim() {
            "1" => Ok(1),
            "2" => Ok(2),
            "3" => Ok(3),
            other => Err(CliError::Usage(format!("unknown case {other:?}"))),
        })
        .collect()
}

pub fn cmd_spread(a: &SpreadArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let g = a.graph.load()?;
    let n = g.node_count();
    let cfg = rank_config(a.damping)?;
    let numbered = match (&a.cases, &a.prefer) {
        (Some(arg), _) => parse_cases(arg)?,
        (None, _) => vec![1],
    };
    let mut cases = numbered
        .iter()
        .map(|&k| CaseSpec::numbered(k, &g, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(arg) = &a.prefer {
        cases.push(CaseSpec::custom("prefer", parse_prefer(arg, n)?));
    }
    if a.traces && n > TRACE_NODE_LIMIT {
        return Err(CliError::Usage(format!(
            "--traces needs a graph of at most {TRACE_NODE_LIMIT} nodes"
        )));
    }

    let mut rc = ReportConfig::new(cases);
    rc.rank = cfg;
    rc.sources = parse_sources(&a.sources, n)?;
    rc.n_pages = match &a.npage {
        Some(arg) => parse_npage(arg, n)?,
        None => (1..=n).collect(),
    };
    rc.jobs = a.jobs;
    rc.include_timings = a.timings;
    let report = build_report(&g, &rc)?;

    let traces = if a.traces {
        Some(collect_traces(&g, &rc)?)
    } else {
        None
    };

    let text = match a.format {
        Format::Csv => {
            let mut s = report.to_csv();
            if let Some(traces) = &traces {
                s.push_str("\n# traces\ncase,source,n_page,trace\n");
                for t in traces {
                    for tr in &t.traces {
                        s.push_str(&format!("{},{},{},\"{}\"\n", t.case, t.source, t.n_page, tr));
                    }
                }
            }
            s
        }
        Format::Json => {
            let mut doc = serde_json::to_value(&report).expect("report json");
            if let Some(traces) = traces {
                doc["traces"] = serde_json::to_value(traces).expect("traces json");
            }
            serde_json::to_string_pretty(&doc).expect("report json") + "\n"
        }
    };
    emit(&a.out, &text, stdout)
}

#[derive(Debug, Serialize)]
pub struct TraceSet {
    pub case: String,
    pub source: usize,
    pub n_page: usize,
    pub traces: Vec<String>,
}

fn collect_traces(g: &Graph, rc: &ReportConfig) -> CliResult<Vec<TraceSet>> {
    let mut out = Vec::new();
    for arg in &rc.cases {
        let ranks = arg.ranks(g, &rc.rank)?;
        let tables = build_all_tables(g, &ranks)?;
        for &s in &rc.sources {
            for &p in &rc.n_pages {
                let r = spread_probability_with(
                    g,
                    &tables,
                    SpreadQuery::new(s, p),
                    SpreadOptions {
                        record_traces: true,
                    },
                )?;
                let traces = r
                    .traces
                    .unwrap_or_default()
                    .iter()
                    .map(format_trace)
                    .collect::<Result<_, _>>()?;
                out.push(TraceSet {
                    case: arg.label.clone(),
                    source: s,
                    n_page: p,
                    traces,
                });
            }
        }
    }
    Ok(out)
}

/// Draws the parameters of the next random verification graph.
pub fn verify_params(rng: &mut ChaCha8Rng, max_n: usize) -> BaParams {
    let n = rng.random_range(3..=max_n.max(3));
    let m = if n > 3 { rng.random_range(1..=2) } else { 1 };
    BaParams::new(n, m, rng.random())
}

pub fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = rank_config(a.damping)?;
    check::check_bat(10)?;

    let graphs: Vec<(String, Graph)> = if a.graph.is_given() {
        vec![("given graph".into(), a.graph.load()?)]
    } else {
        if a.max_n > batprop_core::spread::ORACLE_NODE_LIMIT {
            return Err(CliError::Usage(format!(
                "--max-n is limited to {} by the oracle",
                batprop_core::spread::ORACLE_NODE_LIMIT
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(a.graph.seed);
        (0..a.graphs)
            .map(|k| {
                let p = verify_params(&mut rng, a.max_n);
                let label = format!("graph {k} (n={}, m={}, seed={})", p.n, p.m, p.seed);
                generate_ba(&p).map(|g| (label, g))
            })
            .collect::<Result<_, _>>()?
    };

    let total = graphs.len();
    for (label, g) in &graphs {
        let ranks = pagerank(g, &cfg)?;
        let mut tables = build_all_tables(g, &ranks)?;
        if a.inject_fault {
            tables[0].state_prob[0] += 0.05;
        }
        let matrix = spread_table(g, &tables, 0)?;
        check::check_all(g, &ranks, &tables, &matrix).map_err(|v| {
            let _ = write_line(stdout, &format!("{label}: FAIL {v}"));
            CliError::Invariant(v)
        })?;
    }
    write_line(
        stdout,
        &format!("{total}/{total} graphs: oracle match, sums ok, monotone ok"),
    )
}

/// Reads a graph the same way `--graph` does; exposed for tests.
pub fn load_graph_file(path: &Path) -> CliResult<Graph> {
    GraphArgs {
        graph: Some(path.to_path_buf()),
        ..GraphArgs::default()
    }
    .load()
}
