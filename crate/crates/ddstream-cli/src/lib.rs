//! Command-line pipeline: build sketches from edge files, dump exact
//! diffusion degrees, extract top-k seed sets, simulate cascade spreads,
//! validate the error bound, and emit experiment tables.
//!
//! Exit codes (mapped in `main`): 0 success, 1 usage error, 2 data error.
//!
//! Output formats
//! - `sketch`: `sketch.json` snapshot plus `estimates.csv` with header
//!   `node,degree,estimate`.
//! - `exact`: `exact.csv` with header `node,degree,dd`.
//! - `topk`: `topk_dd_k<k>.csv` and `topk_dds_k<k>_round<r>.csv`, header
//!   `rank,node,score`.
//! - `experiment`: `spread_vs_k.csv` (`k,method,mean_spread,std_spread`),
//!   `mean_error_vs_k.csv` (`k,mean_error`), `timings.json`.
//! - `simulate`, `validate-bound`, `space-report`: JSON to stdout, and to a
//!   file when `--out-dir` is given.
//!
//! Floats are printed with Rust's shortest round-trip decimal notation, so
//! numeric columns are lossless and byte-stable for fixed seeds. Timings are
//! wall-clock and live in `timings.json`, outside the deterministic CSVs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ddstream::analysis::{self, TimingReport};
use ddstream::icm::{self, CascadeConfig, Orientation, SpreadReport};
use ddstream::oracle::StaticGraph;
use ddstream::seeding::{derive_seed, derive_seed_str};
use ddstream::sketch::{AdjSketch, SketchMode};
use ddstream::stream::{
    collect_events, open_edge_stream, Delimiter, EdgeEvent, NodeId, NodeInterner, StreamOptions,
};
use ddstream::synth::{generate, write_edge_list, GeneratorSpec};
use ddstream::topk::TopKTracker;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; exit code 1.
    Usage(String),
    /// Unreadable or malformed data, or failing validation; exit code 2.
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl std::fmt::Display) -> CliError {
    CliError::Data(msg.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "ddstream",
    version,
    about = "Diffusion-degree estimation and top-k influence tracking on edge streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stream an edge file into a sketch; write snapshot and estimates
    Sketch(SketchArgs),
    /// Exact diffusion degrees from full adjacency
    Exact(ExactArgs),
    /// Top-k seed sets: exact ranking and the streaming heap
    Topk(TopkArgs),
    /// Monte Carlo cascade spread of a given seed set
    Simulate(SimulateArgs),
    /// Full pipeline: spread vs k, mean error vs k, timings
    Experiment(ExperimentArgs),
    /// Empirical check of the estimation error bound at one node
    ValidateBound(ValidateBoundArgs),
    /// Sketch vs full-graph memory accounting
    SpaceReport(SpaceReportArgs),
    /// Generate a synthetic edge-list file
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Edge-list file, one `tail head [weight]` per line
    #[arg(long)]
    pub input: PathBuf,
    /// Treat each line as one directed edge (default)
    #[arg(long, conflicts_with = "undirected")]
    pub directed: bool,
    /// Emit both directions for every line
    #[arg(long)]
    pub undirected: bool,
    /// Parse the third column as an edge weight in [0, 1]
    #[arg(long)]
    pub weighted: bool,
    /// Field delimiter
    #[arg(long, value_enum, default_value_t = DelimiterArg::Auto)]
    pub delimiter: DelimiterArg,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelimiterArg {
    Auto,
    Whitespace,
    Comma,
}

impl InputArgs {
    fn options(&self) -> StreamOptions {
        StreamOptions {
            delimiter: match self.delimiter {
                DelimiterArg::Auto => Delimiter::Auto,
                DelimiterArg::Whitespace => Delimiter::Whitespace,
                DelimiterArg::Comma => Delimiter::Comma,
            },
            directed: !self.undirected,
            weighted: self.weighted,
        }
    }

    fn read_events(&self) -> Result<(Vec<EdgeEvent>, NodeInterner), CliError> {
        let stream = open_edge_stream(&self.input, self.options()).map_err(data)?;
        collect_events(stream).map_err(data)
    }
}

/// Slot budget: a fixed integer, the symbolic `d_in-2` resolved by a
/// counting pre-pass, or derived from an (epsilon, delta) target.
#[derive(Args, Debug, Clone)]
pub struct QArgs {
    /// Slots per node: an integer or the symbolic value `d_in-2`
    #[arg(long)]
    pub q: Option<String>,
    /// Approximation error target in (0, 1); requires --delta
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Failure probability in (0, 1); requires --epsilon
    #[arg(long)]
    pub delta: Option<f64>,
}

impl QArgs {
    fn resolve(&self, graph_stats: Option<(usize, u64)>) -> Result<usize, CliError> {
        match (&self.q, self.epsilon, self.delta) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(usage("provide either --q or --epsilon/--delta, not both"))
            }
            (Some(q), None, None) => {
                if q == "d_in-2" {
                    let (n, m) = graph_stats
                        .ok_or_else(|| usage("symbolic q needs a counted input graph"))?;
                    if n == 0 {
                        return Err(CliError::Data("empty graph: cannot resolve d_in-2".into()));
                    }
                    let d_in = m as f64 / n as f64;
                    let resolved = (d_in - 2.0).floor().max(1.0) as usize;
                    println!("resolved q = {resolved} (d_in = {d_in})");
                    Ok(resolved)
                } else {
                    let parsed: i64 = q
                        .parse()
                        .map_err(|_| usage(format!("q must be an integer or `d_in-2`, got {q:?}")))?;
                    if parsed < 1 {
                        return Err(usage(format!("q must be at least 1, got {parsed}")));
                    }
                    Ok(parsed as usize)
                }
            }
            (None, Some(eps), Some(delta)) => {
                let q = analysis::q_for(eps, delta).map_err(|e| usage(e.to_string()))?;
                println!("resolved q = {q} (epsilon = {eps}, delta = {delta})");
                Ok(q)
            }
            _ => Err(usage("one of --q or --epsilon/--delta is required")),
        }
    }

    fn needs_counting_pass(&self) -> bool {
        self.q.as_deref() == Some("d_in-2")
    }
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrientationArg {
    /// Stream edge (v, u): head u attempts tail v (estimator convention)
    #[default]
    HeadToTail,
    /// Stream edge (v, u): tail v attempts head u
    TailToHead,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::HeadToTail => Orientation::HeadToTail,
            OrientationArg::TailToHead => Orientation::TailToHead,
        }
    }
}

#[derive(Args, Debug)]
pub struct SketchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub q: QArgs,
    /// Common diffusion probability
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TopkArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub q: QArgs,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated ascending seed-set sizes, e.g. 5,10,20
    #[arg(long, value_delimiter = ',')]
    pub k_list: Vec<usize>,
    /// Stochastic repetitions of the streaming pass
    #[arg(long, default_value_t = 1)]
    pub rounds: u32,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated seed node labels
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<String>,
    /// File with one seed node label per line (alternative to --seeds)
    #[arg(long, conflicts_with = "seeds")]
    pub seeds_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 10_000)]
    pub icm_runs: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OrientationArg::HeadToTail)]
    pub orientation: OrientationArg,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Edge-list file (may come from --config instead)
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, conflicts_with = "undirected")]
    pub directed: bool,
    #[arg(long)]
    pub undirected: bool,
    #[command(flatten)]
    pub q: QArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub k_list: Vec<usize>,
    #[arg(long)]
    pub icm_runs: Option<u32>,
    /// Stochastic repetitions of the streaming algorithm per k
    #[arg(long)]
    pub rounds: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationArg>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// JSON file with the same option names; explicit flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Optional-field mirror of the experiment flags for --config files.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: Option<PathBuf>,
    pub directed: Option<bool>,
    pub q: Option<String>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub k_list: Option<Vec<usize>>,
    pub icm_runs: Option<u32>,
    pub rounds: Option<u32>,
    pub seed: Option<u64>,
    pub orientation: Option<Orientation>,
    pub out_dir: Option<PathBuf>,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub input: PathBuf,
    pub directed: bool,
    pub q: QSpec,
    pub lambda: f64,
    pub k_list: Vec<usize>,
    pub icm_runs: u32,
    pub rounds: u32,
    pub seed: u64,
    pub orientation: Orientation,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub enum QSpec {
    Fixed(usize),
    DinMinusTwo,
    ErrorTarget { epsilon: f64, delta: f64 },
}

#[derive(Args, Debug)]
pub struct ValidateBoundArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Node label to validate
    #[arg(long)]
    pub node: String,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpaceReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub q: QArgs,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Graph family to generate
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Primary size: leaves, cycle/path length, spokes, or node count
    #[arg(long)]
    pub size: u32,
    /// two-tier-hub: largest feeder in-degree
    #[arg(long, default_value_t = 6)]
    pub max_degree: u32,
    /// heavy-tail: edges generated per node
    #[arg(long, default_value_t = 8)]
    pub edges_per_node: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output edge-list file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum SynthKind {
    Star,
    Cycle,
    Path,
    TwoTierHub,
    HeavyTail,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sketch(args) => cmd_sketch(&args),
        Command::Exact(args) => cmd_exact(&args),
        Command::Topk(args) => cmd_topk(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Experiment(args) => {
            let spec = resolve_experiment(&args)?;
            cmd_experiment(&spec)
        }
        Command::ValidateBound(args) => cmd_validate_bound(&args),
        Command::SpaceReport(args) => cmd_space_report(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(data)
}

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

fn feed_sketch(sketch: &mut AdjSketch, events: &[EdgeEvent]) -> Result<(), CliError> {
    for e in events {
        sketch.next(e).map_err(data)?;
    }
    Ok(())
}

pub fn cmd_sketch(args: &SketchArgs) -> Result<(), CliError> {
    let (events, interner) = args.input.read_events()?;
    let graph_stats = if args.q.needs_counting_pass() {
        Some((interner.len(), events.len() as u64))
    } else {
        None
    };
    let q = args.q.resolve(graph_stats)?;
    let mode = if args.input.weighted {
        SketchMode::Weighted
    } else {
        SketchMode::Uniform
    };
    let mut sketch =
        AdjSketch::with_mode(q, args.lambda, args.seed, mode).map_err(|e| usage(e.to_string()))?;
    feed_sketch(&mut sketch, &events)?;

    ensure_out_dir(&args.out_dir)?;
    let snapshot_path = args.out_dir.join("sketch.json");
    let file = fs::File::create(&snapshot_path).map_err(data)?;
    sketch.save(file).map_err(data)?;

    let mut csv = String::from("node,degree,estimate\n");
    for id in 0..interner.len() as NodeId {
        let degree = sketch.row(id).map_or(0, |r| r.degree());
        let estimate = match mode {
            SketchMode::Uniform => sketch.query(id),
            SketchMode::Weighted => sketch.query_weighted(id).map_err(data)?,
        };
        csv.push_str(&format!(
            "{},{},{}\n",
            interner.resolve(id).unwrap(),
            degree,
            fmt_float(estimate)
        ));
    }
    let csv_path = args.out_dir.join("estimates.csv");
    fs::write(&csv_path, csv).map_err(data)?;
    println!(
        "wrote {} and {}",
        snapshot_path.display(),
        csv_path.display()
    );
    Ok(())
}

pub fn cmd_exact(args: &ExactArgs) -> Result<(), CliError> {
    let (events, interner) = args.input.read_events()?;
    let graph = StaticGraph::build(&events);
    ensure_out_dir(&args.out_dir)?;
    let mut csv = String::from("node,degree,dd\n");
    for id in 0..interner.len() as NodeId {
        csv.push_str(&format!(
            "{},{},{}\n",
            interner.resolve(id).unwrap(),
            graph.in_degree(id),
            fmt_float(graph.exact_dd(id, args.lambda))
        ));
    }
    let path = args.out_dir.join("exact.csv");
    fs::write(&path, csv).map_err(data)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validate_k_list(k_list: &[usize]) -> Result<(), CliError> {
    if k_list.is_empty() {
        return Err(usage("--k-list must not be empty"));
    }
    if k_list.iter().any(|&k| k < 1) {
        return Err(usage("every k must be at least 1"));
    }
    if k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--k-list must be strictly ascending"));
    }
    Ok(())
}

/// One streaming pass of the heap tracker; returns the ranked seed set and
/// the sketch it was built with.
fn dds_pass(
    events: &[EdgeEvent],
    q: usize,
    lambda: f64,
    k: usize,
    seed: u64,
) -> Result<(Vec<(NodeId, f64)>, AdjSketch), CliError> {
    let mut sketch = AdjSketch::new(q, lambda, seed).map_err(|e| usage(e.to_string()))?;
    let mut tracker = TopKTracker::new(k);
    for e in events {
        tracker.next(&mut sketch, e).map_err(data)?;
    }
    Ok((tracker.query(), sketch))
}

fn write_ranking_csv(
    path: &Path,
    ranking: &[(NodeId, f64)],
    interner: &NodeInterner,
) -> Result<(), CliError> {
    let mut csv = String::from("rank,node,score\n");
    for (rank, (node, score)) in ranking.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{}\n",
            rank + 1,
            interner.resolve(*node).unwrap_or("?"),
            fmt_float(*score)
        ));
    }
    fs::write(path, csv).map_err(data)
}

pub fn cmd_topk(args: &TopkArgs) -> Result<(), CliError> {
    validate_k_list(&args.k_list)?;
    if args.rounds < 1 {
        return Err(usage("--rounds must be at least 1"));
    }
    let (events, interner) = args.input.read_events()?;
    let graph_stats = if args.q.needs_counting_pass() {
        Some((interner.len(), events.len() as u64))
    } else {
        None
    };
    let q = args.q.resolve(graph_stats)?;
    let graph = StaticGraph::build(&events);
    ensure_out_dir(&args.out_dir)?;

    for &k in &args.k_list {
        if k > graph.node_count() {
            eprintln!(
                "warning: k = {k} exceeds node count {}; emitting all nodes",
                graph.node_count()
            );
        }
        let dd = graph.exact_topk(k, args.lambda);
        write_ranking_csv(&args.out_dir.join(format!("topk_dd_k{k}.csv")), &dd, &interner)?;
        for round in 0..args.rounds {
            let run_seed = derive_seed(derive_seed(args.seed, k as u64), round as u64);
            let (ranking, _) = dds_pass(&events, q, args.lambda, k, run_seed)?;
            write_ranking_csv(
                &args.out_dir.join(format!("topk_dds_k{k}_round{}.csv", round + 1)),
                &ranking,
                &interner,
            )?;
        }
    }
    println!("wrote top-k tables to {}", args.out_dir.display());
    Ok(())
}

fn resolve_seed_labels(
    labels: &[String],
    interner: &NodeInterner,
) -> Result<Vec<NodeId>, CliError> {
    labels
        .iter()
        .map(|label| {
            interner
                .lookup(label)
                .ok_or_else(|| CliError::Data(format!("seed node {label:?} not found in input")))
        })
        .collect()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (events, interner) = args.input.read_events()?;
    let graph = StaticGraph::build(&events);
    let labels: Vec<String> = if let Some(path) = &args.seeds_file {
        fs::read_to_string(path)
            .map_err(data)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        args.seeds.clone()
    };
    if labels.is_empty() {
        return Err(usage("provide seed nodes via --seeds or --seeds-file"));
    }
    let seeds = resolve_seed_labels(&labels, &interner)?;
    let cfg = CascadeConfig {
        lambda: args.lambda,
        runs: args.icm_runs,
        seed: args.seed,
        orientation: args.orientation.into(),
    };
    let report = icm::simulate(&graph, &seeds, &cfg).map_err(data)?;
    emit_json(&report, args.out_dir.as_deref(), "spread.json")
}

/// Prints `value` as pretty JSON and also writes it under `out_dir` if given.
fn emit_json<T: serde::Serialize>(
    value: &T,
    out_dir: Option<&Path>,
    filename: &str,
) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).map_err(data)?;
    println!("{json}");
    if let Some(dir) = out_dir {
        ensure_out_dir(dir)?;
        fs::write(dir.join(filename), json + "\n").map_err(data)?;
    }
    Ok(())
}

pub fn cmd_validate_bound(args: &ValidateBoundArgs) -> Result<(), CliError> {
    let (events, interner) = args.input.read_events()?;
    let graph = StaticGraph::build(&events);
    let node = interner
        .lookup(&args.node)
        .ok_or_else(|| CliError::Data(format!("node {:?} not found in input", args.node)))?;
    let result = analysis::hoeffding_validate(
        &graph,
        node,
        args.epsilon,
        args.delta,
        args.trials,
        args.lambda,
        args.seed,
    )
    .map_err(|e| match e {
        analysis::AnalysisError::InvalidEpsilon(_)
        | analysis::AnalysisError::InvalidDelta(_)
        | analysis::AnalysisError::TooFewTrials(_) => usage(e.to_string()),
        other => data(other),
    })?;
    println!(
        "node {:?} (internal id {node}): empirical rate {} vs threshold {} (degenerate: {})",
        args.node,
        result.empirical_rate,
        result.rate_threshold(),
        result.degenerate
    );
    emit_json(&result, args.out_dir.as_deref(), "bound_check.json")
}

pub fn cmd_space_report(args: &SpaceReportArgs) -> Result<(), CliError> {
    let (events, interner) = args.input.read_events()?;
    let graph_stats = if args.q.needs_counting_pass() {
        Some((interner.len(), events.len() as u64))
    } else {
        None
    };
    let q = args.q.resolve(graph_stats)?;
    let graph = StaticGraph::build(&events);
    let mut sketch =
        AdjSketch::new(q, args.lambda, args.seed).map_err(|e| usage(e.to_string()))?;
    feed_sketch(&mut sketch, &events)?;
    let report = analysis::space_report(&sketch, &graph);
    emit_json(&report, args.out_dir.as_deref(), "space_report.json")
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = match args.kind {
        SynthKind::Star => GeneratorSpec::Star { leaves: args.size },
        SynthKind::Cycle => GeneratorSpec::Cycle { len: args.size },
        SynthKind::Path => GeneratorSpec::Path { len: args.size },
        SynthKind::TwoTierHub => GeneratorSpec::TwoTierHub {
            spokes: args.size,
            max_feeder_degree: args.max_degree,
        },
        SynthKind::HeavyTail => GeneratorSpec::HeavyTail {
            nodes: args.size,
            edges_per_node: args.edges_per_node,
            seed: args.seed,
        },
    };
    let events = generate(&spec).map_err(usage)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(data)?;
        }
    }
    let file = fs::File::create(&args.out).map_err(data)?;
    write_edge_list(&events, std::io::BufWriter::new(file)).map_err(data)?;
    println!("wrote {} events to {}", events.len(), args.out.display());
    Ok(())
}

pub fn resolve_experiment(args: &ExperimentArgs) -> Result<ExperimentSpec, CliError> {
    let config: ExperimentConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(data)?;
            serde_json::from_str(&text).map_err(|e| usage(format!("bad config file: {e}")))?
        }
        None => ExperimentConfig::default(),
    };

    let input = args
        .input
        .clone()
        .or(config.input)
        .ok_or_else(|| usage("--input is required (flag or config)"))?;
    let out_dir = args
        .out_dir
        .clone()
        .or(config.out_dir)
        .ok_or_else(|| usage("--out-dir is required (flag or config)"))?;
    let k_list = if args.k_list.is_empty() {
        config.k_list.unwrap_or_default()
    } else {
        args.k_list.clone()
    };
    validate_k_list(&k_list)?;

    let directed = if args.undirected {
        false
    } else if args.directed {
        true
    } else {
        config.directed.unwrap_or(true)
    };

    let q = match (&args.q.q, args.q.epsilon, args.q.delta) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(usage("provide either --q or --epsilon/--delta, not both"))
        }
        (Some(q), None, None) => parse_q_spec(q)?,
        (None, Some(eps), Some(delta)) => QSpec::ErrorTarget {
            epsilon: eps,
            delta,
        },
        (None, None, None) => match (&config.q, config.epsilon, config.delta) {
            (Some(q), None, None) => parse_q_spec(q)?,
            (None, Some(eps), Some(delta)) => QSpec::ErrorTarget {
                epsilon: eps,
                delta,
            },
            (None, None, None) => {
                return Err(usage("one of --q or --epsilon/--delta is required"))
            }
            _ => return Err(usage("config must set either q or epsilon/delta, not both")),
        },
        _ => return Err(usage("--epsilon and --delta must be given together")),
    };

    Ok(ExperimentSpec {
        input,
        directed,
        q,
        lambda: args.lambda.or(config.lambda).unwrap_or(0.1),
        k_list,
        icm_runs: args.icm_runs.or(config.icm_runs).unwrap_or(2000),
        rounds: args.rounds.or(config.rounds).unwrap_or(5),
        seed: args.seed.or(config.seed).unwrap_or(42),
        orientation: args
            .orientation
            .map(Orientation::from)
            .or(config.orientation)
            .unwrap_or_default(),
        out_dir,
    })
}

fn parse_q_spec(text: &str) -> Result<QSpec, CliError> {
    if text == "d_in-2" {
        return Ok(QSpec::DinMinusTwo);
    }
    let parsed: i64 = text
        .parse()
        .map_err(|_| usage(format!("q must be an integer or `d_in-2`, got {text:?}")))?;
    if parsed < 1 {
        return Err(usage(format!("q must be at least 1, got {parsed}")));
    }
    Ok(QSpec::Fixed(parsed as usize))
}

/// Spread and error rows of one experiment, before formatting.
struct ExperimentTables {
    /// (k, method, mean, std)
    spread_rows: Vec<(usize, &'static str, f64, f64)>,
    /// (k, mean error averaged over rounds)
    error_rows: Vec<(usize, Option<f64>)>,
}

pub fn cmd_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    if spec.rounds < 1 {
        return Err(usage("rounds must be at least 1"));
    }
    let mut timing = TimingReport::new();

    let options = StreamOptions {
        delimiter: Delimiter::Auto,
        directed: spec.directed,
        weighted: false,
    };
    let (events, _interner) = timing.measure("ingest", || -> Result<_, CliError> {
        let stream = open_edge_stream(&spec.input, options).map_err(data)?;
        collect_events(stream).map_err(data)
    })?;

    let graph = timing.measure("exact_build", || StaticGraph::build(&events));

    let q = match spec.q {
        QSpec::Fixed(q) => q,
        QSpec::DinMinusTwo => {
            if graph.node_count() == 0 {
                return Err(CliError::Data("empty graph: cannot resolve d_in-2".into()));
            }
            let resolved = (graph.mean_in_degree() - 2.0).floor().max(1.0) as usize;
            println!("resolved q = {resolved} (d_in = {})", graph.mean_in_degree());
            resolved
        }
        QSpec::ErrorTarget { epsilon, delta } => {
            let q = analysis::q_for(epsilon, delta).map_err(|e| usage(e.to_string()))?;
            println!("resolved q = {q} (epsilon = {epsilon}, delta = {delta})");
            q
        }
    };

    let tables = run_experiment_tables(spec, &events, &graph, q, &mut timing)?;

    // All numbers are computed before anything is written, so a failure
    // below can clean up every partial output.
    ensure_out_dir(&spec.out_dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_experiment_outputs(spec, &tables, &timing, &mut written);
    if result.is_err() {
        for path in written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn run_experiment_tables(
    spec: &ExperimentSpec,
    events: &[EdgeEvent],
    graph: &StaticGraph,
    q: usize,
    timing: &mut TimingReport,
) -> Result<ExperimentTables, CliError> {
    let mut spread_rows = Vec::new();
    let mut error_rows = Vec::new();

    for &k in &spec.k_list {
        if k > graph.node_count() {
            eprintln!(
                "warning: k = {k} exceeds node count {}; emitting all nodes",
                graph.node_count()
            );
        }

        let dd_seeds: Vec<NodeId> = timing.measure("topk", || {
            graph
                .exact_topk(k, spec.lambda)
                .into_iter()
                .map(|(u, _)| u)
                .collect()
        });

        // One streaming pass per round; stale-heap semantics throughout.
        let mut round_seed_sets: Vec<Vec<NodeId>> = Vec::with_capacity(spec.rounds as usize);
        let mut round_sketches: Vec<AdjSketch> = Vec::with_capacity(spec.rounds as usize);
        for round in 0..spec.rounds {
            let run_seed = derive_seed(derive_seed(spec.seed, k as u64), round as u64);
            let (ranking, sketch) = timing.measure("sketch_build", || {
                dds_pass(events, q, spec.lambda, k, run_seed)
            })?;
            round_seed_sets.push(ranking.into_iter().map(|(u, _)| u).collect());
            round_sketches.push(sketch);
        }

        let dd_report = timing.measure("simulation", || {
            let cfg = CascadeConfig {
                lambda: spec.lambda,
                runs: spec.icm_runs,
                seed: derive_seed_str(spec.seed, &format!("dd-k{k}")),
                orientation: spec.orientation,
            };
            icm::simulate(graph, &dd_seeds, &cfg)
        })
        .map_err(data)?;
        spread_rows.push((k, "dd", dd_report.mean_spread, dd_report.std_spread));

        let mut pooled: Vec<u32> = Vec::with_capacity((spec.icm_runs * spec.rounds) as usize);
        for (round, seeds) in round_seed_sets.iter().enumerate() {
            let report: SpreadReport = timing.measure("simulation", || {
                let cfg = CascadeConfig {
                    lambda: spec.lambda,
                    runs: spec.icm_runs,
                    seed: derive_seed_str(spec.seed, &format!("dds-k{k}-r{round}")),
                    orientation: spec.orientation,
                };
                icm::simulate(graph, seeds, &cfg)
            })
            .map_err(data)?;
            pooled.extend_from_slice(&report.per_run);
        }
        let dds_mean = pooled.iter().map(|&s| s as f64).sum::<f64>() / pooled.len() as f64;
        let dds_std = if pooled.len() > 1 {
            (pooled
                .iter()
                .map(|&s| (s as f64 - dds_mean).powi(2))
                .sum::<f64>()
                / (pooled.len() as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };
        spread_rows.push((k, "dds", dds_mean, dds_std));

        // Mean absolute estimation error over each round's seed nodes,
        // averaged across rounds.
        let mut round_means = Vec::new();
        for (seeds, sketch) in round_seed_sets.iter().zip(round_sketches.iter()) {
            if let Some(mean) = analysis::mean_error(graph, sketch, seeds, spec.lambda).mean_error
            {
                round_means.push(mean);
            }
        }
        let mean_of_means = if round_means.is_empty() {
            None
        } else {
            Some(round_means.iter().sum::<f64>() / round_means.len() as f64)
        };
        error_rows.push((k, mean_of_means));
    }

    Ok(ExperimentTables {
        spread_rows,
        error_rows,
    })
}

fn write_experiment_outputs(
    spec: &ExperimentSpec,
    tables: &ExperimentTables,
    timing: &TimingReport,
    written: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let mut spread_csv = String::from("k,method,mean_spread,std_spread\n");
    for (k, method, mean, std) in &tables.spread_rows {
        spread_csv.push_str(&format!(
            "{k},{method},{},{}\n",
            fmt_float(*mean),
            fmt_float(*std)
        ));
    }
    let spread_path = spec.out_dir.join("spread_vs_k.csv");
    fs::write(&spread_path, spread_csv).map_err(data)?;
    written.push(spread_path);

    let mut error_csv = String::from("k,mean_error\n");
    for (k, mean) in &tables.error_rows {
        match mean {
            Some(m) => error_csv.push_str(&format!("{k},{}\n", fmt_float(*m))),
            None => error_csv.push_str(&format!("{k},\n")),
        }
    }
    let error_path = spec.out_dir.join("mean_error_vs_k.csv");
    fs::write(&error_path, error_csv).map_err(data)?;
    written.push(error_path);

    let timings_path = spec.out_dir.join("timings.json");
    let mut file = fs::File::create(&timings_path).map_err(data)?;
    let json = serde_json::to_string_pretty(timing).map_err(data)?;
    writeln!(file, "{json}").map_err(data)?;
    written.push(timings_path);

    println!("wrote experiment tables to {}", spec.out_dir.display());
    Ok(())
}
