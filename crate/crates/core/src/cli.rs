//! Command-line front end: `generate`, `run` and `verify`.
//!
//! Exit codes: 0 success, 1 verification failed, 2 sampling precondition
//! failed, 3 model capacity violated, 64 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::derand::{Epsilon, ParamOverrides};
use crate::generate;
use crate::graph::{
    check_two_ruling_set, parse_edge_list, parse_vertex_set, write_edge_list, write_vertex_set, Graph, LabeledGraph,
};
use crate::ruling::{deterministic_two_ruling_set, FallbackStrategy, RulingConfig, RulingError, RulingSetResult};
use crate::sim::{ModelKind, SimError, DEFAULT_MEMORY_CONST, DEFAULT_ROUTING_ROUNDS};
use crate::DEFAULT_ENUMERATION_BUDGET;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNVERIFIED: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "rulingset",
    version,
    about = "Deterministic 2-ruling sets in simulated MPC and Congested Clique"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph in edge-list format.
    Generate(GenerateArgs),
    /// Compute a 2-ruling set and report round statistics.
    Run(RunArgs),
    /// Check that a set file is a 2-ruling set of a graph.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    GnpCapped,
    RegularIsh,
    StarCluster,
    Grid,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GraphKind,
    /// Vertex count (gnp-capped, regular-ish).
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge probability (gnp-capped).
    #[arg(long)]
    pub p: Option<f64>,
    /// Degree cap (gnp-capped).
    #[arg(long)]
    pub cap: Option<usize>,
    /// Target degree (regular-ish) or hub degree (star-cluster).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Hub count (star-cluster).
    #[arg(long)]
    pub hubs: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub graph: PathBuf,
    #[arg(long, default_value = "mpc")]
    pub mode: ModelKind,
    #[arg(long, default_value = "1/3")]
    pub epsilon: Epsilon,
    /// Confidence constant in the independence degree.
    #[arg(long, default_value_t = 1)]
    pub c: u32,
    #[arg(long)]
    pub k_override: Option<usize>,
    /// Potential weight is n to this power.
    #[arg(long)]
    pub w_exponent: Option<u32>,
    /// Seed bits fixed per chunk; floor(log2 n) by default.
    #[arg(long)]
    pub chunk_bits: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub degree_floor_const: f64,
    #[arg(long, default_value = "gather")]
    pub fallback: FallbackStrategy,
    /// Memory constant c in S = ceil(c n log2 n) words.
    #[arg(long, default_value_t = DEFAULT_MEMORY_CONST)]
    pub memory_const: f64,
    /// Rounds charged per routed batch in the clique.
    #[arg(long, default_value_t = DEFAULT_ROUTING_ROUNDS)]
    pub routing_rounds: usize,
    /// Cap on enumerated seed completions per call.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
    /// Write the round transcript and seed-fixing traces here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the ruling set here, one vertex label per line.
    #[arg(long)]
    pub out_set: Option<PathBuf>,
    /// Print the report as one JSON document.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub graph: PathBuf,
    pub set: PathBuf,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<LabeledGraph, Failure> {
    parse_edge_list(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn need<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("{kind} needs --{flag}")))
}

fn generate_graph(args: &GenerateArgs) -> Result<(Graph, String), Failure> {
    let (g, what) = match args.kind {
        GraphKind::Grid => {
            let (r, c) = (need(args.rows, "rows", "grid")?, need(args.cols, "cols", "grid")?);
            (generate::grid(r, c), format!("grid rows={r} cols={c}"))
        }
        GraphKind::GnpCapped => {
            let n = need(args.n, "n", "gnp-capped")?;
            let p = need(args.p, "p", "gnp-capped")?;
            let cap = need(args.cap, "cap", "gnp-capped")?;
            (
                generate::gnp_capped(n, p, cap, args.seed),
                format!("gnp-capped n={n} p={p} cap={cap} seed={}", args.seed),
            )
        }
        GraphKind::RegularIsh => {
            let n = need(args.n, "n", "regular-ish")?;
            let d = need(args.degree, "degree", "regular-ish")?;
            (
                generate::regular_ish(n, d, args.seed),
                format!("regular-ish n={n} degree={d} seed={}", args.seed),
            )
        }
        GraphKind::StarCluster => {
            let h = need(args.hubs, "hubs", "star-cluster")?;
            let d = need(args.degree, "degree", "star-cluster")?;
            (
                generate::star_cluster(h, d, args.seed),
                format!("star-cluster hubs={h} degree={d} seed={}", args.seed),
            )
        }
    };
    Ok((g.map_err(|e| Failure::usage(e.to_string()))?, what))
}

fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let (g, what) = generate_graph(args)?;
    let header = vec![what, format!("n={} m={}", g.n(), g.m())];
    let mut buf = Vec::new();
    write_edge_list(&mut buf, &LabeledGraph::unlabeled(g), &header).expect("writing to memory");
    match &args.out {
        Some(path) => write_file(path, &buf)?,
        None => stdout.write_all(&buf).map_err(|e| Failure::usage(e.to_string()))?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RunSettings {
    budget: u64,
    c: u32,
    chunk_bits: Option<usize>,
    degree_floor_const: f64,
    epsilon: Epsilon,
    fallback: FallbackStrategy,
    k_override: Option<usize>,
    memory_const: f64,
    memory_words: usize,
    mode: ModelKind,
    routing_rounds: usize,
    w_exponent: Option<u32>,
}

fn ruling_config(args: &RunArgs) -> RulingConfig {
    RulingConfig {
        mode: args.mode,
        memory_const: args.memory_const,
        routing_rounds: args.routing_rounds,
        epsilon: args.epsilon,
        confidence: args.c,
        overrides: ParamOverrides {
            k: args.k_override,
            w_exponent: args.w_exponent,
            weight: None,
        },
        chunk_bits: args.chunk_bits,
        degree_floor_const: args.degree_floor_const,
        fallback: args.fallback,
        budget: args.budget,
    }
}

fn report(
    g: &Graph,
    args: &RunArgs,
    config: &RulingConfig,
    res: &RulingSetResult,
    verified: bool,
) -> serde_json::Value {
    let settings = RunSettings {
        budget: args.budget,
        c: args.c,
        chunk_bits: args.chunk_bits,
        degree_floor_const: args.degree_floor_const,
        epsilon: args.epsilon,
        fallback: args.fallback,
        k_override: args.k_override,
        memory_const: args.memory_const,
        memory_words: config.model(g.n()).map(|m| m.memory_words).unwrap_or(0),
        mode: args.mode,
        routing_rounds: args.routing_rounds,
        w_exponent: args.w_exponent,
    };
    // serde_json maps keep keys sorted, which fixes the field order
    json!({
        "config": settings,
        "degree_floor": res.degree_floor,
        "fallback": res.fallback,
        "initial_max_degree": res.initial_max_degree,
        "iteration_cap": res.iteration_cap,
        "iterations": res.iterations.len(),
        "m": g.m(),
        "n": g.n(),
        "per_iteration": res.iterations,
        "set_size": res.set.len(),
        "total_rounds": res.total_rounds,
        "transcript": res.transcript.summary(),
        "verified": verified,
    })
}

fn trace_document(res: &RulingSetResult) -> serde_json::Value {
    let derandomization: Vec<_> = res
        .traces
        .iter()
        .enumerate()
        .map(|(i, t)| json!({ "iteration": i, "trace": t }))
        .collect();
    json!({ "derandomization": derandomization, "transcript": res.transcript.rounds })
}

fn run_failure(e: RulingError) -> Failure {
    match e {
        RulingError::PreconditionFailed { iteration, report } => Failure {
            code: EXIT_PRECONDITION,
            message: format!(
                "iteration {iteration}: sampling precondition failed\n{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            ),
        },
        RulingError::Sim(
            e @ (SimError::CapacityViolation { .. } | SimError::BandwidthViolation { .. } | SimError::RoundLimit(..)),
        ) => Failure {
            code: EXIT_MODEL,
            message: e.to_string(),
        },
        RulingError::Derand(crate::derand::DerandError::Sim(
            e @ (SimError::CapacityViolation { .. } | SimError::BandwidthViolation { .. }),
        )) => Failure {
            code: EXIT_MODEL,
            message: e.to_string(),
        },
        other => Failure::usage(other.to_string()),
    }
}

fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let lg = load_graph(&args.graph)?;
    let g = &lg.graph;
    let config = ruling_config(args);
    let res = deterministic_two_ruling_set(g, &config).map_err(run_failure)?;
    let verified = check_two_ruling_set(g, &res.set).is_ok_and(|c| c.is_valid());

    if let Some(path) = &args.trace {
        let doc = serde_json::to_string(&trace_document(&res)).expect("trace serializes");
        write_file(path, format!("{doc}\n").as_bytes())?;
    }
    if let Some(path) = &args.out_set {
        let mut buf = Vec::new();
        write_vertex_set(&mut buf, &res.set, &lg).expect("writing to memory");
        write_file(path, &buf)?;
    }
    let out = if args.json {
        let doc = serde_json::to_string_pretty(&report(g, args, &config, &res, verified)).expect("report serializes");
        format!("{doc}\n")
    } else {
        let mut s = format!(
            "n={} m={} max_degree={} mode={}\n",
            g.n(),
            g.m(),
            res.initial_max_degree,
            args.mode
        );
        for it in &res.iterations {
            s += &format!(
                "iteration {}: max_degree={} f={} threshold={} |Z|={} |E(G[Z])|={} |H|={} |I|={} rounds={}\n",
                it.iteration,
                it.max_degree,
                it.buckets,
                it.degree_threshold,
                it.sample_size,
                it.sample_edges,
                it.high_degree,
                it.mis_size,
                it.rounds
            );
        }
        s += &format!(
            "fallback {}: vertices={} max_degree={} |I|={} rounds={}\n",
            res.fallback.used,
            res.fallback.vertices,
            res.fallback.max_degree,
            res.fallback.mis_size,
            res.fallback.rounds
        );
        s += &format!(
            "iterations={} total_rounds={} |U|={} verified={}\n",
            res.iterations.len(),
            res.total_rounds,
            res.set.len(),
            verified
        );
        s
    };
    stdout
        .write_all(out.as_bytes())
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(if verified { EXIT_OK } else { EXIT_UNVERIFIED })
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let lg = load_graph(&args.graph)?;
    let set =
        parse_vertex_set(&read(&args.set)?, &lg).map_err(|e| Failure::usage(format!("{}: {e}", args.set.display())))?;
    let check = check_two_ruling_set(&lg.graph, &set).map_err(|e| Failure::usage(e.to_string()))?;
    let mut s = format!("independent: {}\nruled: {}\n", check.independent, check.ruled);
    if let Some((u, v)) = check.conflict_edge {
        s += &format!("conflict edge: {} {}\n", lg.labels[u], lg.labels[v]);
    }
    if !check.unruled.is_empty() {
        let labels: Vec<&str> = check.unruled.iter().map(|&v| lg.labels[v].as_str()).collect();
        s += &format!("unruled vertices: {}\n", labels.join(" "));
    }
    stdout
        .write_all(s.as_bytes())
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(if check.is_valid() { EXIT_OK } else { EXIT_UNVERIFIED })
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a, stdout),
        Command::Run(a) => cmd_run(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
