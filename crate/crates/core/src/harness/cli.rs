//! The `rffkim` command line: exact distances, chain sampling, cluster
//! statistics, regime sweeps, tail tables, boundary influence, correlation
//! length, and plotting.
//!
//! `RFFKIM_THREADS` caps worker parallelism for the whole invocation;
//! results are byte-identical across thread counts.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs;
use std::path::PathBuf;

use super::config::{
    AlphaSpec, ChainSection, DisorderSection, ExperimentConfig, GridSection, GuardSection,
    ModelKind, ModelSection, OutputSection, ScheduleSection,
};
use super::plot::render_svg_from_csv;
use super::store::{run_experiment, sweep_csv, sweep_rows};
use super::HarnessError;
use crate::clusters::{cluster_stats, decompose};
use crate::disorder::DisorderField;
use crate::estimators::{
    boundary_influence, correlation_length, ldp_tail, InfluenceMethod, LdpSizeStats,
};
use crate::exact::{exact_tv, ExactDistribution};
use crate::lattice::{BoundaryCondition, LatticeGraph, SpinBoundary};
use crate::mcmc::{
    default_burn_in, run_es_chain, run_rfim_chain, ChainPlan, SampleRecord, StartState,
};
use crate::stats::median;
use crate::thermo::{critical_temperature, edge_probability_from_temperature};

#[derive(Parser)]
#[command(
    name = "rffkim",
    version,
    about = "Ising and FK-Ising models in a Gaussian random field: exact tables, \
             samplers, and distance estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact total-variation distance between field and no-field measures
    /// on an enumerable square, across disorder seeds.
    ExactTv(ExactTvArgs),
    /// Run a chain and write per-sample cluster statistics as CSV.
    Sample(SampleArgs),
    /// Cluster statistics of one stored edge configuration.
    Stats(StatsArgs),
    /// Disorder-averaged TV/Z sweep over a radius grid, with persistence.
    Sweep(SweepArgs),
    /// Maximal-cluster tail table at fixed edge probability.
    LdpTail(LdpTailArgs),
    /// Boundary influence at the center of a square.
    BoundaryInfluence(BoundaryInfluenceArgs),
    /// Halving scale of the boundary influence over a side grid.
    CorrLength(CorrLengthArgs),
    /// Render a sweep CSV to an SVG figure.
    Plot(PlotArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    /// Random-field spin model.
    Rfim,
    /// Random-field random-cluster model.
    Rffk,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Exact below the enumeration threshold, sampling above.
    Auto,
    /// Exact enumeration only.
    Exact,
    /// Sampling only.
    Mc,
}

impl From<MethodArg> for InfluenceMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => InfluenceMethod::Auto,
            MethodArg::Exact => InfluenceMethod::Exact,
            MethodArg::Mc => InfluenceMethod::MonteCarlo,
        }
    }
}

#[derive(Args)]
struct ExactTvArgs {
    /// Square side length (vertex count is side²).
    #[arg(long, default_value_t = 3)]
    side: u32,
    /// Model family.
    #[arg(long, value_enum, default_value_t = ModelArg::Rfim)]
    model: ModelArg,
    /// Temperature.
    #[arg(long, default_value_t = 2.0)]
    temp: f64,
    /// Field strength.
    #[arg(long)]
    epsilon: f64,
    /// Number of disorder seeds (0..seeds).
    #[arg(long, default_value_t = 32)]
    seeds: u32,
    /// Boundary: plus/minus/zero (rfim) or free/wired (rffk).
    #[arg(long)]
    boundary: Option<String>,
    /// Edge probability (rffk only; default 1−e^{−2/T}).
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    /// Model family.
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Box radius N (side 2N+1).
    #[arg(long)]
    n: u32,
    /// Temperature.
    #[arg(long)]
    temp: f64,
    /// Field strength.
    #[arg(long)]
    epsilon: f64,
    /// Boundary: plus/minus/zero (rfim) or free/wired (rffk).
    #[arg(long)]
    boundary: String,
    /// Post-burn-in sweeps per replica; every `thin`-th is recorded.
    #[arg(long)]
    sweeps: u64,
    /// Sweeps between records.
    #[arg(long, default_value_t = 1)]
    thin: u64,
    /// Independent replicas.
    #[arg(long, default_value_t = 1)]
    replicas: u32,
    /// Seed for both the disorder draw and the chain streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Burn-in override (default 100·N, or 20·N² at the critical point).
    #[arg(long)]
    burn: Option<u64>,
    /// Edge probability (rffk only; default 1−e^{−2/T}).
    #[arg(long)]
    p: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// JSON file: {"graph": <graph document>, "bits": "0101…"} with one
    /// bit per edge in index order.
    #[arg(long = "in")]
    input: PathBuf,
    /// Wiring: free or wired.
    #[arg(long, default_value = "free")]
    boundary: String,
    /// Temperature for the cluster field functional.
    #[arg(long)]
    temp: Option<f64>,
    /// Field strength (0 uses a zero field without drawing).
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Disorder seed when epsilon > 0.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment document (TOML). Inline flags are ignored when set,
    /// except --store.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model family.
    #[arg(long, value_enum, default_value_t = ModelArg::Rffk)]
    model: ModelArg,
    /// Temperature regime: low, crit, or high.
    #[arg(long = "temp-regime")]
    temp_regime: Option<String>,
    /// Explicit temperature (instead of a regime).
    #[arg(long)]
    temp: Option<f64>,
    /// Schedule exponent: "auto" resolves to the regime exponent.
    #[arg(long, default_value = "auto")]
    alpha: String,
    /// Schedule prefactor.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Comma-separated box radii.
    #[arg(long = "n-list", default_value = "8,16,32")]
    n_list: String,
    /// Number of disorder seeds.
    #[arg(long = "disorder-seeds", default_value_t = 32)]
    disorder_seeds: u32,
    /// Boundary (default: wired for rffk, zero for rfim).
    #[arg(long)]
    boundary: Option<String>,
    /// Burn-in override.
    #[arg(long)]
    burn: Option<u64>,
    /// Sweeps between records.
    #[arg(long, default_value_t = 5)]
    thin: u64,
    /// Recorded samples per replica.
    #[arg(long, default_value_t = 100)]
    samples: u64,
    /// Replicas per chain.
    #[arg(long, default_value_t = 4)]
    replicas: u32,
    /// Chain seed base.
    #[arg(long = "seed-base", default_value_t = 1)]
    seed_base: u64,
    /// Write the CSV here (direct mode, no store).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Persist into this result store (cached by content key).
    #[arg(long)]
    store: Option<PathBuf>,
    /// Skip the SVG figure.
    #[arg(long = "no-plot", default_value_t = false)]
    no_plot: bool,
}

#[derive(Args)]
struct LdpTailArgs {
    /// Edge probability.
    #[arg(long)]
    p: f64,
    /// Comma-separated box radii.
    #[arg(long = "n-list", default_value = "16,32,64")]
    n_list: String,
    /// Samples per radius.
    #[arg(long, default_value_t = 200)]
    samples: u32,
    /// Wire the interior boundary into one cluster.
    #[arg(long, default_value_t = false)]
    wired: bool,
    /// Chain seed base.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Burn-in sweeps.
    #[arg(long, default_value_t = 300)]
    burn: u64,
    /// Sweeps between samples.
    #[arg(long, default_value_t = 5)]
    thin: u64,
    /// Optional CSV output path (JSON goes to stdout regardless).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundaryInfluenceArgs {
    /// Square side length.
    #[arg(long)]
    side: u32,
    /// Temperature.
    #[arg(long)]
    temp: f64,
    /// Field strength.
    #[arg(long)]
    epsilon: f64,
    /// Number of disorder seeds.
    #[arg(long, default_value_t = 32)]
    seeds: u32,
    /// Computation method.
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Burn-in override for the sampling path.
    #[arg(long)]
    burn: Option<u64>,
    /// Sweeps between records (sampling path).
    #[arg(long, default_value_t = 2)]
    thin: u64,
    /// Recorded samples per replica (sampling path).
    #[arg(long, default_value_t = 500)]
    samples: u64,
    /// Replicas per chain (sampling path).
    #[arg(long, default_value_t = 2)]
    replicas: u32,
    /// Chain seed base.
    #[arg(long = "seed-base", default_value_t = 1)]
    seed_base: u64,
}

#[derive(Args)]
struct CorrLengthArgs {
    /// Temperature.
    #[arg(long)]
    temp: f64,
    /// Field strength.
    #[arg(long)]
    epsilon: f64,
    /// Comma-separated sides, strictly increasing.
    #[arg(long, default_value = "2,4,8")]
    sides: String,
    /// Number of disorder seeds.
    #[arg(long, default_value_t = 16)]
    seeds: u32,
    /// Computation method.
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Burn-in override for the sampling path.
    #[arg(long)]
    burn: Option<u64>,
    /// Sweeps between records (sampling path).
    #[arg(long, default_value_t = 2)]
    thin: u64,
    /// Recorded samples per replica (sampling path).
    #[arg(long, default_value_t = 500)]
    samples: u64,
    /// Replicas per chain (sampling path).
    #[arg(long, default_value_t = 2)]
    replicas: u32,
    /// Chain seed base.
    #[arg(long = "seed-base", default_value_t = 1)]
    seed_base: u64,
}

#[derive(Args)]
struct PlotArgs {
    /// Input sweep CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

/// Entry point: parses arguments, honors `RFFKIM_THREADS`, runs the
/// subcommand, and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let run = || match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    match std::env::var("RFFKIM_THREADS") {
        Err(_) => run(),
        Ok(raw) => match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                    Ok(pool) => pool.install(run),
                    Err(e) => {
                        eprintln!("error: cannot build a {n}-thread pool: {e}");
                        2
                    }
                }
            }
            _ => {
                eprintln!("error: RFFKIM_THREADS must be a positive integer, got {raw:?}");
                2
            }
        },
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::ExactTv(args) => cmd_exact_tv(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::LdpTail(args) => cmd_ldp_tail(args),
        Command::BoundaryInfluence(args) => cmd_boundary_influence(args),
        Command::CorrLength(args) => cmd_corr_length(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn parse_u32_list(text: &str, what: &str) -> Result<Vec<u32>, HarnessError> {
    text.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim().parse::<u32>().map_err(|_| {
                HarnessError::Config(format!("cannot parse {what} entry {s:?} as an integer"))
            })
        })
        .collect()
}

fn spin_boundary_value(name: &str) -> Result<i8, HarnessError> {
    match name {
        "plus" => Ok(1),
        "minus" => Ok(-1),
        "zero" => Ok(0),
        other => Err(HarnessError::Config(format!(
            "spin-model boundary must be plus, minus, or zero, got '{other}'"
        ))),
    }
}

fn fk_boundary_value(name: &str) -> Result<BoundaryCondition, HarnessError> {
    match name {
        "free" => Ok(BoundaryCondition::FkFree),
        "wired" => Ok(BoundaryCondition::FkWired),
        other => Err(HarnessError::Config(format!(
            "edge-model boundary must be free or wired, got '{other}'"
        ))),
    }
}

fn resolve_p(t: f64, p: Option<f64>) -> Result<f64, HarnessError> {
    match p {
        Some(p) if p > 0.0 && p < 1.0 => Ok(p),
        Some(p) => Err(HarnessError::Config(format!(
            "edge probability must lie strictly inside (0, 1), got {p}"
        ))),
        None => Ok(edge_probability_from_temperature(t)?),
    }
}

#[derive(Serialize)]
struct ExactTvReport {
    side: u32,
    model: String,
    boundary: String,
    temperature: f64,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    seeds: u32,
    per_seed: Vec<f64>,
    mean: f64,
    median: f64,
    min: f64,
    max: f64,
}

fn cmd_exact_tv(args: ExactTvArgs) -> Result<(), HarnessError> {
    if args.seeds == 0 {
        return Err(HarnessError::Config("need at least one disorder seed".into()));
    }
    let graph = LatticeGraph::build_rect((0, 0), args.side, args.side)?;
    let t = args.temp;
    let mut per_seed = Vec::with_capacity(args.seeds as usize);
    let (model_name, boundary_name, p_used) = match args.model {
        ModelArg::Rfim => {
            if args.p.is_some() {
                return Err(HarnessError::Config(
                    "edge probability applies only to the edge model".into(),
                ));
            }
            let name = args.boundary.unwrap_or_else(|| "zero".into());
            let bc = SpinBoundary::uniform(&graph, spin_boundary_value(&name)?)?;
            let zero_field = DisorderField::zero(&graph);
            let base = ExactDistribution::enumerate_ising(&graph, &bc, &zero_field, t)?;
            for seed in 0..args.seeds as u64 {
                let field = DisorderField::sample(&graph, seed, args.epsilon)?;
                let with = ExactDistribution::enumerate_ising(&graph, &bc, &field, t)?;
                per_seed.push(exact_tv(&with, &base)?);
            }
            ("rfim".to_string(), name, None)
        }
        ModelArg::Rffk => {
            let name = args.boundary.unwrap_or_else(|| "free".into());
            let bc = fk_boundary_value(&name)?;
            let p = resolve_p(t, args.p)?;
            let zero_field = DisorderField::zero(&graph);
            let base = ExactDistribution::enumerate_fk(&graph, &bc, &zero_field, t, p)?;
            for seed in 0..args.seeds as u64 {
                let field = DisorderField::sample(&graph, seed, args.epsilon)?;
                let with = ExactDistribution::enumerate_fk(&graph, &bc, &field, t, p)?;
                per_seed.push(exact_tv(&with, &base)?);
            }
            ("rffk".to_string(), name, Some(p))
        }
    };
    let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
    let med = median(&per_seed);
    let min = per_seed.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = per_seed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let report = ExactTvReport {
        side: args.side,
        model: model_name,
        boundary: boundary_name,
        temperature: t,
        epsilon: args.epsilon,
        p: p_used,
        seeds: args.seeds,
        per_seed,
        mean,
        median: med,
        min,
        max,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

/// Fixed CSV header of sample payloads.
pub const SAMPLE_CSV_HEADER: &str =
    "replica,sweep,kappa,max_cluster,sum_sq,sum_quartic,boundary_cluster,F_value,magnetization";

fn sample_csv(records: &[SampleRecord]) -> String {
    let mut out = String::from(SAMPLE_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.replica,
            r.sweep,
            r.stats.kappa,
            r.stats.max_size,
            r.stats.sum_sq,
            r.stats.sum_quartic,
            r.stats.boundary_size,
            r.stats.f_value,
            r.magnetization
        ));
    }
    out
}

fn cmd_sample(args: SampleArgs) -> Result<(), HarnessError> {
    let graph = LatticeGraph::build_box(args.n, (0, 0));
    let t = args.temp;
    let field = DisorderField::sample(&graph, args.seed, args.epsilon)?;
    let plan = ChainPlan {
        burn_in: match args.burn {
            Some(b) => b,
            None => default_burn_in(t, args.n)?,
        },
        thinning: args.thin,
        samples: args.sweeps / args.thin.max(1),
        replicas: args.replicas,
        seed_base: args.seed,
    };
    let records = match args.model {
        ModelArg::Rfim => {
            if args.p.is_some() {
                return Err(HarnessError::Config(
                    "edge probability applies only to the edge model".into(),
                ));
            }
            let bc = SpinBoundary::uniform(&graph, spin_boundary_value(&args.boundary)?)?;
            run_rfim_chain(&plan, &graph, &bc, &field, t, StartState::Hot)?
        }
        ModelArg::Rffk => {
            let bc = fk_boundary_value(&args.boundary)?;
            let p = resolve_p(t, args.p)?;
            run_es_chain(&plan, &graph, &bc, &field, t, p, StartState::Hot)?
        }
    };
    fs::write(&args.out, sample_csv(&records))?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

/// Builds a graph from the `"graph"` field of a stats input document:
/// either a compact descriptor `{"kind": "box", "n": …}` /
/// `{"kind": "rect", "width": …, "height": …}` (optional `"center"` /
/// `"origin"` pairs) or a full vertex/edge dump.
fn graph_from_doc(value: &serde_json::Value) -> Result<LatticeGraph, HarnessError> {
    let get_pair = |value: &serde_json::Value, key: &str| -> Result<(i64, i64), HarnessError> {
        match value.get(key) {
            None => Ok((0, 0)),
            Some(v) => {
                let arr = v.as_array().filter(|a| a.len() == 2);
                let parsed = arr.and_then(|a| Some((a[0].as_i64()?, a[1].as_i64()?)));
                parsed.ok_or_else(|| {
                    HarnessError::Config(format!("\"{key}\" must be a pair of integers"))
                })
            }
        }
    };
    let get_int = |value: &serde_json::Value, key: &str| -> Result<u32, HarnessError> {
        value
            .get(key)
            .and_then(|v| v.as_u64())
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| {
                HarnessError::Config(format!("graph descriptor needs an integer \"{key}\""))
            })
    };
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("box") => {
            let n = get_int(value, "n")?;
            let center = get_pair(value, "center")?;
            Ok(LatticeGraph::build_box(n, center))
        }
        Some("rect") => {
            let width = get_int(value, "width")?;
            let height = get_int(value, "height")?;
            let origin = get_pair(value, "origin")?;
            Ok(LatticeGraph::build_rect(origin, width, height)?)
        }
        Some(other) => Err(HarnessError::Config(format!(
            "graph kind must be box or rect, got {other:?}"
        ))),
        None => Ok(LatticeGraph::from_json(
            &serde_json::to_string(value).expect("JSON value re-serializes"),
        )?),
    }
}

fn cmd_stats(args: StatsArgs) -> Result<(), HarnessError> {
    let text = fs::read_to_string(&args.input)?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("cannot parse {}: {e}", args.input.display())))?;
    let graph_value = doc
        .get("graph")
        .ok_or_else(|| HarnessError::Config("input is missing the \"graph\" field".into()))?;
    let graph = graph_from_doc(graph_value)?;
    let bits = doc
        .get("bits")
        .and_then(|b| b.as_str())
        .ok_or_else(|| HarnessError::Config("input is missing the \"bits\" string".into()))?;
    if bits.len() != graph.edge_count() {
        return Err(HarnessError::Config(format!(
            "bits has {} entries, graph has {} edges",
            bits.len(),
            graph.edge_count()
        )));
    }
    let omega: Vec<bool> = bits
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(HarnessError::Config(format!(
                "bits must contain only 0 and 1, found {other:?}"
            ))),
        })
        .collect::<Result<_, _>>()?;
    let bc = fk_boundary_value(&args.boundary)?;
    let t = args.temp.unwrap_or_else(critical_temperature);
    let field = if args.epsilon == 0.0 {
        DisorderField::zero(&graph)
    } else {
        DisorderField::sample(&graph, args.seed, args.epsilon)?
    };
    let decomp = decompose(&graph, &omega, &bc)?;
    let stats = cluster_stats(&decomp, &field, t)?;
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn sweep_config_from_flags(args: &SweepArgs) -> Result<ExperimentConfig, HarnessError> {
    let kind = match args.model {
        ModelArg::Rfim => ModelKind::Rfim,
        ModelArg::Rffk => ModelKind::Rffk,
    };
    let boundary = args.boundary.clone().unwrap_or_else(|| match kind {
        ModelKind::Rffk => "wired".into(),
        ModelKind::Rfim => "zero".into(),
    });
    let regime = if args.temp.is_some() {
        args.temp_regime.clone()
    } else {
        Some(args.temp_regime.clone().unwrap_or_else(|| "crit".into()))
    };
    let alpha = if args.alpha == "auto" {
        AlphaSpec::Named("auto".into())
    } else {
        AlphaSpec::Value(args.alpha.parse::<f64>().map_err(|_| {
            HarnessError::Config(format!(
                "alpha must be \"auto\" or a number, got {:?}",
                args.alpha
            ))
        })?)
    };
    Ok(ExperimentConfig {
        model: ModelSection {
            kind,
            boundary,
            temperature: args.temp,
            regime,
            p: None,
        },
        schedule: vec![ScheduleSection { theta: args.theta, alpha, label: None }],
        grid: GridSection { n_list: parse_u32_list(&args.n_list, "--n-list")? },
        chain: ChainSection {
            burn_in: args.burn,
            thinning: args.thin,
            samples: args.samples,
            replicas: args.replicas,
            seed_base: args.seed_base,
        },
        disorder: DisorderSection { seeds: args.disorder_seeds, seed_list: None },
        output: OutputSection {
            dir: args.store.clone().unwrap_or_else(|| PathBuf::from("runs")),
            plot: !args.no_plot,
        },
        guards: GuardSection::default(),
    })
}

#[derive(Serialize)]
struct SweepOutcomeReport {
    key: String,
    dir: String,
    cached: bool,
    files: Vec<String>,
}

fn cmd_sweep(args: SweepArgs) -> Result<(), HarnessError> {
    let config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            ExperimentConfig::from_toml(&text)?
        }
        None => sweep_config_from_flags(&args)?,
    };
    let use_store = args.store.is_some() || args.config.is_some();
    if use_store {
        let outcome = run_experiment(&config, args.store.as_deref())?;
        let report = SweepOutcomeReport {
            key: outcome.key.clone(),
            dir: outcome.dir.display().to_string(),
            cached: outcome.cached,
            files: outcome.manifest.files.iter().map(|f| f.name.clone()).collect(),
        };
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    let out = args.out.clone().ok_or_else(|| {
        HarnessError::Config("direct sweep needs --out (or use --store / --config)".into())
    })?;
    let resolved = config.resolve()?;
    let rows = sweep_rows(&resolved)?;
    let csv = sweep_csv(&rows);
    fs::write(&out, &csv)?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    if resolved.plot && !rows.is_empty() {
        let svg_path = out.with_extension("svg");
        fs::write(&svg_path, render_svg_from_csv(&csv)?)?;
        println!("wrote figure to {}", svg_path.display());
    }
    Ok(())
}

/// Fixed CSV header of tail tables.
pub const LDP_CSV_HEADER: &str = "n,samples,median_max,median_ratio,median_m_ratio,\
median_sum_sq_per_area,median_second_max,tail_1,tail_1_25,tail_1_5,tail_2,\
subcritical_exceedance,boundary_cover_frequency";

fn ldp_csv(rows: &[LdpSizeStats]) -> String {
    let mut out = String::from(LDP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let tails: Vec<String> = r.tail_frequencies.iter().map(|(_, f)| f.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.samples,
            r.median_max,
            r.median_ratio,
            r.median_m_ratio,
            r.median_sum_sq_per_area,
            r.median_second_max,
            tails.join(","),
            r.subcritical_exceedance,
            r.boundary_cover_frequency.map(|f| f.to_string()).unwrap_or_default()
        ));
    }
    out
}

fn cmd_ldp_tail(args: LdpTailArgs) -> Result<(), HarnessError> {
    let radii = parse_u32_list(&args.n_list, "--n-list")?;
    let plan = ChainPlan {
        burn_in: args.burn,
        thinning: args.thin,
        samples: 0,
        replicas: 1,
        seed_base: args.seed,
    };
    let table = ldp_tail(args.p, &radii, args.samples, args.wired, &plan)?;
    println!("{}", serde_json::to_string_pretty(&table).expect("table serializes"));
    if let Some(out) = &args.out {
        fs::write(out, ldp_csv(&table))?;
        eprintln!("wrote table to {}", out.display());
    }
    Ok(())
}

fn cmd_boundary_influence(args: BoundaryInfluenceArgs) -> Result<(), HarnessError> {
    if args.seeds == 0 {
        return Err(HarnessError::Config("need at least one disorder seed".into()));
    }
    let plan = ChainPlan {
        burn_in: match args.burn {
            Some(b) => b,
            None => default_burn_in(args.temp, args.side)?,
        },
        thinning: args.thin,
        samples: args.samples,
        replicas: args.replicas,
        seed_base: args.seed_base,
    };
    let seeds: Vec<u64> = (0..args.seeds as u64).collect();
    let report =
        boundary_influence(args.side, args.temp, args.epsilon, &seeds, &plan, args.method.into())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn cmd_corr_length(args: CorrLengthArgs) -> Result<(), HarnessError> {
    if args.seeds == 0 {
        return Err(HarnessError::Config("need at least one disorder seed".into()));
    }
    let sides = parse_u32_list(&args.sides, "--sides")?;
    let burn = match args.burn {
        Some(b) => b,
        None => {
            let largest = sides.iter().copied().max().unwrap_or(1);
            default_burn_in(args.temp, largest)?
        }
    };
    let plan = ChainPlan {
        burn_in: burn,
        thinning: args.thin,
        samples: args.samples,
        replicas: args.replicas,
        seed_base: args.seed_base,
    };
    let seeds: Vec<u64> = (0..args.seeds as u64).collect();
    let report =
        correlation_length(args.temp, args.epsilon, &sides, &seeds, &plan, args.method.into())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), HarnessError> {
    let csv = fs::read_to_string(&args.input)?;
    let svg = render_svg_from_csv(&csv)?;
    fs::write(&args.out, svg)?;
    println!("wrote figure to {}", args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(parse_u32_list("8,16,32", "x").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_u32_list("4", "x").unwrap(), vec![4]);
        assert!(parse_u32_list("4,a", "x").is_err());
    }

    #[test]
    fn boundary_names() {
        assert_eq!(spin_boundary_value("plus").unwrap(), 1);
        assert_eq!(spin_boundary_value("minus").unwrap(), -1);
        assert_eq!(spin_boundary_value("zero").unwrap(), 0);
        assert!(spin_boundary_value("free").is_err());
        assert!(fk_boundary_value("wired").is_ok());
        assert!(fk_boundary_value("plus").is_err());
    }

    #[test]
    fn sample_csv_shape() {
        let csv = sample_csv(&[]);
        assert_eq!(csv, format!("{SAMPLE_CSV_HEADER}\n"));
    }

    #[test]
    fn inline_sweep_config_defaults() {
        let args = SweepArgs {
            config: None,
            model: ModelArg::Rffk,
            temp_regime: None,
            temp: None,
            alpha: "auto".into(),
            theta: 1.0,
            n_list: "2,3".into(),
            disorder_seeds: 2,
            boundary: None,
            burn: Some(10),
            thin: 1,
            samples: 5,
            replicas: 1,
            seed_base: 1,
            out: None,
            store: None,
            no_plot: false,
        };
        let cfg = sweep_config_from_flags(&args).unwrap();
        assert_eq!(cfg.model.regime.as_deref(), Some("crit"));
        assert_eq!(cfg.model.boundary, "wired");
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.schedules[0].1, 15.0 / 16.0);
    }
}
