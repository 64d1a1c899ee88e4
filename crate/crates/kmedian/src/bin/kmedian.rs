//! Command-line surface: solve, oracle, bounds, gen, reduce, coverage.
//! All commands read/write JSON and are reproducible from `--seed`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kmedian::bounds;
use kmedian::coreset::identity_coreset;
use kmedian::error::{Error, Result};
use kmedian::gadgets::{self, DictatorshipMode, Hypergraph};
use kmedian::guessing::{candidate_sets, planted_guess, DEFAULT_GUESS_BUDGET};
use kmedian::metric::MetricInstance;
use kmedian::oracle;
use kmedian::relaxation::build_lp;
use kmedian::rng::RngStream;
use kmedian::rounding::{solve, CoresetMode, SolveMode, SolveParams};

#[derive(Parser)]
#[command(name = "kmedian", version, about = "k-median solver toolkit")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the LP-rounding pipeline on an instance.
    Solve(SolveArgs),
    /// Exact brute-force baselines (k-median or hypergraph coverage).
    Oracle(OracleArgs),
    /// Analysis constants, optionally with the grid verification report.
    Bounds(BoundsArgs),
    /// Generate hypergraph instances.
    Gen(GenArgs),
    /// Reduce a hypergraph to a k-median instance via its incidence graph.
    Reduce(ReduceArgs),
    /// Coverage statistics of vertex sets on a hypergraph.
    Coverage(CoverageArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(short)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Leader-opening probability, or "auto" for the analysis optimum.
    #[arg(long, default_value = "auto")]
    p: String,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    mode: ModeArg,
    /// Comma-separated center indices for planted mode (otherwise the
    /// brute-force oracle provides them).
    #[arg(long, value_delimiter = ',')]
    centers: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CoresetArg::Identity)]
    coreset: CoresetArg,
    #[arg(long, default_value_t = DEFAULT_GUESS_BUDGET)]
    guess_budget: u128,
    /// Dump the first guess's LP in text exchange format to this path.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Planted,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoresetArg {
    Identity,
    Sampling,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance JSON file (k-median oracle).
    #[arg(long, required_unless_present = "hypergraph")]
    instance: Option<PathBuf>,
    /// Hypergraph JSON file (coverage oracle).
    #[arg(long, conflicts_with = "instance")]
    hypergraph: Option<PathBuf>,
    /// Run the coverage oracle (requires --hypergraph).
    #[arg(long, requires = "hypergraph")]
    coverage: bool,
    /// Use greedy coverage instead of exhaustive enumeration.
    #[arg(long, requires = "hypergraph")]
    greedy: bool,
    #[arg(short)]
    k: usize,
    #[arg(long, default_value_t = oracle::DEFAULT_SUBSET_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct BoundsArgs {
    /// Run the envelope grid verification.
    #[arg(long)]
    verify: bool,
    /// Simplex grid resolution per axis.
    #[arg(long, default_value_t = 100)]
    resolution: u32,
    /// Largest cluster count in the envelope grid.
    #[arg(long, default_value_t = 50)]
    d_max: u32,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long = "type", value_enum)]
    kind: GenKind,
    #[arg(short)]
    n: Option<usize>,
    #[arg(short, default_value_t = 3)]
    d: usize,
    #[arg(short)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// String length for the dictatorship test.
    #[arg(short = 'R', long, default_value_t = 2)]
    repetitions: u32,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Monte Carlo edge count; switches the dictatorship test to sampled
    /// mode (required when exact enumeration is infeasible).
    #[arg(long)]
    sample_edges: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Planted,
    Random,
    Dictatorship,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    /// Edge duplication factor M.
    #[arg(long, default_value_t = 10)]
    copies: usize,
    /// Add one node per missing vertex triple (also repairs connectivity).
    #[arg(long)]
    complete_triples: bool,
    /// Sidecar path for {k, vertex_side, edge_side}; printed to stderr
    /// when omitted.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    /// Explicit vertex set, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_sets")]
    set: Option<Vec<usize>>,
    /// Number of random vertex sets to draw instead.
    #[arg(long)]
    random_sets: Option<usize>,
    /// Fraction of vertices per random set.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct ErrorObject {
    error: String,
    code: i32,
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads;
    let output = cli.output.clone();
    let command = cli.command;
    let run = move || dispatch(command);

    let result = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")));
            match pool {
                Ok(pool) => pool.install(run),
                Err(e) => Err(e),
            }
        }
        None => run(),
    };

    match result {
        Ok(json) => {
            if let Some(path) = output {
                if let Err(e) = std::fs::write(&path, json + "\n") {
                    emit_error(&Error::Io(e));
                    std::process::exit(2);
                }
            } else {
                println!("{json}");
            }
        }
        Err(e) => {
            let code = e.exit_code();
            emit_error(&e);
            std::process::exit(code);
        }
    }
}

fn emit_error(e: &Error) {
    let object = ErrorObject {
        error: e.to_string(),
        code: e.exit_code(),
    };
    eprintln!(
        "{}",
        serde_json::to_string(&object).expect("error object serializes")
    );
}

fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::Solve(args) => run_solve(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Bounds(args) => run_bounds(args),
        Command::Gen(args) => run_gen(args),
        Command::Reduce(args) => run_reduce(args),
        Command::Coverage(args) => run_coverage(args),
    }
}

fn read_instance(path: &Path) -> Result<MetricInstance> {
    MetricInstance::from_json(&std::fs::read_to_string(path)?)
}

fn read_hypergraph(path: &Path) -> Result<Hypergraph> {
    Hypergraph::from_json(&std::fs::read_to_string(path)?)
}

fn run_solve(args: SolveArgs) -> Result<String> {
    let instance = read_instance(&args.instance)?;
    let p = match args.p.as_str() {
        "auto" => None,
        text => Some(text.parse::<f64>().map_err(|_| {
            Error::InvalidInput(format!(
                "--p must be a probability or \"auto\", got {text:?}"
            ))
        })?),
    };
    let mode = match args.mode {
        ModeArg::Full => SolveMode::Full,
        ModeArg::Planted => SolveMode::Planted {
            centers: args.centers.clone(),
        },
    };
    let params = SolveParams {
        k: args.k,
        epsilon: args.epsilon,
        p,
        trials: args.trials,
        mode,
        seed: args.seed,
        guess_budget: args.guess_budget,
        coreset: match args.coreset {
            CoresetArg::Identity => CoresetMode::Identity,
            CoresetArg::Sampling => CoresetMode::Sampling,
        },
    };

    if let Some(path) = &args.dump_lp {
        std::fs::write(path, debug_lp_text(&instance, &params)?)?;
    }

    let report = solve(&instance, &params)?;
    Ok(serde_json::to_string_pretty(&report)?)
}

/// Text dump of the relaxation of the first guess the run would consider
/// (the planted guess in planted mode).
fn debug_lp_text(instance: &MetricInstance, params: &SolveParams) -> Result<String> {
    let rescaled = instance.rescale();
    let work = &rescaled.instance;
    if params.k >= work.n() {
        return Err(Error::InvalidInput(
            "nothing to dump: k covers every point".into(),
        ));
    }
    let coreset = identity_coreset(work);
    let centers = match &params.mode {
        SolveMode::Planted { centers: Some(c) } => {
            let mut mapped: Vec<usize> = c.iter().map(|&v| rescaled.point_map[v]).collect();
            mapped.sort_unstable();
            mapped.dedup();
            mapped
        }
        _ => oracle::brute_force_kmedian(work, params.k)?.best_set,
    };
    let guess = planted_guess(work, &coreset, params.k, params.epsilon, &centers)?;
    let sets = candidate_sets(work, &guess);
    let model = build_lp(&coreset, &sets, work)?;
    Ok(model.write_lp())
}

fn run_oracle(args: OracleArgs) -> Result<String> {
    if let Some(path) = &args.hypergraph {
        let hypergraph = read_hypergraph(path)?;
        let result = if args.greedy {
            oracle::greedy_coverage(&hypergraph, args.k)
        } else {
            oracle::brute_force_coverage_with_budget(&hypergraph, args.k, args.budget)?
        };
        return Ok(serde_json::to_string_pretty(&WithFormat::new(result))?);
    }
    let instance = read_instance(args.instance.as_ref().expect("clap enforces presence"))?;
    let result = oracle::brute_force_kmedian_with_budget(&instance, args.k, args.budget)?;
    Ok(serde_json::to_string_pretty(&WithFormat::new(result))?)
}

#[derive(Serialize)]
struct WithFormat<T: Serialize> {
    format: u32,
    #[serde(flatten)]
    inner: T,
}

impl<T: Serialize> WithFormat<T> {
    fn new(inner: T) -> Self {
        WithFormat { format: 1, inner }
    }
}

#[derive(Serialize)]
struct BoundsReport {
    format: u32,
    constants: bounds::AnalysisConstants,
    minmax: bounds::MinmaxOutcome,
    hardness: bounds::HardnessOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    envelope: Option<bounds::EnvelopeReport>,
}

fn run_bounds(args: BoundsArgs) -> Result<String> {
    let constants = bounds::analysis_constants()?;
    let minmax = bounds::minmax_g(200)?;
    let hardness = bounds::maxmin_h(3..=200)?;
    let envelope = if args.verify {
        Some(bounds::verify_envelope_at(
            bounds::p_star(),
            args.resolution,
            args.d_max,
        )?)
    } else {
        None
    };
    let report = BoundsReport {
        format: 1,
        constants,
        minmax,
        hardness,
        envelope,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

fn run_gen(args: GenArgs) -> Result<String> {
    let hypergraph = match args.kind {
        GenKind::Planted => {
            let n = args
                .n
                .ok_or_else(|| Error::InvalidInput("planted mode needs -n".into()))?;
            let m = args
                .m
                .ok_or_else(|| Error::InvalidInput("planted mode needs -m".into()))?;
            let (h, _cover) = gadgets::planted_cover_hypergraph(n, args.d, m, args.seed)?;
            h
        }
        GenKind::Random => {
            let n = args
                .n
                .ok_or_else(|| Error::InvalidInput("random mode needs -n".into()))?;
            let m = args
                .m
                .ok_or_else(|| Error::InvalidInput("random mode needs -m".into()))?;
            gadgets::random_hypergraph(n, args.d, m, args.seed)?
        }
        GenKind::Dictatorship => {
            let mode = match args.sample_edges {
                Some(edges) => DictatorshipMode::Sampled {
                    edges,
                    seed: args.seed,
                },
                None => DictatorshipMode::Exact,
            };
            gadgets::dictatorship_test_hypergraph(args.d, args.repetitions, args.delta, mode)?
        }
    };
    Ok(hypergraph.to_json())
}

fn run_reduce(args: ReduceArgs) -> Result<String> {
    let hypergraph = read_hypergraph(&args.hypergraph)?;
    let (instance, sidecar) =
        gadgets::incidence_reduction(&hypergraph, args.copies, args.complete_triples)?;
    let sidecar_json = serde_json::to_string_pretty(&sidecar)?;
    if let Some(path) = &args.sidecar {
        std::fs::write(path, sidecar_json + "\n")?;
    } else {
        eprintln!("{sidecar_json}");
    }
    Ok(instance.to_json())
}

#[derive(Serialize)]
struct CoverageReport {
    format: u32,
    total_weight: f64,
    results: Vec<CoverageLine>,
}

#[derive(Serialize)]
struct CoverageLine {
    set: Vec<usize>,
    covered_weight: f64,
    fraction: f64,
}

fn run_coverage(args: CoverageArgs) -> Result<String> {
    let hypergraph = read_hypergraph(&args.hypergraph)?;
    let total = hypergraph.total_weight();
    let mut results = Vec::new();
    match (&args.set, args.random_sets) {
        (Some(set), _) => {
            if set.iter().any(|&v| v >= hypergraph.n) {
                return Err(Error::InvalidInput(
                    "set references a missing vertex".into(),
                ));
            }
            let covered = hypergraph.covered_weight(set);
            results.push(CoverageLine {
                set: set.clone(),
                covered_weight: covered,
                fraction: if total > 0.0 { covered / total } else { 0.0 },
            });
        }
        (None, Some(count)) => {
            if !(0.0..=1.0).contains(&args.alpha) {
                return Err(Error::InvalidInput("--alpha must lie in [0, 1]".into()));
            }
            let size = ((args.alpha * hypergraph.n as f64).round() as usize).min(hypergraph.n);
            let mut rng = RngStream::new(args.seed).derive(0x636f76); // "cov"
            for _ in 0..count {
                let set = rng.sample_distinct(hypergraph.n, size);
                let covered = hypergraph.covered_weight(&set);
                results.push(CoverageLine {
                    set,
                    covered_weight: covered,
                    fraction: if total > 0.0 { covered / total } else { 0.0 },
                });
            }
        }
        (None, None) => {
            return Err(Error::InvalidInput("need --set or --random-sets".into()));
        }
    }
    let report = CoverageReport {
        format: 1,
        total_weight: total,
        results,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}
