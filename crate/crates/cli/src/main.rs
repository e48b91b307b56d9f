use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use butterfly_core::exact::{count_butterflies_bruteforce, count_butterflies_exact};
use butterfly_core::graph::GeneratorSpec;
use butterfly_core::harness::{self, Algorithm, GraphSource, RunSpec, RunSummary};
use butterfly_core::theory::TheoryConstants;
use butterfly_core::QueryBudget;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "butterfly", version, about = "Exact and sampled butterfly counting on bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count butterflies exactly.
    Count {
        #[arg(value_enum)]
        method: ExactMethod,
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run a sampling estimator repeatedly and report statistics.
    Estimate(EstimateArgs),
    /// Run every experiment of a TOML file and print one CSV row each.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMethod {
    Exact,
    Bruteforce,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Espar,
    Wps,
    Tls,
    Tlseg,
    Hlgp,
}

impl From<Estimator> for Algorithm {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Espar => Algorithm::Espar,
            Estimator::Wps => Algorithm::Wps,
            Estimator::Tls => Algorithm::Tls,
            Estimator::Tlseg => Algorithm::Tlseg,
            Estimator::Hlgp => Algorithm::Hlgp,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(value_enum)]
    algorithm: Estimator,
    /// KONECT edge list or binary cache.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    graph: Option<PathBuf>,
    /// Synthetic graph: kab:a,b | er:n1,n2,p,seed | hub:h,t
    #[arg(long)]
    gen: Option<GeneratorSpec>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge keep probability for espar.
    #[arg(long)]
    p: Option<f64>,
    /// Round count for wps.
    #[arg(long)]
    rounds: Option<u64>,
    /// Representative-set size as a multiple of sqrt(m) for tls.
    #[arg(long)]
    s1_factor: Option<f64>,
    /// Accuracy for tlseg and hlgp, which run with desk-scale constants.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Guessed butterfly count for tlseg (defaults to the ground truth).
    #[arg(long)]
    b_bar: Option<f64>,
    #[arg(long)]
    budget_queries: Option<u64>,
    #[arg(long)]
    time_limit_ms: Option<u64>,
    /// Writes PREFIX.jsonl and PREFIX.csv instead of JSONL on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One experiment in a compare file. Field names follow the estimate flags.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    algorithm: Algorithm,
    graph: Option<PathBuf>,
    gen: Option<GeneratorSpec>,
    dataset: Option<String>,
    #[serde(default = "one")]
    reps: usize,
    #[serde(default)]
    seed: u64,
    p: Option<f64>,
    rounds: Option<u64>,
    s1_factor: Option<f64>,
    epsilon: Option<f64>,
    b_bar: Option<f64>,
    budget_queries: Option<u64>,
    time_limit_ms: Option<u64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    /// CSV destination; stdout when absent. Relative to the config file.
    out: Option<PathBuf>,
    #[serde(default, rename = "experiment")]
    experiments: Vec<ExperimentConfig>,
}

struct Overrides {
    p: Option<f64>,
    rounds: Option<u64>,
    s1_factor: Option<f64>,
    epsilon: Option<f64>,
    b_bar: Option<f64>,
    budget_queries: Option<u64>,
    time_limit_ms: Option<u64>,
}

fn build_spec(
    algorithm: Algorithm,
    graph: Option<PathBuf>,
    gen: Option<GeneratorSpec>,
    reps: usize,
    seed: u64,
    o: Overrides,
) -> Result<RunSpec> {
    let source = match (graph, gen) {
        (Some(path), None) => GraphSource::Path(path),
        (None, Some(spec)) => GraphSource::Generator(spec),
        _ => bail!("give exactly one of graph or gen"),
    };
    let mut spec = RunSpec::new(algorithm, source);
    spec.repetitions = reps;
    spec.base_seed = seed;
    if let Some(p) = o.p {
        spec.params.espar_p = p;
    }
    if let Some(r) = o.rounds {
        spec.params.wps_rounds = r;
    }
    spec.params.s1_factor = o.s1_factor;
    spec.params.theory = TheoryConstants::desk_scale(o.epsilon.unwrap_or(TheoryConstants::default().epsilon));
    spec.params.b_bar = o.b_bar;
    spec.budget = match o.budget_queries {
        Some(n) => QueryBudget::capped(n),
        None => QueryBudget::UNLIMITED,
    };
    spec.time_limit_millis = o.time_limit_ms;
    spec.validate()?;
    Ok(spec)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn print_summary(s: &RunSummary) {
    let q = &s.mean_queries;
    eprintln!(
        "{} on {}: {} runs, mean estimate {:.6e}, mean queries {:.1}",
        s.algorithm,
        s.dataset,
        s.records.len(),
        s.mean_estimate,
        q.total
    );
    if let (Some(b), Some(e)) = (s.truth, s.errors) {
        eprintln!(
            "truth {b}, relative error p05 {:+.4} p50 {:+.4} p95 {:+.4}",
            e.p05, e.p50, e.p95
        );
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let spec = build_spec(
        args.algorithm.into(),
        args.graph,
        args.gen,
        args.reps,
        args.seed,
        Overrides {
            p: args.p,
            rounds: args.rounds,
            s1_factor: args.s1_factor,
            epsilon: args.epsilon,
            b_bar: args.b_bar,
            budget_queries: args.budget_queries,
            time_limit_ms: args.time_limit_ms,
        },
    )?;
    let summary = match &args.out {
        Some(prefix) => {
            let mut jsonl = create(&with_extension(prefix, "jsonl"))?;
            let summary = harness::run_with_output(&spec, Some(&mut jsonl))?;
            harness::write_summary_csv(create(&with_extension(prefix, "csv"))?, std::slice::from_ref(&summary))?;
            summary
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            harness::run_with_output(&spec, Some(&mut lock))?
        }
    };
    print_summary(&summary);
    Ok(())
}

fn compare(config: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg: CompareConfig = toml::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let specs = cfg
        .experiments
        .into_iter()
        .map(|e| {
            let mut spec = build_spec(
                e.algorithm,
                e.graph.map(|p| base.join(p)),
                e.gen,
                e.reps,
                e.seed,
                Overrides {
                    p: e.p,
                    rounds: e.rounds,
                    s1_factor: e.s1_factor,
                    epsilon: e.epsilon,
                    b_bar: e.b_bar,
                    budget_queries: e.budget_queries,
                    time_limit_ms: e.time_limit_ms,
                },
            )?;
            spec.dataset = e.dataset;
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, csv) = harness::compare(&specs)?;
    match cfg.out {
        Some(path) => create(&base.join(path))?.write_all(csv.as_bytes())?,
        None => io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Count { method, graph } => {
            let g = GraphSource::Path(graph).load()?;
            let b = match method {
                ExactMethod::Exact => count_butterflies_exact(&g)?,
                ExactMethod::Bruteforce => count_butterflies_bruteforce(&g)?,
            };
            println!("{b}");
        }
        Command::Estimate(args) => estimate(args)?,
        Command::Compare { config } => compare(&config)?,
    }
    Ok(())
}
