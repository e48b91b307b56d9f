//! Experiment orchestration: repeated seeded runs of one estimator on one
//! graph, JSONL run records and CSV summaries.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{espar_estimate, wps_estimate, EsparMode, ESPAR_DEFAULT_P, WPS_DEFAULT_ROUNDS};
use crate::error::{Error, Result};
use crate::exact::{count_butterflies_bruteforce, count_butterflies_exact};
use crate::graph::{generate_synthetic, load_konect, read_cache, BipartiteGraph, GeneratorSpec};
use crate::oracle::{QueryBudget, QueryCounts, QueryOracle};
use crate::report::{EstimateReport, ReportBuilder, RunFlag};
use crate::theory::{estimate_wedges, hlgp_estimate, tls_eg, TheoryConstants, WedgeEstimateMode};
use crate::tls::{tls_estimate, TlsConfig};

/// Environment variable naming the directory of `<dataset>.truth` files.
pub const TRUTH_DIR_VAR: &str = "BUTTERFLY_TRUTH_DIR";

/// Exact ground truth is computed for graphs with at most this many edges.
pub const DEFAULT_TRUTH_CUTOFF: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Exact,
    Bruteforce,
    Espar,
    Wps,
    Tls,
    Tlseg,
    Hlgp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Exact,
        Algorithm::Bruteforce,
        Algorithm::Espar,
        Algorithm::Wps,
        Algorithm::Tls,
        Algorithm::Tlseg,
        Algorithm::Hlgp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Bruteforce => "bruteforce",
            Algorithm::Espar => "espar",
            Algorithm::Wps => "wps",
            Algorithm::Tls => "tls",
            Algorithm::Tlseg => "tlseg",
            Algorithm::Hlgp => "hlgp",
        }
    }

    /// Exact counters ignore repetitions and seeds.
    pub fn is_exact(self) -> bool {
        matches!(self, Algorithm::Exact | Algorithm::Bruteforce)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Path(PathBuf),
    Generator(GeneratorSpec),
}

impl GraphSource {
    /// File stem for paths, the generator string otherwise.
    pub fn dataset_name(&self) -> String {
        match self {
            GraphSource::Path(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            GraphSource::Generator(g) => g.to_string(),
        }
    }

    /// Loads a binary cache when the file carries the cache header and a
    /// KONECT edge list otherwise (duplicates collapsed).
    pub fn load(&self) -> Result<BipartiteGraph> {
        match self {
            GraphSource::Generator(spec) => generate_synthetic(spec),
            GraphSource::Path(path) => {
                if !path.exists() {
                    return Err(Error::UnknownDataset(path.display().to_string()));
                }
                if is_cache_file(path)? {
                    read_cache(path)
                } else {
                    load_konect(path, true)
                }
            }
        }
    }
}

fn is_cache_file(path: &Path) -> Result<bool> {
    use std::io::Read;
    let mut head = [0u8; 8];
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut head).map_err(|e| Error::io(path, e))?;
    Ok(n == 8 && &head == crate::graph::CACHE_MAGIC)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmParams {
    pub espar_p: f64,
    pub espar_mode: EsparMode,
    pub wps_rounds: u64,
    /// Explicit TLS configuration; derived from `m` when absent.
    pub tls: Option<TlsConfig>,
    /// Overrides the representative-set size factor of the derived TLS
    /// configuration.
    pub s1_factor: Option<f64>,
    pub theory: TheoryConstants,
    /// Guessed butterfly count for single estimator runs of `tlseg`; the
    /// ground truth is used when absent.
    pub b_bar: Option<f64>,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            espar_p: ESPAR_DEFAULT_P,
            espar_mode: EsparMode::default(),
            wps_rounds: WPS_DEFAULT_ROUNDS,
            tls: None,
            s1_factor: None,
            theory: TheoryConstants::default(),
            b_bar: None,
        }
    }
}

impl AlgorithmParams {
    pub fn tls_config(&self, m: usize) -> TlsConfig {
        match (&self.tls, self.s1_factor) {
            (Some(cfg), _) => cfg.clone(),
            (None, Some(f)) => TlsConfig::with_s1_factor(m, f),
            (None, None) => TlsConfig::for_edge_count(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub source: GraphSource,
    /// Name used in records; derived from the source when absent.
    pub dataset: Option<String>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub params: AlgorithmParams,
    pub budget: QueryBudget,
    pub time_limit_millis: Option<u64>,
    pub truth_cutoff: usize,
    pub require_truth: bool,
}

impl RunSpec {
    pub fn new(algorithm: Algorithm, source: GraphSource) -> Self {
        RunSpec {
            algorithm,
            source,
            dataset: None,
            repetitions: 1,
            base_seed: 0,
            params: AlgorithmParams::default(),
            budget: QueryBudget::UNLIMITED,
            time_limit_millis: None,
            truth_cutoff: DEFAULT_TRUTH_CUTOFF,
            require_truth: false,
        }
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| self.source.dataset_name())
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub seed: u64,
    pub estimate: f64,
    pub truth: Option<u64>,
    pub rel_error: Option<f64>,
    pub q_degree: u64,
    pub q_neighbor: u64,
    pub q_pair: u64,
    pub q_edge_sample: u64,
    pub q_total: u64,
    pub wall_millis: f64,
    pub rounds_used: u64,
    pub flags: Vec<RunFlag>,
}

impl RunRecord {
    pub fn from_report(algorithm: Algorithm, dataset: &str, truth: Option<u64>, report: &EstimateReport) -> Self {
        let q = report.queries;
        RunRecord {
            algorithm,
            dataset: dataset.to_string(),
            seed: report.seed,
            estimate: report.estimate,
            truth,
            rel_error: truth.and_then(|t| report.relative_error(t)),
            q_degree: q.degree,
            q_neighbor: q.neighbor,
            q_pair: q.vertex_pair,
            q_edge_sample: q.edge_sample,
            q_total: q.total,
            wall_millis: report.wall_millis,
            rounds_used: report.rounds_used,
            flags: report.flags.clone(),
        }
    }

    pub fn queries(&self) -> QueryCounts {
        QueryCounts {
            degree: self.q_degree,
            neighbor: self.q_neighbor,
            vertex_pair: self.q_pair,
            edge_sample: self.q_edge_sample,
            total: self.q_total,
        }
    }

    pub fn is_available(&self) -> bool {
        !self.flags.contains(&RunFlag::Unavailable)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanQueries {
    pub degree: f64,
    pub neighbor: f64,
    pub pair: f64,
    pub edge_sample: f64,
    pub total: f64,
}

/// Quantiles of the signed relative error `(estimate - b) / b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorQuantiles {
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl ErrorQuantiles {
    pub fn from_errors(errors: &[f64]) -> Option<Self> {
        if errors.is_empty() {
            return None;
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(ErrorQuantiles {
            p05: quantile(&sorted, 0.05),
            p50: quantile(&sorted, 0.5),
            p95: quantile(&sorted, 0.95),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub truth: Option<u64>,
    pub records: Vec<RunRecord>,
    pub mean_estimate: f64,
    pub min_estimate: f64,
    pub max_estimate: f64,
    pub mean_queries: MeanQueries,
    pub mean_wall_millis: f64,
    pub errors: Option<ErrorQuantiles>,
}

impl RunSummary {
    /// Statistics over `records`. Estimates cover available runs only;
    /// query and time means cover every run.
    pub fn from_records(algorithm: Algorithm, dataset: String, truth: Option<u64>, records: Vec<RunRecord>) -> Self {
        let n = records.len().max(1) as f64;
        let estimates: Vec<f64> = records.iter().filter(|r| r.is_available()).map(|r| r.estimate).collect();
        let (mean_estimate, min_estimate, max_estimate) = if estimates.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                estimates.iter().sum::<f64>() / estimates.len() as f64,
                estimates.iter().copied().fold(f64::INFINITY, f64::min),
                estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let mut mean_queries = MeanQueries::default();
        for r in &records {
            mean_queries.degree += r.q_degree as f64 / n;
            mean_queries.neighbor += r.q_neighbor as f64 / n;
            mean_queries.pair += r.q_pair as f64 / n;
            mean_queries.edge_sample += r.q_edge_sample as f64 / n;
            mean_queries.total += r.q_total as f64 / n;
        }
        let mean_wall_millis = records.iter().map(|r| r.wall_millis).sum::<f64>() / n;
        let rel: Vec<f64> = records.iter().filter_map(|r| r.rel_error).collect();
        RunSummary {
            algorithm,
            dataset,
            truth,
            errors: ErrorQuantiles::from_errors(&rel),
            records,
            mean_estimate,
            min_estimate,
            max_estimate,
            mean_queries,
            mean_wall_millis,
        }
    }
}

/// Ground truth for a loaded graph: exact when `m <= cutoff`, else read
/// from `<dir>/<dataset>.truth`.
pub fn resolve_truth(g: &BipartiteGraph, dataset: &str, cutoff: usize, truth_dir: Option<&Path>) -> Result<Option<u64>> {
    if g.edge_count() <= cutoff {
        return count_butterflies_exact(g).map(Some);
    }
    let Some(dir) = truth_dir else {
        return Ok(None);
    };
    let path = dir.join(format!("{dataset}.truth"));
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value = text
        .trim()
        .parse::<u64>()
        .map_err(|e| Error::Parse { line: 1, message: format!("{}: {e}", path.display()) })?;
    Ok(Some(value))
}

fn truth_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(TRUTH_DIR_VAR).map(PathBuf::from)
}

/// Runs one repetition with the given seed.
pub fn run_once(spec: &RunSpec, g: &BipartiteGraph, truth: Option<u64>, seed: u64) -> Result<EstimateReport> {
    let deadline = spec
        .time_limit_millis
        .map(|ms| Instant::now() + Duration::from_millis(ms));
    let mut oracle = QueryOracle::new(g).with_budget(spec.budget).with_deadline(deadline);
    let params = &spec.params;
    match spec.algorithm {
        Algorithm::Exact | Algorithm::Bruteforce => {
            let started = Instant::now();
            let count = if spec.algorithm == Algorithm::Exact {
                count_butterflies_exact(g)?
            } else {
                count_butterflies_bruteforce(g)?
            };
            Ok(EstimateReport {
                estimate: count as f64,
                queries: QueryCounts::default(),
                wall_millis: started.elapsed().as_secs_f64() * 1e3,
                rounds_used: 1,
                seed,
                flags: Vec::new(),
            })
        }
        Algorithm::Espar => espar_estimate(&mut oracle, params.espar_p, seed, params.espar_mode),
        Algorithm::Wps => wps_estimate(&mut oracle, params.wps_rounds, seed),
        Algorithm::Tls => tls_estimate(&mut oracle, &params.tls_config(g.edge_count()), seed),
        Algorithm::Hlgp => hlgp_estimate(&mut oracle, &params.theory, seed),
        Algorithm::Tlseg => run_tls_eg(&mut oracle, params, truth, seed),
    }
}

fn run_tls_eg(oracle: &mut QueryOracle, params: &AlgorithmParams, truth: Option<u64>, seed: u64) -> Result<EstimateReport> {
    let b_bar = params
        .b_bar
        .or(truth.map(|t| t as f64))
        .ok_or_else(|| Error::InvalidParameter("tlseg needs a guessed count or known ground truth".into()))?;
    let mut report = ReportBuilder::start(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let estimate = estimate_wedges(oracle, WedgeEstimateMode::ExactDegreeScan, &mut rng)
        .and_then(|w_bar| tls_eg(oracle, &params.theory, b_bar.max(1.0), w_bar.max(1.0), &mut rng));
    let estimate = match estimate {
        Ok(x) => Some(x),
        Err(e) => {
            report.absorb(e)?;
            None
        }
    };
    Ok(report.finish(estimate, oracle.snapshot_counts(), 1))
}

/// Loads the graph, resolves the truth and runs every repetition, writing
/// one JSONL line per run to `jsonl` as runs complete.
///
/// Repetitions are dispatched to the rayon pool in chunks; each chunk is
/// written in seed order and flushed before the next starts.
pub fn run_with_output(spec: &RunSpec, mut jsonl: Option<&mut dyn Write>) -> Result<RunSummary> {
    spec.validate()?;
    let g = spec.source.load()?;
    let dataset = spec.dataset_name();
    let truth = resolve_truth(&g, &dataset, spec.truth_cutoff, truth_dir_from_env().as_deref())?;
    if truth.is_none() && spec.require_truth {
        return Err(Error::TruthUnavailable(dataset));
    }
    let reps = if spec.algorithm.is_exact() { 1 } else { spec.repetitions };
    let chunk = rayon::current_num_threads().max(1) * 4;
    let mut records = Vec::with_capacity(reps);
    for start in (0..reps).step_by(chunk) {
        let end = (start + chunk).min(reps);
        let reports: Vec<Result<EstimateReport>> = (start..end)
            .into_par_iter()
            .map(|i| run_once(spec, &g, truth, spec.base_seed.wrapping_add(i as u64)))
            .collect();
        for report in reports {
            let record = RunRecord::from_report(spec.algorithm, &dataset, truth, &report?);
            if let Some(out) = jsonl.as_deref_mut() {
                write_jsonl_record(out, &record)?;
            }
            records.push(record);
        }
    }
    Ok(RunSummary::from_records(spec.algorithm, dataset, truth, records))
}

pub fn run(spec: &RunSpec) -> Result<RunSummary> {
    run_with_output(spec, None)
}

pub fn write_jsonl_record(out: &mut dyn Write, record: &RunRecord) -> Result<()> {
    let io = |e| Error::io("<jsonl>", e);
    let line = serde_json::to_string(record).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    writeln!(out, "{line}").map_err(io)?;
    out.flush().map_err(io)
}

/// Column names of the summary CSV.
pub const SUMMARY_HEADER: [&str; 18] = [
    "algorithm",
    "dataset",
    "runs",
    "truth",
    "mean_estimate",
    "min_estimate",
    "max_estimate",
    "mean_q_degree",
    "mean_q_neighbor",
    "mean_q_pair",
    "mean_q_edge_sample",
    "mean_q_total",
    "mean_wall_millis",
    "err_p05",
    "err_p50",
    "err_p95",
    "err_min",
    "err_max",
];

fn opt(x: Option<impl ToString>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn summary_row(s: &RunSummary) -> Vec<String> {
    let q = s.mean_queries;
    let e = s.errors;
    vec![
        s.algorithm.to_string(),
        s.dataset.clone(),
        s.records.len().to_string(),
        opt(s.truth),
        s.mean_estimate.to_string(),
        s.min_estimate.to_string(),
        s.max_estimate.to_string(),
        q.degree.to_string(),
        q.neighbor.to_string(),
        q.pair.to_string(),
        q.edge_sample.to_string(),
        q.total.to_string(),
        s.mean_wall_millis.to_string(),
        opt(e.map(|e| e.p05)),
        opt(e.map(|e| e.p50)),
        opt(e.map(|e| e.p95)),
        opt(e.map(|e| e.min)),
        opt(e.map(|e| e.max)),
    ]
}

/// Writes the header and one row per summary.
pub fn write_summary_csv<W: Write>(out: W, summaries: &[RunSummary]) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameter(format!("CSV output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(io)?;
    for s in summaries {
        w.write_record(summary_row(s)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Runs every spec and renders the comparison table.
pub fn compare(specs: &[RunSpec]) -> Result<(Vec<RunSummary>, String)> {
    let summaries = specs.iter().map(run).collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &summaries)?;
    Ok((summaries, String::from_utf8(buf).expect("CSV output is UTF-8")))
}
