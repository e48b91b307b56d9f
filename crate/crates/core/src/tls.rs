//! Two-level sampling (TLS) butterfly estimator.
//!
//! The outer level draws a representative multiset `S` of `s1` uniform
//! edges and records `d_e = d_u + d_v - 2` for each. The inner level draws
//! wedges uniformly among those containing an edge of `S` (weighted by
//! multiplicity), then probes `R` random neighbors of the wedge endpoint
//! with smaller degree for a vertex closing a butterfly. A hit counts only
//! when the wedge's sampled endpoint precedes the closing vertex, which keeps
//! exactly one of the two completions through each (edge, butterfly) pair,
//! so each hit is worth `d_y / 4`.
//!
//! Per round: `b(S) = m / (s1 * s2) * W(S) * sum_j b(wedge_j)`; the result
//! is the mean over rounds. Inner and outer loops stop once consecutive
//! running estimates move by less than the configured relative thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{precedes_by_degree, EdgeRef, VertexRef, Wedge};
use crate::oracle::QueryOracle;
use crate::report::{EstimateReport, ReportBuilder, RunFlag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TlsConfig {
    pub s1: usize,
    pub inner_batch: usize,
    pub inner_rel_threshold: f64,
    pub outer_rel_threshold: f64,
    pub max_outer_rounds: usize,
    pub max_inner_batches: usize,
    pub min_inner_batches: usize,
    pub min_outer_rounds: usize,
}

impl Default for TlsConfig {
    fn default() -> Self {
        TlsConfig {
            s1: 1,
            inner_batch: 1,
            inner_rel_threshold: 0.02,
            outer_rel_threshold: 0.002,
            max_outer_rounds: 20,
            max_inner_batches: 20,
            min_inner_batches: 3,
            min_outer_rounds: 2,
        }
    }
}

impl TlsConfig {
    /// `s1 = 0.5 sqrt(m)` and batches of `0.1 sqrt(m)`, each floored at 1.
    pub fn for_edge_count(m: usize) -> Self {
        Self::with_s1_factor(m, 0.5)
    }

    pub fn with_s1_factor(m: usize, factor: f64) -> Self {
        let root = (m as f64).sqrt();
        TlsConfig {
            s1: ((factor * root).floor() as usize).max(1),
            inner_batch: ((0.1 * root).floor() as usize).max(1),
            ..TlsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("TLS config: {msg}")));
        if self.s1 == 0 || self.inner_batch == 0 {
            return bad("s1 and inner_batch must be at least 1");
        }
        for t in [self.inner_rel_threshold, self.outer_rel_threshold] {
            if !(t > 0.0 && t < 1.0) {
                return bad("thresholds must lie in (0, 1)");
            }
        }
        if self.max_outer_rounds == 0 || self.max_inner_batches == 0 {
            return bad("iteration caps must be at least 1");
        }
        Ok(())
    }
}

/// The sampled edge multiset with the degree bookkeeping needed for
/// degree-weighted edge selection.
#[derive(Debug, Clone)]
pub struct RepresentativeSet {
    edges: Vec<EdgeRef>,
    upper_degrees: Vec<usize>,
    lower_degrees: Vec<usize>,
    edge_degrees: Vec<u64>,
    prefix_weights: Vec<u64>,
    total_weight: u64,
}

impl RepresentativeSet {
    /// Samples `s1` edges with replacement and queries both endpoint degrees
    /// of each.
    pub fn build<R: Rng + ?Sized>(oracle: &mut QueryOracle, s1: usize, rng: &mut R) -> Result<Self> {
        if s1 == 0 {
            return Err(Error::InvalidParameter("s1 must be at least 1".into()));
        }
        let mut edges = Vec::with_capacity(s1);
        for _ in 0..s1 {
            edges.push(oracle.sample_edge(rng)?);
        }
        Self::from_edges(oracle, edges)
    }

    /// Uses a given edge multiset, querying endpoint degrees.
    pub fn from_edges(oracle: &mut QueryOracle, edges: Vec<EdgeRef>) -> Result<Self> {
        let mut upper_degrees = Vec::with_capacity(edges.len());
        let mut lower_degrees = Vec::with_capacity(edges.len());
        let mut edge_degrees = Vec::with_capacity(edges.len());
        let mut prefix_weights = Vec::with_capacity(edges.len());
        let mut acc = 0u64;
        for e in &edges {
            let du = oracle.degree(e.upper_vertex())?;
            let dv = oracle.degree(e.lower_vertex())?;
            let de = (du + dv - 2) as u64;
            acc += de;
            upper_degrees.push(du);
            lower_degrees.push(dv);
            edge_degrees.push(de);
            prefix_weights.push(acc);
        }
        Ok(RepresentativeSet {
            edges,
            upper_degrees,
            lower_degrees,
            edge_degrees,
            prefix_weights,
            total_weight: acc,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[EdgeRef] {
        &self.edges
    }

    pub fn edge_degrees(&self) -> &[u64] {
        &self.edge_degrees
    }

    pub fn prefix_weights(&self) -> &[u64] {
        &self.prefix_weights
    }

    /// W(S), the number of wedges containing an edge of the multiset.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Degrees of the (upper, lower) endpoints of slot `k`.
    pub fn endpoint_degrees(&self, k: usize) -> (usize, usize) {
        (self.upper_degrees[k], self.lower_degrees[k])
    }

    /// The slot whose weight interval contains `r`, for `r < total_weight`.
    pub fn slot_for(&self, r: u64) -> usize {
        self.prefix_weights.partition_point(|&p| p <= r)
    }
}

/// A wedge drawn from a representative set: `endpoint_a` is the partner of
/// the center on the sampled edge, `endpoint_b` the sampled neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledWedge {
    pub wedge: Wedge,
    pub edge: EdgeRef,
    pub slot: usize,
    pub center_degree: usize,
    pub partner_degree: usize,
}

/// Draws the center of a wedge on `e`: the upper endpoint with probability
/// `(d_u - 1) / d_e`, the lower one otherwise. Requires `d_e > 0`.
pub(crate) fn choose_center<R: Rng + ?Sized>(
    e: EdgeRef,
    du: usize,
    dv: usize,
    rng: &mut R,
) -> (VertexRef, usize, VertexRef, usize) {
    let de = du + dv - 2;
    if rng.gen_range(0..de) < du - 1 {
        (e.upper_vertex(), du, e.lower_vertex(), dv)
    } else {
        (e.lower_vertex(), dv, e.upper_vertex(), du)
    }
}

/// Draws a uniform wedge containing `e` (given its endpoint degrees):
/// the center by [`choose_center`], then a neighbor of the center other than
/// the partner, by rejection on the partner.
pub(crate) fn wedge_on_edge<R: Rng + ?Sized>(
    oracle: &mut QueryOracle,
    e: EdgeRef,
    du: usize,
    dv: usize,
    rng: &mut R,
) -> Result<(Wedge, usize, usize)> {
    let (center, dc, partner, dp) = choose_center(e, du, dv, rng);
    let x = loop {
        let x = oracle.neighbor(center, rng.gen_range(0..dc))?;
        if x != partner {
            break x;
        }
    };
    let wedge = Wedge {
        endpoint_a: partner,
        center,
        endpoint_b: x,
    };
    Ok((wedge, dc, dp))
}

/// Samples a wedge uniformly among the wedges of the set; `None` when the
/// set has no wedges at all.
pub fn sample_wedge<R: Rng + ?Sized>(
    set: &RepresentativeSet,
    oracle: &mut QueryOracle,
    rng: &mut R,
) -> Result<Option<SampledWedge>> {
    if set.total_weight == 0 {
        return Ok(None);
    }
    let slot = set.slot_for(rng.gen_range(0..set.total_weight));
    let edge = set.edges[slot];
    let (du, dv) = set.endpoint_degrees(slot);
    let (wedge, center_degree, partner_degree) = wedge_on_edge(oracle, edge, du, dv, rng)?;
    Ok(Some(SampledWedge {
        wedge,
        edge,
        slot,
        center_degree,
        partner_degree,
    }))
}

/// Picks the wedge endpoint with smaller degree (ties by the vertex order).
/// Returns `(y, d_y, other_endpoint)`.
pub fn check_vertex(a: VertexRef, da: usize, b: VertexRef, db: usize) -> (VertexRef, usize, VertexRef) {
    if precedes_by_degree(a, da, b, db) {
        (a, da, b)
    } else {
        (b, db, a)
    }
}

/// Number of closing probes: `max(ceil(10 d_y / sqrt(m)), 10)`.
pub fn trial_count(dy: usize, m: usize) -> usize {
    let scaled = (10.0 * dy as f64 / (m as f64).sqrt()).ceil() as usize;
    scaled.max(10)
}

/// The degree-filtered closing test for probe `z` (a neighbor of `y`).
///
/// Returns `Some(d_z)` when `{center, z} x {endpoint_a, endpoint_b}` is a
/// butterfly and the sampled endpoint precedes `z`. `z == center` is the
/// degenerate quadruple and costs nothing; otherwise one vertex-pair query,
/// plus one degree query on a hit.
pub fn filtered_closing(
    oracle: &mut QueryOracle,
    wedge: &Wedge,
    x_degree: usize,
    y: VertexRef,
    z: VertexRef,
) -> Result<Option<usize>> {
    if z == wedge.center {
        return Ok(None);
    }
    let far = if y == wedge.endpoint_a {
        wedge.endpoint_b
    } else {
        wedge.endpoint_a
    };
    if !oracle.has_edge(z, far)? {
        return Ok(None);
    }
    let dz = oracle.degree(z)?;
    Ok(precedes_by_degree(wedge.endpoint_b, x_degree, z, dz).then_some(dz))
}

/// Estimates the filtered butterfly count of a sampled wedge. Charges one
/// degree query for the sampled endpoint plus the probe queries.
pub fn estimate_wedge_butterflies<R: Rng + ?Sized>(
    sw: &SampledWedge,
    oracle: &mut QueryOracle,
    rng: &mut R,
    m: usize,
) -> Result<f64> {
    let w = &sw.wedge;
    let dx = oracle.degree(w.endpoint_b)?;
    let (y, dy, _) = check_vertex(w.endpoint_a, sw.partner_degree, w.endpoint_b, dx);
    let trials = trial_count(dy, m);
    let mut hits = 0usize;
    for _ in 0..trials {
        let z = oracle.neighbor(y, rng.gen_range(0..dy))?;
        if filtered_closing(oracle, w, dx, y, z)?.is_some() {
            hits += 1;
        }
    }
    Ok(hits as f64 * (dy as f64 / 4.0) / trials as f64)
}

/// |new - old| / max(old, 1).
pub(crate) fn relative_change(old: f64, new: f64) -> f64 {
    (new - old).abs() / old.max(1.0)
}

struct RoundOutcome {
    estimate: f64,
    capped: bool,
}

fn run_round<R: Rng + ?Sized>(
    oracle: &mut QueryOracle,
    cfg: &TlsConfig,
    rng: &mut R,
    partial: &mut Option<f64>,
) -> Result<RoundOutcome> {
    let m = oracle.edge_count();
    let set = RepresentativeSet::build(oracle, cfg.s1, rng)?;
    if set.total_weight() == 0 {
        return Ok(RoundOutcome {
            estimate: 0.0,
            capped: false,
        });
    }
    let scale = m as f64 / cfg.s1 as f64 * set.total_weight() as f64;
    let mut sum = 0.0;
    let mut wedges = 0usize;
    let mut previous: Option<f64> = None;
    for batch in 1..=cfg.max_inner_batches {
        for _ in 0..cfg.inner_batch {
            let sw = sample_wedge(&set, oracle, rng)?.expect("set has positive weight");
            sum += estimate_wedge_butterflies(&sw, oracle, rng, m)?;
            wedges += 1;
        }
        let current = scale * sum / wedges as f64;
        *partial = Some(current);
        if batch >= cfg.min_inner_batches
            && previous.is_some_and(|p| relative_change(p, current) < cfg.inner_rel_threshold)
        {
            return Ok(RoundOutcome {
                estimate: current,
                capped: false,
            });
        }
        previous = Some(current);
    }
    Ok(RoundOutcome {
        estimate: partial.unwrap_or(0.0),
        capped: true,
    })
}

/// Runs the two-level sampler with automatic termination.
pub fn tls_estimate(oracle: &mut QueryOracle, cfg: &TlsConfig, seed: u64) -> Result<EstimateReport> {
    cfg.validate()?;
    if oracle.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut report = ReportBuilder::start(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut rounds = 0usize;
    let mut previous: Option<f64> = None;
    let mut converged = false;

    while rounds < cfg.max_outer_rounds {
        let mut partial = None;
        match run_round(oracle, cfg, &mut rng, &mut partial) {
            Ok(outcome) => {
                if outcome.capped {
                    report.flag(RunFlag::RoundCap);
                }
                sum += outcome.estimate;
                rounds += 1;
            }
            Err(e) => {
                report.absorb(e)?;
                let estimate = if rounds > 0 {
                    Some(sum / rounds as f64)
                } else {
                    partial
                };
                return Ok(report.finish(estimate, oracle.snapshot_counts(), rounds as u64));
            }
        }
        let mean = sum / rounds as f64;
        if rounds >= cfg.min_outer_rounds
            && previous.is_some_and(|p| relative_change(p, mean) < cfg.outer_rel_threshold)
        {
            converged = true;
            break;
        }
        previous = Some(mean);
    }
    if !converged {
        report.flag(RunFlag::RoundCap);
    }
    Ok(report.finish(Some(sum / rounds as f64), oracle.snapshot_counts(), rounds as u64))
}
