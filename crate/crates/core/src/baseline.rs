//! Prior-art estimators: edge sparsification (ESpar) and weighted pair
//! sampling (WPS), both metered through the oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::count_butterflies_exact;
use crate::graph::{BipartiteGraph, Side, VertexRef};
use crate::oracle::QueryOracle;
use crate::report::{EstimateReport, ReportBuilder};

/// Default number of WPS rounds.
pub const WPS_DEFAULT_ROUNDS: u64 = 20_000;

/// Default ESpar retention probability.
pub const ESPAR_DEFAULT_P: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsparMode {
    /// Returns count(G') / p^4.
    #[default]
    Unbiased,
    /// Returns (count(G') / 4) / p^4, the literal published return value.
    PaperVerbatim,
}

/// Keeps every edge independently with probability `p`, counts the
/// butterflies of the sparsified graph exactly and rescales.
///
/// Each retained edge is read through the oracle (one edge-sample charge);
/// the Bernoulli trials and the exact count are local work.
pub fn espar_estimate(oracle: &mut QueryOracle, p: f64, seed: u64, mode: EsparMode) -> Result<EstimateReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("ESpar p = {p} outside (0, 1]")));
    }
    let mut report = ReportBuilder::start(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = oracle.edge_count();
    let mut kept = Vec::with_capacity((p * m as f64) as usize + 1);
    for id in 0..m {
        if rng.gen_bool(p) {
            match oracle.edge_by_id(id) {
                Ok(e) => kept.push((e.upper, e.lower)),
                Err(e) => {
                    report.absorb(e)?;
                    return Ok(report.finish(None, oracle.snapshot_counts(), 0));
                }
            }
        }
    }
    let sparse = BipartiteGraph::from_edges(
        oracle.side_count(Side::Upper),
        oracle.side_count(Side::Lower),
        kept,
        false,
    )?;
    let count = count_butterflies_exact(&sparse)? as f64;
    let scaled = count / p.powi(4);
    let estimate = match mode {
        EsparMode::Unbiased => scaled,
        EsparMode::PaperVerbatim => scaled / 4.0,
    };
    Ok(report.finish(Some(estimate), oracle.snapshot_counts(), 1))
}

/// Degree-proportional vertex sampler over one layer, built from a full
/// degree scan of that layer.
pub struct WpsSampler {
    layer: Side,
    cumulative: Vec<u64>,
    degrees: Vec<usize>,
}

impl WpsSampler {
    /// Scans the layer with fewer vertices (upper on ties), one degree query
    /// per vertex.
    pub fn scan(oracle: &mut QueryOracle) -> Result<Self> {
        if oracle.edge_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let layer = if oracle.side_count(Side::Upper) <= oracle.side_count(Side::Lower) {
            Side::Upper
        } else {
            Side::Lower
        };
        let n = oracle.side_count(layer);
        let mut degrees = Vec::with_capacity(n);
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0u64;
        for index in 0..n as u32 {
            let d = oracle.degree(VertexRef { side: layer, index })?;
            acc += d as u64;
            degrees.push(d);
            cumulative.push(acc);
        }
        Ok(WpsSampler {
            layer,
            cumulative,
            degrees,
        })
    }

    pub fn layer(&self) -> Side {
        self.layer
    }

    /// Sum of degrees over the layer, i.e. m.
    pub fn total_degree(&self) -> u64 {
        *self.cumulative.last().unwrap_or(&0)
    }

    pub fn degree(&self, v: VertexRef) -> usize {
        self.degrees[v.idx()]
    }

    /// Draws a vertex with probability d_v / m.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> VertexRef {
        let r = rng.gen_range(0..self.total_degree());
        let index = self.cumulative.partition_point(|&c| c <= r) as u32;
        VertexRef {
            side: self.layer,
            index,
        }
    }

    /// One round's contribution for the sampled pair `(u, v)`:
    /// `m^2 / (2 d_u d_v) * C(|N(u) ∩ N(v)|, 2)`, or 0 when `u == v`.
    ///
    /// The intersection is counted before the `u == v` test, matching the
    /// published step order, by listing the smaller-degree vertex's neighbors
    /// and probing each against the other vertex.
    pub fn round(&self, oracle: &mut QueryOracle, u: VertexRef, v: VertexRef) -> Result<f64> {
        let (du, dv) = (self.degree(u), self.degree(v));
        let (small, ds, other) = if (du, u) <= (dv, v) { (u, du, v) } else { (v, dv, u) };
        let mut common = 0u64;
        for i in 0..ds {
            let w = oracle.neighbor(small, i)?;
            if oracle.has_edge(other, w)? {
                common += 1;
            }
        }
        if u == v {
            return Ok(0.0);
        }
        let m = self.total_degree() as f64;
        let pairs = (common * common.saturating_sub(1) / 2) as f64;
        Ok(m * m / (2.0 * du as f64 * dv as f64) * pairs)
    }
}

/// Weighted pair sampling: the mean of `rounds` independent pair rounds.
pub fn wps_estimate(oracle: &mut QueryOracle, rounds: u64, seed: u64) -> Result<EstimateReport> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("WPS needs at least one round".into()));
    }
    let mut report = ReportBuilder::start(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = match WpsSampler::scan(oracle) {
        Ok(s) => s,
        Err(e) => {
            report.absorb(e)?;
            return Ok(report.finish(None, oracle.snapshot_counts(), 0));
        }
    };
    let mut sum = 0.0;
    let mut done = 0u64;
    while done < rounds {
        let u = sampler.sample(&mut rng);
        let v = sampler.sample(&mut rng);
        match sampler.round(oracle, u, v) {
            Ok(x) => {
                sum += x;
                done += 1;
            }
            Err(e) => {
                report.absorb(e)?;
                break;
            }
        }
    }
    let estimate = (done > 0).then(|| sum / done as f64);
    Ok(report.finish(estimate, oracle.snapshot_counts(), done))
}
