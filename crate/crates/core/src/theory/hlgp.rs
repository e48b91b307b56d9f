use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{tls_eg, TheoryConstants};
use crate::error::{Error, Result};
use crate::graph::Side;
use crate::oracle::QueryOracle;
use crate::report::{EstimateReport, ReportBuilder, RunFlag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WedgeEstimateMode {
    /// One degree query per vertex; exact.
    #[default]
    ExactDegreeScan,
    /// This many endpoint draws from uniformly sampled edges.
    SampledDegrees(usize),
}

/// Estimates `w = sum_v C(d_v, 2)`.
///
/// In sampled mode each draw picks a uniform edge and one of its endpoints
/// at random, so vertex `v` is hit with probability `d_v / 2m`, and
/// `m (d_v - 1)` is an unbiased draw of `w`.
pub fn estimate_wedges<R: Rng + ?Sized>(oracle: &mut QueryOracle, mode: WedgeEstimateMode, rng: &mut R) -> Result<f64> {
    let m = oracle.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    match mode {
        WedgeEstimateMode::ExactDegreeScan => {
            let mut total = 0u128;
            for side in [Side::Upper, Side::Lower] {
                for index in 0..oracle.side_count(side) as u32 {
                    let d = oracle.degree(crate::graph::VertexRef { side, index })? as u128;
                    total += d * d.saturating_sub(1) / 2;
                }
            }
            Ok(total as f64)
        }
        WedgeEstimateMode::SampledDegrees(k) => {
            if k == 0 {
                return Err(Error::InvalidParameter("need at least one degree draw".into()));
            }
            let mut sum = 0.0;
            for _ in 0..k {
                let e = oracle.sample_edge(rng)?;
                let v = if rng.gen_bool(0.5) {
                    e.upper_vertex()
                } else {
                    e.lower_vertex()
                };
                sum += (oracle.degree(v)? - 1) as f64;
            }
            Ok(m as f64 * sum / k as f64)
        }
    }
}

/// Calls per guess: `ceil(scale_reps * c * ln(ln n) / ε)`, at least 1, where
/// `ε` is the internal accuracy the estimator runs with.
pub fn repetitions(tc: &TheoryConstants, n: usize) -> usize {
    let lnln = (n as f64).ln().ln();
    let reps = tc.scale_reps * tc.reps_constant * lnln / tc.epsilon;
    if reps.is_finite() && reps > 1.0 {
        reps.ceil() as usize
    } else {
        1
    }
}

/// Guesses tried by the search, one list per sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HlgpTrace {
    pub w_bar: f64,
    pub sweeps: Vec<Vec<f64>>,
}

impl HlgpTrace {
    pub fn guesses(&self) -> impl Iterator<Item = f64> + '_ {
        self.sweeps.iter().flatten().copied()
    }
}

/// Guess-and-prove estimate. See [`hlgp_estimate_traced`].
pub fn hlgp_estimate(oracle: &mut QueryOracle, tc: &TheoryConstants, seed: u64) -> Result<EstimateReport> {
    hlgp_estimate_traced(oracle, tc, seed).map(|(report, _)| report)
}

/// Searches for a certified guess of the butterfly count.
///
/// Runs with internal accuracy `ε / (3 c_H)`. The floor `b̃` starts at `n⁴`
/// and halves after each sweep; a sweep tries `b̄ = n⁴, n⁴/2, ...` down to
/// `b̃`, taking the minimum of several estimator calls and returning it as
/// soon as it reaches `b̄`. When `b̃` drops below 1 the last minimum is
/// returned flagged [`RunFlag::NotConverged`].
pub fn hlgp_estimate_traced(
    oracle: &mut QueryOracle,
    tc: &TheoryConstants,
    seed: u64,
) -> Result<(EstimateReport, HlgpTrace)> {
    tc.validate()?;
    if oracle.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut report = ReportBuilder::start(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = TheoryConstants {
        epsilon: tc.epsilon / (3.0 * tc.c_h),
        ..tc.clone()
    };
    let n = oracle.vertex_count();
    let reps = repetitions(&inner, n);
    let top = (n as f64).powi(4);
    let mut trace = HlgpTrace::default();

    let w_bar = match estimate_wedges(oracle, WedgeEstimateMode::ExactDegreeScan, &mut rng) {
        Ok(w) => w,
        Err(e) => {
            report.absorb(e)?;
            return Ok((report.finish(None, oracle.snapshot_counts(), 0), trace));
        }
    };
    trace.w_bar = w_bar;
    if w_bar == 0.0 {
        // No wedges, hence no butterflies; no guess can be certified.
        report.flag(RunFlag::NotConverged);
        return Ok((report.finish(Some(0.0), oracle.snapshot_counts(), 0), trace));
    }

    let mut last: Option<f64> = None;
    let mut guesses = 0u64;
    let mut floor = top;
    while floor >= 1.0 {
        let mut sweep = Vec::new();
        let mut b_bar = top;
        while b_bar >= floor {
            sweep.push(b_bar);
            guesses += 1;
            let mut best = f64::INFINITY;
            for _ in 0..reps {
                match tls_eg(oracle, &inner, b_bar, w_bar, &mut rng) {
                    Ok(x) => best = best.min(x),
                    Err(e) => {
                        report.absorb(e)?;
                        trace.sweeps.push(sweep);
                        return Ok((report.finish(last, oracle.snapshot_counts(), guesses), trace));
                    }
                }
            }
            last = Some(best);
            if best >= b_bar {
                trace.sweeps.push(sweep);
                return Ok((report.finish(Some(best), oracle.snapshot_counts(), guesses), trace));
            }
            b_bar /= 2.0;
        }
        trace.sweeps.push(sweep);
        floor /= 2.0;
    }
    report.flag(RunFlag::NotConverged);
    Ok((report.finish(last, oracle.snapshot_counts(), guesses), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, BipartiteGraph, GeneratorSpec};

    #[test]
    fn exact_wedge_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let k22 = generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 2, lower: 2 }).unwrap();
        let mut o = QueryOracle::new(&k22);
        assert_eq!(estimate_wedges(&mut o, WedgeEstimateMode::ExactDegreeScan, &mut rng).unwrap(), 4.0);
        assert_eq!(o.snapshot_counts().degree, 4);
        let star = generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 1, lower: 5 }).unwrap();
        let w = estimate_wedges(&mut QueryOracle::new(&star), WedgeEstimateMode::ExactDegreeScan, &mut rng).unwrap();
        assert_eq!(w, 10.0);
        let empty = BipartiteGraph::from_edges(1, 1, [], false).unwrap();
        assert!(matches!(
            estimate_wedges(&mut QueryOracle::new(&empty), WedgeEstimateMode::ExactDegreeScan, &mut rng),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn repetition_counts() {
        let tc = TheoryConstants { epsilon: 0.1, ..Default::default() };
        assert_eq!(repetitions(&tc, 4), (10.0 * 4f64.ln().ln()).ceil() as usize);
        assert_eq!(repetitions(&tc, 2), 1);
        assert_eq!(repetitions(&tc, 1), 1);
    }

    #[test]
    fn butterfly_free_graph_does_not_converge() {
        let g = BipartiteGraph::from_edges(3, 3, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)], false).unwrap();
        let tc = TheoryConstants::desk_scale(0.3);
        let (r, trace) = hlgp_estimate_traced(&mut QueryOracle::new(&g), &tc, 1).unwrap();
        assert!(r.has_flag(RunFlag::NotConverged));
        assert_eq!(r.estimate, 0.0);
        assert!(!trace.sweeps.is_empty());
    }

    #[test]
    fn wedge_free_graph_does_not_converge() {
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 1)], false).unwrap();
        let r = hlgp_estimate(&mut QueryOracle::new(&g), &TheoryConstants::desk_scale(0.3), 1).unwrap();
        assert!(r.has_flag(RunFlag::NotConverged));
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn sweeps_halve() {
        let g = BipartiteGraph::from_edges(3, 3, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)], false).unwrap();
        let (_, trace) = hlgp_estimate_traced(&mut QueryOracle::new(&g), &TheoryConstants::desk_scale(0.3), 2).unwrap();
        let top = 6f64.powi(4);
        for (k, sweep) in trace.sweeps.iter().enumerate() {
            assert_eq!(sweep.len(), k + 1);
            assert_eq!(sweep[0], top);
            for pair in sweep.windows(2) {
                assert_eq!(pair[1], pair[0] / 2.0);
            }
        }
        assert!(*trace.sweeps.last().unwrap().last().unwrap() >= 1.0);
    }
}
