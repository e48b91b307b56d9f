use rand::Rng;

use super::{checked_size, HeavyLabel, TheoryConstants};
use crate::error::Result;
use crate::graph::EdgeRef;
use crate::oracle::QueryOracle;
use crate::tls::{check_vertex, filtered_closing, wedge_on_edge};

/// `b̄^{3/4} / ε^{1/4}`: edges whose butterfly estimate exceeds this are heavy.
pub fn heavy_threshold(tc: &TheoryConstants, b_bar: f64) -> f64 {
    b_bar.powf(0.75) / tc.epsilon.powf(0.25)
}

/// Repetitions `t = 48 ln(2m)` and wedges per repetition
/// `s = 12 sqrt(m) w̄ / (ε² b̄)`, each scaled and rounded up.
pub fn heavy_sample_sizes(tc: &TheoryConstants, m: usize, b_bar: f64, w_bar: f64) -> Result<(usize, usize)> {
    let m = m as f64;
    let t = checked_size(tc.scale_t * 48.0 * (2.0 * m).ln(), "heavy repetition")?;
    let s = checked_size(
        tc.scale_s * 12.0 * m.sqrt() * w_bar / (tc.epsilon * tc.epsilon * b_bar),
        "heavy wedge",
    )?;
    Ok((t, s))
}

/// Estimates `b(e)` as the median of `t` repetitions.
///
/// Each repetition draws `s` uniform wedges through `e` and probes the
/// lower-degree endpoint `ceil(d_y / sqrt(m))` times; a filtered closing
/// scores `d_y`. The repetition mean is multiplied by `d_e` so it estimates
/// `b(e)`. Returns 0 for `d_e = 0`.
#[allow(clippy::too_many_arguments)]
pub fn edge_butterfly_median<R: Rng + ?Sized>(
    e: EdgeRef,
    du: usize,
    dv: usize,
    oracle: &mut QueryOracle,
    tc: &TheoryConstants,
    b_bar: f64,
    w_bar: f64,
    rng: &mut R,
) -> Result<f64> {
    let de = du + dv - 2;
    if de == 0 {
        return Ok(0.0);
    }
    let m = oracle.edge_count();
    let root_m = (m as f64).sqrt();
    let (t, s) = heavy_sample_sizes(tc, m, b_bar, w_bar)?;

    let mut repetitions = Vec::with_capacity(t);
    for _ in 0..t {
        let mut total = 0.0;
        for _ in 0..s {
            let (wedge, _, partner_degree) = wedge_on_edge(oracle, e, du, dv, rng)?;
            let dx = oracle.degree(wedge.endpoint_b)?;
            let (y, dy, _) = check_vertex(wedge.endpoint_a, partner_degree, wedge.endpoint_b, dx);
            let probes = (dy as f64 / root_m).ceil().max(1.0) as usize;
            let mut hits = 0usize;
            for _ in 0..probes {
                let z = oracle.neighbor(y, rng.gen_range(0..dy))?;
                if filtered_closing(oracle, &wedge, dx, y, z)?.is_some() {
                    hits += 1;
                }
            }
            total += (hits * dy) as f64 / probes as f64;
        }
        repetitions.push(de as f64 * total / s as f64);
    }
    repetitions.sort_by(f64::total_cmp);
    Ok(repetitions[repetitions.len() / 2])
}

/// Labels `e` heavy or light. Edges with no wedges are light, edges whose
/// `d_e` is large relative to `w̄` are heavy outright, and the rest compare
/// [`edge_butterfly_median`] with [`heavy_threshold`].
#[allow(clippy::too_many_arguments)]
pub fn classify_heavy<R: Rng + ?Sized>(
    e: EdgeRef,
    du: usize,
    dv: usize,
    oracle: &mut QueryOracle,
    tc: &TheoryConstants,
    b_bar: f64,
    w_bar: f64,
    rng: &mut R,
) -> Result<HeavyLabel> {
    let de = du + dv - 2;
    if de == 0 {
        return Ok(HeavyLabel::Light);
    }
    if w_bar < (tc.epsilon * b_bar).powf(0.25) * de as f64 {
        return Ok(HeavyLabel::Heavy);
    }
    let median = edge_butterfly_median(e, du, dv, oracle, tc, b_bar, w_bar, rng)?;
    Ok(if median > heavy_threshold(tc, b_bar) {
        HeavyLabel::Heavy
    } else {
        HeavyLabel::Light
    })
}
