use rand::Rng;

use super::{checked_size, light_edge_count_in_butterfly, Butterfly, EdgePartition, EdgePartitionCache, HeavyLabel, TheoryConstants};
use crate::error::{Error, Result};
use crate::oracle::QueryOracle;
use crate::tls::{check_vertex, filtered_closing, sample_wedge, RepresentativeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgSizes {
    pub s1: usize,
    pub s2: usize,
}

/// The representative-set constant: twice `ceil(1 / (2 (1 - c_H ε)))`.
pub fn sizing_constant(tc: &TheoryConstants) -> Result<f64> {
    let slack = 1.0 - tc.c_h * tc.epsilon;
    if slack <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "c_h * epsilon = {} must be below 1",
            tc.c_h * tc.epsilon
        )));
    }
    Ok(2.0 * (1.0 / (2.0 * slack)).ceil())
}

/// `s1 = c m ln(n / ε²) / (b̄^{1/4} ε^{9/4})` and
/// `s2 = 40 (1 + 2 c_H ε) w̄ sqrt(m) ln²(n) / (ε⁴ b̄)`, scaled and rounded up.
pub fn eg_sample_sizes(tc: &TheoryConstants, n: usize, m: usize, b_bar: f64, w_bar: f64) -> Result<EgSizes> {
    let (n, m, eps) = (n as f64, m as f64, tc.epsilon);
    let c = sizing_constant(tc)?;
    let s1 = tc.scale_s1 * c * m * (n / (eps * eps)).ln() / (b_bar.powf(0.25) * eps.powf(2.25));
    let s2 = tc.scale_s2 * 40.0 * (1.0 + 2.0 * tc.c_h * eps) * w_bar * m.sqrt() * n.ln().powi(2) / (eps.powi(4) * b_bar);
    Ok(EgSizes {
        s1: checked_size(s1, "representative set")?,
        s2: checked_size(s2, "wedge")?,
    })
}

/// Probe count for a wedge whose lower-degree endpoint has degree `dy`:
/// one probe with probability `dy / sqrt(m)` (else none) when
/// `dy <= sqrt(m)`, otherwise `ceil(dy / sqrt(m))`.
pub fn eg_trial_count<R: Rng + ?Sized>(dy: usize, m: usize, rng: &mut R) -> usize {
    let root_m = (m as f64).sqrt();
    let dy = dy as f64;
    if dy <= root_m {
        usize::from(rng.gen_bool(dy / root_m))
    } else {
        (dy / root_m).ceil() as usize
    }
}

/// Score of a light filtered closing: `max(sqrt(m), d_y) / light_edges`.
pub fn eg_hit_value(dy: usize, m: usize, light_edges: usize) -> f64 {
    (m as f64).sqrt().max(dy as f64) / light_edges as f64
}

/// One run of the guessed-count estimator with labels from the sampling
/// classifier, memoized for the duration of the call.
pub fn tls_eg<R: Rng + ?Sized>(
    oracle: &mut QueryOracle,
    tc: &TheoryConstants,
    b_bar: f64,
    w_bar: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut partition = EdgePartitionCache::new(tc.clone(), b_bar, w_bar, rng.gen());
    tls_eg_with_partition(oracle, tc, b_bar, w_bar, &mut partition, rng)
}

/// The estimator with an explicit partition.
///
/// Light filtered closings found from a light sampled edge score
/// [`eg_hit_value`]; everything else scores 0. The result is
/// `m / (s1 s2) * W(S) * sum of per-wedge means`.
pub fn tls_eg_with_partition<R: Rng + ?Sized, P: EdgePartition + ?Sized>(
    oracle: &mut QueryOracle,
    tc: &TheoryConstants,
    b_bar: f64,
    w_bar: f64,
    partition: &mut P,
    rng: &mut R,
) -> Result<f64> {
    tc.validate()?;
    if !(b_bar > 0.0 && w_bar > 0.0) {
        return Err(Error::InvalidParameter("guessed counts must be positive".into()));
    }
    let m = oracle.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let sizes = eg_sample_sizes(tc, oracle.vertex_count(), m, b_bar, w_bar)?;
    let set = RepresentativeSet::build(oracle, sizes.s1, rng)?;
    if set.total_weight() == 0 {
        return Ok(0.0);
    }

    let mut sum = 0.0;
    for _ in 0..sizes.s2 {
        let sw = sample_wedge(&set, oracle, rng)?.expect("set has positive weight");
        let w = sw.wedge;
        let dx = oracle.degree(w.endpoint_b)?;
        let (y, dy, _) = check_vertex(w.endpoint_a, sw.partner_degree, w.endpoint_b, dx);
        let trials = eg_trial_count(dy, m, rng);
        if trials == 0 {
            continue;
        }
        let mut total = 0.0;
        for _ in 0..trials {
            let z = oracle.neighbor(y, rng.gen_range(0..dy))?;
            let Some(dz) = filtered_closing(oracle, &w, dx, y, z)? else {
                continue;
            };
            let (du, dv) = set.endpoint_degrees(sw.slot);
            if partition.label(oracle, sw.edge, du, dv)? != HeavyLabel::Light {
                continue;
            }
            let btf = Butterfly::from_vertices([
                (w.endpoint_a, sw.partner_degree),
                (w.center, sw.center_degree),
                (w.endpoint_b, dx),
                (z, dz),
            ])
            .expect("wedge and closing vertex span both sides");
            let light = light_edge_count_in_butterfly(&btf, partition, oracle)?;
            assert!(light >= 1, "the light sampled edge belongs to the butterfly");
            total += eg_hit_value(dy, m, light);
        }
        sum += total / trials as f64;
    }
    Ok(m as f64 / (sizes.s1 * sizes.s2) as f64 * set.total_weight() as f64 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, BipartiteGraph, GeneratorSpec};
    use crate::theory::FixedPartition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizing_constant_values() {
        let tc = TheoryConstants { epsilon: 0.1, c_h: 1.0, ..Default::default() };
        // 1 / (2 * 0.9) = 0.56 rounds up to 1.
        assert_eq!(sizing_constant(&tc).unwrap(), 2.0);
        let tc = TheoryConstants { epsilon: 0.8, c_h: 1.0, ..Default::default() };
        // 1 / (2 * 0.2) = 2.5 rounds up to 3.
        assert_eq!(sizing_constant(&tc).unwrap(), 6.0);
        assert!(sizing_constant(&TheoryConstants::default()).is_err());
    }

    #[test]
    fn trial_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(eg_trial_count(30, 100, &mut rng), 3);
        assert_eq!(eg_trial_count(10, 100, &mut rng), 1);
        let n = 20_000;
        let ones: usize = (0..n).map(|_| eg_trial_count(4, 100, &mut rng)).sum();
        let f = ones as f64 / n as f64;
        assert!((f - 0.4).abs() < 0.02, "{f}");
    }

    #[test]
    fn hit_values() {
        assert_eq!(eg_hit_value(3, 100, 2), 5.0);
        assert_eq!(eg_hit_value(40, 100, 4), 10.0);
    }

    #[test]
    fn butterfly_free_graph_gives_zero() {
        let g = BipartiteGraph::from_edges(3, 3, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)], false).unwrap();
        let tc = TheoryConstants::desk_scale(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = tls_eg(&mut QueryOracle::new(&g), &tc, 1.0, 3.0, &mut rng).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn all_heavy_gives_zero() {
        let g = generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 3, lower: 3 }).unwrap();
        let tc = TheoryConstants::desk_scale(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut heavy = FixedPartition::from_light_edges([]);
        let x = tls_eg_with_partition(&mut QueryOracle::new(&g), &tc, 9.0, 18.0, &mut heavy, &mut rng).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn rejects_bad_guesses() {
        let g = generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 2, lower: 2 }).unwrap();
        let tc = TheoryConstants::desk_scale(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(tls_eg(&mut QueryOracle::new(&g), &tc, 0.0, 4.0, &mut rng).is_err());
        assert!(tls_eg(&mut QueryOracle::new(&g), &TheoryConstants::default(), 1.0, 4.0, &mut rng).is_err());
    }
}
