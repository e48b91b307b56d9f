use std::collections::HashSet;

use butterfly_core::exact::{butterflies_per_edge, count_butterflies_exact, count_wedges_exact};
use butterfly_core::graph::{generate_synthetic, GeneratorSpec};
use butterfly_core::theory::weight::light_weights;
use butterfly_core::theory::{
    edge_butterfly_median, eg_hit_value, tls_eg_with_partition, FixedPartition, TheoryConstants,
};
use butterfly_core::tls::{check_vertex, filtered_closing, RepresentativeSet};
use butterfly_core::{BipartiteGraph, EdgeRef, QueryOracle, VertexRef, Wedge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn butterfly_edges(a: VertexRef, b: VertexRef, c: VertexRef, d: VertexRef) -> [EdgeRef; 4] {
    // {a, c} on one side, {b, d} on the other.
    [
        EdgeRef::between(a, b).unwrap(),
        EdgeRef::between(a, d).unwrap(),
        EdgeRef::between(c, b).unwrap(),
        EdgeRef::between(c, d).unwrap(),
    ]
}

/// Expected guessed-count estimate given the representative set, by exact
/// enumeration of wedges, probe counts and probe outcomes.
fn eg_expectation(g: &BipartiteGraph, set_edges: &[EdgeRef], light: &HashSet<EdgeRef>) -> f64 {
    let mut oracle = QueryOracle::new(g);
    let set = RepresentativeSet::from_edges(&mut oracle, set_edges.to_vec()).unwrap();
    let total = set.total_weight() as f64;
    if total == 0.0 {
        return 0.0;
    }
    let m = g.edge_count();
    let root_m = (m as f64).sqrt();
    let mut expected = 0.0;
    for (slot, &e) in set_edges.iter().enumerate() {
        let (du, dv) = set.endpoint_degrees(slot);
        let de = (du + dv - 2) as f64;
        for (center, partner) in [(e.upper_vertex(), e.lower_vertex()), (e.lower_vertex(), e.upper_vertex())] {
            let dc = g.degree(center);
            if dc < 2 {
                continue;
            }
            for x in g.neighbor_refs(center).filter(|&x| x != partner) {
                let p = de / total * (dc - 1) as f64 / de / (dc - 1) as f64;
                let wedge = Wedge { endpoint_a: partner, center, endpoint_b: x };
                let dx = g.degree(x);
                let (y, dy, _) = check_vertex(partner, g.degree(partner), x, dx);
                let mut probe_sum = 0.0;
                for z in g.neighbor_refs(y) {
                    if filtered_closing(&mut oracle, &wedge, dx, y, z).unwrap().is_none() || !light.contains(&e) {
                        continue;
                    }
                    let l = butterfly_edges(center, partner, z, x).iter().filter(|f| light.contains(f)).count();
                    probe_sum += eg_hit_value(dy, m, l);
                }
                let probe_mean = probe_sum / dy as f64;
                // A single probe with probability dy / sqrt(m) for low degrees,
                // otherwise the mean of several probes.
                let z_mean = if dy as f64 <= root_m {
                    dy as f64 / root_m * probe_mean
                } else {
                    probe_mean
                };
                expected += p * z_mean;
            }
        }
    }
    m as f64 / set_edges.len() as f64 * total * expected
}

fn small_graphs(count: usize, seed: u64) -> Vec<BipartiteGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = vec![generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 3, lower: 3 }).unwrap()];
    while graphs.len() < count {
        let spec = GeneratorSpec::ErdosRenyi {
            upper: rng.gen_range(2..=6),
            lower: rng.gen_range(2..=6),
            p: rng.gen_range(0.4..0.9),
            seed: rng.gen(),
        };
        let g = generate_synthetic(&spec).unwrap();
        if count_butterflies_exact(&g).unwrap() > 0 {
            graphs.push(g);
        }
    }
    graphs
}

#[test]
fn guessed_count_estimator_targets_light_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for g in small_graphs(25, 3) {
        let edges: Vec<EdgeRef> = g.edges().collect();
        for _ in 0..3 {
            let is_light: Vec<bool> = edges.iter().map(|_| rng.gen_bool(0.6)).collect();
            let light: HashSet<EdgeRef> = edges.iter().zip(&is_light).filter(|(_, &l)| l).map(|(&e, _)| e).collect();
            let target: f64 = light_weights(&g, &is_light).iter().sum();
            for s1 in [1usize, 2] {
                let sets: Vec<Vec<EdgeRef>> = if s1 == 1 {
                    edges.iter().map(|&e| vec![e]).collect()
                } else {
                    edges.iter().flat_map(|&a| edges.iter().map(move |&b| vec![a, b])).collect()
                };
                let mean = sets.iter().map(|s| eg_expectation(&g, s, &light)).sum::<f64>() / sets.len() as f64;
                assert!(
                    (mean - target).abs() <= 1e-9 * target.max(1.0),
                    "expectation {mean} vs light weight {target}"
                );
            }
        }
    }
}

#[test]
fn guessed_count_estimator_monte_carlo() {
    let g = generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 4, lower: 4 }).unwrap();
    let heavy = [EdgeRef::new(0, 0), EdgeRef::new(1, 1), EdgeRef::new(2, 3)];
    let is_light: Vec<bool> = g.edges().map(|e| !heavy.contains(&e)).collect();
    let target: f64 = light_weights(&g, &is_light).iter().sum();
    let tc = TheoryConstants::desk_scale(0.3);
    let (b, w) = (36.0, count_wedges_exact(&g).unwrap() as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let runs = 2000;
    let mut sum = 0.0;
    for _ in 0..runs {
        let mut partition = FixedPartition::from_light_edges(g.edges().filter(|e| !heavy.contains(e)));
        sum += tls_eg_with_partition(&mut QueryOracle::new(&g), &tc, b, w, &mut partition, &mut rng).unwrap();
    }
    let mean = sum / runs as f64;
    assert!((mean - target).abs() / target < 0.03, "mean {mean} vs {target}");
}

/// The median statistic is calibrated to `b(e)`: its average over seeds
/// tracks the exact per-edge count with factor 1.
#[test]
fn edge_median_tracks_per_edge_count() {
    let mut edges = vec![(0u32, 0u32)];
    for i in 1..=30u32 {
        edges.extend([(0, i), (i, 0), (i, i)]);
    }
    edges.extend([(1, 2), (2, 1)]);
    let g = BipartiteGraph::from_edges(31, 31, edges, true).unwrap();
    let b = count_butterflies_exact(&g).unwrap() as f64;
    let w = count_wedges_exact(&g).unwrap() as f64;
    let tc = TheoryConstants { scale_t: 0.05, scale_s: 0.5, ..TheoryConstants::desk_scale(0.5) };
    for e in [EdgeRef::new(0, 0), EdgeRef::new(1, 1), EdgeRef::new(1, 0), EdgeRef::new(1, 2)] {
        let truth = butterflies_per_edge(&g, e) as f64;
        let (du, dv) = (g.degree(e.upper_vertex()), g.degree(e.lower_vertex()));
        let mut rng = ChaCha8Rng::seed_from_u64(e.upper as u64 * 100 + e.lower as u64);
        let runs = 40;
        let mean = (0..runs)
            .map(|_| edge_butterfly_median(e, du, dv, &mut QueryOracle::new(&g), &tc, b, w, &mut rng).unwrap())
            .sum::<f64>()
            / runs as f64;
        assert!(
            (mean - truth).abs() <= 0.1 * truth + 0.5,
            "edge {e:?}: mean median {mean} vs b(e) {truth}"
        );
    }
}
