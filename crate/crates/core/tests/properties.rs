use std::collections::BTreeSet;

use butterfly_core::exact::{
    butterflies_all_edges, butterflies_per_edge, count_butterflies_bruteforce, count_butterflies_exact,
    count_wedges_exact,
};
use butterfly_core::graph::{parse_konect, precedes_by_degree, read_cache, write_cache, write_konect};
use butterfly_core::tls::{tls_estimate, TlsConfig};
use butterfly_core::{BipartiteGraph, QueryBudget, QueryOracle, RunFlag, Side, VertexRef};
use proptest::prelude::*;

fn graph_strategy(max_side: usize) -> impl Strategy<Value = BipartiteGraph> {
    (1..=max_side, 1..=max_side)
        .prop_flat_map(|(nu, nl)| {
            let pairs = proptest::collection::vec((0..nu as u32, 0..nl as u32), 0..=nu * nl);
            (Just(nu), Just(nl), pairs)
        })
        .prop_map(|(nu, nl, pairs)| BipartiteGraph::from_edges(nu, nl, pairs, true).unwrap())
}

fn labeled_edges(g: &BipartiteGraph) -> BTreeSet<(u64, u64)> {
    g.edges()
        .map(|e| (g.label(e.upper_vertex()), g.label(e.lower_vertex())))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_matches_bruteforce(g in graph_strategy(12)) {
        prop_assert_eq!(count_butterflies_exact(&g).unwrap(), count_butterflies_bruteforce(&g).unwrap());
    }

    #[test]
    fn per_edge_counts_sum_to_four_b(g in graph_strategy(10)) {
        let b = count_butterflies_exact(&g).unwrap();
        let per_edge = butterflies_all_edges(&g);
        prop_assert_eq!(per_edge.iter().sum::<u64>(), 4 * b);
        for (id, e) in g.edges().enumerate() {
            prop_assert_eq!(per_edge[id], butterflies_per_edge(&g, e));
        }
    }

    #[test]
    fn edge_degrees_sum_to_two_w(g in graph_strategy(10)) {
        let w = count_wedges_exact(&g).unwrap();
        prop_assert_eq!(g.edges().map(|e| g.edge_degree(e) as u64).sum::<u64>(), 2 * w);
    }

    #[test]
    fn degree_order_is_total(
        a in (0u32..6, any::<bool>(), 0usize..4),
        b in (0u32..6, any::<bool>(), 0usize..4),
        c in (0u32..6, any::<bool>(), 0usize..4),
    ) {
        let v = |(i, up, _): (u32, bool, usize)| VertexRef { side: if up { Side::Upper } else { Side::Lower }, index: i };
        let (va, vb, vc) = (v(a), v(b), v(c));
        let p = |x: VertexRef, dx: usize, y: VertexRef, dy: usize| precedes_by_degree(x, dx, y, dy);
        // Degrees are a function of the vertex, so equal vertices share one.
        let deg = |x: VertexRef| [a, b, c].into_iter().find(|t| v(*t) == x).unwrap().2;
        let (da, db, dc) = (deg(va), deg(vb), deg(vc));
        prop_assert!(!p(va, da, va, da));
        if va != vb {
            prop_assert!(p(va, da, vb, db) ^ p(vb, db, va, da));
        }
        if p(va, da, vb, db) && p(vb, db, vc, dc) {
            prop_assert!(p(va, da, vc, dc));
        }
    }

    #[test]
    fn cache_round_trip(g in graph_strategy(15)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        write_cache(&g, &path).unwrap();
        prop_assert_eq!(read_cache(&path).unwrap(), g);
    }

    #[test]
    fn konect_round_trip(g in graph_strategy(15)) {
        prop_assume!(g.edge_count() > 0);
        let mut buf = Vec::new();
        write_konect(&g, &mut buf).unwrap();
        let back = parse_konect(buf.as_slice(), false).unwrap();
        prop_assert_eq!(labeled_edges(&back), labeled_edges(&g));
        prop_assert_eq!(count_butterflies_exact(&back).unwrap(), count_butterflies_exact(&g).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn budget_is_never_exceeded(g in graph_strategy(12), cap in 1u64..400, seed in any::<u64>()) {
        prop_assume!(g.edge_count() > 0);
        let mut oracle = QueryOracle::new(&g).with_budget(QueryBudget::capped(cap));
        let report = tls_estimate(&mut oracle, &TlsConfig::for_edge_count(g.edge_count()), seed).unwrap();
        prop_assert!(report.queries.total <= cap);
        prop_assert!(report.queries.is_consistent());
        if report.has_flag(RunFlag::BudgetExhausted) {
            prop_assert_eq!(report.queries.total, cap);
        }
    }

    #[test]
    fn tls_is_seed_deterministic(g in graph_strategy(10), seed in any::<u64>()) {
        prop_assume!(g.edge_count() > 0);
        let cfg = TlsConfig::for_edge_count(g.edge_count());
        let a = tls_estimate(&mut QueryOracle::new(&g), &cfg, seed).unwrap();
        let b = tls_estimate(&mut QueryOracle::new(&g), &cfg, seed).unwrap();
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        prop_assert_eq!(a.queries, b.queries);
    }

    #[test]
    fn tls_is_zero_without_butterflies(seed in any::<u64>(), len in 2u32..30) {
        // A path alternating sides has wedges but no butterflies.
        let edges = (0..len).flat_map(|i| [(i, i), (i + 1, i)]);
        let g = BipartiteGraph::from_edges(len as usize + 1, len as usize, edges, false).unwrap();
        let r = tls_estimate(&mut QueryOracle::new(&g), &TlsConfig::for_edge_count(g.edge_count()), seed).unwrap();
        prop_assert_eq!(r.estimate, 0.0);
    }
}
