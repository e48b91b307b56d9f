//! Metered query access to a graph.
//!
//! Estimators never see a [`BipartiteGraph`] directly; they receive a
//! [`QueryOracle`] which charges one unit per call in one of four
//! categories. Graph metadata (n, m, side sizes) is free.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, EdgeRef, Side, VertexRef};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryCounts {
    pub degree: u64,
    pub neighbor: u64,
    pub vertex_pair: u64,
    pub edge_sample: u64,
    pub total: u64,
}

impl QueryCounts {
    pub fn is_consistent(&self) -> bool {
        self.total == self.degree + self.neighbor + self.vertex_pair + self.edge_sample
    }
}

impl std::ops::Sub for QueryCounts {
    type Output = QueryCounts;

    fn sub(self, rhs: QueryCounts) -> QueryCounts {
        QueryCounts {
            degree: self.degree - rhs.degree,
            neighbor: self.neighbor - rhs.neighbor,
            vertex_pair: self.vertex_pair - rhs.vertex_pair,
            edge_sample: self.edge_sample - rhs.edge_sample,
            total: self.total - rhs.total,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBudget {
    pub max_total: Option<u64>,
}

impl QueryBudget {
    pub const UNLIMITED: QueryBudget = QueryBudget { max_total: None };

    pub fn capped(max_total: u64) -> Self {
        QueryBudget {
            max_total: Some(max_total),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Degree,
    Neighbor,
    Pair,
    EdgeSample,
}

/// How often (in queries) the wall-clock deadline is polled.
const DEADLINE_POLL: u64 = 256;

pub struct QueryOracle<'g> {
    graph: &'g BipartiteGraph,
    counts: QueryCounts,
    budget: QueryBudget,
    deadline: Option<Instant>,
}

impl<'g> QueryOracle<'g> {
    pub fn new(graph: &'g BipartiteGraph) -> Self {
        QueryOracle {
            graph,
            counts: QueryCounts::default(),
            budget: QueryBudget::UNLIMITED,
            deadline: None,
        }
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn side_count(&self, side: Side) -> usize {
        self.graph.side_count(side)
    }

    pub fn snapshot_counts(&self) -> QueryCounts {
        self.counts
    }

    pub fn reset_counts(&mut self) {
        self.counts = QueryCounts::default();
    }

    fn charge(&mut self, kind: Kind) -> Result<()> {
        if let Some(max) = self.budget.max_total {
            if self.counts.total >= max {
                return Err(Error::BudgetExhausted {
                    counts: self.counts,
                });
            }
        }
        if let Some(deadline) = self.deadline {
            if self.counts.total.is_multiple_of(DEADLINE_POLL) && Instant::now() >= deadline {
                return Err(Error::TimeLimitReached {
                    counts: self.counts,
                });
            }
        }
        match kind {
            Kind::Degree => self.counts.degree += 1,
            Kind::Neighbor => self.counts.neighbor += 1,
            Kind::Pair => self.counts.vertex_pair += 1,
            Kind::EdgeSample => self.counts.edge_sample += 1,
        }
        self.counts.total += 1;
        Ok(())
    }

    fn check(&self, v: VertexRef) -> Result<()> {
        if self.graph.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v.to_string()))
        }
    }

    pub fn degree(&mut self, v: VertexRef) -> Result<usize> {
        self.check(v)?;
        self.charge(Kind::Degree)?;
        Ok(self.graph.degree(v))
    }

    /// The `i`-th neighbor in stored (ascending) order.
    pub fn neighbor(&mut self, v: VertexRef, i: usize) -> Result<VertexRef> {
        self.check(v)?;
        let nbrs = self.graph.neighbors(v);
        if i >= nbrs.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                degree: nbrs.len(),
            });
        }
        self.charge(Kind::Neighbor)?;
        Ok(VertexRef {
            side: v.side.opposite(),
            index: nbrs[i],
        })
    }

    pub fn has_edge(&mut self, a: VertexRef, b: VertexRef) -> Result<bool> {
        self.check(a)?;
        self.check(b)?;
        let e = EdgeRef::between(a, b).ok_or(Error::SameSidePair)?;
        self.charge(Kind::Pair)?;
        Ok(self.graph.has_edge(e))
    }

    /// A uniformly random edge.
    pub fn sample_edge<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<EdgeRef> {
        let m = self.graph.edge_count();
        if m == 0 {
            return Err(Error::EmptyGraph);
        }
        self.charge(Kind::EdgeSample)?;
        Ok(self.graph.edge_at(rng.gen_range(0..m)))
    }

    /// Reads the edge with a given id; charged as an edge-sample query.
    pub fn edge_by_id(&mut self, id: usize) -> Result<EdgeRef> {
        if id >= self.graph.edge_count() {
            return Err(Error::IndexOutOfRange {
                index: id,
                degree: self.graph.edge_count(),
            });
        }
        self.charge(Kind::EdgeSample)?;
        Ok(self.graph.edge_at(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig1() -> BipartiteGraph {
        BipartiteGraph::from_edges(
            3,
            3,
            [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)],
            false,
        )
        .unwrap()
    }

    fn k(a: usize, b: usize) -> BipartiteGraph {
        let edges = (0..a as u32).flat_map(|u| (0..b as u32).map(move |l| (u, l)));
        BipartiteGraph::from_edges(a, b, edges, false).unwrap()
    }

    #[test]
    fn degree_queries() {
        let g = fig1();
        let mut o = QueryOracle::new(&g);
        assert_eq!(o.degree(VertexRef::upper(1)).unwrap(), 3);
        let iso = BipartiteGraph::from_edges(2, 1, [(0, 0)], false).unwrap();
        assert_eq!(QueryOracle::new(&iso).degree(VertexRef::upper(1)).unwrap(), 0);
        let k23 = k(2, 3);
        assert_eq!(QueryOracle::new(&k23).degree(VertexRef::upper(0)).unwrap(), 3);
    }

    #[test]
    fn neighbor_queries() {
        let k22 = k(2, 2);
        let mut o = QueryOracle::new(&k22);
        assert_eq!(o.neighbor(VertexRef::upper(0), 0).unwrap(), VertexRef::lower(0));
        assert!(matches!(
            o.neighbor(VertexRef::upper(0), 2),
            Err(Error::IndexOutOfRange { index: 2, degree: 2 })
        ));
        let g = fig1();
        let mut o = QueryOracle::new(&g);
        assert_eq!(o.neighbor(VertexRef::upper(1), 2).unwrap(), VertexRef::lower(2));
    }

    #[test]
    fn pair_queries() {
        let k22 = k(2, 2);
        let mut o = QueryOracle::new(&k22);
        assert!(o.has_edge(VertexRef::upper(0), VertexRef::lower(1)).unwrap());
        assert!(matches!(
            o.has_edge(VertexRef::upper(0), VertexRef::upper(1)),
            Err(Error::SameSidePair)
        ));
        let g = fig1();
        let mut o = QueryOracle::new(&g);
        assert!(!o.has_edge(VertexRef::upper(0), VertexRef::lower(2)).unwrap());
        let empty = BipartiteGraph::from_edges(2, 2, [], false).unwrap();
        let mut o = QueryOracle::new(&empty);
        assert!(!o.has_edge(VertexRef::lower(1), VertexRef::upper(0)).unwrap());
    }

    #[test]
    fn edge_sampling_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let single = BipartiteGraph::from_edges(3, 3, [(2, 1)], false).unwrap();
        let mut o = QueryOracle::new(&single);
        for _ in 0..20 {
            assert_eq!(o.sample_edge(&mut rng).unwrap(), EdgeRef::new(2, 1));
        }
        let empty = BipartiteGraph::from_edges(1, 1, [], false).unwrap();
        assert!(matches!(
            QueryOracle::new(&empty).sample_edge(&mut rng),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn k22_edge_frequencies() {
        let g = k(2, 2);
        let mut o = QueryOracle::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut hits = [0u32; 4];
        let n = 100_000;
        for _ in 0..n {
            let e = o.sample_edge(&mut rng).unwrap();
            hits[(e.upper * 2 + e.lower) as usize] += 1;
        }
        for h in hits {
            let f = h as f64 / n as f64;
            assert!((f - 0.25).abs() <= 0.02 * 0.25, "frequency {f}");
        }
    }

    #[test]
    fn accounting() {
        let g = fig1();
        let mut o = QueryOracle::new(&g);
        for _ in 0..3 {
            o.degree(VertexRef::lower(0)).unwrap();
        }
        let c = o.snapshot_counts();
        assert_eq!((c.degree, c.total), (3, 3));
        o.reset_counts();
        assert_eq!(o.snapshot_counts(), QueryCounts::default());

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        o.degree(VertexRef::upper(0)).unwrap();
        o.neighbor(VertexRef::upper(0), 1).unwrap();
        o.has_edge(VertexRef::upper(0), VertexRef::lower(0)).unwrap();
        o.sample_edge(&mut rng).unwrap();
        let c = o.snapshot_counts();
        assert_eq!(c.total, 4);
        assert!(c.is_consistent());
    }

    #[test]
    fn invalid_calls_are_free() {
        let g = fig1();
        let mut o = QueryOracle::new(&g);
        let _ = o.neighbor(VertexRef::upper(0), 9);
        let _ = o.has_edge(VertexRef::upper(0), VertexRef::upper(1));
        let _ = o.degree(VertexRef::upper(17));
        assert_eq!(o.snapshot_counts().total, 0);
    }

    #[test]
    fn budget_stops_at_cap() {
        let g = fig1();
        let mut o = QueryOracle::new(&g).with_budget(QueryBudget::capped(2));
        o.degree(VertexRef::upper(0)).unwrap();
        o.degree(VertexRef::upper(1)).unwrap();
        match o.degree(VertexRef::upper(2)) {
            Err(Error::BudgetExhausted { counts }) => assert_eq!(counts.total, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(o.snapshot_counts().total, 2);
    }
}
