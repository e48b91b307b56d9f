//! Immutable bipartite graph storage.
//!
//! Both sides are stored in CSR form with strictly ascending neighbor
//! lists. Edge ids are positions in the upper-side adjacency array, so edge
//! `k` is the `k`-th entry when the upper lists are concatenated.

mod cache;
mod generate;
mod konect;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{read_cache, write_cache, CACHE_MAGIC};
pub use generate::{generate_synthetic, GeneratorSpec};
pub use konect::{load_konect, parse_konect, write_konect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }
}

/// A vertex on one side of the graph, indexed densely from zero.
///
/// The derived ordering (Upper before Lower, then ascending index) is the
/// fixed global order used to break degree ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexRef {
    pub side: Side,
    pub index: u32,
}

impl VertexRef {
    pub const fn upper(index: u32) -> Self {
        VertexRef {
            side: Side::Upper,
            index,
        }
    }

    pub const fn lower(index: u32) -> Self {
        VertexRef {
            side: Side::Lower,
            index,
        }
    }

    pub fn idx(self) -> usize {
        self.index as usize
    }
}

impl fmt::Display for VertexRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Upper => write!(f, "u{}", self.index),
            Side::Lower => write!(f, "v{}", self.index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRef {
    pub upper: u32,
    pub lower: u32,
}

impl EdgeRef {
    pub const fn new(upper: u32, lower: u32) -> Self {
        EdgeRef { upper, lower }
    }

    pub fn upper_vertex(self) -> VertexRef {
        VertexRef::upper(self.upper)
    }

    pub fn lower_vertex(self) -> VertexRef {
        VertexRef::lower(self.lower)
    }

    /// Builds the edge joining two vertices on opposite sides.
    pub fn between(a: VertexRef, b: VertexRef) -> Option<EdgeRef> {
        match (a.side, b.side) {
            (Side::Upper, Side::Lower) => Some(EdgeRef::new(a.index, b.index)),
            (Side::Lower, Side::Upper) => Some(EdgeRef::new(b.index, a.index)),
            _ => None,
        }
    }

    /// The endpoint of this edge that is not `v`.
    pub fn other(self, v: VertexRef) -> VertexRef {
        match v.side {
            Side::Upper => self.lower_vertex(),
            Side::Lower => self.upper_vertex(),
        }
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(u{}, v{})", self.upper, self.lower)
    }
}

/// A path `endpoint_a - center - endpoint_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Wedge {
    pub endpoint_a: VertexRef,
    pub center: VertexRef,
    pub endpoint_b: VertexRef,
}

impl Wedge {
    pub fn is_valid_in(&self, g: &BipartiteGraph) -> bool {
        self.endpoint_a.side == self.endpoint_b.side
            && self.center.side != self.endpoint_a.side
            && self.endpoint_a != self.endpoint_b
            && g.contains(self.endpoint_a)
            && g.contains(self.endpoint_b)
            && g.is_adjacent(self.center, self.endpoint_a)
            && g.is_adjacent(self.center, self.endpoint_b)
    }
}

/// Strict total order over all vertices: lower degree first, ties broken by
/// the global (side, index) order.
pub fn precedes_by_degree(a: VertexRef, deg_a: usize, b: VertexRef, deg_b: usize) -> bool {
    if a == b {
        return false;
    }
    (deg_a, a) < (deg_b, b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Builds from (row, col) pairs that are already sorted and unique.
    fn from_sorted_pairs(rows: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Csr {
        let mut offsets = vec![0usize; rows + 1];
        let mut targets = Vec::new();
        for (r, c) in pairs {
            offsets[r as usize + 1] += 1;
            targets.push(c);
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, targets }
    }

    fn transpose(&self, cols: usize) -> Csr {
        let mut offsets = vec![0usize; cols + 1];
        for &c in &self.targets {
            offsets[c as usize + 1] += 1;
        }
        for i in 0..cols {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; self.targets.len()];
        // Rows are visited in ascending order, so every transposed list ends up sorted.
        for r in 0..self.len() {
            for &c in self.neighbors(r) {
                targets[cursor[c as usize]] = r as u32;
                cursor[c as usize] += 1;
            }
        }
        Csr { offsets, targets }
    }
}

/// Simple bipartite graph with sorted adjacency stored for both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    upper: Csr,
    lower: Csr,
    upper_labels: Vec<u64>,
    lower_labels: Vec<u64>,
}

impl BipartiteGraph {
    /// Builds a graph from `(upper, lower)` index pairs. Duplicates are
    /// collapsed when `dedupe` is set and rejected otherwise. Labels default
    /// to `index + 1`.
    pub fn from_edges(
        upper_count: usize,
        lower_count: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
        dedupe: bool,
    ) -> Result<Self> {
        let labels_u = (1..=upper_count as u64).collect();
        let labels_l = (1..=lower_count as u64).collect();
        Self::with_labels(labels_u, labels_l, edges, dedupe)
    }

    pub fn with_labels(
        upper_labels: Vec<u64>,
        lower_labels: Vec<u64>,
        edges: impl IntoIterator<Item = (u32, u32)>,
        dedupe: bool,
    ) -> Result<Self> {
        let (nu, nl) = (upper_labels.len(), lower_labels.len());
        if nu > u32::MAX as usize || nl > u32::MAX as usize {
            return Err(Error::Overflow("vertex count exceeds u32 range"));
        }
        let mut pairs: Vec<(u32, u32)> = edges.into_iter().collect();
        for &(u, l) in &pairs {
            if u as usize >= nu {
                return Err(Error::InvalidVertex(format!("u{u}")));
            }
            if l as usize >= nl {
                return Err(Error::InvalidVertex(format!("v{l}")));
            }
        }
        pairs.sort_unstable();
        if dedupe {
            pairs.dedup();
        } else if let Some(w) = pairs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge {
                line: 0,
                upper: upper_labels[w[0].0 as usize],
                lower: lower_labels[w[0].1 as usize],
            });
        }
        let upper = Csr::from_sorted_pairs(nu, pairs.into_iter());
        let lower = upper.transpose(nl);
        Ok(BipartiteGraph {
            upper,
            lower,
            upper_labels,
            lower_labels,
        })
    }

    fn side(&self, side: Side) -> &Csr {
        match side {
            Side::Upper => &self.upper,
            Side::Lower => &self.lower,
        }
    }

    pub fn upper_count(&self) -> usize {
        self.upper.len()
    }

    pub fn lower_count(&self) -> usize {
        self.lower.len()
    }

    pub fn side_count(&self, side: Side) -> usize {
        self.side(side).len()
    }

    /// n = |U| + |L|.
    pub fn vertex_count(&self) -> usize {
        self.upper_count() + self.lower_count()
    }

    /// m.
    pub fn edge_count(&self) -> usize {
        self.upper.targets.len()
    }

    pub fn contains(&self, v: VertexRef) -> bool {
        v.idx() < self.side_count(v.side)
    }

    /// Panics if `v` is not a vertex of the graph.
    pub fn degree(&self, v: VertexRef) -> usize {
        self.side(v.side).degree(v.idx())
    }

    /// Sorted neighbor indices on the opposite side.
    pub fn neighbors(&self, v: VertexRef) -> &[u32] {
        self.side(v.side).neighbors(v.idx())
    }

    pub fn neighbor_refs(&self, v: VertexRef) -> impl Iterator<Item = VertexRef> + '_ {
        let side = v.side.opposite();
        self.neighbors(v)
            .iter()
            .map(move |&index| VertexRef { side, index })
    }

    pub fn has_edge(&self, e: EdgeRef) -> bool {
        if e.upper as usize >= self.upper_count() || e.lower as usize >= self.lower_count() {
            return false;
        }
        let nu = self.upper.neighbors(e.upper as usize);
        let nl = self.lower.neighbors(e.lower as usize);
        if nu.len() <= nl.len() {
            nu.binary_search(&e.lower).is_ok()
        } else {
            nl.binary_search(&e.upper).is_ok()
        }
    }

    /// False for same-side pairs.
    pub fn is_adjacent(&self, a: VertexRef, b: VertexRef) -> bool {
        EdgeRef::between(a, b).is_some_and(|e| self.has_edge(e))
    }

    /// The edge with the given id (`0 <= id < m`).
    pub fn edge_at(&self, id: usize) -> EdgeRef {
        let lower = self.upper.targets[id];
        let upper = self.upper.offsets.partition_point(|&o| o <= id) - 1;
        EdgeRef::new(upper as u32, lower)
    }

    pub fn edge_id(&self, e: EdgeRef) -> Option<usize> {
        if e.upper as usize >= self.upper_count() {
            return None;
        }
        let start = self.upper.offsets[e.upper as usize];
        let pos = self.upper.neighbors(e.upper as usize).binary_search(&e.lower).ok()?;
        Some(start + pos)
    }

    /// Edges in id order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        (0..self.upper_count()).flat_map(move |u| {
            self.upper
                .neighbors(u)
                .iter()
                .map(move |&l| EdgeRef::new(u as u32, l))
        })
    }

    pub fn vertices(&self, side: Side) -> impl Iterator<Item = VertexRef> {
        (0..self.side_count(side) as u32).map(move |index| VertexRef { side, index })
    }

    /// Original input label of a vertex.
    pub fn label(&self, v: VertexRef) -> u64 {
        match v.side {
            Side::Upper => self.upper_labels[v.idx()],
            Side::Lower => self.lower_labels[v.idx()],
        }
    }

    pub fn labels(&self, side: Side) -> &[u64] {
        match side {
            Side::Upper => &self.upper_labels,
            Side::Lower => &self.lower_labels,
        }
    }

    /// d_e = d_upper + d_lower - 2, the number of wedges containing `e`.
    pub fn edge_degree(&self, e: EdgeRef) -> usize {
        self.degree(e.upper_vertex()) + self.degree(e.lower_vertex()) - 2
    }

    /// The degree-based total order used to count each butterfly once.
    pub fn vertex_precedes(&self, a: VertexRef, b: VertexRef) -> bool {
        precedes_by_degree(a, self.degree(a), b, self.degree(b))
    }

    /// Subgraph on the same vertex set keeping only the listed edges.
    pub fn edge_subgraph(&self, edges: impl IntoIterator<Item = EdgeRef>) -> Result<Self> {
        Self::with_labels(
            self.upper_labels.clone(),
            self.lower_labels.clone(),
            edges.into_iter().map(|e| (e.upper, e.lower)),
            true,
        )
    }

    /// Checks the structural invariants; used by tests and after cache loads.
    pub fn validate(&self) -> Result<()> {
        for csr in [&self.upper, &self.lower] {
            for i in 0..csr.len() {
                if csr.neighbors(i).windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::BadCache(format!(
                        "neighbor list {i} not strictly ascending"
                    )));
                }
            }
        }
        if self.upper.targets.len() != self.lower.targets.len() {
            return Err(Error::BadCache("side degree sums differ".into()));
        }
        if self.upper.transpose(self.lower_count()) != self.lower {
            return Err(Error::BadCache("adjacency sides disagree".into()));
        }
        Ok(())
    }
}
