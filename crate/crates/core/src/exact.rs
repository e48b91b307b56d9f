//! Ground-truth counters. These read the graph directly and are never
//! metered.

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, EdgeRef, Side, VertexRef};

/// Largest side size accepted by [`count_butterflies_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 64;

fn choose2(x: u128) -> u128 {
    x * x.saturating_sub(1) / 2
}

fn narrow(x: u128, what: &'static str) -> Result<u64> {
    u64::try_from(x).map_err(|_| Error::Overflow(what))
}

/// Exact butterfly count by wedge aggregation.
///
/// Pivots run over the side with fewer vertices. For each pivot `x` the
/// co-neighbor counts `codeg(x, y)` for every `y > x` on the same side are
/// accumulated in a dense counter and flushed before the next pivot.
pub fn count_butterflies_exact(g: &BipartiteGraph) -> Result<u64> {
    let pivot_side = if g.upper_count() <= g.lower_count() {
        Side::Upper
    } else {
        Side::Lower
    };
    let n = g.side_count(pivot_side);
    let mut codeg = vec![0u32; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut total: u128 = 0;

    for x in g.vertices(pivot_side) {
        for c in g.neighbor_refs(x) {
            let nbrs = g.neighbors(c);
            // Neighbor lists are sorted, so skip everything up to and including x.
            let start = nbrs.partition_point(|&y| y <= x.index);
            for &y in &nbrs[start..] {
                if codeg[y as usize] == 0 {
                    touched.push(y);
                }
                codeg[y as usize] += 1;
            }
        }
        for y in touched.drain(..) {
            total += choose2(codeg[y as usize] as u128);
            codeg[y as usize] = 0;
        }
    }
    narrow(total, "butterfly count")
}

/// Enumerates all upper pairs times lower pairs; tiny graphs only.
pub fn count_butterflies_bruteforce(g: &BipartiteGraph) -> Result<u64> {
    let (nu, nl) = (g.upper_count(), g.lower_count());
    if nu > BRUTEFORCE_LIMIT || nl > BRUTEFORCE_LIMIT {
        return Err(Error::TooLarge {
            upper: nu,
            lower: nl,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let mut adj = vec![vec![false; nl]; nu];
    for e in g.edges() {
        adj[e.upper as usize][e.lower as usize] = true;
    }
    let mut count = 0u64;
    for u1 in 0..nu {
        for u2 in u1 + 1..nu {
            for v1 in 0..nl {
                for v2 in v1 + 1..nl {
                    if adj[u1][v1] && adj[u1][v2] && adj[u2][v1] && adj[u2][v2] {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

/// w = sum over all vertices of C(d, 2).
pub fn count_wedges_exact(g: &BipartiteGraph) -> Result<u64> {
    let total: u128 = [Side::Upper, Side::Lower]
        .into_iter()
        .flat_map(|s| g.vertices(s))
        .map(|v| choose2(g.degree(v) as u128))
        .sum();
    narrow(total, "wedge count")
}

fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// b(e): butterflies containing the edge.
///
/// For e = (u, v) this sums, over every other lower neighbor v' of u, the
/// number of upper vertices other than u adjacent to both v and v'.
pub fn butterflies_per_edge(g: &BipartiteGraph, e: EdgeRef) -> u64 {
    let u = e.upper_vertex();
    let v = e.lower_vertex();
    let nv = g.neighbors(v);
    g.neighbors(u)
        .iter()
        .filter(|&&l| l != e.lower)
        .map(|&l| {
            let shared = intersection_len(nv, g.neighbors(VertexRef::lower(l)));
            // u itself is always shared.
            (shared - 1) as u64
        })
        .sum()
}

/// b(e) for every edge, in edge-id order.
pub fn butterflies_all_edges(g: &BipartiteGraph) -> Vec<u64> {
    g.edges().map(|e| butterflies_per_edge(g, e)).collect()
}
