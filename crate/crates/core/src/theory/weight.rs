//! Exact (unmetered) counterparts of the heavy/light machinery, for small
//! graphs: butterfly listing, the light-edge weight function and the
//! threshold classification of edges from their true `b(e)` and `d_e`.

use crate::exact::butterflies_all_edges;
use crate::graph::{BipartiteGraph, EdgeRef, VertexRef};

/// Every butterfly as its four edge ids.
pub fn list_butterflies(g: &BipartiteGraph) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    let nu = g.upper_count() as u32;
    for u1 in 0..nu {
        for u2 in u1 + 1..nu {
            let a = g.neighbors(VertexRef::upper(u1));
            let b = g.neighbors(VertexRef::upper(u2));
            let common: Vec<u32> = a.iter().filter(|l| b.binary_search(l).is_ok()).copied().collect();
            for i in 0..common.len() {
                for j in i + 1..common.len() {
                    let id = |u, l| g.edge_id(EdgeRef::new(u, l)).expect("edge exists");
                    out.push([
                        id(u1, common[i]),
                        id(u1, common[j]),
                        id(u2, common[i]),
                        id(u2, common[j]),
                    ]);
                }
            }
        }
    }
    out
}

/// Weight of every edge (by id) for the light set `light`: each butterfly
/// with `l > 0` light edges gives `1 / l` to each of them.
pub fn light_weights(g: &BipartiteGraph, light: &[bool]) -> Vec<f64> {
    let mut wt = vec![0.0; g.edge_count()];
    for btf in list_butterflies(g) {
        let l = btf.iter().filter(|&&e| light[e]).count();
        if l > 0 {
            for &e in &btf {
                if light[e] {
                    wt[e] += 1.0 / l as f64;
                }
            }
        }
    }
    wt
}

/// Butterflies with at least one edge in the light set.
pub fn butterflies_touching(g: &BipartiteGraph, light: &[bool]) -> u64 {
    list_butterflies(g)
        .iter()
        .filter(|btf| btf.iter().any(|&e| light[e]))
        .count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Heavy,
    Light,
    /// Neither condition holds; either label is acceptable.
    Gap,
}

/// Thresholds deciding heavy and light edges for guesses `b̄`, `w̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassThresholds {
    /// `b(e)` above this makes an edge heavy.
    pub heavy_butterflies: f64,
    /// `b(e)` must be below this for an edge to be light.
    pub light_butterflies: f64,
    /// `d_e` above this makes an edge heavy; below it is required for light.
    pub edge_degree: f64,
}

impl ClassThresholds {
    pub fn new(b_bar: f64, w_bar: f64, epsilon: f64) -> Self {
        let base = b_bar.powf(0.75) / epsilon.powf(0.25);
        ClassThresholds {
            heavy_butterflies: 2.0 * base,
            light_butterflies: base / 2.0,
            edge_degree: w_bar / (epsilon * b_bar).powf(0.25),
        }
    }

    pub fn classify(&self, b_e: u64, d_e: usize) -> EdgeClass {
        let (b_e, d_e) = (b_e as f64, d_e as f64);
        if b_e > self.heavy_butterflies || d_e > self.edge_degree {
            EdgeClass::Heavy
        } else if b_e < self.light_butterflies && d_e < self.edge_degree {
            EdgeClass::Light
        } else {
            EdgeClass::Gap
        }
    }
}

/// Class of every edge by id.
pub fn classify_edges(g: &BipartiteGraph, thresholds: &ClassThresholds) -> Vec<EdgeClass> {
    let per_edge = butterflies_all_edges(g);
    g.edges()
        .zip(per_edge)
        .map(|(e, b_e)| thresholds.classify(b_e, g.edge_degree(e)))
        .collect()
}

/// Butterflies none of whose edges is light.
pub fn non_light_butterflies(g: &BipartiteGraph, thresholds: &ClassThresholds) -> u64 {
    let light: Vec<bool> = classify_edges(g, thresholds)
        .into_iter()
        .map(|c| c == EdgeClass::Light)
        .collect();
    list_butterflies(g).len() as u64 - butterflies_touching(g, &light)
}

/// Whether the guesses are within a factor 2 of `b` and 6 of `w`.
pub fn guesses_in_band(b: u64, w: u64, b_bar: f64, w_bar: f64) -> bool {
    let (b, w) = (b as f64, w as f64);
    b / 2.0 <= b_bar && b_bar <= 2.0 * b && w / 6.0 <= w_bar && w_bar <= 6.0 * w
}
