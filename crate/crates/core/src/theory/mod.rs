//! The provable estimator stack: heavy/light edge classification, the
//! light-edge weight function, the guessed-count estimator and the
//! guess-and-prove driver.
//!
//! All sample sizes follow the asymptotic formulas with their published
//! constants by default. Those are far too large to run at desk scale, so
//! [`TheoryConstants`] carries a multiplier for every schedule.

mod eg;
mod heavy;
mod hlgp;
pub mod weight;

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRef, Side, VertexRef};
use crate::oracle::QueryOracle;

pub use eg::{eg_hit_value, eg_sample_sizes, eg_trial_count, sizing_constant, tls_eg, tls_eg_with_partition, EgSizes};
pub use heavy::{classify_heavy, edge_butterfly_median, heavy_sample_sizes, heavy_threshold};
pub use hlgp::{estimate_wedges, hlgp_estimate, hlgp_estimate_traced, repetitions, HlgpTrace, WedgeEstimateMode};

/// Constant in the bound on butterflies made only of non-light edges.
pub const C_H: f64 = 1.77e4;

/// Largest sample size any schedule may request.
pub const MAX_SAMPLE_SIZE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConstants {
    pub epsilon: f64,
    pub c_h: f64,
    pub scale_t: f64,
    pub scale_s: f64,
    pub scale_s1: f64,
    pub scale_s2: f64,
    pub scale_reps: f64,
    /// Multiplier `c` on the guess-and-prove repetition count.
    pub reps_constant: f64,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        TheoryConstants {
            epsilon: 0.1,
            c_h: C_H,
            scale_t: 1.0,
            scale_s: 1.0,
            scale_s1: 1.0,
            scale_s2: 1.0,
            scale_reps: 1.0,
            reps_constant: 1.0,
        }
    }
}

impl TheoryConstants {
    /// Scaled constants that keep every schedule small enough to run on toy
    /// graphs while preserving the control flow.
    pub fn desk_scale(epsilon: f64) -> Self {
        TheoryConstants {
            epsilon,
            c_h: 1.0,
            scale_t: 0.01,
            scale_s: 0.01,
            scale_s1: 0.05,
            scale_s2: 5e-4,
            scale_reps: 1.0,
            reps_constant: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        let positive = [
            ("c_h", self.c_h),
            ("scale_t", self.scale_t),
            ("scale_s", self.scale_s),
            ("scale_s1", self.scale_s1),
            ("scale_s2", self.scale_s2),
            ("scale_reps", self.scale_reps),
            ("reps_constant", self.reps_constant),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

pub(crate) fn checked_size(value: f64, what: &str) -> Result<usize> {
    if !(value.is_finite() && value <= MAX_SAMPLE_SIZE) {
        return Err(Error::InvalidParameter(format!(
            "{what} sample size {value:.3e} exceeds {MAX_SAMPLE_SIZE:e}; lower the scale multipliers"
        )));
    }
    Ok((value.ceil() as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeavyLabel {
    Heavy,
    Light,
}

/// Source of heavy/light labels for edges met during estimation.
pub trait EdgePartition {
    /// Label of `e`, whose upper and lower endpoints have the given degrees.
    fn label(&mut self, oracle: &mut QueryOracle, e: EdgeRef, du: usize, dv: usize) -> Result<HeavyLabel>;
}

/// A partition given up front; labelling costs no queries.
#[derive(Debug, Clone, Default)]
pub struct FixedPartition {
    light: Option<HashSet<EdgeRef>>,
}

impl FixedPartition {
    pub fn all_light() -> Self {
        FixedPartition { light: None }
    }

    pub fn from_light_edges(edges: impl IntoIterator<Item = EdgeRef>) -> Self {
        FixedPartition {
            light: Some(edges.into_iter().collect()),
        }
    }

    pub fn is_light(&self, e: EdgeRef) -> bool {
        self.light.as_ref().is_none_or(|set| set.contains(&e))
    }
}

impl EdgePartition for FixedPartition {
    fn label(&mut self, _: &mut QueryOracle, e: EdgeRef, _: usize, _: usize) -> Result<HeavyLabel> {
        Ok(if self.is_light(e) {
            HeavyLabel::Light
        } else {
            HeavyLabel::Heavy
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Lazily classifies edges with the sampling classifier and remembers every
/// answer, so each edge keeps one label for the lifetime of the cache.
///
/// Each edge gets its own RNG stream derived from the cache seed and the
/// edge, which makes labels independent of the order edges are met in.
#[derive(Debug, Clone)]
pub struct EdgePartitionCache {
    constants: TheoryConstants,
    b_bar: f64,
    w_bar: f64,
    seed: u64,
    labels: HashMap<EdgeRef, HeavyLabel>,
}

impl EdgePartitionCache {
    pub fn new(constants: TheoryConstants, b_bar: f64, w_bar: f64, seed: u64) -> Self {
        EdgePartitionCache {
            constants,
            b_bar,
            w_bar,
            seed,
            labels: HashMap::new(),
        }
    }

    pub fn edge_seed(&self, e: EdgeRef) -> u64 {
        let key = (u64::from(e.upper) << 32) | u64::from(e.lower);
        splitmix64(self.seed ^ splitmix64(key))
    }

    pub fn get(&self, e: EdgeRef) -> Option<HeavyLabel> {
        self.labels.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl EdgePartition for EdgePartitionCache {
    fn label(&mut self, oracle: &mut QueryOracle, e: EdgeRef, du: usize, dv: usize) -> Result<HeavyLabel> {
        if let Some(label) = self.get(e) {
            return Ok(label);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.edge_seed(e));
        let label = classify_heavy(e, du, dv, oracle, &self.constants, self.b_bar, self.w_bar, &mut rng)?;
        self.labels.insert(e, label);
        Ok(label)
    }
}

/// Four vertices forming a butterfly, with their degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Butterfly {
    pub upper: [(u32, usize); 2],
    pub lower: [(u32, usize); 2],
}

impl Butterfly {
    /// Groups four `(vertex, degree)` pairs by side; `None` unless there are
    /// two distinct vertices on each side.
    pub fn from_vertices(vertices: [(VertexRef, usize); 4]) -> Option<Self> {
        let mut upper = Vec::with_capacity(2);
        let mut lower = Vec::with_capacity(2);
        for (v, d) in vertices {
            match v.side {
                Side::Upper => upper.push((v.index, d)),
                Side::Lower => lower.push((v.index, d)),
            }
        }
        if upper.len() != 2 || lower.len() != 2 || upper[0].0 == upper[1].0 || lower[0].0 == lower[1].0 {
            return None;
        }
        Some(Butterfly {
            upper: [upper[0], upper[1]],
            lower: [lower[0], lower[1]],
        })
    }

    /// The four edges with their (upper, lower) endpoint degrees.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeRef, usize, usize)> + '_ {
        self.upper
            .iter()
            .flat_map(move |&(u, du)| self.lower.iter().map(move |&(l, dl)| (EdgeRef::new(u, l), du, dl)))
    }
}

/// Number of the butterfly's edges the partition labels light.
pub fn light_edge_count_in_butterfly<P: EdgePartition + ?Sized>(
    btf: &Butterfly,
    partition: &mut P,
    oracle: &mut QueryOracle,
) -> Result<usize> {
    let mut light = 0;
    for (e, du, dv) in btf.edges() {
        if partition.label(oracle, e, du, dv)? == HeavyLabel::Light {
            light += 1;
        }
    }
    Ok(light)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;

    fn k22_butterfly() -> Butterfly {
        Butterfly::from_vertices([
            (VertexRef::upper(0), 2),
            (VertexRef::lower(0), 2),
            (VertexRef::upper(1), 2),
            (VertexRef::lower(1), 2),
        ])
        .unwrap()
    }

    #[test]
    fn constants_validate() {
        TheoryConstants::default().validate().unwrap();
        TheoryConstants::desk_scale(0.3).validate().unwrap();
        for eps in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(TheoryConstants { epsilon: eps, ..Default::default() }.validate().is_err());
        }
        assert!(TheoryConstants { scale_s2: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn butterfly_grouping() {
        assert_eq!(k22_butterfly().edges().count(), 4);
        let same_side = Butterfly::from_vertices([
            (VertexRef::upper(0), 1),
            (VertexRef::upper(1), 1),
            (VertexRef::upper(2), 1),
            (VertexRef::lower(0), 1),
        ]);
        assert!(same_side.is_none());
        let repeated = Butterfly::from_vertices([
            (VertexRef::upper(0), 1),
            (VertexRef::upper(0), 1),
            (VertexRef::lower(1), 1),
            (VertexRef::lower(0), 1),
        ]);
        assert!(repeated.is_none());
    }

    #[test]
    fn light_counts_from_fixed_partitions() {
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)], false).unwrap();
        let mut o = QueryOracle::new(&g);
        let btf = k22_butterfly();
        assert_eq!(light_edge_count_in_butterfly(&btf, &mut FixedPartition::all_light(), &mut o).unwrap(), 4);
        let mut none = FixedPartition::from_light_edges([]);
        assert_eq!(light_edge_count_in_butterfly(&btf, &mut none, &mut o).unwrap(), 0);
        let mut mixed = FixedPartition::from_light_edges([EdgeRef::new(0, 0), EdgeRef::new(1, 1)]);
        assert_eq!(light_edge_count_in_butterfly(&btf, &mut mixed, &mut o).unwrap(), 2);
        assert_eq!(o.snapshot_counts().total, 0);
    }

    #[test]
    fn cache_never_relabels() {
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)], false).unwrap();
        let mut o = QueryOracle::new(&g);
        let tc = TheoryConstants::desk_scale(0.5);
        let mut cache = EdgePartitionCache::new(tc, 1.0, 4.0, 7);
        let e = EdgeRef::new(0, 1);
        let first = cache.label(&mut o, e, 2, 2).unwrap();
        let spent = o.snapshot_counts().total;
        for _ in 0..5 {
            assert_eq!(cache.label(&mut o, e, 2, 2).unwrap(), first);
        }
        assert_eq!(o.snapshot_counts().total, spent);
        assert_eq!(cache.len(), 1);
        assert_ne!(cache.edge_seed(e), cache.edge_seed(EdgeRef::new(1, 0)));
    }
}
