//! Deterministic synthetic bipartite graphs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BipartiteGraph;
use crate::error::{Error, Result};

/// Generator description. The textual form is `kab:a,b`, `er:n1,n2,p,seed`
/// or `hub:h,t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GeneratorSpec {
    CompleteBipartite { upper: usize, lower: usize },
    ErdosRenyi { upper: usize, lower: usize, p: f64, seed: u64 },
    /// Two upper hubs sharing `hub_degree` lower neighbors of degree 2, plus
    /// `pendants` upper vertices of degree 2 all attached to the same two
    /// high-degree lower vertices.
    HubAdversary { pendants: usize, hub_degree: usize },
}

fn check_ids(upper: usize, lower: usize) -> Result<()> {
    if upper == 0 || lower == 0 {
        return Err(Error::InvalidParameter("side sizes must be positive".into()));
    }
    if upper > u32::MAX as usize || lower > u32::MAX as usize {
        return Err(Error::Overflow("side size exceeds u32 range"));
    }
    upper
        .checked_mul(lower)
        .ok_or(Error::Overflow("upper * lower overflows"))?;
    Ok(())
}

pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<BipartiteGraph> {
    match *spec {
        GeneratorSpec::CompleteBipartite { upper, lower } => {
            check_ids(upper, lower)?;
            let edges = (0..upper as u32).flat_map(|u| (0..lower as u32).map(move |l| (u, l)));
            BipartiteGraph::from_edges(upper, lower, edges, false)
        }
        GeneratorSpec::ErdosRenyi { upper, lower, p, seed } => {
            check_ids(upper, lower)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..upper as u32 {
                for l in 0..lower as u32 {
                    if rng.gen_bool(p) {
                        edges.push((u, l));
                    }
                }
            }
            BipartiteGraph::from_edges(upper, lower, edges, false)
        }
        GeneratorSpec::HubAdversary { pendants, hub_degree } => {
            if pendants == 0 || hub_degree == 0 {
                return Err(Error::InvalidParameter("hub parameters must be positive".into()));
            }
            let upper = pendants
                .checked_add(2)
                .ok_or(Error::Overflow("pendant count"))?;
            let lower = hub_degree
                .checked_add(2)
                .ok_or(Error::Overflow("hub degree"))?;
            check_ids(upper, lower)?;
            let t = hub_degree as u32;
            let hubs = (0..2u32).flat_map(|u| (0..t).map(move |l| (u, l)));
            let tails = (2..upper as u32).flat_map(|u| [(u, t), (u, t + 1)]);
            BipartiteGraph::from_edges(upper, lower, hubs.chain(tails), false)
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::CompleteBipartite { upper, lower } => write!(f, "kab:{upper},{lower}"),
            GeneratorSpec::ErdosRenyi { upper, lower, p, seed } => {
                write!(f, "er:{upper},{lower},{p},{seed}")
            }
            GeneratorSpec::HubAdversary { pendants, hub_degree } => {
                write!(f, "hub:{pendants},{hub_degree}")
            }
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad generator spec {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize> { args[i].parse().map_err(|_| bad()) };
        match (kind.trim(), args.len()) {
            ("kab", 2) => Ok(GeneratorSpec::CompleteBipartite {
                upper: int(0)?,
                lower: int(1)?,
            }),
            ("er", 4) => Ok(GeneratorSpec::ErdosRenyi {
                upper: int(0)?,
                lower: int(1)?,
                p: args[2].parse().map_err(|_| bad())?,
                seed: args[3].parse().map_err(|_| bad())?,
            }),
            ("hub", 2) => Ok(GeneratorSpec::HubAdversary {
                pendants: int(0)?,
                hub_degree: int(1)?,
            }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for GeneratorSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GeneratorSpec> for String {
    fn from(g: GeneratorSpec) -> String {
        g.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexRef;

    #[test]
    fn complete() {
        let g = generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 2, lower: 2 }).unwrap();
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn empty_er() {
        let spec = GeneratorSpec::ErdosRenyi { upper: 10, lower: 10, p: 0.0, seed: 3 };
        assert_eq!(generate_synthetic(&spec).unwrap().edge_count(), 0);
    }

    #[test]
    fn er_is_deterministic() {
        let spec = GeneratorSpec::ErdosRenyi { upper: 50, lower: 60, p: 0.3, seed: 11 };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn hub_shape() {
        let g = generate_synthetic(&GeneratorSpec::HubAdversary { pendants: 1000, hub_degree: 1000 }).unwrap();
        assert_eq!(g.edge_count(), 4000);
        assert_eq!(g.degree(VertexRef::upper(0)), 1000);
        assert_eq!(g.degree(VertexRef::upper(1)), 1000);
        assert_eq!(g.degree(VertexRef::upper(2)), 2);
        assert_eq!(g.degree(VertexRef::lower(1000)), 1000);
        assert_eq!(g.degree(VertexRef::lower(1001)), 1000);
        assert_eq!(g.degree(VertexRef::lower(0)), 2);
    }

    #[test]
    fn bad_parameters() {
        assert!(generate_synthetic(&GeneratorSpec::ErdosRenyi { upper: 3, lower: 3, p: 1.5, seed: 0 }).is_err());
        assert!(generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: 0, lower: 3 }).is_err());
        assert!(matches!(
            generate_synthetic(&GeneratorSpec::CompleteBipartite { upper: usize::MAX, lower: 3 }),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn spec_strings() {
        for s in ["kab:4,5", "er:10,12,0.25,7", "hub:1000,1000"] {
            let spec: GeneratorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("kab:4".parse::<GeneratorSpec>().is_err());
        assert!("tri:1,2".parse::<GeneratorSpec>().is_err());
    }
}
