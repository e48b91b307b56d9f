//! Butterfly (2x2 biclique) counting on bipartite graphs: exact counters and
//! sampling estimators that read the graph only through a metered query
//! oracle.

pub mod baseline;
pub mod error;
pub mod exact;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod report;
pub mod theory;
pub mod tls;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, EdgeRef, Side, VertexRef, Wedge};
pub use oracle::{QueryBudget, QueryCounts, QueryOracle};
pub use report::{EstimateReport, RunFlag};
