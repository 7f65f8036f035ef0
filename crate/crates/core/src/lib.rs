//! Estimators for the maximum directed cut value of a multigraph: exact
//! oracles, a local rounding algorithm, and streaming estimators for
//! adversarial-order, random-order and multi-pass streams.

pub mod adversarial;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hashing;
pub mod local;
pub mod multipass;
pub mod random_order;
pub mod stream;
pub mod types;

pub use error::{Error, Result};
pub use graph::{
    ball, dicut_value, edge_partition, induced_subgraph, maxval_bruteforce, Coloring, DirectedMultigraph, Edge,
    EdgePartition, FractionalCut, InducedSubgraph, Vertex,
};
pub use hashing::{sample_coloring, sample_hash, PolyHash};
pub use local::{cutoff, local_map, pos, pos_all, pos_est, LocalParams, YValues};
pub use stream::{fix_normalization, run_passes, tv_distance, PassStream, RunRecord, SpaceMeter, StreamAlgorithm};
pub use types::{
    canonicalize, edge_type_counts, edge_type_distribution, is_subtype, nbrtype, DoublyRootedColoredGraph,
    RootedType, TypeDistribution,
};
