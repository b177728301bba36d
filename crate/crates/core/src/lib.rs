//! Random walks on random graphs and the structure of the vacant set.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that is
//! pure computation:
//!
//! - [`graph`]: compact adjacency storage plus generators for random
//!   r-regular graphs (configuration model), `G(n,p)` and `D(n,p)`.
//! - [`walk`]: the simple random walk with its visited set, the
//!   deferred-decision walk/pairing generator, return-count and first-visit
//!   probes, and the nice-vertex classifier.
//! - [`components`]: connected and strongly connected components of the
//!   vacant-induced subgraph and per-time snapshot statistics.
//! - [`theory`]: closed-form predictions and the branching fixed point.
//!
//! Randomness is always passed in as a 64-bit seed; see [`seed`] for how
//! per-trial streams are derived.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bitmap;
pub mod components;
pub mod graph;
pub mod seed;
pub mod theory;
pub mod walk;

pub use bitmap::Bitmap;
pub use components::{
    classify_components, connected_components, connected_components_bfs, induced_vacant_subgraph, snapshot_statistics,
    strongly_connected_components, ComponentDecomposition, ComponentKind, DegreeProfile, VacantSnapshot, VacantView,
};
pub use graph::{
    generate_dnp, generate_gnp, generate_regular, sample_configuration, sample_pairing, underlying_graph, Digraph,
    DnpParams, GnpParams, Graph, GraphError, Pairing, RegularParams,
};
pub use seed::{derive_seed, rng_from_seed, Seed, SimRng};
pub use theory::{GnpPrediction, TheoryError, TheoryPrediction};
pub use walk::{
    classify_nice, estimate_returns, run_with_snapshots, survival_curve, unvisit_probability, NicenessReport,
    PairingState, ReturnStats, SnapshotSpec, WalkError, WalkGraph, WalkRun,
};

/// Dense 0-based vertex label.
pub type VertexId = u32;

/// Walk step counter.
pub type TimeStep = u64;
