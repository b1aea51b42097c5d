//! Topology attention maps from cubical persistent homology of 2-D
//! probability maps, plus reference kernels for linear state space models
//! and multi-scale attention-guided feature fusion.
//!
//! The main pipeline is [`attention::generate_attention_map`]: quantize a
//! `[0, 1]` map onto integer levels, build the cubical sublevel filtration,
//! compute its 0- and 1-dimensional persistence, keep the long-lived
//! features, paint each feature's lifespan onto its birth pixels and squash
//! the scores with a sigmoid.
//!
//! With the default `parallel` feature, batch work, trial loops, and
//! per-scale fusion run on rayon; without it everything runs sequentially
//! and produces identical results.

pub mod api;
pub mod attention;
pub mod batch;
pub mod cli;
pub mod grid;
pub mod io;
pub mod par;
pub mod ph;
pub mod sdi;
pub mod ssm;
pub mod synth;

pub use attention::{generate_attention_map, AttentionMap, AttnConfig};
pub use grid::{quantize, GridMap, Level, LevelMap};
pub use ph::{betti_oracle, build_filtration, compute_persistence, PersistenceDiagram, PersistencePair};
