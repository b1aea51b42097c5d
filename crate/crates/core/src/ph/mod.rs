//! Sublevel persistent homology of 2-D cubical complexes.
//!
//! Pixels are the top-dimensional cells; every lower cell takes the minimum
//! level of the pixels incident to it. Foreground pixels are therefore
//! 8-connected, and the bounded components of the complement are 4-connected.

mod diagram;
mod filtration;
mod oracle;
mod persistence;
mod union_find;

pub use diagram::{diagram_betti, PersistenceDiagram, PersistencePair};
pub use filtration::{build_filtration, CubicalFiltration};
pub use oracle::betti_oracle;
pub use persistence::compute_persistence;
