use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::grid::Level;

/// A single (dimension, birth, death) interval. `death == None` is an essential class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: Level,
    pub death: Option<Level>,
}

impl PersistencePair {
    pub fn finite(dim: u8, birth: Level, death: Level) -> Self {
        Self { dim, birth, death: Some(death) }
    }

    pub fn essential(dim: u8, birth: Level) -> Self {
        Self { dim, birth, death: None }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_none()
    }

    /// `death - birth`, with an essential death read as `cap`.
    pub fn lifespan(&self, cap: Level) -> Level {
        self.death.unwrap_or(cap).saturating_sub(self.birth)
    }

    /// Whether the interval `[birth, death)` contains `t`.
    pub fn alive_at(&self, t: Level) -> bool {
        self.birth <= t && self.death.is_none_or(|d| t < d)
    }
}

impl Ord for PersistencePair {
    fn cmp(&self, other: &Self) -> Ordering {
        // finite deaths sort before essential ones
        let key = |p: &Self| (p.dim, p.birth, p.death.is_none(), p.death);
        key(self).cmp(&key(other))
    }
}

impl PartialOrd for PersistencePair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multiset of persistence pairs over dimensions 0 and 1, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    l_max: Level,
}

impl PersistenceDiagram {
    pub fn new(mut pairs: Vec<PersistencePair>, l_max: Level) -> Self {
        pairs.sort_unstable();
        Self { pairs, l_max }
    }

    pub fn empty(l_max: Level) -> Self {
        Self { pairs: Vec::new(), l_max }
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn l_max(&self) -> Level {
        self.l_max
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self, dim: u8) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    pub fn essential_count(&self, dim: u8) -> usize {
        self.dim(dim).filter(|p| p.is_essential()).count()
    }

    /// Number of `dim`-dimensional intervals alive at threshold `t`.
    pub fn betti(&self, t: Level, dim: u8) -> usize {
        self.dim(dim).filter(|p| p.alive_at(t)).count()
    }

    pub fn lifespan(&self, pair: &PersistencePair) -> Level {
        pair.lifespan(self.l_max)
    }

    /// Keeps the pairs for which `keep` returns true.
    pub fn retain(&self, mut keep: impl FnMut(&PersistencePair) -> bool) -> Self {
        Self { pairs: self.pairs.iter().copied().filter(|p| keep(p)).collect(), l_max: self.l_max }
    }

    /// Pushes every birth and finite death through `f`, which must be strictly increasing.
    pub fn map_levels(&self, l_max: Level, f: impl Fn(Level) -> Level) -> Self {
        let pairs = self
            .pairs
            .iter()
            .map(|p| PersistencePair { dim: p.dim, birth: f(p.birth), death: p.death.map(&f) })
            .collect();
        Self::new(pairs, l_max)
    }
}

/// Counting view of a diagram: intervals of dimension `dim` containing `t`.
pub fn diagram_betti(pd: &PersistenceDiagram, t: Level, dim: u8) -> usize {
    pd.betti(t, dim)
}
