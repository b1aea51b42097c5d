//! Union-find persistence for 2-D cubical sublevel filtrations.
//!
//! Dimension 0 is a sweep over pixels in increasing level with 8-connectivity.
//! Dimension 1 uses planar duality: loops of the sublevel complex are the
//! bounded 4-connected components of the complement, so a sweep in decreasing
//! level over the complement, with a virtual exterior cell that is older than
//! everything, pairs each loop's birth (the merge level) with its death (the
//! highest level inside it).

use crate::grid::Level;
use crate::par;

use super::diagram::{PersistenceDiagram, PersistencePair};
use super::filtration::CubicalFiltration;
use super::union_find::UnionFind;

pub fn compute_persistence(filt: &CubicalFiltration) -> PersistenceDiagram {
    let (w, h) = (filt.width(), filt.height());
    let levels = filt.squares();
    let (mut pairs, dual) = par::join(|| zero_dim(levels, w, h), || one_dim(levels, w, h));
    pairs.extend(dual);
    PersistenceDiagram::new(pairs, filt.l_max())
}

/// Pixel indices ordered by `(level, index)`; counting sort over the level range.
fn ascending_order(levels: &[Level]) -> Vec<u32> {
    let max = levels.iter().copied().max().unwrap_or(0) as usize;
    let mut start = vec![0u32; max + 2];
    for &l in levels {
        start[l as usize + 1] += 1;
    }
    for i in 1..start.len() {
        start[i] += start[i - 1];
    }
    let mut order = vec![0u32; levels.len()];
    for (i, &l) in levels.iter().enumerate() {
        let slot = &mut start[l as usize];
        order[*slot as usize] = i as u32;
        *slot += 1;
    }
    order
}

fn zero_dim(levels: &[Level], w: usize, h: usize) -> Vec<PersistencePair> {
    let n = levels.len();
    let order = ascending_order(levels);
    // rank[i] = position of pixel i in the sweep; the elder of two components
    // has the smaller rank, i.e. lower birth, then smaller (row, col)
    let mut rank = vec![u32::MAX; n];
    let mut uf = UnionFind::new(n);
    let mut pairs = Vec::new();

    for (step, &p) in order.iter().enumerate() {
        let pu = p as usize;
        rank[pu] = step as u32;
        let t = levels[pu];
        let (r, c) = (pu / w, pu % w);
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let q = nr as usize * w + nc as usize;
                if rank[q] == u32::MAX {
                    continue;
                }
                let (ra, rb) = (uf.find(p), uf.find(q as u32));
                if ra == rb {
                    continue;
                }
                let (oa, ob) = (uf.oldest(ra), uf.oldest(rb));
                let (elder, younger) = if rank[oa as usize] < rank[ob as usize] { (oa, ob) } else { (ob, oa) };
                let birth = levels[younger as usize];
                if birth < t {
                    pairs.push(PersistencePair::finite(0, birth, t));
                }
                uf.link(ra, rb, elder);
            }
        }
    }
    if let Some(&first) = order.first() {
        pairs.push(PersistencePair::essential(0, levels[first as usize]));
    }
    pairs
}

fn one_dim(levels: &[Level], w: usize, h: usize) -> Vec<PersistencePair> {
    let n = levels.len();
    let exterior = n as u32;
    let mut order = ascending_order(levels);
    order.reverse();
    // rank 0 is reserved for the exterior
    let mut rank = vec![u32::MAX; n + 1];
    rank[n] = 0;
    let mut uf = UnionFind::new(n + 1);
    let mut pairs = Vec::new();

    let mut merge = |uf: &mut UnionFind, rank: &[u32], a: u32, b: u32, t: Level| {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            return;
        }
        let (oa, ob) = (uf.oldest(ra), uf.oldest(rb));
        let (elder, younger) = if rank[oa as usize] < rank[ob as usize] { (oa, ob) } else { (ob, oa) };
        // younger != exterior, since the exterior has the minimum rank
        let death = levels[younger as usize];
        if t < death {
            pairs.push(PersistencePair::finite(1, t, death));
        }
        uf.link(ra, rb, elder);
    };

    for (step, &p) in order.iter().enumerate() {
        let pu = p as usize;
        rank[pu] = step as u32 + 1;
        let t = levels[pu];
        let (r, c) = (pu / w, pu % w);
        if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
            merge(&mut uf, &rank, p, exterior, t);
        }
        let neighbours = [
            (r > 0).then(|| pu - w),
            (r + 1 < h).then(|| pu + w),
            (c > 0).then(|| pu - 1),
            (c + 1 < w).then(|| pu + 1),
        ];
        for q in neighbours.into_iter().flatten() {
            if rank[q] != u32::MAX {
                merge(&mut uf, &rank, p, q as u32, t);
            }
        }
    }
    pairs
}
