//! Brute-force Betti numbers of a single sublevel set.
//!
//! Shares no code with the persistence sweep: β₀ is a flood fill over the
//! foreground pixels, β₁ comes from the Euler characteristic counted cell by
//! cell straight from the level map.

use std::collections::VecDeque;

use crate::grid::{Level, LevelMap};

/// Betti number of dimension `dim` of the sublevel complex `{cells <= t}`.
/// Dimensions above 1 are always 0 for a planar complex.
pub fn betti_oracle(levels: &LevelMap, t: Level, dim: u8) -> usize {
    match dim {
        0 => components(levels, t),
        1 => {
            let b0 = components(levels, t) as i64;
            let b1 = b0 - euler_characteristic(levels, t);
            debug_assert!(b1 >= 0);
            b1 as usize
        }
        _ => 0,
    }
}

fn components(levels: &LevelMap, t: Level) -> usize {
    let (w, h) = (levels.width() as isize, levels.height() as isize);
    let on = |r: isize, c: isize| r >= 0 && c >= 0 && r < h && c < w && levels.get(r as usize, c as usize) <= t;
    let mut seen = vec![false; levels.levels().len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for r in 0..h {
        for c in 0..w {
            let i = (r * w + c) as usize;
            if seen[i] || !on(r, c) {
                continue;
            }
            count += 1;
            seen[i] = true;
            queue.push_back((r, c));
            while let Some((pr, pc)) = queue.pop_front() {
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (pr + dr, pc + dc);
                        if on(nr, nc) && !seen[(nr * w + nc) as usize] {
                            seen[(nr * w + nc) as usize] = true;
                            queue.push_back((nr, nc));
                        }
                    }
                }
            }
        }
    }
    count
}

/// χ = V - E + F of the closure of the pixels `<= t`: a cell is present iff
/// any pixel incident to it is.
fn euler_characteristic(levels: &LevelMap, t: Level) -> i64 {
    let (w, h) = (levels.width() as isize, levels.height() as isize);
    let on = |r: isize, c: isize| r >= 0 && c >= 0 && r < h && c < w && levels.get(r as usize, c as usize) <= t;
    let mut chi = 0i64;
    for r in 0..=h {
        for c in 0..=w {
            // vertex at the corner shared by pixels (r-1..r, c-1..c)
            if on(r - 1, c - 1) || on(r - 1, c) || on(r, c - 1) || on(r, c) {
                chi += 1;
            }
            // horizontal edge below pixel (r-1, c), above pixel (r, c)
            if c < w && (on(r - 1, c) || on(r, c)) {
                chi -= 1;
            }
            // vertical edge left of pixel (r, c), right of pixel (r, c-1)
            if r < h && (on(r, c - 1) || on(r, c)) {
                chi -= 1;
            }
            if on(r, c) {
                chi += 1;
            }
        }
    }
    chi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> LevelMap {
        let mut levels = vec![1; 9];
        levels[4] = 9;
        LevelMap::new(3, 3, 255, levels).unwrap()
    }

    #[test]
    fn constant_grid() {
        let g = LevelMap::new(4, 3, 255, vec![6; 12]).unwrap();
        for t in 6..=255 {
            assert_eq!((betti_oracle(&g, t, 0), betti_oracle(&g, t, 1)), (1, 0));
        }
    }

    #[test]
    fn ring_grid() {
        let g = ring();
        assert_eq!(euler_characteristic(&g, 1), 0);
        assert_eq!((betti_oracle(&g, 1, 0), betti_oracle(&g, 1, 1)), (1, 1));
        assert_eq!((betti_oracle(&g, 9, 0), betti_oracle(&g, 9, 1)), (1, 0));
    }

    #[test]
    fn empty_sublevel() {
        let g = ring();
        assert_eq!((betti_oracle(&g, 0, 0), betti_oracle(&g, 0, 1)), (0, 0));
        assert_eq!(betti_oracle(&g, 3, 2), 0);
    }

    #[test]
    fn diagonal_neighbours_form_one_component() {
        let g = LevelMap::new(2, 2, 9, vec![0, 9, 9, 0]).unwrap();
        assert_eq!(betti_oracle(&g, 0, 0), 1);
        assert_eq!(betti_oracle(&g, 0, 1), 0);
    }
}
