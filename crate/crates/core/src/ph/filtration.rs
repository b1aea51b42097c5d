use crate::grid::{Level, LevelMap};

/// All cells of the cubical complex on a `W x H` pixel grid with their
/// filtration values.
///
/// Vertex `(r, c)` sits at the top-left corner of pixel `(r, c)`, for
/// `r in 0..=H`, `c in 0..=W`. Horizontal edge `(r, c)` joins vertices
/// `(r, c)` and `(r, c + 1)`; vertical edge `(r, c)` joins `(r, c)` and `(r + 1, c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicalFiltration {
    width: usize,
    height: usize,
    l_max: Level,
    vertices: Vec<Level>,
    h_edges: Vec<Level>,
    v_edges: Vec<Level>,
    squares: Vec<Level>,
}

impl CubicalFiltration {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn l_max(&self) -> Level {
        self.l_max
    }

    pub fn vertex(&self, r: usize, c: usize) -> Level {
        self.vertices[r * (self.width + 1) + c]
    }

    pub fn h_edge(&self, r: usize, c: usize) -> Level {
        self.h_edges[r * self.width + c]
    }

    pub fn v_edge(&self, r: usize, c: usize) -> Level {
        self.v_edges[r * (self.width + 1) + c]
    }

    pub fn square(&self, r: usize, c: usize) -> Level {
        self.squares[r * self.width + c]
    }

    /// Pixel levels, row-major.
    pub fn squares(&self) -> &[Level] {
        &self.squares
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.h_edges.len() + self.v_edges.len()
    }

    pub fn num_squares(&self) -> usize {
        self.squares.len()
    }

    pub fn num_cells(&self) -> usize {
        self.num_vertices() + self.num_edges() + self.num_squares()
    }

    /// Euler characteristic of the sublevel complex at `t`.
    pub fn euler_characteristic(&self, t: Level) -> i64 {
        let count = |cells: &[Level]| cells.iter().filter(|&&v| v <= t).count() as i64;
        count(&self.vertices) - count(&self.h_edges) - count(&self.v_edges) + count(&self.squares)
    }

    /// Checks `value(face) <= value(coface)` for every face relation.
    pub fn is_monotone(&self) -> bool {
        let (w, h) = (self.width, self.height);
        for r in 0..=h {
            for c in 0..w {
                let e = self.h_edge(r, c);
                if self.vertex(r, c) > e || self.vertex(r, c + 1) > e {
                    return false;
                }
            }
        }
        for r in 0..h {
            for c in 0..=w {
                let e = self.v_edge(r, c);
                if self.vertex(r, c) > e || self.vertex(r + 1, c) > e {
                    return false;
                }
            }
        }
        for r in 0..h {
            for c in 0..w {
                let s = self.square(r, c);
                let faces = [self.h_edge(r, c), self.h_edge(r + 1, c), self.v_edge(r, c), self.v_edge(r, c + 1)];
                if faces.iter().any(|&f| f > s) {
                    return false;
                }
            }
        }
        true
    }
}

/// Builds the T-construction filtration: squares take their pixel level,
/// every lower cell the minimum over its incident pixels.
pub fn build_filtration(levels: &LevelMap) -> CubicalFiltration {
    let (w, h) = (levels.width(), levels.height());
    // min over pixels (r0..=r1, c0..=c1) clipped to the grid; r/c are vertex-grid coordinates
    let min_around = |rs: &[Option<usize>], cs: &[Option<usize>]| -> Level {
        let mut m = Level::MAX;
        for r in rs.iter().flatten() {
            for c in cs.iter().flatten() {
                m = m.min(levels.get(*r, *c));
            }
        }
        m
    };
    let below = |i: usize, n: usize| if i < n { Some(i) } else { None };
    let above = |i: usize| i.checked_sub(1);

    let mut vertices = Vec::with_capacity((w + 1) * (h + 1));
    for r in 0..=h {
        for c in 0..=w {
            vertices.push(min_around(&[above(r), below(r, h)], &[above(c), below(c, w)]));
        }
    }
    let mut h_edges = Vec::with_capacity((h + 1) * w);
    for r in 0..=h {
        for c in 0..w {
            h_edges.push(min_around(&[above(r), below(r, h)], &[Some(c)]));
        }
    }
    let mut v_edges = Vec::with_capacity(h * (w + 1));
    for r in 0..h {
        for c in 0..=w {
            v_edges.push(min_around(&[Some(r)], &[above(c), below(c, w)]));
        }
    }
    CubicalFiltration {
        width: w,
        height: h,
        l_max: levels.l_max(),
        vertices,
        h_edges,
        v_edges,
        squares: levels.levels().to_vec(),
    }
}
