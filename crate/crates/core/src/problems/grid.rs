/// Boundary handling of a uniform 2-D grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Nodes `x_i = a + i h`, `i = 0..N-1`, wrapping at the ends.
    Periodic,
    /// Interior nodes `x_i = a + i h`, `i = 1..N`, with zero boundary values.
    DirichletInterior,
}

/// Uniform tensor grid on `[ax, bx] x [ay, by]` with `n` points per
/// dimension and lexicographic node ordering (x fastest).
#[derive(Debug, Clone, Copy)]
pub struct Grid2D {
    pub n: usize,
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
    pub boundary: BoundaryKind,
}

impl Grid2D {
    pub fn periodic(n: usize, ax: f64, bx: f64, ay: f64, by: f64) -> Self {
        assert!(n >= 2, "grid needs at least two points per dimension");
        Self { n, ax, bx, ay, by, boundary: BoundaryKind::Periodic }
    }

    pub fn dirichlet_interior(n: usize, ax: f64, bx: f64, ay: f64, by: f64) -> Self {
        assert!(n >= 2, "grid needs at least two points per dimension");
        Self { n, ax, bx, ay, by, boundary: BoundaryKind::DirichletInterior }
    }

    /// Mesh spacing; `(b - a)/N` for periodic grids, `(b - a)/(N + 1)` for
    /// Dirichlet interior grids.
    pub fn spacing(&self) -> f64 {
        match self.boundary {
            BoundaryKind::Periodic => (self.bx - self.ax) / self.n as f64,
            BoundaryKind::DirichletInterior => (self.bx - self.ax) / (self.n + 1) as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        match self.boundary {
            BoundaryKind::Periodic => self.ax + i as f64 * self.spacing(),
            BoundaryKind::DirichletInterior => self.ax + (i + 1) as f64 * self.spacing(),
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        let h = match self.boundary {
            BoundaryKind::Periodic => (self.by - self.ay) / self.n as f64,
            BoundaryKind::DirichletInterior => (self.by - self.ay) / (self.n + 1) as f64,
        };
        match self.boundary {
            BoundaryKind::Periodic => self.ay + j as f64 * h,
            BoundaryKind::DirichletInterior => self.ay + (j + 1) as f64 * h,
        }
    }

    /// Flat index of node `(i, j)` under lexicographic ordering, x fastest.
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
}
