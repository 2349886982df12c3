//! Uniform box grids on [-L, L]^d with Dirichlet boundary classification.

use thiserror::Error;

/// Cap on the total node count; guards accidental size explosions.
pub const MAX_NODES: usize = 32_000_000;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("need n >= 3 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("half width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("dimension {0} out of range 1..=3")]
    BadDimension(usize),
    #[error("grid of {nodes} nodes exceeds cap {cap}")]
    SizeOverflow { nodes: usize, cap: usize },
}

/// Uniform tensor grid over the box [-L, L]^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    d: usize,
    half_width: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn build(d: usize, half_width: f64, n: usize) -> Result<Self, GridError> {
        if !(1..=3).contains(&d) {
            return Err(GridError::BadDimension(d));
        }
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(half_width > 0.0) {
            return Err(GridError::BadHalfWidth(half_width));
        }
        let nodes = n.checked_pow(d as u32).unwrap_or(usize::MAX);
        if nodes > MAX_NODES {
            return Err(GridError::SizeOverflow {
                nodes,
                cap: MAX_NODES,
            });
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        Ok(Grid {
            d,
            half_width,
            n,
            h,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn cell_count(&self) -> usize {
        (self.n - 1).pow(self.d as u32)
    }

    /// Largest |x| over the box (the half diagonal).
    pub fn box_diagonal(&self) -> f64 {
        self.half_width * (self.d as f64).sqrt()
    }

    #[inline]
    pub fn flat(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for &m in multi.iter().rev() {
            idx = idx * self.n + m;
        }
        idx
    }

    #[inline]
    pub fn multi(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for o in out.iter_mut() {
            *o = rem % self.n;
            rem /= self.n;
        }
    }

    /// Coordinate of axis index i.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + self.h * i as f64
    }

    pub fn node_coord(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for o in out.iter_mut() {
            *o = self.axis_coord(rem % self.n);
            rem /= self.n;
        }
    }

    /// Interior nodes have every axis index strictly between 0 and n-1.
    pub fn is_interior(&self, flat: usize) -> bool {
        let mut rem = flat;
        for _ in 0..self.d {
            let m = rem % self.n;
            rem /= self.n;
            if m == 0 || m == self.n - 1 {
                return false;
            }
        }
        true
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_interior(i)).collect()
    }

    /// Lower-corner node flat index of a cell, from the cell's flat index
    /// (cells are indexed on an (n-1)^d lattice).
    pub fn cell_corner(&self, cell: usize) -> usize {
        let m = self.n - 1;
        let mut rem = cell;
        let mut multi = [0usize; 3];
        for mi in multi.iter_mut().take(self.d) {
            *mi = rem % m;
            rem /= m;
        }
        self.flat(&multi[..self.d])
    }

    /// Midpoint coordinates of a cell.
    pub fn cell_midpoint(&self, cell: usize, out: &mut [f64]) {
        let m = self.n - 1;
        let mut rem = cell;
        for o in out.iter_mut() {
            let i = rem % m;
            rem /= m;
            *o = self.axis_coord(i) + 0.5 * self.h;
        }
    }

    /// Node stride along an axis in flat indexing.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }
}

/// Node values on a grid (boundary included).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.node_count());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![0.0; grid.node_count()],
        }
    }

    /// Pointwise construction from node coordinates.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.node_count()];
        let mut x = vec![0.0; grid.dimension()];
        for (i, v) in values.iter_mut().enumerate() {
            grid.node_coord(i, &mut x);
            *v = f(&x);
        }
        GridFunction {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Most negative entry (0 if none are negative).
    pub fn min_entry(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Discrete L2 norm with the cell-volume weight.
    pub fn norm_l2(&self) -> f64 {
        let w = self.grid.cell_volume();
        (self.values.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }

    /// Weighted integral (sum times cell volume).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Largest boundary magnitude; zero for Dirichlet-admissible functions.
    pub fn boundary_sup(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.grid.is_interior(*i))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// Per-cell values (carre du champ densities and weights live on cells).
#[derive(Debug, Clone)]
pub struct CellFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl CellFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.cell_count());
        CellFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum times cell volume.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}
