//! Grids, trapezoid quadrature and discretized curves.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Abscissae in `[0, 1]` with composite-trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid from strictly increasing points in `[0, 1]`.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a grid needs at least two points"));
        }
        if points.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > 1.0) {
            return Err(Error::invalid("grid points must lie in [0, 1]"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        let m = points.len();
        let mut weights = alloc::vec![0.0; m];
        for i in 0..m - 1 {
            let half = 0.5 * (points[i + 1] - points[i]);
            weights[i] += half;
            weights[i + 1] += half;
        }
        Ok(Grid { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Length of the interval covered by the grid.
    pub fn span(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// Quadrature approximation of the integral of the sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub(crate) fn weight_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }
}

/// Equally spaced grid `t_i = i/m`, `i = 1..=m`.
///
/// The left endpoint is left out: Brownian and Ornstein-Uhlenbeck kernels
/// have zero variance at `t = 0`.
pub fn make_uniform_grid(m: usize) -> Result<Grid> {
    if m < 2 {
        return Err(Error::invalid("a uniform grid needs m >= 2"));
    }
    Grid::new((1..=m).map(|i| i as f64 / m as f64).collect())
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.points == b.points
}

/// Population label of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Diseased,
    Healthy,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::Diseased => Group::Healthy,
            Group::Healthy => Group::Diseased,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Diseased => "diseased",
            Group::Healthy => "healthy",
        })
    }
}

/// A single curve sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(alloc::format!(
                "curve has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("curve values must be finite"));
        }
        Ok(Curve { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Curve::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let values = alloc::vec![c; grid.len()];
        Curve::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Curve {
        Curve {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Curve, b: f64) -> Result<Curve> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Curve {
            grid: self.grid.clone(),
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Curve {
        debug_assert_eq!(values.len(), grid.len());
        Curve { grid, values }
    }
}

/// Quadrature inner product `sum_i w_i f(t_i) g(t_i)`.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    if !same_grid(&f.grid, &g.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(weighted_dot(f.grid.weights(), &f.values, &g.values))
}

pub fn norm(f: &Curve) -> f64 {
    libm::sqrt(weighted_dot(f.grid.weights(), &f.values, &f.values))
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * (a * b)).sum()
}

/// Curves of one group sharing a grid; rows are subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: Arc<Grid>,
    values: DMatrix<f64>,
    group: Group,
}

impl FunctionalSample {
    pub fn new(grid: Arc<Grid>, values: DMatrix<f64>, group: Group) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::InsufficientSample {
                needed: 1,
                found: 0,
                group: Some(group),
            });
        }
        if values.ncols() != grid.len() {
            return Err(Error::invalid(alloc::format!(
                "sample has {} columns but the grid has {} points",
                values.ncols(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample values must be finite"));
        }
        Ok(FunctionalSample {
            grid,
            values,
            group,
        })
    }

    pub fn from_rows(grid: Arc<Grid>, rows: &[Vec<f64>], group: Group) -> Result<Self> {
        let m = grid.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::invalid(alloc::format!(
                "row {bad} has {} values but the grid has {m} points",
                rows[bad].len()
            )));
        }
        let values = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        FunctionalSample::new(grid, values, group)
    }

    pub fn from_curves(curves: &[Curve], group: Group) -> Result<Self> {
        let first = curves.first().ok_or(Error::InsufficientSample {
            needed: 1,
            found: 0,
            group: Some(group),
        })?;
        let grid = first.grid.clone();
        if curves.iter().any(|c| !same_grid(&grid, &c.grid)) {
            return Err(Error::GridMismatch);
        }
        let values = DMatrix::from_fn(curves.len(), grid.len(), |i, j| curves[i].values[j]);
        FunctionalSample::new(grid, values, group)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `n x m` matrix of values, one row per subject.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = group;
        self
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn curve(&self, i: usize) -> Curve {
        let values = self.values.row(i).iter().copied().collect();
        Curve::from_parts_unchecked(self.grid.clone(), values)
    }

    pub fn curves(&self) -> impl Iterator<Item = Curve> + '_ {
        (0..self.len()).map(|i| self.curve(i))
    }

    pub(crate) fn check_grid(&self, grid: &Arc<Grid>) -> Result<()> {
        if same_grid(&self.grid, grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
