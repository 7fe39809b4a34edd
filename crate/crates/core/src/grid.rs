//! Uniform square grids and scalar fields sampled on them.
//!
//! The physical domain is the square `[-1, 1]^2`; it sits inside a larger
//! periodic computational square `[-extent, extent]^2` so that the spectral
//! propagator does not wrap energy back into the measurement region.

use ndarray::Array2;

use crate::error::{invalid, PatError, Result};

/// Half-width of the physical domain.
pub const OMEGA_HALF_WIDTH: f64 = 1.0;

/// Radius of the disk that must contain the support of every initial pressure.
pub const OMEGA0_RADIUS: f64 = 0.9;

const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub extent: f64,
    pub origin: (f64, f64),
}

impl Grid2D {
    /// Square `n x n` grid covering `[-extent, extent]^2`, endpoints included.
    pub fn square(n: usize, extent: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs at least 2 samples per side, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(invalid(format!("grid extent must be positive, got {extent}")));
        }
        let h = 2.0 * extent / (n - 1) as f64;
        Ok(Self { nx: n, ny: n, h, extent, origin: (-extent, -extent) })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.h
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    /// Index range `(lo, hi)` (inclusive) of the samples of `[-1, 1]` along each
    /// axis, or an error when the physical boundary does not land on samples.
    pub fn omega_bounds(&self) -> Result<(usize, usize)> {
        let lo = (self.extent - OMEGA_HALF_WIDTH) / self.h;
        let hi = (self.extent + OMEGA_HALF_WIDTH) / self.h;
        let (lo_r, hi_r) = (lo.round(), hi.round());
        if self.extent <= OMEGA_HALF_WIDTH
            || (lo - lo_r).abs() > 1e-6
            || (hi - hi_r).abs() > 1e-6
            || hi_r as usize >= self.nx.min(self.ny)
        {
            return Err(PatError::GridMismatch(format!(
                "[-1,1]^2 is not aligned with the {}x{} grid of extent {}",
                self.nx, self.ny, self.extent
            )));
        }
        Ok((lo_r as usize, hi_r as usize))
    }

    /// Samples `x` with `|x| <= 0.9` get 1, everything else 0.
    pub fn omega0_mask(&self) -> Array2<f64> {
        let r2 = OMEGA0_RADIUS * OMEGA0_RADIUS + ALIGN_TOL;
        Array2::from_shape_fn(self.shape(), |(i, j)| {
            let (x, y) = self.point(i, j);
            if x * x + y * y <= r2 {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn check_same(&self, other: &Grid2D) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if self.nx != other.nx
            || self.ny != other.ny
            || !close(self.h, other.h)
            || !close(self.origin.0, other.origin.0)
            || !close(self.origin.1, other.origin.1)
        {
            return Err(PatError::GridMismatch(format!(
                "{}x{} (h={}) vs {}x{} (h={})",
                self.nx, self.ny, self.h, other.nx, other.ny, other.h
            )));
        }
        Ok(())
    }
}

/// Builds the computational grid for an `n_omega`-per-side discretization of
/// `[-1, 1]^2` embedded in `[-oversize, oversize]^2`.
pub fn make_grid(n_omega: usize, oversize: usize) -> Result<Grid2D> {
    if n_omega < 3 {
        return Err(invalid(format!("n_omega must be at least 3, got {n_omega}")));
    }
    if n_omega % 2 == 0 {
        return Err(invalid(format!(
            "n_omega must be odd so that the boundary of [-1,1]^2 lands on samples, got {n_omega}"
        )));
    }
    if oversize < 2 {
        return Err(invalid(format!("oversize factor must be at least 2, got {oversize}")));
    }
    let n = oversize * (n_omega - 1) + 1;
    Grid2D::square(n, oversize as f64)
}

/// A real function sampled on a [`Grid2D`]; `values[[i, j]]` lives at `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: Array2::zeros(grid.shape()) }
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Self { grid, values: Array2::from_elem(grid.shape(), value) }
    }

    pub fn from_values(grid: Grid2D, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(PatError::GridMismatch(format!(
                "array of shape {:?} on a {}x{} grid",
                values.dim(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.x(i), grid.y(j)));
        Self { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain (unweighted) Euclidean norm of the samples.
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
