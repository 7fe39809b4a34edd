use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{invalid, PatError, Result};
use crate::grid::Grid2D;

/// Which part of the boundary records data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum View {
    Full,
    /// Only boundary pixels with `x > threshold` are observed.
    HalfPlane(f64),
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            View::Full => f.write_str("full"),
            View::HalfPlane(t) => write!(f, "half_plane:{t}"),
        }
    }
}

impl FromStr for View {
    type Err = PatError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full" {
            return Ok(View::Full);
        }
        if let Some(t) = s.strip_prefix("half_plane:").or_else(|| s.strip_prefix("half_plane=")) {
            let t = t
                .trim()
                .parse::<f64>()
                .map_err(|e| invalid(format!("bad half_plane threshold `{t}`: {e}")))?;
            return Ok(View::HalfPlane(t));
        }
        Err(invalid(format!("unknown view `{s}` (expected `full` or `half_plane:<x>`)")))
    }
}

/// Boundary pixels of `[-1, 1]^2`, ordered counterclockwise from `(-1, -1)`,
/// with a binary observation window `chi` per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    pub grid: Grid2D,
    pub positions: Vec<(usize, usize)>,
    pub chi: Vec<f64>,
}

impl SensorArray {
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn observed(&self) -> usize {
        self.chi.iter().filter(|&&c| c != 0.0).count()
    }

    pub fn coords(&self, s: usize) -> (f64, f64) {
        let (i, j) = self.positions[s];
        self.grid.point(i, j)
    }

    /// Indicator image of the sensor pixels (used for the source injection).
    pub fn pixel_mask(&self) -> Array2<f64> {
        let mut m = Array2::zeros(self.grid.shape());
        for &(i, j) in &self.positions {
            m[[i, j]] = 1.0;
        }
        m
    }
}

/// Collects the boundary pixels of `[-1,1]^2` and applies the view window.
///
/// Each side owns the corner it starts from, so every boundary pixel appears
/// exactly once (`4 * (n_omega - 1)` sensors).
pub fn boundary_sensors(grid: Grid2D, view: View) -> Result<SensorArray> {
    let (lo, hi) = grid.omega_bounds()?;
    let mut positions = Vec::with_capacity(4 * (hi - lo));
    positions.extend((lo..hi).map(|i| (i, lo)));
    positions.extend((lo..hi).map(|j| (hi, j)));
    positions.extend((lo + 1..=hi).rev().map(|i| (i, hi)));
    positions.extend((lo + 1..=hi).rev().map(|j| (lo, j)));

    let chi: Vec<f64> = match view {
        View::Full => vec![1.0; positions.len()],
        View::HalfPlane(threshold) => {
            // a pixel sitting exactly on the threshold is not observed
            let cut = threshold + 1e-9 * grid.h;
            positions
                .iter()
                .map(|&(i, _)| if grid.x(i) > cut { 1.0 } else { 0.0 })
                .collect()
        }
    };
    if chi.iter().all(|&c| c == 0.0) {
        log::warn!("sensor window {view} observes no boundary pixel");
    }
    Ok(SensorArray { grid, positions, chi })
}

/// Boundary pressure, one row per sensor and one column per time sample
/// `t_k = k * h_t`, `k = 0..nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub values: Array2<f64>,
    pub h_t: f64,
}

impl Sinogram {
    pub fn zeros(count: usize, nt: usize, h_t: f64) -> Self {
        Self { values: Array2::zeros((count, nt)), h_t }
    }

    pub fn count(&self) -> usize {
        self.values.nrows()
    }

    pub fn nt(&self) -> usize {
        self.values.ncols()
    }

    pub fn final_time(&self) -> f64 {
        (self.nt().saturating_sub(1)) as f64 * self.h_t
    }

    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
