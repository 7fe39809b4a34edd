//! The photoacoustic forward operator `W: f -> p|_{S x [0,T]}` and its adjoint.
//!
//! Image space: fields supported in the radius-0.9 ball with inner product
//! `h^2 sum c^-2 f1 f2`. Data space: sinograms with inner product
//! `h h_t sum chi_s g1 g2`. The adjoint is the solution of the damped wave
//! equation run backwards in time with the windowed data injected as a source
//! on the sensor pixels; it is the discretized continuous adjoint, not the
//! transpose of the discrete forward map, so the dot-product identity holds up
//! to discretization error.

use ndarray::{Array1, Array2, Zip};

use crate::error::{PatError, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::kspace::{rest_state, simulate_with_kernel, Propagator, SpectralKernel};
use crate::medium::Medium;
use crate::operator::{LinearOperator, Metric};
use crate::sensors::{SensorArray, Sinogram};

#[derive(Debug, Clone)]
pub struct PatOperator {
    pub medium: Medium,
    pub grid: Grid2D,
    pub sensors: SensorArray,
    pub nt: usize,
    pub h_t: f64,
    pub omega0_mask: Array2<f64>,
    kernel: SpectralKernel,
    domain: Metric,
    range: Metric,
}

impl PatOperator {
    /// `nt` samples on `[0, T]`, so `h_t = T / (nt - 1)`.
    pub fn new(medium: Medium, sensors: SensorArray, nt: usize, final_time: f64) -> Result<Self> {
        if nt < 2 {
            return Err(PatError::InvalidArgument(format!("need at least 2 time samples, got {nt}")));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(PatError::InvalidArgument(format!("final time must be positive, got {final_time}")));
        }
        let grid = medium.grid();
        grid.check_same(&sensors.grid)?;
        let h_t = final_time / (nt - 1) as f64;
        let kernel = SpectralKernel::new(grid, medium.c0, h_t)?;
        let omega0_mask = grid.omega0_mask();
        let h2 = grid.h * grid.h;
        let dom_w = Zip::from(&omega0_mask)
            .and(&medium.c.values)
            .map_collect(|&m, &c| m * h2 / (c * c));
        let range_w = Array2::from_shape_fn((sensors.count(), nt), |(s, _)| grid.h * h_t * sensors.chi[s]);
        Ok(Self {
            grid,
            nt,
            h_t,
            omega0_mask,
            kernel,
            domain: Metric::Diagonal(flatten(dom_w)),
            range: Metric::Diagonal(flatten(range_w)),
            medium,
            sensors,
        })
    }

    pub fn final_time(&self) -> f64 {
        (self.nt - 1) as f64 * self.h_t
    }

    pub fn kernel(&self) -> &SpectralKernel {
        &self.kernel
    }

    pub fn forward(&self, f: &ScalarField) -> Result<Sinogram> {
        f.grid.check_same(&self.grid)?;
        let masked = ScalarField { grid: self.grid, values: &f.values * &self.omega0_mask };
        let (sino, _) = simulate_with_kernel(&masked, &self.medium, &self.kernel, &self.sensors, self.nt, None)?;
        Ok(sino)
    }

    /// `W* g = q_t(0)` restricted to the support ball.
    ///
    /// With `tau = T - t`, `Q(tau) = q(T - tau)` solves the forward damped wave
    /// equation from rest with source `chi g(T - tau) / h` on the sensor pixels
    /// (`1/h` discretizes the line measure of the boundary). The source for the
    /// step `tau_m -> tau_{m+1}` is the mean of the two data columns the step
    /// spans, which centres the injection in time. The result is the backward
    /// difference `(Q(T) - Q(T - h_t)) / h_t`; with this orientation the pairing
    /// `<W f, g>_Y = <f, W* g>_X` holds with a positive sign.
    pub fn adjoint_field(&self, g: &Sinogram) -> Result<ScalarField> {
        if g.count() != self.sensors.count() || g.nt() != self.nt {
            return Err(PatError::DimensionMismatch {
                expected: self.sensors.count() * self.nt,
                got: g.count() * g.nt(),
            });
        }
        let last = self.nt - 1;
        let inv_h = 1.0 / self.grid.h;
        let mut state = rest_state(self.grid, self.h_t);
        let mut prop = Propagator::new(&self.medium, &self.kernel)?;
        let mut source = Array2::zeros(self.grid.shape());
        let mut q_prev = state.p.clone();
        for m in 0..last {
            let (k_hi, k_lo) = (last - m, last - m - 1);
            for (s, &(i, j)) in self.sensors.positions.iter().enumerate() {
                let chi = self.sensors.chi[s];
                source[[i, j]] = 0.5 * chi * inv_h * (g.values[[s, k_hi]] + g.values[[s, k_lo]]);
            }
            if m == last - 1 {
                q_prev.assign(&state.p);
            }
            prop.step(&mut state, Some(source.view()))?;
        }
        let inv_ht = 1.0 / self.h_t;
        let values = Zip::from(&state.p)
            .and(&q_prev)
            .and(&self.omega0_mask)
            .map_collect(|&q, &qp, &m| m * (q - qp) * inv_ht);
        Ok(ScalarField { grid: self.grid, values })
    }

    pub fn field_to_vec(&self, f: &ScalarField) -> Result<Array1<f64>> {
        f.grid.check_same(&self.grid)?;
        Ok(flatten(f.values.clone()))
    }

    pub fn vec_to_field(&self, x: &Array1<f64>) -> Result<ScalarField> {
        self.domain.check(x)?;
        let values = Array2::from_shape_vec(self.grid.shape(), x.to_vec()).expect("length checked");
        Ok(ScalarField { grid: self.grid, values })
    }

    pub fn sinogram_to_vec(&self, g: &Sinogram) -> Result<Array1<f64>> {
        if g.count() != self.sensors.count() || g.nt() != self.nt {
            return Err(PatError::DimensionMismatch { expected: self.range.dim(), got: g.values.len() });
        }
        Ok(flatten(g.values.clone()))
    }

    pub fn vec_to_sinogram(&self, y: &Array1<f64>) -> Result<Sinogram> {
        self.range.check(y)?;
        let values = Array2::from_shape_vec((self.sensors.count(), self.nt), y.to_vec()).expect("length checked");
        Ok(Sinogram { values, h_t: self.h_t })
    }

    pub fn inner_x(&self, f1: &ScalarField, f2: &ScalarField) -> Result<f64> {
        inner_x(f1, f2, &self.medium)
    }

    pub fn inner_y(&self, g1: &Sinogram, g2: &Sinogram) -> Result<f64> {
        inner_y(g1, g2, &self.sensors)
    }
}

impl LinearOperator for PatOperator {
    fn domain(&self) -> &Metric {
        &self.domain
    }

    fn range(&self) -> &Metric {
        &self.range
    }

    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        let g = self.forward(&self.vec_to_field(x)?)?;
        Ok(flatten(g.values))
    }

    fn adjoint(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        let f = self.adjoint_field(&self.vec_to_sinogram(y)?)?;
        Ok(flatten(f.values))
    }
}

pub(crate) fn flatten(a: Array2<f64>) -> Array1<f64> {
    let n = a.len();
    if a.is_standard_layout() {
        a.into_shape_with_order(n).expect("standard layout")
    } else {
        Array1::from_iter(a.iter().copied())
    }
}

/// `h^2 sum_{|x| <= 0.9} c^-2 f1 f2`.
pub fn inner_x(f1: &ScalarField, f2: &ScalarField, medium: &Medium) -> Result<f64> {
    f1.grid.check_same(&f2.grid)?;
    f1.grid.check_same(&medium.grid())?;
    let grid = f1.grid;
    let mask = grid.omega0_mask();
    let sum = Zip::from(&f1.values)
        .and(&f2.values)
        .and(&medium.c.values)
        .and(&mask)
        .fold(0.0, |acc, &a, &b, &c, &m| acc + m * a * b / (c * c));
    Ok(grid.h * grid.h * sum)
}

pub fn norm_x(f: &ScalarField, medium: &Medium) -> Result<f64> {
    Ok(inner_x(f, f, medium)?.sqrt())
}

/// `h h_t sum_s chi_s sum_k g1[s,k] g2[s,k]`.
pub fn inner_y(g1: &Sinogram, g2: &Sinogram, sensors: &SensorArray) -> Result<f64> {
    if g1.values.dim() != g2.values.dim() {
        return Err(PatError::DimensionMismatch { expected: g1.values.len(), got: g2.values.len() });
    }
    if g1.count() != sensors.count() {
        return Err(PatError::DimensionMismatch { expected: sensors.count(), got: g1.count() });
    }
    let mut sum = 0.0;
    for (s, (r1, r2)) in g1.values.outer_iter().zip(g2.values.outer_iter()).enumerate() {
        if sensors.chi[s] != 0.0 {
            sum += sensors.chi[s] * r1.dot(&r2);
        }
    }
    Ok(sensors.grid.h * g1.h_t * sum)
}

pub fn norm_y(g: &Sinogram, sensors: &SensorArray) -> Result<f64> {
    Ok(inner_y(g, g, sensors)?.sqrt())
}
