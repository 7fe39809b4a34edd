//! k-space time stepping for the damped wave equation
//!
//! ```text
//! c^-2 p_tt + a p_t - Δp = s,   p(0) = f,   p_t(0) = -c^2 a f.
//! ```
//!
//! The equation is split into a constant-speed wave `w` (speed `c0 = max c`)
//! driven by two auxiliary fields: `v`, which carries the speed contrast, and
//! `r = c0^2 a ∫ p`, which carries the damping. The physical pressure is
//! `p = v + w - r`. The `w` update
//!
//! ```text
//! w(t+h) = 2w(t) - w(t-h) - F^-1[ 4 sin²(c0|ξ|h/2) F[w + v - r]
//!                                 - 4 (c0 h/2)² sinc²(c0|ξ|h/2) F[s] ]
//! ```
//!
//! is exact in time for a homogeneous undamped medium.

use ndarray::{Array2, ArrayView2, Zip};
use rustfft::num_complex::Complex64;

use crate::error::{invalid, PatError, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::medium::Medium;
use crate::sensors::{SensorArray, Sinogram};
use crate::spectral::{SpectralPlan, SpectralScratch};

/// Propagation and source multipliers on the discrete frequency grid.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    pub plan: SpectralPlan,
    /// `4 sin²(c0 |ξ| h_t / 2)`, in `[0, 4]`.
    pub prop_kernel: Vec<f64>,
    /// `(c0 h_t / 2)² sinc²(c0 |ξ| h_t / 2)`.
    pub src_kernel: Vec<f64>,
    pub c0: f64,
    pub h_t: f64,
    pub grid: Grid2D,
}

impl SpectralKernel {
    pub fn new(grid: Grid2D, c0: f64, h_t: f64) -> Result<Self> {
        Self::with_plan(SpectralPlan::for_grid(&grid), grid, c0, h_t)
    }

    pub fn with_plan(plan: SpectralPlan, grid: Grid2D, c0: f64, h_t: f64) -> Result<Self> {
        if !(h_t > 0.0 && h_t.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {h_t}")));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(invalid(format!("reference speed must be positive, got {c0}")));
        }
        if plan.nx() != grid.nx || plan.ny() != grid.ny {
            return Err(PatError::GridMismatch("FFT plan does not match grid".into()));
        }
        let half = 0.5 * c0 * h_t;
        let (prop_kernel, src_kernel) = plan
            .wavenumber_magnitudes(grid.h)
            .into_iter()
            .map(|k| {
                let arg = half * k;
                let s = arg.sin();
                let sinc = if arg == 0.0 { 1.0 } else { s / arg };
                (4.0 * s * s, half * half * sinc * sinc)
            })
            .unzip();
        Ok(Self { plan, prop_kernel, src_kernel, c0, h_t, grid })
    }
}

/// Rolling state of the k-space scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub grid: Grid2D,
    pub w_curr: Array2<f64>,
    pub w_prev: Array2<f64>,
    pub v: Array2<f64>,
    pub r: Array2<f64>,
    pub p: Array2<f64>,
    pub t_index: usize,
    pub h_t: f64,
}

impl WaveState {
    pub fn time(&self) -> f64 {
        self.t_index as f64 * self.h_t
    }

    pub fn pressure(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.p.clone() }
    }
}

/// Initial state for pressure `f` with `p_t(0) = -c^2 a f`.
///
/// Since `w = (c0^2/c^2) p + r` and `r_t = c0^2 a p`, that initial velocity
/// means `w_t(0) = 0`. The level `w(-h_t)` is taken time-symmetric,
/// `w(-h_t) = w(0) - F^-1[2 sin²(c0|ξ|h_t/2) F[f]]`, which makes the first
/// step agree with `w(h_t) = w(-h_t)` and the scheme exact for a
/// homogeneous undamped medium.
pub fn init_state(f: &ScalarField, medium: &Medium, kernel: &SpectralKernel) -> Result<WaveState> {
    f.grid.check_same(&medium.grid())?;
    f.grid.check_same(&kernel.grid)?;
    let h_t = kernel.h_t;
    let c0sq = medium.c0 * medium.c0;
    let w_curr = Zip::from(&f.values).and(&medium.c.values).map_collect(|&f, &c| c0sq / (c * c) * f);
    let v = Zip::from(&f.values).and(&medium.c.values).map_collect(|&f, &c| (1.0 - c0sq / (c * c)) * f);

    let plan = &kernel.plan;
    let mut scratch = plan.scratch();
    let mut spec = plan.zero_spectrum();
    plan.forward(f.values.view(), &mut spec, &mut scratch);
    for (z, &k) in spec.iter_mut().zip(&kernel.prop_kernel) {
        *z *= 0.5 * k;
    }
    let mut half_lap = Array2::zeros(f.grid.shape());
    plan.inverse(&mut spec, &mut half_lap, &mut scratch);
    let w_prev = &w_curr - &half_lap;

    Ok(WaveState {
        grid: f.grid,
        w_curr,
        w_prev,
        v,
        r: Array2::zeros(f.grid.shape()),
        p: f.values.clone(),
        t_index: 0,
        h_t,
    })
}

/// Zero initial data; used by the time-reversed adjoint solve.
pub fn rest_state(grid: Grid2D, h_t: f64) -> WaveState {
    let z = Array2::zeros(grid.shape());
    WaveState {
        grid,
        w_curr: z.clone(),
        w_prev: z.clone(),
        v: z.clone(),
        r: z.clone(),
        p: z,
        t_index: 0,
        h_t,
    }
}

/// Owns the scratch memory for stepping one simulation.
pub struct Propagator<'a> {
    kernel: &'a SpectralKernel,
    /// `c^2 / c0^2 - 1`
    contrast: Array2<f64>,
    /// `c0^2 a h_t`
    damping: Array2<f64>,
    scratch: SpectralScratch,
    spec: Vec<Complex64>,
    spec_src: Vec<Complex64>,
    work: Array2<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(medium: &Medium, kernel: &'a SpectralKernel) -> Result<Self> {
        medium.grid().check_same(&kernel.grid)?;
        if (medium.c0 - kernel.c0).abs() > 1e-14 * medium.c0 {
            return Err(invalid("kernel built for a different reference speed"));
        }
        let c0sq = kernel.c0 * kernel.c0;
        let h_t = kernel.h_t;
        Ok(Self {
            kernel,
            contrast: medium.c.values.mapv(|c| c * c / c0sq - 1.0),
            damping: medium.a.values.mapv(|a| c0sq * a * h_t),
            scratch: kernel.plan.scratch(),
            spec: kernel.plan.zero_spectrum(),
            spec_src: kernel.plan.zero_spectrum(),
            work: Array2::zeros(kernel.grid.shape()),
        })
    }

    /// Advances `state` by one time step; `source` is `s` at the current time.
    pub fn step(&mut self, state: &mut WaveState, source: Option<ArrayView2<f64>>) -> Result<()> {
        if state.grid.shape() != self.work.dim() {
            return Err(PatError::GridMismatch("state and propagator grids differ".into()));
        }
        if (state.h_t - self.kernel.h_t).abs() > 1e-14 * self.kernel.h_t {
            return Err(invalid("state and kernel use different time steps"));
        }
        let plan = &self.kernel.plan;

        Zip::from(&mut self.work)
            .and(&state.w_curr)
            .and(&state.v)
            .and(&state.r)
            .for_each(|u, &w, &v, &r| *u = w + v - r);
        plan.forward(self.work.view(), &mut self.spec, &mut self.scratch);
        for (z, &k) in self.spec.iter_mut().zip(&self.kernel.prop_kernel) {
            *z *= k;
        }
        if let Some(src) = source {
            if src.dim() != self.work.dim() {
                return Err(PatError::GridMismatch("source slice has the wrong shape".into()));
            }
            plan.forward(src, &mut self.spec_src, &mut self.scratch);
            for ((z, &zs), &k) in self.spec.iter_mut().zip(&self.spec_src).zip(&self.kernel.src_kernel) {
                *z -= 4.0 * k * zs;
            }
        }
        plan.inverse(&mut self.spec, &mut self.work, &mut self.scratch);

        // w_prev <- w_next, then swap so w_curr holds the new level
        Zip::from(&mut state.w_prev)
            .and(&state.w_curr)
            .and(&self.work)
            .for_each(|prev, &curr, &lap| *prev = 2.0 * curr - *prev - lap);
        std::mem::swap(&mut state.w_prev, &mut state.w_curr);

        Zip::from(&mut state.v)
            .and(&mut state.p)
            .and(&mut state.r)
            .and(&state.w_curr)
            .and(&self.contrast)
            .and(&self.damping)
            .for_each(|v, p, r, &w, &k, &d| {
                *v = k * (w - *r);
                *p = *v + w - *r;
                *r += d * *p;
            });
        state.t_index += 1;

        if !state.p.iter().all(|x| x.is_finite()) {
            return Err(PatError::Instability { step: state.t_index });
        }
        Ok(())
    }
}

/// A time-indexed source: fills `out` with `s(t_n)` for the step `t_n -> t_{n+1}`.
pub trait SourceTerm {
    fn fill(&mut self, step: usize, out: &mut Array2<f64>);
}

impl<F: FnMut(usize, &mut Array2<f64>)> SourceTerm for F {
    fn fill(&mut self, step: usize, out: &mut Array2<f64>) {
        self(step, out)
    }
}

/// Runs `nt - 1` steps from initial pressure `f` and records `p` at the
/// sensor pixels for `t_k = k h_t`, `k = 0..nt`.
pub fn simulate(
    f: &ScalarField,
    medium: &Medium,
    sensors: &SensorArray,
    nt: usize,
    h_t: f64,
    source: Option<&mut dyn SourceTerm>,
) -> Result<(Sinogram, WaveState)> {
    let kernel = SpectralKernel::new(f.grid, medium.c0, h_t)?;
    simulate_with_kernel(f, medium, &kernel, sensors, nt, source)
}

pub fn simulate_with_kernel(
    f: &ScalarField,
    medium: &Medium,
    kernel: &SpectralKernel,
    sensors: &SensorArray,
    nt: usize,
    mut source: Option<&mut dyn SourceTerm>,
) -> Result<(Sinogram, WaveState)> {
    if nt < 2 {
        return Err(invalid(format!("need at least 2 time samples, got {nt}")));
    }
    f.grid.check_same(&sensors.grid)?;
    let mut state = init_state(f, medium, kernel)?;
    let mut prop = Propagator::new(medium, kernel)?;
    let mut sino = Sinogram::zeros(sensors.count(), nt, kernel.h_t);
    let mut src_buf = source.as_ref().map(|_| Array2::zeros(f.grid.shape()));

    record(&state, sensors, &mut sino, 0);
    for k in 1..nt {
        match (source.as_deref_mut(), src_buf.as_mut()) {
            (Some(s), Some(buf)) => {
                buf.fill(0.0);
                s.fill(k - 1, buf);
                prop.step(&mut state, Some(buf.view()))?;
            }
            _ => prop.step(&mut state, None)?,
        }
        record(&state, sensors, &mut sino, k);
    }
    Ok((sino, state))
}

fn record(state: &WaveState, sensors: &SensorArray, sino: &mut Sinogram, k: usize) {
    for (s, &(i, j)) in sensors.positions.iter().enumerate() {
        sino.values[[s, k]] = state.p[[i, j]];
    }
}
