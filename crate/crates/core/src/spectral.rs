//! Real-to-complex 2D DFT on the computational grid.
//!
//! Forward transform is unnormalized, inverse carries the `1/(nx*ny)` factor.
//! Spectra use a "column-major half" layout: the `y` axis is transformed with a
//! real FFT (keeping `ny/2 + 1` frequencies), then each of those columns is
//! transformed along `x` and stored contiguously, so a spectrum is a flat
//! buffer of `(ny/2 + 1) * nx` complex values indexed by `ky * nx + kx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid2D;

#[derive(Clone)]
pub struct SpectralPlan {
    nx: usize,
    ny: usize,
    nyh: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralPlan").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

/// Per-call scratch memory; one per running simulation.
pub struct SpectralScratch {
    rows: Vec<Complex64>,
    real_row: Vec<f64>,
    fft_scratch: Vec<Complex64>,
}

impl SpectralPlan {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Self {
            nx,
            ny,
            nyh: ny / 2 + 1,
            r2c: rp.plan_fft_forward(ny),
            c2r: rp.plan_fft_inverse(ny),
            col_fwd: cp.plan_fft_forward(nx),
            col_inv: cp.plan_fft_inverse(nx),
        }
    }

    pub fn for_grid(grid: &Grid2D) -> Self {
        Self::new(grid.nx, grid.ny)
    }

    pub fn spectrum_len(&self) -> usize {
        self.nyh * self.nx
    }

    pub fn zero_spectrum(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.spectrum_len()]
    }

    pub fn scratch(&self) -> SpectralScratch {
        let n = [
            self.r2c.get_scratch_len(),
            self.c2r.get_scratch_len(),
            self.col_fwd.get_inplace_scratch_len(),
            self.col_inv.get_inplace_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        SpectralScratch {
            rows: vec![Complex64::new(0.0, 0.0); self.nx * self.nyh],
            real_row: vec![0.0; self.ny],
            fft_scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Unnormalized forward DFT of `input` into `out` (layout described above).
    pub fn forward(&self, input: ArrayView2<f64>, out: &mut [Complex64], s: &mut SpectralScratch) {
        assert_eq!(input.dim(), (self.nx, self.ny));
        assert_eq!(out.len(), self.spectrum_len());
        let nyh = self.nyh;
        for (i, row) in input.outer_iter().enumerate() {
            s.real_row.iter_mut().zip(row.iter()).for_each(|(d, &v)| *d = v);
            let dst = &mut s.rows[i * nyh..(i + 1) * nyh];
            self.r2c
                .process_with_scratch(&mut s.real_row, dst, &mut s.fft_scratch)
                .expect("real FFT buffer sizes are fixed by the plan");
        }
        for ky in 0..nyh {
            let col = &mut out[ky * self.nx..(ky + 1) * self.nx];
            for (i, c) in col.iter_mut().enumerate() {
                *c = s.rows[i * nyh + ky];
            }
            self.col_fwd.process_with_scratch(col, &mut s.fft_scratch);
        }
    }

    /// Normalized inverse DFT. `spec` is consumed as scratch.
    pub fn inverse(&self, spec: &mut [Complex64], out: &mut Array2<f64>, s: &mut SpectralScratch) {
        assert_eq!(out.dim(), (self.nx, self.ny));
        assert_eq!(spec.len(), self.spectrum_len());
        let nyh = self.nyh;
        for ky in 0..nyh {
            let col = &mut spec[ky * self.nx..(ky + 1) * self.nx];
            self.col_inv.process_with_scratch(col, &mut s.fft_scratch);
            for (i, c) in col.iter().enumerate() {
                s.rows[i * nyh + ky] = *c;
            }
        }
        let norm = 1.0 / (self.nx * self.ny) as f64;
        let even = self.ny % 2 == 0;
        for (i, mut row) in out.outer_iter_mut().enumerate() {
            let src = &mut s.rows[i * nyh..(i + 1) * nyh];
            // DC (and Nyquist) bins of a real signal are real; drop round-off
            src[0].im = 0.0;
            if even {
                src[nyh - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(src, &mut s.real_row, &mut s.fft_scratch)
                .expect("inverse real FFT buffer sizes are fixed by the plan");
            row.iter_mut().zip(s.real_row.iter()).for_each(|(d, &v)| *d = v * norm);
        }
    }

    /// Frequency magnitudes `|xi|` in the spectrum layout, for spacing `h`.
    pub fn wavenumber_magnitudes(&self, h: f64) -> Vec<f64> {
        let kx = signed_wavenumbers(self.nx, h);
        let ky = signed_wavenumbers(self.ny, h);
        let mut out = Vec::with_capacity(self.spectrum_len());
        for ky_v in ky.iter().take(self.nyh) {
            for kx_v in &kx {
                out.push(kx_v.hypot(*ky_v));
            }
        }
        out
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }
}

/// `2 pi k / (n h)` for the symmetric index set `k = 0, 1, .., -1`.
pub fn signed_wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let period = n as f64 * h;
    (0..n)
        .map(|k| {
            let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * k / period
        })
        .collect()
}
