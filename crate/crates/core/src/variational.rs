//! H1- and TV-penalized reconstruction, the discrete gradient, and power
//! iteration for operator norms.

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, PatError, Result};
use crate::operator::{LinearOperator, Metric};
use crate::solvers::{IterationLog, Recorder, StopRule};

/// Power iterations used for the primal-dual step sizes.
pub const TV_NORM_ITERS: usize = 30;
/// Seed of the power iteration start vector.
pub const NORM_SEED: u64 = 42;
/// Safety factor on the estimated operator norm.
pub const NORM_SAFETY: f64 = 1.01;

/// Gradient-space field: x- and y-components of a discrete gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

impl VectorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { x: Array2::zeros((nx, ny)), y: Array2::zeros((nx, ny)) }
    }

    pub fn magnitude(&self) -> Array2<f64> {
        ndarray::Zip::from(&self.x).and(&self.y).map_collect(|a, b| a.hypot(*b))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }
}

/// Forward differences with zero extension past the last row/column.
pub fn grad(f: ArrayView2<f64>, h: f64) -> VectorField {
    let (nx, ny) = f.dim();
    let mut q = VectorField::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..ny {
            if i + 1 < nx {
                q.x[[i, j]] = (f[[i + 1, j]] - f[[i, j]]) / h;
            }
            if j + 1 < ny {
                q.y[[i, j]] = (f[[i, j + 1]] - f[[i, j]]) / h;
            }
        }
    }
    q
}

/// Transpose of [`grad`]: `<grad f, q> = <f, div_adj q>` in plain sums.
pub fn div_adj(q: &VectorField, h: f64) -> Array2<f64> {
    let (nx, ny) = q.x.dim();
    let mut f = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            if i + 1 < nx {
                acc -= q.x[[i, j]];
            }
            if i > 0 {
                acc += q.x[[i - 1, j]];
            }
            if j + 1 < ny {
                acc -= q.y[[i, j]];
            }
            if j > 0 {
                acc += q.y[[i, j - 1]];
            }
            f[[i, j]] = acc / h;
        }
    }
    f
}

/// The discrete gradient as an operator between weighted spaces.
///
/// Vectors in the range stack the x-components before the y-components. A
/// grid with `ny = 1` gives the 1D difference operator (its y-part is zero).
#[derive(Debug, Clone)]
pub struct DiscreteGradient {
    nx: usize,
    ny: usize,
    h: f64,
    domain: Metric,
    range: Metric,
    cell: f64,
}

impl DiscreteGradient {
    /// `domain` is the image-space metric; `cell` is the uniform weight of
    /// every gradient component (the pixel area for quadrature).
    pub fn new(nx: usize, ny: usize, h: f64, domain: Metric, cell: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(h > 0.0) || !(cell > 0.0) {
            return Err(invalid("gradient needs a nonempty grid, h > 0 and cell weight > 0"));
        }
        if domain.dim() != nx * ny {
            return Err(PatError::DimensionMismatch { expected: nx * ny, got: domain.dim() });
        }
        let range = if cell == 1.0 {
            Metric::Euclidean(2 * nx * ny)
        } else {
            Metric::Diagonal(Array1::from_elem(2 * nx * ny, cell))
        };
        Ok(Self { nx, ny, h, domain, range, cell })
    }

    /// Unweighted gradient on an `nx x ny` grid.
    pub fn euclidean(nx: usize, ny: usize, h: f64) -> Result<Self> {
        Self::new(nx, ny, h, Metric::Euclidean(nx * ny), 1.0)
    }

    pub fn pixels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn field(&self, v: &Array1<f64>) -> Result<VectorField> {
        self.range.check(v)?;
        let n = self.pixels();
        let shape = (self.nx, self.ny);
        let to = |s: &[f64]| Array2::from_shape_vec(shape, s.to_vec()).expect("slice length matches grid");
        let s = v.as_slice().expect("owned arrays are contiguous");
        Ok(VectorField { x: to(&s[..n]), y: to(&s[n..]) })
    }

    pub fn stack(&self, q: &VectorField) -> Array1<f64> {
        q.x.iter().chain(q.y.iter()).copied().collect()
    }

    /// `sum cell * |D f|` over pixels.
    pub fn tv(&self, f: &Array1<f64>) -> Result<f64> {
        let df = self.apply(f)?;
        let n = self.pixels();
        Ok(self.cell * (0..n).map(|i| df[i].hypot(df[n + i])).sum::<f64>())
    }

    fn image<'a>(&self, f: &'a Array1<f64>) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.nx, self.ny), f.as_slice().expect("owned arrays are contiguous"))
            .expect("length checked against domain")
    }
}

impl LinearOperator for DiscreteGradient {
    fn domain(&self) -> &Metric {
        &self.domain
    }
    fn range(&self) -> &Metric {
        &self.range
    }
    fn apply(&self, f: &Array1<f64>) -> Result<Array1<f64>> {
        self.domain.check(f)?;
        Ok(self.stack(&grad(self.image(f), self.h)))
    }
    fn adjoint(&self, q: &Array1<f64>) -> Result<Array1<f64>> {
        let field = self.field(q)?;
        let mut out = Array1::from_iter(div_adj(&field, self.h));
        out *= self.cell;
        self.domain.unweight(&mut out);
        Ok(out)
    }
}

/// Square root of the largest eigenvalue of `sum A_i* A_i`, by power iteration
/// from a seeded Gaussian vector. All operators must share one domain.
pub fn operator_norm(ops: &[&dyn LinearOperator], iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(invalid("power iteration needs at least one iteration"));
    }
    let Some(first) = ops.first() else {
        return Err(invalid("operator_norm needs at least one operator"));
    };
    let domain = first.domain();
    for op in &ops[1..] {
        if op.domain() != domain {
            return Err(invalid("operators in a stacked norm must share their domain"));
        }
    }
    let normal = |x: &Array1<f64>| -> Result<Array1<f64>> {
        let mut acc = Array1::zeros(x.len());
        for op in ops {
            acc += &op.adjoint(&op.apply(x)?)?;
        }
        Ok(acc)
    };

    let mut x = start_vector(domain, seed);
    if domain.norm(&x) == 0.0 {
        x = start_vector(domain, seed.wrapping_add(1));
        if domain.norm(&x) == 0.0 {
            return Err(PatError::ZeroStart);
        }
    }
    let n0 = domain.norm(&x);
    x /= n0;
    let mut rayleigh = 0.0;
    for _ in 0..iters {
        let y = normal(&x)?;
        rayleigh = domain.dot(&x, &y);
        let ny = domain.norm(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y / ny;
    }
    Ok(rayleigh.max(0.0).sqrt())
}

fn start_vector(domain: &Metric, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Array1<f64> = (0..domain.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
    domain.project(&mut x);
    x
}

/// In-place pointwise projection `v <- lambda v / max(lambda, |v|)` of a
/// stacked gradient-space vector onto the ball of radius `lambda`.
pub fn dual_clip(v: &mut Array1<f64>, lambda: f64) {
    let n = v.len() / 2;
    for i in 0..n {
        let m = v[i].hypot(v[n + i]);
        if m > lambda {
            let s = lambda / m;
            v[i] *= s;
            v[n + i] *= s;
        }
    }
}

/// Steepest descent with exact line search on
/// `1/2 ||W f - g||^2 + lambda/2 ||D f||^2`.
pub fn h1_reconstruct<O: LinearOperator>(
    op: &O,
    d: &DiscreteGradient,
    g: &Array1<f64>,
    lambda: f64,
    stop: &StopRule,
    truth: Option<&Array1<f64>>,
) -> Result<(Array1<f64>, IterationLog)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    check_pair(op, d, g)?;
    stop.validate()?;
    let (domain, range) = (op.domain(), op.range());
    let mut f = Array1::zeros(domain.dim());
    let mut res = -g;
    let mut rec = Recorder::new(range.norm(g), truth);
    let objective = |res: &Array1<f64>, df2: f64| 0.5 * range.norm_sq(res) + 0.5 * lambda * df2;
    rec.push(&f, range.norm(&res), Some(objective(&res, 0.0)));

    let mut df = Array1::zeros(d.range().dim());
    let mut k = 0;
    while !stop.reached(k, rec.log.records[k].residual) {
        let mut s = op.adjoint(&res)?;
        if lambda > 0.0 {
            s.scaled_add(lambda, &d.adjoint(&df)?);
        }
        domain.project(&mut s);
        if domain.norm_sq(&s) == 0.0 {
            break;
        }
        let ws = op.apply(&s)?;
        let ds = if lambda > 0.0 { Some(d.apply(&s)?) } else { None };
        let mut curv = range.norm_sq(&ws);
        let mut slope = range.dot(&ws, &res);
        if let Some(ds) = &ds {
            curv += lambda * d.range().norm_sq(ds);
            slope += lambda * d.range().dot(ds, &df);
        }
        if curv == 0.0 {
            return Err(PatError::Breakdown { iteration: k, reason: "zero curvature along a nonzero gradient".into() });
        }
        let gamma = slope / curv;
        if !(gamma > 0.0) {
            log::info!("H1 descent stagnated at iteration {k}");
            break;
        }
        f.scaled_add(-gamma, &s);
        res.scaled_add(-gamma, &ws);
        if let Some(ds) = &ds {
            df.scaled_add(-gamma, ds);
        }
        rec.push(&f, range.norm(&res), Some(objective(&res, d.range().norm_sq(&df))));
        k += 1;
    }
    Ok((f, rec.log))
}

fn check_pair<O: LinearOperator>(op: &O, d: &DiscreteGradient, g: &Array1<f64>) -> Result<()> {
    op.range().check(g)?;
    if op.domain().dim() != d.pixels() {
        return Err(PatError::DimensionMismatch { expected: op.domain().dim(), got: d.pixels() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvOptions {
    pub lambda: f64,
    pub iters: usize,
    /// Rescale the gradient by `||W|| / ||D||` (and the dual radius by the
    /// inverse) so that equal primal and dual steps suit both blocks.
    pub balance: bool,
    pub norm_iters: usize,
}

impl TvOptions {
    pub fn new(lambda: f64, iters: usize) -> Self {
        Self { lambda, iters, balance: true, norm_iters: TV_NORM_ITERS }
    }
}

/// Primal-dual state of the TV iteration.
#[derive(Debug, Clone)]
pub struct PdState {
    pub f: Array1<f64>,
    pub u: Array1<f64>,
    pub p: Array1<f64>,
    pub q: Array1<f64>,
    pub sigma: f64,
    pub tau: f64,
    pub theta: f64,
    pub lambda: f64,
    /// Gradient scale; the iteration uses `kappa D` with dual radius `lambda / kappa`.
    pub kappa: f64,
    /// Norm estimate of `(W, kappa D)` including the safety factor.
    pub norm: f64,
    wf: Array1<f64>,
    wu: Array1<f64>,
}

impl PdState {
    pub fn new<O: LinearOperator>(op: &O, d: &DiscreteGradient, opts: &TvOptions) -> Result<Self> {
        if !(opts.lambda > 0.0 && opts.lambda.is_finite()) {
            return Err(invalid(format!("TV needs lambda > 0, got {}", opts.lambda)));
        }
        let kappa = if opts.balance {
            let nw = operator_norm(&[op as &dyn LinearOperator], opts.norm_iters, NORM_SEED)?;
            let nd = operator_norm(&[d as &dyn LinearOperator], opts.norm_iters, NORM_SEED)?;
            if nw > 0.0 && nd > 0.0 {
                nw / nd
            } else {
                1.0
            }
        } else {
            1.0
        };
        let scaled = crate::operator::Scaled { inner: d, factor: kappa };
        let l = NORM_SAFETY * operator_norm(&[op as &dyn LinearOperator, &scaled], opts.norm_iters, NORM_SEED)?;
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid("operator norm estimate vanished"));
        }
        let (n, m) = (op.domain().dim(), op.range().dim());
        let st = Self {
            f: Array1::zeros(n),
            u: Array1::zeros(n),
            p: Array1::zeros(m),
            q: Array1::zeros(2 * d.pixels()),
            sigma: 1.0 / l,
            tau: 1.0 / l,
            theta: 1.0,
            lambda: opts.lambda,
            kappa,
            norm: l,
            wf: Array1::zeros(m),
            wu: Array1::zeros(m),
        };
        debug_assert!(st.sigma * st.tau * (l / NORM_SAFETY).powi(2) <= 1.0);
        Ok(st)
    }

    /// One primal-dual update. Returns `W f_{k+1}`.
    pub fn step<O: LinearOperator>(&mut self, op: &O, d: &DiscreteGradient, g: &Array1<f64>) -> Result<&Array1<f64>> {
        let (sigma, tau, kappa) = (self.sigma, self.tau, self.kappa);
        self.p.scaled_add(sigma, &(&self.wu - g));
        self.p /= 1.0 + sigma;

        self.q.scaled_add(sigma * kappa, &d.apply(&self.u)?);
        dual_clip(&mut self.q, self.lambda / kappa);

        let mut f_next = self.f.clone();
        f_next.scaled_add(-tau, &op.adjoint(&self.p)?);
        f_next.scaled_add(-tau * kappa, &d.adjoint(&self.q)?);
        op.domain().project(&mut f_next);

        let wf_next = op.apply(&f_next)?;
        self.u = &f_next * (1.0 + self.theta) - &self.f * self.theta;
        self.wu = &wf_next * (1.0 + self.theta) - &self.wf * self.theta;
        self.f = f_next;
        self.wf = wf_next;
        Ok(&self.wf)
    }
}

/// Primal-dual (Chambolle-Pock) minimization of
/// `1/2 ||W f - g||^2 + lambda * sum cell |D f|`.
pub fn tv_reconstruct<O: LinearOperator>(
    op: &O,
    d: &DiscreteGradient,
    g: &Array1<f64>,
    opts: &TvOptions,
    truth: Option<&Array1<f64>>,
) -> Result<(Array1<f64>, IterationLog)> {
    check_pair(op, d, g)?;
    let mut st = PdState::new(op, d, opts)?;
    let range = op.range();
    let mut rec = Recorder::new(range.norm(g), truth);
    let res0 = range.norm(g);
    rec.push(&st.f, res0, Some(0.5 * res0 * res0));
    for k in 0..opts.iters {
        let wf = st.step(op, d, g)?;
        let res = range.norm(&(wf - g));
        let obj = 0.5 * res * res + opts.lambda * d.tv(&st.f)?;
        if !obj.is_finite() {
            return Err(PatError::Breakdown { iteration: k, reason: "non-finite TV objective".into() });
        }
        rec.push(&st.f, res, Some(obj));
    }
    Ok((st.f, rec.log))
}
