//! Landweber, steepest descent and CGNE for `W f = g` in the weighted
//! image/data geometry, with Morozov's discrepancy principle as stopping rule.
//!
//! All three start from `f_0 = 0`. Norms come from the operator's domain and
//! range metrics, so the same code runs on the photoacoustic operator and on
//! plain dense matrices.

use std::io::Write;
use std::time::Instant;

use ndarray::Array1;

use crate::error::{invalid, PatError, Result};
use crate::operator::LinearOperator;

/// Divergence guard for Landweber: abort once the residual exceeds this
/// multiple of the initial residual.
const DIVERGENCE_FACTOR: f64 = 10.0;

/// CGNE compares its recurred residual with `g - W f` this often.
const DRIFT_CHECK_EVERY: usize = 10;

/// Default safety factor of the discrepancy principle.
pub const DEFAULT_TAU: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    MaxIters(usize),
    /// Stop at the first iterate with `||W f_k - g|| <= tau * delta`, or after
    /// `max_iters` iterations.
    Discrepancy { delta: f64, tau: f64, max_iters: usize },
}

impl StopRule {
    pub fn discrepancy(delta: f64, tau: f64, max_iters: usize) -> Result<Self> {
        check_discrepancy_args(delta, tau)?;
        Ok(StopRule::Discrepancy { delta, tau, max_iters })
    }

    pub fn max_iters(&self) -> usize {
        match *self {
            StopRule::MaxIters(n) => n,
            StopRule::Discrepancy { max_iters, .. } => max_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StopRule::Discrepancy { delta, tau, .. } = *self {
            check_discrepancy_args(delta, tau)?;
        }
        Ok(())
    }

    pub(crate) fn reached(&self, k: usize, residual: f64) -> bool {
        match *self {
            StopRule::MaxIters(n) => k >= n,
            StopRule::Discrepancy { delta, tau, max_iters } => residual <= tau * delta || k >= max_iters,
        }
    }
}

fn check_discrepancy_args(delta: f64, tau: f64) -> Result<()> {
    if !(tau > 1.0) {
        return Err(invalid(format!("discrepancy principle needs tau > 1, got {tau}")));
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("noise level must be nonnegative, got {delta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub residual: f64,
    pub rel_residual: f64,
    pub rel_error: Option<f64>,
    pub seconds: f64,
    /// Value of the minimized functional, for the variational methods.
    pub objective: Option<f64>,
}

/// One record per iterate, entry 0 being the initial guess.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
}

impl IterationLog {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn rel_errors(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.rel_error).collect()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// CSV with columns `k,residual,rel_residual,rel_error,seconds`, plus
    /// `objective` when any record carries one.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let with_obj = self.records.iter().any(|r| r.objective.is_some());
        write!(out, "k,residual,rel_residual,rel_error,seconds")?;
        if with_obj {
            write!(out, ",objective")?;
        }
        writeln!(out)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        for r in &self.records {
            write!(
                out,
                "{},{:.10e},{:.10e},{},{:.6}",
                r.k,
                r.residual,
                r.rel_residual,
                opt(r.rel_error),
                r.seconds
            )?;
            if with_obj {
                write!(out, ",{}", opt(r.objective))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Bookkeeping shared by all solvers.
pub(crate) struct Recorder<'a> {
    start: Instant,
    data_norm: f64,
    truth: Option<(&'a Array1<f64>, f64)>,
    pub(crate) log: IterationLog,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(data_norm: f64, truth: Option<&'a Array1<f64>>) -> Self {
        Self {
            start: Instant::now(),
            data_norm,
            truth: truth.map(|t| (t, t.dot(t).sqrt())),
            log: IterationLog::default(),
        }
    }

    pub(crate) fn push(&mut self, f: &Array1<f64>, residual: f64, objective: Option<f64>) {
        let rel_error = self.truth.map(|(t, tn)| {
            let d: f64 = f.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            if tn > 0.0 {
                d.sqrt() / tn
            } else {
                d.sqrt()
            }
        });
        let rel_residual = if self.data_norm > 0.0 { residual / self.data_norm } else { residual };
        self.log.records.push(IterationRecord {
            k: self.log.records.len(),
            residual,
            rel_residual,
            rel_error,
            seconds: self.start.elapsed().as_secs_f64(),
            objective,
        });
    }
}

fn check_data<O: LinearOperator>(op: &O, g: &Array1<f64>, truth: Option<&Array1<f64>>) -> Result<()> {
    op.range().check(g)?;
    if let Some(t) = truth {
        op.domain().check(t)?;
    }
    Ok(())
}

/// `f_{k+1} = f_k - gamma W*(W f_k - g)` with a fixed step `0 < gamma < 2/||W*W||`.
pub fn landweber<O: LinearOperator>(
    op: &O,
    g: &Array1<f64>,
    gamma: f64,
    stop: &StopRule,
    truth: Option<&Array1<f64>>,
) -> Result<(Array1<f64>, IterationLog)> {
    check_data(op, g, truth)?;
    stop.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("Landweber step size must be positive, got {gamma}")));
    }
    let range = op.range();
    let mut f = Array1::zeros(op.domain().dim());
    let mut res = -g;
    let initial = range.norm(&res);
    let mut rec = Recorder::new(initial, truth);
    rec.push(&f, initial, None);

    let mut k = 0;
    while !stop.reached(k, rec.log.records[k].residual) {
        let s = op.adjoint(&res)?;
        f.scaled_add(-gamma, &s);
        res = op.apply(&f)? - g;
        let rn = range.norm(&res);
        if rn > DIVERGENCE_FACTOR * initial {
            return Err(PatError::Divergence { residual: rn, initial });
        }
        rec.push(&f, rn, None);
        k += 1;
    }
    Ok((f, rec.log))
}

/// Steepest descent with exact line search.
///
/// The step `<W s_k, W f_k - g>_Y / ||W s_k||_Y^2` equals
/// `||s_k||_X^2 / ||W s_k||_Y^2` when the adjoint is exact, and keeps the
/// residual nonincreasing when it is only accurate to discretization error.
/// Iteration ends early once `s_k` stops being a descent direction.
pub fn steepest_descent<O: LinearOperator>(
    op: &O,
    g: &Array1<f64>,
    stop: &StopRule,
    truth: Option<&Array1<f64>>,
) -> Result<(Array1<f64>, IterationLog)> {
    check_data(op, g, truth)?;
    stop.validate()?;
    let (domain, range) = (op.domain(), op.range());
    let mut f = Array1::zeros(domain.dim());
    let mut res = -g;
    let initial = range.norm(&res);
    let mut rec = Recorder::new(initial, truth);
    rec.push(&f, initial, None);

    let mut k = 0;
    while !stop.reached(k, rec.log.records[k].residual) {
        let s = op.adjoint(&res)?;
        let s_norm2 = domain.norm_sq(&s);
        if s_norm2 == 0.0 {
            break;
        }
        let ws = op.apply(&s)?;
        let ws_norm2 = range.norm_sq(&ws);
        if ws_norm2 == 0.0 {
            return Err(PatError::Breakdown { iteration: k, reason: "W s_k vanished for a nonzero gradient".into() });
        }
        let gamma = range.dot(&ws, &res) / ws_norm2;
        if !(gamma > 0.0) {
            log::info!("steepest descent stagnated at iteration {k}");
            break;
        }
        f.scaled_add(-gamma, &s);
        res.scaled_add(-gamma, &ws);
        rec.push(&f, range.norm(&res), None);
        k += 1;
    }
    Ok((f, rec.log))
}

/// Conjugate gradients on the normal equations (CGNE).
///
/// The step along `d_k` is `<W d_k, r_k>_Y / ||W d_k||_Y^2`, which reduces to
/// `||W* r_k||_X^2 / ||W d_k||_Y^2` for an exact adjoint and otherwise still
/// minimizes the residual along `d_k`.
pub fn cgne<O: LinearOperator>(
    op: &O,
    g: &Array1<f64>,
    stop: &StopRule,
    truth: Option<&Array1<f64>>,
) -> Result<(Array1<f64>, IterationLog)> {
    check_data(op, g, truth)?;
    stop.validate()?;
    let (domain, range) = (op.domain(), op.range());
    let mut f = Array1::zeros(domain.dim());
    let mut r = g.clone();
    let mut rec = Recorder::new(range.norm(g), truth);
    rec.push(&f, range.norm(&r), None);

    let mut s = op.adjoint(&r)?;
    let mut s_norm2 = domain.norm_sq(&s);
    let mut d = s.clone();

    let mut k = 0;
    while !stop.reached(k, rec.log.records[k].residual) {
        if s_norm2 == 0.0 {
            break;
        }
        let wd = op.apply(&d)?;
        let wd_norm2 = range.norm_sq(&wd);
        if wd_norm2 == 0.0 {
            return Err(PatError::Breakdown {
                iteration: k,
                reason: "W d_k vanished while W* r_k is nonzero".into(),
            });
        }
        let alpha = range.dot(&wd, &r) / wd_norm2;
        if !(alpha > 0.0) {
            log::info!("CGNE stagnated at iteration {k}");
            break;
        }
        f.scaled_add(alpha, &d);
        r.scaled_add(-alpha, &wd);
        k += 1;

        if k % DRIFT_CHECK_EVERY == 0 {
            let fresh = g - &op.apply(&f)?;
            let drift = range.norm(&(&fresh - &r));
            let scale = range.norm(g).max(f64::MIN_POSITIVE);
            if drift > 1e-6 * scale {
                log::warn!("CGNE residual drift {:.3e} (relative {:.3e}) at iteration {k}", drift, drift / scale);
            }
        }
        rec.push(&f, range.norm(&r), None);

        s = op.adjoint(&r)?;
        let next = domain.norm_sq(&s);
        let beta = next / s_norm2;
        s_norm2 = next;
        d *= beta;
        d += &s;
    }
    Ok((f, rec.log))
}

/// Smallest iteration index whose residual is at most `tau * delta`.
pub fn discrepancy_stop(log: &IterationLog, delta: f64, tau: f64) -> Result<usize> {
    check_discrepancy_args(delta, tau)?;
    let threshold = tau * delta;
    log.records
        .iter()
        .position(|r| r.residual <= threshold)
        .ok_or(PatError::NotReached { threshold, iterations: log.iterations() })
}
