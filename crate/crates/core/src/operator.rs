//! Linear maps between weighted Euclidean spaces.
//!
//! Every solver in this crate works with an operator `A: X -> Y` where both
//! spaces carry a diagonal inner product `<a, b> = sum w_i a_i b_i`. Entries
//! with zero weight are outside the space (e.g. pixels outside the support
//! ball); `adjoint` must return vectors that vanish there.

use ndarray::{Array1, Array2, Zip};

use crate::error::{PatError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean(usize),
    Diagonal(Array1<f64>),
}

impl Metric {
    pub fn dim(&self) -> usize {
        match self {
            Metric::Euclidean(n) => *n,
            Metric::Diagonal(w) => w.len(),
        }
    }

    pub fn dot(&self, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        match self {
            Metric::Euclidean(_) => a.dot(b),
            Metric::Diagonal(w) => Zip::from(w).and(a).and(b).fold(0.0, |acc, &w, &a, &b| acc + w * a * b),
        }
    }

    pub fn norm_sq(&self, a: &Array1<f64>) -> f64 {
        self.dot(a, a)
    }

    pub fn norm(&self, a: &Array1<f64>) -> f64 {
        self.norm_sq(a).sqrt()
    }

    /// Zeroes the entries that do not belong to the space.
    pub fn project(&self, a: &mut Array1<f64>) {
        if let Metric::Diagonal(w) = self {
            Zip::from(a).and(w).for_each(|a, &w| {
                if w == 0.0 {
                    *a = 0.0
                }
            });
        }
    }

    /// Turns a plain transpose `A^T W_y y` into the weighted adjoint by
    /// applying the pseudo-inverse of the domain weights.
    pub fn unweight(&self, a: &mut Array1<f64>) {
        if let Metric::Diagonal(w) = self {
            Zip::from(a).and(w).for_each(|a, &w| *a = if w == 0.0 { 0.0 } else { *a / w });
        }
    }

    pub fn weight(&self, a: &mut Array1<f64>) {
        if let Metric::Diagonal(w) = self {
            *a *= w;
        }
    }

    pub fn check(&self, a: &Array1<f64>) -> Result<()> {
        if a.len() != self.dim() {
            return Err(PatError::DimensionMismatch { expected: self.dim(), got: a.len() });
        }
        Ok(())
    }
}

pub trait LinearOperator {
    fn domain(&self) -> &Metric;
    fn range(&self) -> &Metric;
    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>>;
    /// Adjoint with respect to the domain and range inner products.
    fn adjoint(&self, y: &Array1<f64>) -> Result<Array1<f64>>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn domain(&self) -> &Metric {
        (**self).domain()
    }
    fn range(&self) -> &Metric {
        (**self).range()
    }
    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        (**self).apply(x)
    }
    fn adjoint(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        (**self).adjoint(y)
    }
}

/// An explicit matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: Array2<f64>,
    domain: Metric,
    range: Metric,
}

impl DenseOperator {
    pub fn new(matrix: Array2<f64>) -> Self {
        let (m, n) = matrix.dim();
        Self { matrix, domain: Metric::Euclidean(n), range: Metric::Euclidean(m) }
    }

    pub fn with_metrics(matrix: Array2<f64>, domain: Metric, range: Metric) -> Result<Self> {
        let (m, n) = matrix.dim();
        if domain.dim() != n {
            return Err(PatError::DimensionMismatch { expected: n, got: domain.dim() });
        }
        if range.dim() != m {
            return Err(PatError::DimensionMismatch { expected: m, got: range.dim() });
        }
        Ok(Self { matrix, domain, range })
    }

    /// Assembles the matrix of any operator column by column from unit impulses.
    pub fn assemble<O: LinearOperator>(op: &O) -> Result<Self> {
        let n = op.domain().dim();
        let m = op.range().dim();
        let mut matrix = Array2::zeros((m, n));
        let mut e = Array1::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            let col = op.apply(&e)?;
            matrix.column_mut(j).assign(&col);
            e[j] = 0.0;
        }
        Self::with_metrics(matrix, op.domain().clone(), op.range().clone())
    }
}

impl LinearOperator for DenseOperator {
    fn domain(&self) -> &Metric {
        &self.domain
    }
    fn range(&self) -> &Metric {
        &self.range
    }
    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.domain.check(x)?;
        Ok(self.matrix.dot(x))
    }
    fn adjoint(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        self.range.check(y)?;
        let mut wy = y.clone();
        self.range.weight(&mut wy);
        let mut x = self.matrix.t().dot(&wy);
        self.domain.unweight(&mut x);
        Ok(x)
    }
}

/// `factor * A`.
#[derive(Debug, Clone)]
pub struct Scaled<O> {
    pub inner: O,
    pub factor: f64,
}

impl<O: LinearOperator> LinearOperator for Scaled<O> {
    fn domain(&self) -> &Metric {
        self.inner.domain()
    }
    fn range(&self) -> &Metric {
        self.inner.range()
    }
    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        Ok(self.inner.apply(x)? * self.factor)
    }
    fn adjoint(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        Ok(self.inner.adjoint(y)? * self.factor)
    }
}

/// The zero map between two spaces.
#[derive(Debug, Clone)]
pub struct ZeroOperator {
    pub domain: Metric,
    pub range: Metric,
}

impl LinearOperator for ZeroOperator {
    fn domain(&self) -> &Metric {
        &self.domain
    }
    fn range(&self) -> &Metric {
        &self.range
    }
    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.domain.check(x)?;
        Ok(Array1::zeros(self.range.dim()))
    }
    fn adjoint(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        self.range.check(y)?;
        Ok(Array1::zeros(self.domain.dim()))
    }
}
