//! Scalar and tensor fields on coordinate space, and the central
//! finite-difference engine that differentiates them.
//!
//! Fields are immutable, cheaply cloneable handles around `Send + Sync`
//! closures. Evaluation is fallible so that composite fields (an induced
//! Hamiltonian built on a Newton solve, say) can report why they failed
//! instead of returning NaN.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::Matrix;

type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;
type VecFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type MatFn = Arc<dyn Fn(&[f64]) -> Result<Matrix> + Send + Sync>;

/// Step sizes for central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    /// Step for first derivatives.
    pub h: f64,
    /// Wider step for second derivatives and for differencing quantities
    /// that are themselves finite differences.
    pub h_nested: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            h: 1e-5,
            h_nested: 1e-4,
        }
    }
}

impl DiffConfig {
    pub fn with_step(h: f64) -> Result<Self> {
        let cfg = DiffConfig {
            h,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h > 0.0 && self.h.is_finite() && self.h_nested > 0.0 && self.h_nested.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "finite-difference steps must be positive (h = {}, h_nested = {})",
                self.h,
                self.h_nested
            )))
        }
    }

    /// Same configuration with the first-derivative step widened to the
    /// nested step.
    pub fn nested(&self) -> Self {
        DiffConfig {
            h: self.h_nested,
            h_nested: self.h_nested,
        }
    }
}

/// Real-valued function of `dim` real variables.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: ScalarFn,
    grad: Option<VecFn>,
    hessian: Option<MatFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::fallible(dim, move |x| Ok(f(x)))
    }

    pub fn fallible(dim: usize, f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        ScalarField {
            dim,
            eval: Arc::new(f),
            grad: None,
            hessian: None,
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        ScalarField::new(dim, move |_| value)
            .with_gradient(move |_| vec![0.0; dim])
            .with_hessian(move |_| Matrix::zeros(dim, dim))
    }

    /// The `k`-th coordinate function.
    pub fn coordinate(dim: usize, k: usize) -> Self {
        assert!(k < dim, "coordinate index out of range");
        ScalarField::new(dim, move |x| x[k])
            .with_gradient(move |_| {
                let mut g = vec![0.0; dim];
                g[k] = 1.0;
                g
            })
            .with_hessian(move |_| Matrix::zeros(dim, dim))
    }

    pub fn with_gradient(self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.with_fallible_gradient(move |x| Ok(g(x)))
    }

    pub fn with_fallible_gradient(
        mut self,
        g: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(self, h: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static) -> Self {
        self.with_fallible_hessian(move |x| Ok(h(x)))
    }

    pub fn with_fallible_hessian(
        mut self,
        h: impl Fn(&[f64]) -> Result<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    /// Drops any analytic derivatives so that everything goes through
    /// finite differences.
    pub fn without_derivatives(mut self) -> Self {
        self.grad = None;
        self.hessian = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        ensure_len("scalar field argument", x, self.dim)?;
        let v = (self.eval)(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteField { index: 0 })
        }
    }

    pub(crate) fn analytic_gradient(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub(crate) fn analytic_hessian(&self, x: &[f64]) -> Option<Result<Matrix>> {
        self.hessian.as_ref().map(|h| h(x))
    }
}

/// Array-valued field of `dim` real variables. The output is stored
/// flattened in row-major order; `shape` records its logical shape.
#[derive(Clone)]
pub struct TensorField {
    dim: usize,
    shape: Vec<usize>,
    eval: VecFn,
    jacobian: Option<MatFn>,
}

/// A field with a one-dimensional output.
pub type VectorField = TensorField;

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField")
            .field("dim", &self.dim)
            .field("shape", &self.shape)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl TensorField {
    pub fn new(
        dim: usize,
        shape: &[usize],
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::fallible(dim, shape, move |x| Ok(f(x)))
    }

    pub fn fallible(
        dim: usize,
        shape: &[usize],
        f: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        TensorField {
            dim,
            shape: shape.to_vec(),
            eval: Arc::new(f),
            jacobian: None,
        }
    }

    pub fn vector(
        dim: usize,
        len: usize,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, &[len], f)
    }

    /// Constant field with an exact zero Jacobian.
    pub fn constant(dim: usize, shape: &[usize], data: Vec<f64>) -> Self {
        let len: usize = shape.iter().product();
        assert_eq!(data.len(), len, "constant field data length");
        let data = Arc::new(data);
        TensorField::new(dim, shape, move |_| data.as_ref().clone())
            .with_jacobian(move |_| Matrix::zeros(len, dim))
    }

    /// Analytic Jacobian: a `len × dim` matrix, rows over the flattened output.
    pub fn with_jacobian(self, j: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static) -> Self {
        self.with_fallible_jacobian(move |x| Ok(j(x)))
    }

    pub fn with_fallible_jacobian(
        mut self,
        j: impl Fn(&[f64]) -> Result<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn without_derivatives(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Length of the flattened output.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_len("tensor field argument", x, self.dim)?;
        let v = (self.eval)(x)?;
        ensure_len("tensor field output", &v, self.len())?;
        if let Some(index) = v.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteField { index });
        }
        Ok(v)
    }

    pub(crate) fn analytic_jacobian(&self, x: &[f64]) -> Option<Result<Matrix>> {
        self.jacobian.as_ref().map(|j| j(x))
    }
}

fn nonfinite_at(index: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFiniteField { .. } => Error::NonFiniteField { index },
        other => other,
    }
}

fn shifted(x: &[f64], i: usize, delta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += delta;
    y
}

fn shifted2(x: &[f64], i: usize, di: f64, j: usize, dj: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += di;
    y[j] += dj;
    y
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|c| !c.is_finite()) {
        Some(index) => Err(Error::NonFiniteField { index }),
        None => Ok(()),
    }
}

/// Gradient of `f` at `x`: the analytic gradient when the field carries
/// one, otherwise `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn fd_gradient(f: &ScalarField, x: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>> {
    ensure_len("gradient point", x, f.dim())?;
    if let Some(g) = f.analytic_gradient(x) {
        let g = g?;
        ensure_len("analytic gradient", &g, f.dim())?;
        check_finite(&g)?;
        return Ok(g);
    }
    central_gradient(f, x, cfg.h)
}

/// Central-difference gradient that ignores any analytic gradient.
pub fn central_gradient(f: &ScalarField, x: &[f64], h: f64) -> Result<Vec<f64>> {
    ensure_len("gradient point", x, f.dim())?;
    (0..x.len())
        .map(|i| {
            let fp = f.eval(&shifted(x, i, h)).map_err(nonfinite_at(i))?;
            let fm = f.eval(&shifted(x, i, -h)).map_err(nonfinite_at(i))?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Jacobian of `field` at `x` as a `len × dim` matrix.
pub fn fd_jacobian(field: &TensorField, x: &[f64], cfg: &DiffConfig) -> Result<Matrix> {
    ensure_len("jacobian point", x, field.dim())?;
    if let Some(j) = field.analytic_jacobian(x) {
        let j = j?;
        if j.rows() != field.len() || j.cols() != field.dim() {
            return Err(Error::shape(
                "analytic jacobian",
                field.len() * field.dim(),
                j.rows() * j.cols(),
            ));
        }
        check_finite(j.as_slice())?;
        return Ok(j);
    }
    central_jacobian(|y| field.eval(y), x, field.len(), cfg.h)
}

/// Central-difference Jacobian of an arbitrary vector map.
pub fn central_jacobian(
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    len: usize,
    h: f64,
) -> Result<Matrix> {
    let d = x.len();
    let mut jac = Matrix::zeros(len, d);
    for i in 0..d {
        let fp = f(&shifted(x, i, h)).map_err(nonfinite_at(i))?;
        let fm = f(&shifted(x, i, -h)).map_err(nonfinite_at(i))?;
        ensure_len("jacobian column", &fp, len)?;
        ensure_len("jacobian column", &fm, len)?;
        for r in 0..len {
            jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Symmetrized Hessian of `f` at `x`.
///
/// Uses the analytic Hessian if present, else the central Jacobian of the
/// analytic gradient (step `h`), else second-order central stencils on the
/// function values with step `h_nested`.
pub fn fd_hessian(f: &ScalarField, x: &[f64], cfg: &DiffConfig) -> Result<Matrix> {
    let d = f.dim();
    ensure_len("hessian point", x, d)?;
    if let Some(h) = f.analytic_hessian(x) {
        let h = h?;
        if h.rows() != d || h.cols() != d {
            return Err(Error::shape("analytic hessian", d * d, h.rows() * h.cols()));
        }
        check_finite(h.as_slice())?;
        return Ok(h.symmetrized());
    }
    if f.has_analytic_gradient() {
        let jac = central_jacobian(|y| fd_gradient(f, y, cfg), x, d, cfg.h)?;
        return Ok(jac.symmetrized());
    }
    let h = cfg.h_nested;
    let f0 = f.eval(x)?;
    let mut hess = Matrix::zeros(d, d);
    for i in 0..d {
        let fp = f.eval(&shifted(x, i, h)).map_err(nonfinite_at(i))?;
        let fm = f.eval(&shifted(x, i, -h)).map_err(nonfinite_at(i))?;
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let at = |si: f64, sj: f64| {
                f.eval(&shifted2(x, i, si * h, j, sj * h))
                    .map_err(nonfinite_at(i))
            };
            let v =
                (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}
