//! Lie algebroid charts, their structure equations, and the differential
//! and bracket calculus on functions, one-forms and sections.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_len, Error, Result};
use crate::field::{fd_gradient, fd_jacobian, DiffConfig, ScalarField, TensorField, VectorField};
use crate::linalg::{Matrix, Tensor3};

/// One chart of a rank-`n` Lie algebroid over an `m`-dimensional base.
///
/// `anchor` evaluates to the `m × n` matrix `rho[i][alpha]`, `structure`
/// to the `n × n × n` tensor `C[gamma][alpha][beta]` with
/// `[e_alpha, e_beta] = C[gamma][alpha][beta] e_gamma`.
#[derive(Debug, Clone)]
pub struct AlgebroidChart {
    m: usize,
    n: usize,
    anchor: TensorField,
    structure: TensorField,
    label: String,
}

impl AlgebroidChart {
    pub fn new(
        label: impl Into<String>,
        m: usize,
        n: usize,
        anchor: TensorField,
        structure: TensorField,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidConfig(
                "chart dimensions must be positive (use a one-dimensional dummy base for a Lie algebra)".into(),
            ));
        }
        if anchor.dim() != m || anchor.shape() != [m, n] {
            return Err(Error::shape("anchor field", m * n, anchor.len()));
        }
        if structure.dim() != m || structure.shape() != [n, n, n] {
            return Err(Error::shape("structure field", n * n * n, structure.len()));
        }
        Ok(AlgebroidChart {
            m,
            n,
            anchor,
            structure,
            label: label.into(),
        })
    }

    /// Chart with constant anchor and structure constants.
    pub fn constant(label: impl Into<String>, anchor: Matrix, structure: Tensor3) -> Result<Self> {
        let (m, n) = (anchor.rows(), anchor.cols());
        if structure.dims() != [n, n, n] {
            return Err(Error::shape(
                "structure constants",
                n * n * n,
                structure.as_slice().len(),
            ));
        }
        Self::new(
            label,
            m,
            n,
            TensorField::constant(m, &[m, n], anchor.into_vec()),
            TensorField::constant(m, &[n, n, n], structure.into_vec()),
        )
    }

    /// The tangent bundle of `R^m`: identity anchor, vanishing structure.
    pub fn standard(m: usize) -> Self {
        Self::constant("standard", Matrix::identity(m), Tensor3::zeros(m, m, m))
            .expect("standard chart dimensions are consistent")
    }

    /// A Lie algebra viewed as an algebroid over a point. The point is
    /// modeled as a one-dimensional base with zero anchor.
    pub fn lie_algebra(label: impl Into<String>, structure: Tensor3) -> Result<Self> {
        let n = structure.dims()[0];
        Self::constant(label, Matrix::zeros(1, n), structure)
    }

    pub fn so3() -> Self {
        Self::lie_algebra("so3", Tensor3::levi_civita()).expect("so(3) constants are 3x3x3")
    }

    pub fn base_dim(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn anchor_field(&self) -> &TensorField {
        &self.anchor
    }

    pub fn structure_field(&self) -> &TensorField {
        &self.structure
    }

    pub fn anchor(&self, x: &[f64]) -> Result<Matrix> {
        Ok(Matrix::from_row_major(self.m, self.n, self.anchor.eval(x)?))
    }

    pub fn structure(&self, x: &[f64]) -> Result<Tensor3> {
        Ok(Tensor3::from_vec(
            [self.n, self.n, self.n],
            self.structure.eval(x)?,
        ))
    }

    /// `∂rho[i][alpha]/∂x^j` stored at row `i * n + alpha`, column `j`.
    pub fn anchor_jacobian(&self, x: &[f64], cfg: &DiffConfig) -> Result<Matrix> {
        fd_jacobian(&self.anchor, x, cfg)
    }

    /// `∂C[gamma][alpha][beta]/∂x^j` at row `(gamma * n + alpha) * n + beta`.
    pub fn structure_jacobian(&self, x: &[f64], cfg: &DiffConfig) -> Result<Matrix> {
        fd_jacobian(&self.structure, x, cfg)
    }
}

/// `C[gamma][alpha][beta] q_gamma`, the matrix of the linear Poisson
/// bracket `{y_alpha, y_beta}` at fiber point `q`.
pub(crate) fn contract_first(c: &Tensor3, q: &[f64]) -> Matrix {
    let n = q.len();
    Matrix::from_fn(n, n, |a, b| (0..n).map(|g| c[(g, a, b)] * q[g]).sum())
}

/// `C[gamma][alpha][beta] u^alpha w^beta`
pub(crate) fn contract_pair(c: &Tensor3, u: &[f64], w: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|g| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += c[(g, a, b)] * u[a] * w[b];
                }
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    /// Largest `|C[g][a][b] + C[g][b][a]|`.
    pub antisymmetry: f64,
    /// Largest residual of the anchor/bracket compatibility equation.
    pub anchor_residual: f64,
    /// Largest residual of the Jacobi-type equation.
    pub jacobi_residual: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Anchor compatibility residual at `x`:
/// `rho[j][a] ∂_j rho[i][b] - rho[j][b] ∂_j rho[i][a] - rho[i][g] C[g][a][b]`.
pub fn anchor_residual(chart: &AlgebroidChart, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let (m, n) = (chart.m, chart.n);
    let rho = chart.anchor(x)?;
    let drho = chart.anchor_jacobian(x, cfg)?;
    let c = chart.structure(x)?;
    let mut worst = 0.0f64;
    for i in 0..m {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for j in 0..m {
                    s += rho[(j, a)] * drho[(i * n + b, j)] - rho[(j, b)] * drho[(i * n + a, j)];
                }
                for g in 0..n {
                    s -= rho[(i, g)] * c[(g, a, b)];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// Jacobi residual at `x`: the cyclic sum over `(a, b, g)` of
/// `rho[i][a] ∂_i C[nu][b][g] + C[nu][a][mu] C[mu][b][g]`.
pub fn jacobi_residual(chart: &AlgebroidChart, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let (m, n) = (chart.m, chart.n);
    let rho = chart.anchor(x)?;
    let c = chart.structure(x)?;
    let dc = chart.structure_jacobian(x, cfg)?;
    let term = |nu: usize, a: usize, b: usize, g: usize| -> f64 {
        let mut s = 0.0;
        let row = (nu * n + b) * n + g;
        for i in 0..m {
            s += rho[(i, a)] * dc[(row, i)];
        }
        for mu in 0..n {
            s += c[(nu, a, mu)] * c[(mu, b, g)];
        }
        s
    };
    let mut worst = 0.0f64;
    for nu in 0..n {
        for a in 0..n {
            for b in 0..n {
                for g in 0..n {
                    let r = term(nu, a, b, g) + term(nu, b, g, a) + term(nu, g, a, b);
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Evaluates both structure equations and the antisymmetry of `C` at every
/// sample point and reports the maxima.
pub fn validate_structure(
    chart: &AlgebroidChart,
    points: &[Vec<f64>],
    tol: f64,
    cfg: &DiffConfig,
) -> Result<StructureReport> {
    if points.is_empty() {
        return Err(Error::PreconditionFailed(
            "structure validation needs at least one sample point".into(),
        ));
    }
    let mut report = StructureReport {
        antisymmetry: 0.0,
        anchor_residual: 0.0,
        jacobi_residual: 0.0,
        samples: points.len(),
        tolerance: tol,
        pass: false,
    };
    for x in points {
        ensure_len("sample point", x, chart.m)?;
        report.antisymmetry = report
            .antisymmetry
            .max(chart.structure(x)?.antisymmetry_defect());
        report.anchor_residual = report.anchor_residual.max(anchor_residual(chart, x, cfg)?);
        report.jacobi_residual = report.jacobi_residual.max(jacobi_residual(chart, x, cfg)?);
    }
    report.pass = report.antisymmetry <= tol
        && report.anchor_residual <= tol
        && report.jacobi_residual <= tol;
    Ok(report)
}

/// `count` Halton points in the box `[lo, hi]`, starting after `skip`
/// leading points of the sequence.
pub fn halton_points(lo: &[f64], hi: &[f64], count: usize, skip: usize) -> Vec<Vec<f64>> {
    assert_eq!(lo.len(), hi.len());
    let bases = first_primes(lo.len());
    (0..count)
        .map(|k| {
            let index = (k + skip + 1) as u64;
            bases
                .iter()
                .enumerate()
                .map(|(d, &b)| lo[d] + (hi[d] - lo[d]) * radical_inverse(index, b))
                .collect()
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(k);
    let mut cand = 2u64;
    while primes.len() < k {
        if primes
            .iter()
            .take_while(|&&p| p * p <= cand)
            .all(|&p| !cand.is_multiple_of(p))
        {
            primes.push(cand);
        }
        cand += 1;
    }
    primes
}

/// `(d^E f)_alpha = rho[i][alpha] ∂f/∂x^i`
pub fn d_function(
    chart: &AlgebroidChart,
    f: &ScalarField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<Vec<f64>> {
    if f.dim() != chart.m {
        return Err(Error::shape("function on the base", chart.m, f.dim()));
    }
    let grad = fd_gradient(f, x, cfg)?;
    Ok(chart.anchor(x)?.tr_mul_vec(&grad))
}

/// Coefficients of `d^E theta` for a one-form `theta` with components
/// `theta_gamma(x)`:
/// `(d theta)[b][g] = rho[i][b] ∂_i theta_g - rho[i][g] ∂_i theta_b - theta_a C[a][b][g]`.
pub fn d_oneform(
    chart: &AlgebroidChart,
    theta: &VectorField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<Matrix> {
    let (m, n) = (chart.m, chart.n);
    if theta.dim() != m || theta.len() != n {
        return Err(Error::shape("one-form components", n, theta.len()));
    }
    let th = theta.eval(x)?;
    let dth = fd_jacobian(theta, x, cfg)?;
    let rho = chart.anchor(x)?;
    let c = chart.structure(x)?;
    // rho-derivative of theta: D[b][g] = rho[i][b] ∂_i theta_g
    let d = Matrix::from_fn(n, n, |b, g| (0..m).map(|i| rho[(i, b)] * dth[(g, i)]).sum());
    let mut out = Matrix::zeros(n, n);
    for b in 0..n {
        for g in 0..n {
            if b == g {
                continue;
            }
            let ctr: f64 = (0..n).map(|a| th[a] * c[(a, b, g)]).sum();
            out[(b, g)] = d[(b, g)] - d[(g, b)] - ctr;
        }
    }
    Ok(out)
}

/// `[X, Y]^g = rho[i][a] X^a ∂_i Y^g - rho[i][b] Y^b ∂_i X^g + C[g][a][b] X^a Y^b`
pub fn bracket_sections(
    chart: &AlgebroidChart,
    xs: &VectorField,
    ys: &VectorField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<Vec<f64>> {
    let (m, n) = (chart.m, chart.n);
    for s in [xs, ys] {
        if s.dim() != m || s.len() != n {
            return Err(Error::shape("section components", n, s.len()));
        }
    }
    let xv = xs.eval(x)?;
    let yv = ys.eval(x)?;
    let dx = fd_jacobian(xs, x, cfg)?;
    let dy = fd_jacobian(ys, x, cfg)?;
    let rho = chart.anchor(x)?;
    let c = chart.structure(x)?;
    // anchored directions rho(X), rho(Y) as base vectors
    let rx = rho.mul_vec(&xv);
    let ry = rho.mul_vec(&yv);
    let cross = contract_pair(&c, &xv, &yv);
    Ok((0..n)
        .map(|g| {
            let mut s = cross[g];
            for i in 0..m {
                s += rx[i] * dy[(g, i)] - ry[i] * dx[(g, i)];
            }
            s
        })
        .collect())
}

/// Constant basis section `e_k` on a chart with base dimension `m`.
pub fn basis_section(m: usize, n: usize, k: usize) -> VectorField {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    TensorField::constant(m, &[n], v)
}
