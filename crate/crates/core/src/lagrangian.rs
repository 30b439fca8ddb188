//! Lagrangian mechanics on a Lie algebroid: Poincaré-Cartan data, energy,
//! regularity and the Euler-Lagrange section.
//!
//! A Lagrangian is a `ScalarField` of dimension `m + n` taking `x`
//! followed by the fiber coordinates `y`.

use alloc::vec::Vec;

use crate::algebroid::{contract_first, AlgebroidChart};
use crate::error::{ensure_len, Error, Result};
use crate::field::{fd_gradient, fd_hessian, DiffConfig, ScalarField};
use crate::linalg::{concat, dot, norm, Lu, Matrix};

/// A point `(x, y)` of the algebroid.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PrimalPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        PrimalPoint { x, y }
    }

    pub fn coords(&self) -> Vec<f64> {
        concat(&self.x, &self.y)
    }

    pub fn from_coords(coords: &[f64], m: usize) -> Self {
        PrimalPoint {
            x: coords[..m].to_vec(),
            y: coords[m..].to_vec(),
        }
    }
}

pub const DEFAULT_COND_TOL: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct LagrangianSystem {
    pub chart: AlgebroidChart,
    pub lagrangian: ScalarField,
    pub diff: DiffConfig,
    /// Largest acceptable condition number of the fiber Hessian.
    pub cond_tol: f64,
}

/// Value and derivatives of `L` at one point.
#[derive(Debug, Clone)]
pub(crate) struct LagrangianJet {
    pub value: f64,
    /// `∂L/∂x`
    pub dx: Vec<f64>,
    /// `∂L/∂y`
    pub dy: Vec<f64>,
    /// `∂²L/∂y∂y`
    pub w: Matrix,
    /// `∂²L/∂x^i∂y^b` at `[(i, b)]`
    pub mixed: Matrix,
}

impl LagrangianSystem {
    pub fn new(chart: AlgebroidChart, lagrangian: ScalarField) -> Result<Self> {
        let d = chart.base_dim() + chart.rank();
        if lagrangian.dim() != d {
            return Err(Error::shape("Lagrangian arguments", d, lagrangian.dim()));
        }
        Ok(LagrangianSystem {
            chart,
            lagrangian,
            diff: DiffConfig::default(),
            cond_tol: DEFAULT_COND_TOL,
        })
    }

    pub fn with_diff(mut self, diff: DiffConfig) -> Self {
        self.diff = diff;
        self
    }

    pub fn base_dim(&self) -> usize {
        self.chart.base_dim()
    }

    pub fn rank(&self) -> usize {
        self.chart.rank()
    }

    pub(crate) fn check(&self, pt: &PrimalPoint) -> Result<()> {
        ensure_len("base coordinates", &pt.x, self.base_dim())?;
        ensure_len("fiber coordinates", &pt.y, self.rank())
    }

    pub(crate) fn jet(&self, pt: &PrimalPoint) -> Result<LagrangianJet> {
        self.check(pt)?;
        let (m, n) = (self.base_dim(), self.rank());
        let z = pt.coords();
        let value = self.lagrangian.eval(&z)?;
        let grad = fd_gradient(&self.lagrangian, &z, &self.diff)?;
        let hess = fd_hessian(&self.lagrangian, &z, &self.diff)?;
        Ok(LagrangianJet {
            value,
            dx: grad[..m].to_vec(),
            dy: grad[m..].to_vec(),
            w: Matrix::from_fn(n, n, |a, b| hess[(m + a, m + b)]),
            mixed: Matrix::from_fn(m, n, |i, b| hess[(i, m + b)]),
        })
    }

    /// `∂L/∂y` at `pt`.
    pub fn fiber_derivative(&self, pt: &PrimalPoint) -> Result<Vec<f64>> {
        self.check(pt)?;
        let grad = fd_gradient(&self.lagrangian, &pt.coords(), &self.diff)?;
        Ok(grad[self.base_dim()..].to_vec())
    }

    /// `E_L = y^a ∂L/∂y^a - L`
    pub fn energy(&self, pt: &PrimalPoint) -> Result<f64> {
        self.check(pt)?;
        let z = pt.coords();
        let grad = fd_gradient(&self.lagrangian, &z, &self.diff)?;
        Ok(dot(&pt.y, &grad[self.base_dim()..]) - self.lagrangian.eval(&z)?)
    }

    /// `(ẋ, ẏ)` concatenated, for use with the integrators.
    pub fn vector_field(&self) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
        move |z| {
            let (xdot, ydot) =
                el_vector_field(self, &PrimalPoint::from_coords(z, self.base_dim()))?;
            Ok(concat(&xdot, &ydot))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanData {
    /// `theta_a = ∂L/∂y^a`
    pub theta: Vec<f64>,
    /// `2n × 2n` matrix of `omega_L` in the basis `{T_a, V_a}`.
    pub omega: Matrix,
    pub energy: f64,
    /// Fiber Hessian `W`.
    pub hessian: Matrix,
}

pub fn cartan_data(sys: &LagrangianSystem, pt: &PrimalPoint) -> Result<CartanData> {
    let jet = sys.jet(pt)?;
    let n = sys.rank();
    let rho = sys.chart.anchor(&pt.x)?;
    let cth = contract_first(&sys.chart.structure(&pt.x)?, &jet.dy);
    // R[a][b] = rho[i][a] ∂²L/∂x^i∂y^b
    let r = rho.transpose().matmul(&jet.mixed);
    let mut omega = Matrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            omega[(a, b)] = cth[(a, b)] - (r[(a, b)] - r[(b, a)]);
            omega[(a, n + b)] = jet.w[(a, b)];
            omega[(n + a, b)] = -jet.w[(b, a)];
        }
    }
    Ok(CartanData {
        energy: dot(&pt.y, &jet.dy) - jet.value,
        theta: jet.dy,
        omega,
        hessian: jet.w,
    })
}

fn factor_hessian(w: &Matrix, cond_tol: f64) -> Result<Lu> {
    let lu = w.lu()?;
    let condition = lu.condition();
    if condition > cond_tol {
        return Err(Error::SingularHessian { condition });
    }
    Ok(lu)
}

/// Whether the fiber Hessian at `pt` is invertible with condition number
/// at most `cond_tol`. Evaluation failures count as irregular.
pub fn is_regular(sys: &LagrangianSystem, pt: &PrimalPoint, cond_tol: f64) -> bool {
    sys.jet(pt)
        .and_then(|jet| factor_hessian(&jet.w, cond_tol))
        .is_ok()
}

/// Right-hand side of the momentum equation,
/// `rho[i][a] ∂L/∂x^i - C[g][a][b] y^b ∂L/∂y^g`.
pub(crate) fn momentum_force(
    rho: &Matrix,
    cth: &Matrix,
    jet: &LagrangianJet,
    y: &[f64],
) -> Vec<f64> {
    let base = rho.tr_mul_vec(&jet.dx);
    let n = y.len();
    (0..n)
        .map(|a| base[a] - (0..n).map(|b| cth[(a, b)] * y[b]).sum::<f64>())
        .collect()
}

/// The Euler-Lagrange section as coordinate velocities:
/// `ẋ^i = rho[i][a] y^a` and
/// `ẏ^a = W^{ab} (rho[i][b] ∂L/∂x^i - rho[i][g] y^g ∂²L/∂x^i∂y^b + y^g C[nu][g][b] ∂L/∂y^nu)`.
pub fn el_vector_field(sys: &LagrangianSystem, pt: &PrimalPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    let jet = sys.jet(pt)?;
    let rho = sys.chart.anchor(&pt.x)?;
    let c = sys.chart.structure(&pt.x)?;
    let xdot = rho.mul_vec(&pt.y);
    let force = momentum_force(&rho, &contract_first(&c, &jet.dy), &jet, &pt.y);
    // remove the explicit x-dependence of the momenta along ẋ
    let drift = jet.mixed.tr_mul_vec(&xdot);
    let rhs: Vec<f64> = force.iter().zip(&drift).map(|(f, d)| f - d).collect();
    let lu = factor_hessian(&jet.w, sys.cond_tol)?;
    Ok((xdot, lu.solve(&rhs)))
}

/// Residuals of the two Euler-Lagrange equations at one interior sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElResidual {
    /// `‖dx/dt - rho y‖`
    pub base: f64,
    /// `‖d/dt(∂L/∂y) - (rho ∂L/∂x - C(·, y) ∂L/∂y)‖`
    pub momentum: f64,
}

/// Checks sampled curve data against the Euler-Lagrange equations using
/// central differences in time. Samples must be uniformly spaced; one
/// residual is returned per interior sample.
pub fn el_residual(
    sys: &LagrangianSystem,
    samples: &[(f64, PrimalPoint)],
) -> Result<Vec<ElResidual>> {
    if samples.len() < 3 {
        return Err(Error::shape("curve samples (at least)", 3, samples.len()));
    }
    let dt = samples[1].0 - samples[0].0;
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::PreconditionFailed(
            "sample times must increase".into(),
        ));
    }
    for w in samples.windows(2) {
        if ((w[1].0 - w[0].0) - dt).abs() > 1e-6 * dt {
            return Err(Error::PreconditionFailed(
                "samples are not uniformly spaced".into(),
            ));
        }
    }
    let momenta = samples
        .iter()
        .map(|(_, pt)| sys.fiber_derivative(pt))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(samples.len() - 2);
    for k in 1..samples.len() - 1 {
        let pt = &samples[k].1;
        let jet = sys.jet(pt)?;
        let rho = sys.chart.anchor(&pt.x)?;
        let cth = contract_first(&sys.chart.structure(&pt.x)?, &jet.dy);
        let anchored = rho.mul_vec(&pt.y);
        let xdot: Vec<f64> = (0..pt.x.len())
            .map(|i| (samples[k + 1].1.x[i] - samples[k - 1].1.x[i]) / (2.0 * dt) - anchored[i])
            .collect();
        let force = momentum_force(&rho, &cth, &jet, &pt.y);
        let pdot: Vec<f64> = (0..pt.y.len())
            .map(|a| (momenta[k + 1][a] - momenta[k - 1][a]) / (2.0 * dt) - force[a])
            .collect();
        out.push(ElResidual {
            base: norm(&xdot),
            momentum: norm(&pdot),
        });
    }
    Ok(out)
}

/// Lagrangian of a sum of kinetic and potential terms with constant
/// kinetic matrix: `L = ½ yᵀ K y - V(x)`, with analytic derivatives.
pub fn quadratic_lagrangian(m: usize, kinetic: Matrix, potential: ScalarField) -> ScalarField {
    let n = kinetic.rows();
    assert_eq!(potential.dim(), m, "potential lives on the base");
    let k = kinetic.symmetrized();
    let (k1, k2, k3) = (k.clone(), k.clone(), k);
    let (v1, v2, v3) = (potential.clone(), potential.clone(), potential);
    let cfg = DiffConfig::default();
    ScalarField::fallible(m + n, move |z| {
        let y = &z[m..];
        Ok(0.5 * dot(y, &k1.mul_vec(y)) - v1.eval(&z[..m])?)
    })
    .with_fallible_gradient(move |z| {
        let gv = fd_gradient(&v2, &z[..m], &cfg)?;
        let mut g: Vec<f64> = gv.iter().map(|v| -v).collect();
        g.extend(k2.mul_vec(&z[m..]));
        Ok(g)
    })
    .with_fallible_hessian(move |z| {
        let hv = fd_hessian(&v3, &z[..m], &cfg)?;
        Ok(Matrix::from_fn(m + n, m + n, |r, c| match (r < m, c < m) {
            (true, true) => -hv[(r, c)],
            (false, false) => k3[(r - m, c - m)],
            _ => 0.0,
        }))
    })
}
