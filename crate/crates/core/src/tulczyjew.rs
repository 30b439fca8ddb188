//! The canonical involution and the Tulczyjew maps, written as explicit
//! coordinate formulas, together with residuals for the two Lagrangian
//! submanifolds they relate.

use alloc::vec::Vec;

use crate::algebroid::{contract_first, contract_pair, AlgebroidChart};
use crate::error::{ensure_len, Result};
use crate::field::fd_gradient;
use crate::hamiltonian::{hamilton_section, HamiltonianSystem};
use crate::lagrangian::{LagrangianSystem, PrimalPoint};
use crate::linalg::{distance, Matrix};
use crate::poisson::DualPoint;

/// Point `(x, y; z, v)` of the prolongation of the algebroid over itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlPointE {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
}

/// Point `(x, p; z, v)` of the prolongation of the algebroid over its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlPointEstar {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
}

/// Point of a dual prolongation: base `(x, base)` and covector
/// coefficients `(first, second)` against the `(T, V)`-type frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorPoint {
    pub x: Vec<f64>,
    pub base: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

fn check_e(chart: &AlgebroidChart, pt: &ProlPointE) -> Result<()> {
    let n = chart.rank();
    ensure_len("base coordinates", &pt.x, chart.base_dim())?;
    ensure_len("y", &pt.y, n)?;
    ensure_len("z", &pt.z, n)?;
    ensure_len("v", &pt.v, n)
}

fn check_estar(chart: &AlgebroidChart, pt: &ProlPointEstar) -> Result<()> {
    let n = chart.rank();
    ensure_len("base coordinates", &pt.x, chart.base_dim())?;
    ensure_len("p", &pt.p, n)?;
    ensure_len("z", &pt.z, n)?;
    ensure_len("v", &pt.v, n)
}

/// Canonical involution `(x, y; z, v) ↦ (x, z; y, v^a + C[a][b][g] z^b y^g)`.
pub fn sigma(chart: &AlgebroidChart, pt: &ProlPointE) -> Result<ProlPointE> {
    check_e(chart, pt)?;
    let c = chart.structure(&pt.x)?;
    let twist = contract_pair(&c, &pt.z, &pt.y);
    Ok(ProlPointE {
        x: pt.x.clone(),
        y: pt.z.clone(),
        z: pt.y.clone(),
        v: pt.v.iter().zip(&twist).map(|(a, b)| a + b).collect(),
    })
}

/// `A_E(x, p; z, v) = (x, z; v_a + C[g][a][b] p_g z^b, p_a)`.
pub fn a_map(chart: &AlgebroidChart, pt: &ProlPointEstar) -> Result<CovectorPoint> {
    check_estar(chart, pt)?;
    let cp = contract_first(&chart.structure(&pt.x)?, &pt.p);
    let cz = cp.mul_vec(&pt.z);
    Ok(CovectorPoint {
        x: pt.x.clone(),
        base: pt.z.clone(),
        first: pt.v.iter().zip(&cz).map(|(a, b)| a + b).collect(),
        second: pt.p.clone(),
    })
}

/// Inverse of [`a_map`].
pub fn a_map_inverse(chart: &AlgebroidChart, pt: &CovectorPoint) -> Result<ProlPointEstar> {
    let n = chart.rank();
    ensure_len("base coordinates", &pt.x, chart.base_dim())?;
    for v in [&pt.base, &pt.first, &pt.second] {
        ensure_len("covector coefficients", v, n)?;
    }
    let p = pt.second.clone();
    let cz = contract_first(&chart.structure(&pt.x)?, &p).mul_vec(&pt.base);
    Ok(ProlPointEstar {
        x: pt.x.clone(),
        z: pt.base.clone(),
        v: pt.first.iter().zip(&cz).map(|(a, b)| a - b).collect(),
        p,
    })
}

/// `♭(x, p; z, v) = (x, p; -v_a - C[g][a][b] p_g z^b, z^a)`, the map
/// induced by the canonical symplectic section.
pub fn flat_map(chart: &AlgebroidChart, pt: &ProlPointEstar) -> Result<CovectorPoint> {
    check_estar(chart, pt)?;
    let cz = contract_first(&chart.structure(&pt.x)?, &pt.p).mul_vec(&pt.z);
    Ok(CovectorPoint {
        x: pt.x.clone(),
        base: pt.p.clone(),
        first: pt.v.iter().zip(&cz).map(|(a, b)| -a - b).collect(),
        second: pt.z.clone(),
    })
}

/// Inverse of [`flat_map`].
pub fn flat_inverse(chart: &AlgebroidChart, pt: &CovectorPoint) -> Result<ProlPointEstar> {
    let n = chart.rank();
    ensure_len("base coordinates", &pt.x, chart.base_dim())?;
    for v in [&pt.base, &pt.first, &pt.second] {
        ensure_len("covector coefficients", v, n)?;
    }
    let z = pt.second.clone();
    let cz = contract_first(&chart.structure(&pt.x)?, &pt.base).mul_vec(&z);
    Ok(ProlPointEstar {
        x: pt.x.clone(),
        p: pt.base.clone(),
        v: pt.first.iter().zip(&cz).map(|(a, b)| -a - b).collect(),
        z,
    })
}

/// Residual norms of a point against the equations of `S_L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlResidual {
    /// `‖p - ∂L/∂y(x, z)‖`
    pub momentum: f64,
    /// The fiber equation `z = y` holds by construction since `L` is
    /// evaluated at `y := z`; always zero.
    pub fiber: f64,
    /// `‖v - (rho ∂L/∂x - C(·, z) ∂L/∂y)‖` at `(x, z)`.
    pub force: f64,
}

impl SlResidual {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.fiber).max(self.force)
    }
}

/// Residual norms of a point against the graph of the Hamilton section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShResidual {
    /// `‖z - ∂H/∂p‖`
    pub velocity: f64,
    /// `‖v + C(·, ∂H/∂p) p + rho ∂H/∂x‖`
    pub force: f64,
}

impl ShResidual {
    pub fn max(&self) -> f64 {
        self.velocity.max(self.force)
    }
}

fn sl_target(sys: &LagrangianSystem, x: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = sys.base_dim();
    let at = PrimalPoint::new(x.to_vec(), z.to_vec());
    let g = fd_gradient(&sys.lagrangian, &at.coords(), &sys.diff)?;
    let (dx, dy) = (&g[..m], g[m..].to_vec());
    let rho = sys.chart.anchor(x)?;
    let cth = contract_first(&sys.chart.structure(x)?, &dy);
    let base = rho.tr_mul_vec(dx);
    let rot = cth.mul_vec(z);
    Ok((dy, base.iter().zip(&rot).map(|(a, b)| a - b).collect()))
}

/// The point of `S_L` over `(x, y)`: `A_E⁻¹` applied to the differential
/// of `L`.
pub fn sl_point(sys: &LagrangianSystem, pt: &PrimalPoint) -> Result<ProlPointEstar> {
    let m = sys.base_dim();
    let g = fd_gradient(&sys.lagrangian, &pt.coords(), &sys.diff)?;
    let rho = sys.chart.anchor(&pt.x)?;
    let differential = CovectorPoint {
        x: pt.x.clone(),
        base: pt.y.clone(),
        first: rho.tr_mul_vec(&g[..m]),
        second: g[m..].to_vec(),
    };
    a_map_inverse(&sys.chart, &differential)
}

pub fn sl_residual(sys: &LagrangianSystem, pt: &ProlPointEstar) -> Result<SlResidual> {
    check_estar(&sys.chart, pt)?;
    let (p, v) = sl_target(sys, &pt.x, &pt.z)?;
    Ok(SlResidual {
        momentum: distance(&pt.p, &p),
        fiber: 0.0,
        force: distance(&pt.v, &v),
    })
}

/// The point of `S_H` over `(x, p)`: the Hamilton section's frame
/// coefficients.
pub fn sh_point(sys: &HamiltonianSystem, pt: &DualPoint) -> Result<ProlPointEstar> {
    let (z, v) = hamilton_section(sys, pt)?;
    Ok(ProlPointEstar {
        x: pt.x.clone(),
        p: pt.p.clone(),
        z,
        v,
    })
}

pub fn sh_residual(sys: &HamiltonianSystem, pt: &ProlPointEstar) -> Result<ShResidual> {
    check_estar(&sys.chart, pt)?;
    let (z, v) = hamilton_section(sys, &DualPoint::new(pt.x.clone(), pt.p.clone()))?;
    Ok(ShResidual {
        velocity: distance(&pt.z, &z),
        force: distance(&pt.v, &v),
    })
}

/// `♭` as a matrix on the `(z, v)` coefficients at fixed `(x, p)`, for
/// invertibility checks.
pub fn flat_matrix(chart: &AlgebroidChart, pt: &DualPoint) -> Result<Matrix> {
    let n = chart.rank();
    let cp = contract_first(&chart.structure(&pt.x)?, &pt.p);
    Ok(Matrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => -cp[(r, c)],
        (true, false) => -((r == c - n) as u8 as f64),
        (false, true) => (r - n == c) as u8 as f64,
        (false, false) => 0.0,
    }))
}
