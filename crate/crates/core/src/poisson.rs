//! The linear Poisson structure on the dual bundle.
//!
//! Coordinates on the dual are `(x^i, p_alpha)`; functions on it are
//! `ScalarField`s of dimension `m + n` taking `x` followed by `p`.

use alloc::vec::Vec;

use crate::algebroid::{contract_first, AlgebroidChart};
use crate::error::{ensure_len, Error, Result};
use crate::field::{fd_gradient, DiffConfig, ScalarField};
use crate::linalg::{concat, Matrix};

/// A point `(x, p)` of the dual bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl DualPoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        DualPoint { x, p }
    }

    /// `x` followed by `p`.
    pub fn coords(&self) -> Vec<f64> {
        concat(&self.x, &self.p)
    }

    pub fn from_coords(coords: &[f64], m: usize) -> Self {
        DualPoint {
            x: coords[..m].to_vec(),
            p: coords[m..].to_vec(),
        }
    }

    pub(crate) fn check(&self, chart: &AlgebroidChart) -> Result<()> {
        ensure_len("dual point base coordinates", &self.x, chart.base_dim())?;
        ensure_len("dual point fiber coordinates", &self.p, chart.rank())?;
        if let Some(index) = self.coords().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField { index });
        }
        Ok(())
    }
}

/// `(m + n) × (m + n)` antisymmetric matrix of the Poisson bivector,
/// `x`-block first. Entry `[a][b]` is the bracket of coordinate `a` with
/// coordinate `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBivector {
    pub matrix: Matrix,
}

impl PoissonBivector {
    /// Interior product `i_{dF} Λ`: the vector whose `b` component is
    /// `Σ_a ∂_a F · Λ[a][b]`. For a Hamiltonian `H` this is the coordinate
    /// velocity of its flow.
    pub fn contract(&self, grad: &[f64]) -> Vec<f64> {
        self.matrix.tr_mul_vec(grad)
    }

    /// `∇F · Λ · ∇G`
    pub fn pair(&self, grad_f: &[f64], grad_g: &[f64]) -> f64 {
        crate::linalg::dot(&self.contract(grad_f), grad_g)
    }
}

/// The bivector at `pt`: `{x^i, x^j} = 0`, `{y_alpha, x^j} = rho[j][alpha]`,
/// `{y_alpha, y_beta} = C[gamma][alpha][beta] y_gamma`.
pub fn poisson_bivector(chart: &AlgebroidChart, pt: &DualPoint) -> Result<PoissonBivector> {
    pt.check(chart)?;
    let (m, n) = (chart.base_dim(), chart.rank());
    let rho = chart.anchor(&pt.x)?;
    let cp = contract_first(&chart.structure(&pt.x)?, &pt.p);
    let mut lam = Matrix::zeros(m + n, m + n);
    for a in 0..n {
        for j in 0..m {
            lam[(m + a, j)] = rho[(j, a)];
            lam[(j, m + a)] = -rho[(j, a)];
        }
        for b in 0..n {
            lam[(m + a, m + b)] = cp[(a, b)];
        }
    }
    Ok(PoissonBivector { matrix: lam })
}

fn check_dual_field(chart: &AlgebroidChart, f: &ScalarField) -> Result<()> {
    let d = chart.base_dim() + chart.rank();
    if f.dim() != d {
        return Err(Error::shape("function on the dual bundle", d, f.dim()));
    }
    Ok(())
}

pub fn poisson_bracket(
    chart: &AlgebroidChart,
    f: &ScalarField,
    g: &ScalarField,
    pt: &DualPoint,
    cfg: &DiffConfig,
) -> Result<f64> {
    check_dual_field(chart, f)?;
    check_dual_field(chart, g)?;
    let lam = poisson_bivector(chart, pt)?;
    let z = pt.coords();
    let gf = fd_gradient(f, &z, cfg)?;
    let gg = fd_gradient(g, &z, cfg)?;
    Ok(lam.pair(&gf, &gg))
}

/// `{F, G}` as a field on the dual bundle, differentiated with `cfg`.
pub fn bracket_field(
    chart: &AlgebroidChart,
    f: &ScalarField,
    g: &ScalarField,
    cfg: &DiffConfig,
) -> ScalarField {
    let (chart, f, g, cfg) = (chart.clone(), f.clone(), g.clone(), *cfg);
    let m = chart.base_dim();
    let d = m + chart.rank();
    ScalarField::fallible(d, move |z| {
        poisson_bracket(&chart, &f, &g, &DualPoint::from_coords(z, m), &cfg)
    })
}

/// `|{F,{G,H}} + {G,{H,F}} + {H,{F,G}}|` at `pt`. Inner brackets use the
/// step `cfg.h`, the outer ones the wider `cfg.h_nested`.
pub fn jacobi_defect(
    chart: &AlgebroidChart,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    pt: &DualPoint,
    cfg: &DiffConfig,
) -> Result<f64> {
    for s in [f, g, h] {
        check_dual_field(chart, s)?;
    }
    let outer = cfg.nested();
    let gh = bracket_field(chart, g, h, cfg);
    let hf = bracket_field(chart, h, f, cfg);
    let fg = bracket_field(chart, f, g, cfg);
    let total = poisson_bracket(chart, f, &gh, pt, &outer)?
        + poisson_bracket(chart, g, &hf, pt, &outer)?
        + poisson_bracket(chart, h, &fg, pt, &outer)?;
    Ok(total.abs())
}
