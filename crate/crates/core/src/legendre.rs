//! The Legendre transformation, its Newton inverse, the induced
//! Hamiltonian and the prolonged map between the two prolongations.

use alloc::vec::Vec;

use crate::error::{ensure_len, Error, Result};
use crate::field::{fd_gradient, ScalarField};
use crate::hamiltonian::{canonical_symplectic, hamilton_section, HamiltonianSystem};
use crate::lagrangian::{el_vector_field, LagrangianSystem, PrimalPoint};
use crate::linalg::{concat, distance, norm, Matrix};
use crate::poisson::DualPoint;
use crate::tulczyjew::{ProlPointE, ProlPointEstar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreConfig {
    /// Target for `‖∂L/∂y(x, y) - p‖`.
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl Default for LegendreConfig {
    fn default() -> Self {
        LegendreConfig {
            newton_tol: 1e-12,
            max_iter: 50,
        }
    }
}

impl LegendreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.newton_tol > 0.0 && self.max_iter >= 1 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "Newton tolerance must be positive and max_iter at least 1".into(),
            ))
        }
    }
}

/// `(x, y) ↦ (x, ∂L/∂y)`
pub fn legendre_map(sys: &LagrangianSystem, pt: &PrimalPoint) -> Result<DualPoint> {
    Ok(DualPoint::new(pt.x.clone(), sys.fiber_derivative(pt)?))
}

/// Solves `∂L/∂y(x, y) = p` for `y` by Newton's method with the fiber
/// Hessian as Jacobian. Starts from `y_guess`, or from `p` when none is
/// given.
pub fn legendre_inverse(
    sys: &LagrangianSystem,
    pt: &DualPoint,
    y_guess: Option<&[f64]>,
    cfg: &LegendreConfig,
) -> Result<PrimalPoint> {
    cfg.validate()?;
    ensure_len("base coordinates", &pt.x, sys.base_dim())?;
    ensure_len("momentum", &pt.p, sys.rank())?;
    let mut y = y_guess.unwrap_or(&pt.p).to_vec();
    ensure_len("initial fiber guess", &y, sys.rank())?;
    let mut residual = f64::INFINITY;
    for _ in 0..=cfg.max_iter {
        let cur = PrimalPoint::new(pt.x.clone(), y);
        let jet = sys.jet(&cur)?;
        let f: Vec<f64> = jet.dy.iter().zip(&pt.p).map(|(a, b)| a - b).collect();
        residual = norm(&f);
        if residual <= cfg.newton_tol {
            return Ok(cur);
        }
        let lu = jet.w.lu()?;
        let condition = lu.condition();
        if condition > sys.cond_tol {
            return Err(Error::SingularHessian { condition });
        }
        let step = lu.solve(&f);
        y = cur.y.iter().zip(&step).map(|(a, s)| a - s).collect();
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// `H = E_L ∘ Leg⁻¹` as a Hamiltonian system on the same chart.
///
/// The gradient is supplied through the Legendre duality
/// `∂H/∂p = Leg⁻¹(x, p)`, `∂H/∂x = -∂L/∂x`, so that no finite differences
/// are taken through the Newton solve. Each evaluation is stateless and
/// starts Newton from `p`; failures surface as evaluation errors.
pub fn induced_hamiltonian(sys: &LagrangianSystem, cfg: &LegendreConfig) -> HamiltonianSystem {
    let m = sys.base_dim();
    let d = m + sys.rank();
    let (s1, s2, cfg) = (sys.clone(), sys.clone(), *cfg);
    let h = ScalarField::fallible(d, move |z| {
        let pt = DualPoint::from_coords(z, m);
        let inv = legendre_inverse(&s1, &pt, None, &cfg)?;
        s1.energy(&inv)
    })
    .with_fallible_gradient(move |z| {
        let pt = DualPoint::from_coords(z, m);
        let inv = legendre_inverse(&s2, &pt, None, &cfg)?;
        let g = fd_gradient(&s2.lagrangian, &inv.coords(), &s2.diff)?;
        let mut out: Vec<f64> = g[..m].iter().map(|v| -v).collect();
        out.extend_from_slice(&inv.y);
        Ok(out)
    });
    HamiltonianSystem {
        chart: sys.chart.clone(),
        hamiltonian: h,
        diff: sys.diff,
    }
}

/// Prolonged Legendre map
/// `(x, y; z, v) ↦ (x, ∂L/∂y; z, rho[i][b] z^b ∂²L/∂x^i∂y^a + v^b ∂²L/∂y^a∂y^b)`.
pub fn lleg_map(sys: &LagrangianSystem, pt: &ProlPointE) -> Result<ProlPointEstar> {
    ensure_len("prolongation z", &pt.z, sys.rank())?;
    ensure_len("prolongation v", &pt.v, sys.rank())?;
    let base = PrimalPoint::new(pt.x.clone(), pt.y.clone());
    let jet = sys.jet(&base)?;
    let rho = sys.chart.anchor(&pt.x)?;
    let anchored = rho.mul_vec(&pt.z);
    let w_x = jet.mixed.tr_mul_vec(&anchored);
    let w_v = jet.w.mul_vec(&pt.v);
    Ok(ProlPointEstar {
        x: pt.x.clone(),
        p: jet.dy,
        z: pt.z.clone(),
        v: w_x.iter().zip(&w_v).map(|(a, b)| a + b).collect(),
    })
}

/// Frame Jacobian of the prolonged Legendre map at `pt`: the linear map
/// `(z, v) ↦ (z, M z + W v)` with `M[a][b] = rho[i][b] ∂²L/∂x^i∂y^a`.
pub fn lleg_frame_jacobian(sys: &LagrangianSystem, pt: &PrimalPoint) -> Result<Matrix> {
    let n = sys.rank();
    let jet = sys.jet(pt)?;
    let rho = sys.chart.anchor(&pt.x)?;
    let mm = jet.mixed.transpose().matmul(&rho);
    Ok(Matrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => (r == c) as u8 as f64,
        (true, false) => 0.0,
        (false, true) => mm[(r - n, c)],
        (false, false) => jet.w[(r - n, c - n)],
    }))
}

/// Pullback of the canonical symplectic matrix at `Leg(pt)` through the
/// frame Jacobian of the prolonged Legendre map, `Jᵀ Ω J`. Equals the
/// Poincaré-Cartan 2-section at `pt`.
pub fn omega_pullback(sys: &LagrangianSystem, pt: &PrimalPoint) -> Result<Matrix> {
    let dual = legendre_map(sys, pt)?;
    let omega = canonical_symplectic(&sys.chart, &dual)?.omega;
    let j = lleg_frame_jacobian(sys, pt)?;
    Ok(j.transpose().matmul(&omega).matmul(&j))
}

/// Distance between the image of the Euler-Lagrange section under the
/// prolonged Legendre map and the Hamilton section of the induced
/// Hamiltonian at `Leg(pt)`.
pub fn relatedness_defect(
    sys: &LagrangianSystem,
    pt: &PrimalPoint,
    cfg: &LegendreConfig,
) -> Result<f64> {
    let (_, ydot) = el_vector_field(sys, pt)?;
    let image = lleg_map(
        sys,
        &ProlPointE {
            x: pt.x.clone(),
            y: pt.y.clone(),
            z: pt.y.clone(),
            v: ydot,
        },
    )?;
    let h = induced_hamiltonian(sys, cfg);
    let (z, v) = hamilton_section(&h, &DualPoint::new(image.x.clone(), image.p.clone()))?;
    Ok(distance(&concat(&image.z, &image.v), &concat(&z, &v)))
}
