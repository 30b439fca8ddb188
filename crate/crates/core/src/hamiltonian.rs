//! Hamiltonian mechanics on the dual bundle: the canonical symplectic
//! section, the Hamilton section, Noether symmetries and Hamilton-Jacobi
//! residuals.

use alloc::format;
use alloc::vec::Vec;

use crate::algebroid::{contract_first, d_function, d_oneform, AlgebroidChart};
use crate::error::{ensure_len, Error, Result};
use crate::field::{fd_gradient, fd_jacobian, DiffConfig, ScalarField, VectorField};
use crate::integrate::{rk4_integrate, IntegratorConfig};
use crate::lagrangian::{LagrangianSystem, PrimalPoint};
use crate::legendre::{induced_hamiltonian, legendre_inverse, LegendreConfig};
use crate::linalg::{concat, dot, norm, Matrix};
use crate::poisson::{poisson_bivector, DualPoint};

#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pub chart: AlgebroidChart,
    /// Function of `(x, p)`, dimension `m + n`.
    pub hamiltonian: ScalarField,
    pub diff: DiffConfig,
}

impl HamiltonianSystem {
    pub fn new(chart: AlgebroidChart, hamiltonian: ScalarField) -> Result<Self> {
        let d = chart.base_dim() + chart.rank();
        if hamiltonian.dim() != d {
            return Err(Error::shape("Hamiltonian arguments", d, hamiltonian.dim()));
        }
        Ok(HamiltonianSystem {
            chart,
            hamiltonian,
            diff: DiffConfig::default(),
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

    pub fn value(&self, pt: &DualPoint) -> Result<f64> {
        pt.check(&self.chart)?;
        self.hamiltonian.eval(&pt.coords())
    }

    /// `(∂H/∂x, ∂H/∂p)`
    pub fn gradient(&self, pt: &DualPoint) -> Result<(Vec<f64>, Vec<f64>)> {
        pt.check(&self.chart)?;
        let g = fd_gradient(&self.hamiltonian, &pt.coords(), &self.diff)?;
        let m = self.base_dim();
        Ok((g[..m].to_vec(), g[m..].to_vec()))
    }

    /// `(ẋ, ṗ)` concatenated, for use with the integrators.
    pub fn vector_field(&self) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
        move |z| {
            let (xdot, pdot) =
                hamilton_vector_field(self, &DualPoint::from_coords(z, self.base_dim()))?;
            Ok(concat(&xdot, &pdot))
        }
    }
}

/// `2n × 2n` matrix of the canonical symplectic section in the basis
/// `{ẽ_a, ē_a}`: `Ω(ẽ_a, ē_b) = δ_ab`, `Ω(ẽ_a, ẽ_b) = C[g][a][b] p_g`,
/// `Ω(ē_a, ē_b) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    pub omega: Matrix,
}

impl SymplecticMatrix {
    /// `Ω(ξ, η)` for sections given by frame coefficients `(z, v)`.
    pub fn pair(&self, xi: (&[f64], &[f64]), eta: (&[f64], &[f64])) -> f64 {
        let a = concat(xi.0, xi.1);
        let b = concat(eta.0, eta.1);
        dot(&a, &self.omega.mul_vec(&b))
    }
}

pub fn canonical_symplectic(chart: &AlgebroidChart, pt: &DualPoint) -> Result<SymplecticMatrix> {
    pt.check(chart)?;
    let n = chart.rank();
    let cp = contract_first(&chart.structure(&pt.x)?, &pt.p);
    let mut omega = Matrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            omega[(a, b)] = cp[(a, b)];
        }
        omega[(a, n + a)] = 1.0;
        omega[(n + a, a)] = -1.0;
    }
    Ok(SymplecticMatrix { omega })
}

/// Hamilton equations:
/// `ẋ^i = rho[i][a] ∂H/∂p_a`,
/// `ṗ_a = -(C[g][a][b] p_g ∂H/∂p_b + rho[i][a] ∂H/∂x^i)`.
pub fn hamilton_vector_field(
    sys: &HamiltonianSystem,
    pt: &DualPoint,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (dx, dp) = sys.gradient(pt)?;
    hamilton_from_gradient(&sys.chart, pt, &dx, &dp)
}

pub(crate) fn hamilton_from_gradient(
    chart: &AlgebroidChart,
    pt: &DualPoint,
    dx: &[f64],
    dp: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rho = chart.anchor(&pt.x)?;
    let cp = contract_first(&chart.structure(&pt.x)?, &pt.p);
    let xdot = rho.mul_vec(dp);
    let cdp = cp.mul_vec(dp);
    let rdx = rho.tr_mul_vec(dx);
    let pdot = cdp.iter().zip(&rdx).map(|(a, b)| -(a + b)).collect();
    Ok((xdot, pdot))
}

/// Frame coefficients `(z, v)` of the Hamilton section: `z = ∂H/∂p`,
/// `v = ṗ`.
pub fn hamilton_section(sys: &HamiltonianSystem, pt: &DualPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    let (dx, dp) = sys.gradient(pt)?;
    let (_, pdot) = hamilton_from_gradient(&sys.chart, pt, &dx, &dp)?;
    Ok((dp, pdot))
}

/// Frame coefficients of the Hamiltonian section of an arbitrary function
/// `f` on the dual bundle.
pub fn hamiltonian_section_of(
    chart: &AlgebroidChart,
    f: &ScalarField,
    pt: &DualPoint,
    cfg: &DiffConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let sys = HamiltonianSystem::new(chart.clone(), f.clone())?.with_diff(*cfg);
    hamilton_section(&sys, pt)
}

/// Difference between the Hamilton field and the Poisson flow
/// `i_{dH} Λ` at `pt` (max-norm).
pub fn poisson_flow_defect(sys: &HamiltonianSystem, pt: &DualPoint) -> Result<f64> {
    let (xdot, pdot) = hamilton_vector_field(sys, pt)?;
    let lam = poisson_bivector(&sys.chart, pt)?;
    let g = fd_gradient(&sys.hamiltonian, &pt.coords(), &sys.diff)?;
    let flow = lam.contract(&g);
    Ok(concat(&xdot, &pdot)
        .iter()
        .zip(&flow)
        .fold(0.0f64, |w, (a, b)| w.max((a - b).abs())))
}

/// Residual norms of Hamilton's equations along uniformly spaced samples,
/// using central differences in time. One value per interior sample.
pub fn hamilton_residual(
    sys: &HamiltonianSystem,
    samples: &[(f64, DualPoint)],
) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::shape("curve samples (at least)", 3, samples.len()));
    }
    let dt = samples[1].0 - samples[0].0;
    for w in samples.windows(2) {
        if dt.is_nan() || dt <= 0.0 || ((w[1].0 - w[0].0) - dt).abs() > 1e-6 * dt {
            return Err(Error::PreconditionFailed(
                "samples are not uniformly spaced".into(),
            ));
        }
    }
    (1..samples.len() - 1)
        .map(|k| {
            let (xdot, pdot) = hamilton_vector_field(sys, &samples[k].1)?;
            let prev = samples[k - 1].1.coords();
            let next = samples[k + 1].1.coords();
            let field = concat(&xdot, &pdot);
            let r: Vec<f64> = (0..field.len())
                .map(|i| (next[i] - prev[i]) / (2.0 * dt) - field[i])
                .collect();
            Ok(norm(&r))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HjResidual {
    /// `d^E alpha`; vanishes iff `alpha` is a cocycle.
    pub cocycle_defect: Matrix,
    /// `d^E (H ∘ alpha)`; vanishes iff `alpha` solves the Hamilton-Jacobi
    /// equation.
    pub hj_defect: Vec<f64>,
}

impl HjResidual {
    pub fn max(&self) -> (f64, f64) {
        (
            self.cocycle_defect.max_abs(),
            crate::linalg::max_abs(&self.hj_defect),
        )
    }
}

/// `x ↦ H(x, alpha(x))`
pub fn compose_with_section(hamiltonian: &ScalarField, alpha: &VectorField) -> ScalarField {
    let (h, a) = (hamiltonian.clone(), alpha.clone());
    ScalarField::fallible(alpha.dim(), move |x| h.eval(&concat(x, &a.eval(x)?)))
}

pub fn hj_residual(
    chart: &AlgebroidChart,
    hamiltonian: &ScalarField,
    alpha: &VectorField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<HjResidual> {
    let (m, n) = (chart.base_dim(), chart.rank());
    if alpha.dim() != m || alpha.len() != n {
        return Err(Error::shape("section of the dual bundle", n, alpha.len()));
    }
    if hamiltonian.dim() != m + n {
        return Err(Error::shape(
            "Hamiltonian arguments",
            m + n,
            hamiltonian.dim(),
        ));
    }
    let cocycle_defect = d_oneform(chart, alpha, x, cfg)?;
    let composed = compose_with_section(hamiltonian, alpha);
    let hj_defect = d_function(chart, &composed, x, cfg)?;
    Ok(HjResidual {
        cocycle_defect,
        hj_defect,
    })
}

/// Lifts a base curve through `alpha`: integrates
/// `ẋ = rho(x) ∂H/∂p(x, alpha(x))` from `x0` and returns the samples
/// `(t, (x(t), alpha(x(t))))`.
pub fn hj_lift(
    sys: &HamiltonianSystem,
    alpha: &VectorField,
    x0: &[f64],
    icfg: &IntegratorConfig,
) -> Result<Vec<(f64, DualPoint)>> {
    ensure_len("initial base point", x0, sys.base_dim())?;
    let base_field = |x: &[f64]| -> Result<Vec<f64>> {
        let pt = DualPoint::new(x.to_vec(), alpha.eval(x)?);
        let (_, dp) = sys.gradient(&pt)?;
        Ok(sys.chart.anchor(x)?.mul_vec(&dp))
    };
    let traj = rk4_integrate(base_field, x0, icfg, &[])?;
    if let Some(e) = traj.error {
        return Err(e);
    }
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| Ok((t, DualPoint::new(x.clone(), alpha.eval(x)?))))
        .collect()
}

/// `p_a X^a(x)`: the linear function on the dual induced by a section.
pub fn conserved_momentum(section: &VectorField, pt: &DualPoint) -> Result<f64> {
    Ok(dot(&pt.p, &section.eval(&pt.x)?))
}

/// Derivative of `H` along the complete lift of `section` to the dual:
/// `X^a rho[i][a] ∂H/∂x^i - (rho[i][a] ∂_i X^b p_b + C[g][a][b] p_g X^b) ∂H/∂p_a`.
/// Zero means the momentum `p_a X^a` is conserved.
pub fn symmetry_defect(
    sys: &HamiltonianSystem,
    section: &VectorField,
    pt: &DualPoint,
) -> Result<f64> {
    let (m, n) = (sys.base_dim(), sys.rank());
    if section.dim() != m || section.len() != n {
        return Err(Error::shape("section components", n, section.len()));
    }
    let (dx, dp) = sys.gradient(pt)?;
    let xv = section.eval(&pt.x)?;
    let dxv = fd_jacobian(section, &pt.x, &sys.diff)?;
    let rho = sys.chart.anchor(&pt.x)?;
    let cp = contract_first(&sys.chart.structure(&pt.x)?, &pt.p);
    let base_rate = dot(&rho.mul_vec(&xv), &dx);
    let mut fiber_rate = 0.0;
    for a in 0..n {
        let mut s = 0.0;
        for b in 0..n {
            let rdx: f64 = (0..m).map(|i| rho[(i, a)] * dxv[(b, i)]).sum();
            s += rdx * pt.p[b] + cp[(a, b)] * xv[b];
        }
        fiber_rate += s * dp[a];
    }
    Ok(base_rate - fiber_rate)
}

/// Configuration for [`action_rate_defect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionConfig {
    /// Tolerance on `|H(alpha(x))|`.
    pub tol: f64,
    pub legendre: LegendreConfig,
}

impl Default for ActionConfig {
    fn default() -> Self {
        ActionConfig {
            tol: 1e-8,
            legendre: LegendreConfig::default(),
        }
    }
}

/// `|d(S∘c)/dt - L(gamma)|` at `x`, where `alpha = d^E S`,
/// `gamma = Leg⁻¹(alpha(x))` and `d(S∘c)/dt = gamma^a rho[i][a] ∂S/∂x^i`.
/// Requires `H ∘ alpha = 0` at `x` for the induced Hamiltonian.
pub fn action_rate_defect(
    sys: &LagrangianSystem,
    action: &ScalarField,
    x: &[f64],
    cfg: &ActionConfig,
) -> Result<f64> {
    ensure_len("base point", x, sys.base_dim())?;
    let alpha = d_function(&sys.chart, action, x, &sys.diff)?;
    let h = induced_hamiltonian(sys, &cfg.legendre);
    let on_section = h.value(&DualPoint::new(x.to_vec(), alpha.clone()))?;
    if on_section.abs() > cfg.tol {
        return Err(Error::PreconditionFailed(format!(
            "H(d^E S) = {on_section:e} does not vanish (tolerance {:e})",
            cfg.tol
        )));
    }
    let gamma: PrimalPoint = legendre_inverse(
        sys,
        &DualPoint::new(x.to_vec(), alpha.clone()),
        None,
        &cfg.legendre,
    )?;
    let rate = dot(&gamma.y, &alpha);
    let l = sys.lagrangian.eval(&gamma.coords())?;
    Ok((rate - l).abs())
}
