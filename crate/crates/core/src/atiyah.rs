//! The Atiyah algebroid of a principal bundle in a local trivialization,
//! the reduced (Lagrange-Poincaré and Hamilton-Poincaré) equations written
//! out explicitly, and the Wong system of a particle in a gauge field.
//!
//! Fiber coordinates on the Atiyah chart are ordered as the `m` base
//! velocities followed by the `n_g` Lie algebra components.

use alloc::format;
use alloc::vec::Vec;

use crate::algebroid::{halton_points, AlgebroidChart};
use crate::error::{ensure_len, Error, Result};
use crate::field::{
    central_jacobian, fd_gradient, fd_hessian, fd_jacobian, DiffConfig, ScalarField, TensorField,
};
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::{el_vector_field, LagrangianSystem, PrimalPoint, DEFAULT_COND_TOL};
use crate::linalg::{concat, distance, dot, Matrix, Tensor3};
use crate::poisson::DualPoint;

const CONSTANT_TOL: f64 = 1e-12;

/// Largest entry of `c[c][a][b] + c[c][b][a]`.
pub fn lie_antisymmetry_defect(c: &Tensor3) -> f64 {
    c.antisymmetry_defect()
}

/// Largest entry of the cyclic sum
/// `c[e][a][b] c[d][e][f] + c[e][b][f] c[d][e][a] + c[e][f][a] c[d][e][b]`.
pub fn lie_jacobi_defect(c: &Tensor3) -> f64 {
    let n = c.dims()[0];
    let mut worst = 0.0f64;
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                for f in 0..n {
                    let s: f64 = (0..n)
                        .map(|e| {
                            c[(e, a, b)] * c[(d, e, f)]
                                + c[(e, b, f)] * c[(d, e, a)]
                                + c[(e, f, a)] * c[(d, e, b)]
                        })
                        .sum();
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Structure constants of the gauge group together with a connection
/// `A[a][i](x)` on the trivial bundle over an open set of `R^m`.
#[derive(Debug, Clone)]
pub struct PrincipalData {
    m: usize,
    n_g: usize,
    c: Tensor3,
    connection: TensorField,
    curvature: Option<TensorField>,
    diff: DiffConfig,
}

impl PrincipalData {
    /// `connection` maps `x` to the `n_g × m` matrix `A[a][i]`, row-major.
    pub fn new(m: usize, c: Tensor3, connection: TensorField) -> Result<Self> {
        let [n_g, d1, d2] = c.dims();
        if n_g == 0 || d1 != n_g || d2 != n_g {
            return Err(Error::shape(
                "structure constants",
                n_g * n_g * n_g,
                c.as_slice().len(),
            ));
        }
        if m == 0 {
            return Err(Error::InvalidConfig(
                "base dimension must be positive".into(),
            ));
        }
        if connection.dim() != m || connection.shape() != [n_g, m] {
            return Err(Error::shape("connection field", n_g * m, connection.len()));
        }
        let anti = lie_antisymmetry_defect(&c);
        if anti > CONSTANT_TOL {
            return Err(Error::PreconditionFailed(format!(
                "structure constants are not antisymmetric (defect {anti:e})"
            )));
        }
        let jac = lie_jacobi_defect(&c);
        if jac > CONSTANT_TOL {
            return Err(Error::PreconditionFailed(format!(
                "structure constants violate the Jacobi identity (defect {jac:e})"
            )));
        }
        Ok(PrincipalData {
            m,
            n_g,
            c,
            connection,
            curvature: None,
            diff: DiffConfig::default(),
        })
    }

    /// Supplies the curvature `B[c][i][j](x)` analytically instead of by
    /// differentiating the connection.
    pub fn with_curvature(mut self, b: TensorField) -> Result<Self> {
        let (m, n_g) = (self.m, self.n_g);
        if b.dim() != m || b.shape() != [n_g, m, m] {
            return Err(Error::shape("curvature field", n_g * m * m, b.len()));
        }
        self.curvature = Some(b);
        Ok(self)
    }

    pub fn with_diff(mut self, diff: DiffConfig) -> Self {
        self.diff = diff;
        self
    }

    pub fn base_dim(&self) -> usize {
        self.m
    }

    pub fn group_dim(&self) -> usize {
        self.n_g
    }

    /// Rank of the Atiyah algebroid, `m + n_g`.
    pub fn rank(&self) -> usize {
        self.m + self.n_g
    }

    pub fn structure_constants(&self) -> &Tensor3 {
        &self.c
    }

    pub fn diff(&self) -> &DiffConfig {
        &self.diff
    }

    /// `A[a][i]` at `x`.
    pub fn connection(&self, x: &[f64]) -> Result<Matrix> {
        Ok(Matrix::from_row_major(
            self.n_g,
            self.m,
            self.connection.eval(x)?,
        ))
    }
}

/// `B[c][i][j] = ∂A[c][j]/∂x^i - ∂A[c][i]/∂x^j - c[c][a][b] A[a][i] A[b][j]`.
///
/// This sign convention is the one for which the Atiyah structure
/// functions below satisfy the Jacobi identity. Only `i < j` is computed;
/// the rest is filled by exact antisymmetry.
pub fn curvature(pd: &PrincipalData, x: &[f64]) -> Result<Tensor3> {
    let (m, n_g) = (pd.m, pd.n_g);
    if let Some(b) = &pd.curvature {
        return Ok(Tensor3::from_vec([n_g, m, m], b.eval(x)?));
    }
    ensure_len("base point", x, m)?;
    let a = pd.connection(x)?;
    let da = fd_jacobian(&pd.connection, x, &pd.diff)?;
    let mut out = Tensor3::zeros(n_g, m, m);
    for c in 0..n_g {
        for i in 0..m {
            for j in i + 1..m {
                let mut v = da[(c * m + j, i)] - da[(c * m + i, j)];
                for p in 0..n_g {
                    for q in 0..n_g {
                        v -= pd.c[(c, p, q)] * a[(p, i)] * a[(q, j)];
                    }
                }
                out[(c, i, j)] = v;
                out[(c, j, i)] = -v;
            }
        }
    }
    Ok(out)
}

/// Atiyah structure functions at `x`.
fn atiyah_structure(pd: &PrincipalData, x: &[f64]) -> Result<Tensor3> {
    let (m, n_g) = (pd.m, pd.n_g);
    let n = m + n_g;
    let a = pd.connection(x)?;
    let b = curvature(pd, x)?;
    let mut out = Tensor3::zeros(n, n, n);
    for c in 0..n_g {
        for i in 0..m {
            for j in 0..m {
                out[(m + c, i, j)] = -b[(c, i, j)];
            }
            for p in 0..n_g {
                let v: f64 = (0..n_g).map(|q| pd.c[(c, p, q)] * a[(q, i)]).sum();
                out[(m + c, i, m + p)] = v;
                out[(m + c, m + p, i)] = -v;
            }
        }
        for p in 0..n_g {
            for q in 0..n_g {
                out[(m + c, m + p, m + q)] = pd.c[(c, p, q)];
            }
        }
    }
    Ok(out)
}

/// The Atiyah algebroid chart: identity anchor on the base block, zero on
/// the Lie algebra block, structure functions assembled from the
/// curvature, the connection and the structure constants.
pub fn atiyah_chart(pd: &PrincipalData) -> AlgebroidChart {
    let (m, n) = (pd.m, pd.rank());
    let anchor = Matrix::from_fn(m, n, |i, a| (i == a) as u8 as f64);
    let p1 = pd.clone();
    let structure = TensorField::fallible(m, &[n, n, n], move |x| {
        Ok(atiyah_structure(&p1, x)?.into_vec())
    });
    // A finite-difference curvature is already one derivative deep; take
    // the outer derivative with the wider step.
    let structure = if pd.curvature.is_none() {
        let p2 = pd.clone();
        structure.with_fallible_jacobian(move |x| {
            central_jacobian(
                |z| Ok(atiyah_structure(&p2, z)?.into_vec()),
                x,
                n * n * n,
                p2.diff.h_nested,
            )
        })
    } else {
        structure
    };
    AlgebroidChart::new(
        "atiyah",
        m,
        n,
        TensorField::constant(m, &[m, n], anchor.into_vec()),
        structure,
    )
    .expect("Atiyah chart dimensions are consistent")
}

/// The Hamilton-Poincaré equations for a reduced Hamiltonian `h(x, p, p̄)`,
/// written without the generic algebroid machinery:
///
/// `ẋ^i = ∂h/∂p_i`,
/// `ṗ_i = -∂h/∂x^i + p̄_a B[a][i][j] ẋ^j - p̄_c c[c][a][b] A[b][i] ∂h/∂p̄_a`,
/// `ṗ̄_a = p̄_c c[c][a][d] A[d][i] ẋ^i - p̄_c c[c][a][b] ∂h/∂p̄_b`.
///
/// `pt.p` holds `(p, p̄)`.
pub fn hp_rhs(
    pd: &PrincipalData,
    h: &ScalarField,
    pt: &DualPoint,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (m, n_g) = (pd.m, pd.n_g);
    ensure_len("base point", &pt.x, m)?;
    ensure_len("reduced momentum", &pt.p, m + n_g)?;
    if h.dim() != 2 * m + n_g {
        return Err(Error::shape(
            "reduced Hamiltonian arguments",
            2 * m + n_g,
            h.dim(),
        ));
    }
    let grad = fd_gradient(h, &pt.coords(), &pd.diff)?;
    let (hx, hp, hq) = (&grad[..m], &grad[m..2 * m], &grad[2 * m..]);
    let pbar = &pt.p[m..];
    let a = pd.connection(&pt.x)?;
    let b = curvature(pd, &pt.x)?;
    let c = &pd.c;
    let xdot = hp.to_vec();
    let pdot = (0..m)
        .map(|i| {
            let mut v = -hx[i];
            for k in 0..n_g {
                v += pbar[k] * (0..m).map(|j| b[(k, i, j)] * xdot[j]).sum::<f64>();
            }
            for cc in 0..n_g {
                for k in 0..n_g {
                    for l in 0..n_g {
                        v -= pbar[cc] * c[(cc, k, l)] * a[(l, i)] * hq[k];
                    }
                }
            }
            v
        })
        .collect();
    let pbar_dot = (0..n_g)
        .map(|k| {
            let mut v = 0.0;
            for cc in 0..n_g {
                for d in 0..n_g {
                    v +=
                        pbar[cc] * c[(cc, k, d)] * (0..m).map(|i| a[(d, i)] * xdot[i]).sum::<f64>();
                    v -= pbar[cc] * c[(cc, k, d)] * hq[d];
                }
            }
            v
        })
        .collect();
    Ok((xdot, pdot, pbar_dot))
}

/// Generic and explicit evaluations of the Lagrange-Poincaré equations
/// at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRhs {
    pub xdot: Vec<f64>,
    /// Fiber acceleration from the Euler-Lagrange section of the Atiyah
    /// chart.
    pub generic: Vec<f64>,
    /// Fiber acceleration from the explicit Lagrange-Poincaré equations.
    pub explicit: Vec<f64>,
}

impl LpRhs {
    /// Disagreement on the base block and on the Lie algebra block.
    pub fn residual(&self) -> (f64, f64) {
        let m = self.xdot.len();
        (
            distance(&self.generic[..m], &self.explicit[..m]),
            distance(&self.generic[m..], &self.explicit[m..]),
        )
    }
}

/// Evaluates the Lagrange-Poincaré equations for `l(x, ẋ, v̄)` at
/// `pt = (x; ẋ, v̄)` both through the generic engine and explicitly from
///
/// `d/dt ∂l/∂ẋ^i = ∂l/∂x^i + B[a][i][j] ẋ^j ∂l/∂v̄^a - ∂l/∂v̄^c c[c][b][d] A[d][i] v̄^b`,
/// `d/dt ∂l/∂v̄^a = ∂l/∂v̄^c c[c][a][d] A[d][i] ẋ^i - ∂l/∂v̄^c c[c][a][b] v̄^b`.
pub fn lp_rhs(pd: &PrincipalData, l: &ScalarField, pt: &PrimalPoint) -> Result<LpRhs> {
    let (m, n_g) = (pd.m, pd.n_g);
    let n = m + n_g;
    let sys = LagrangianSystem::new(atiyah_chart(pd), l.clone())?.with_diff(pd.diff);
    let (xdot, generic) = el_vector_field(&sys, pt)?;

    let z = pt.coords();
    let grad = fd_gradient(l, &z, &pd.diff)?;
    let hess = fd_hessian(l, &z, &pd.diff)?;
    let (lx, lv) = (&grad[..m], &grad[m + m..]);
    let (vel, vbar) = (&pt.y[..m], &pt.y[m..]);
    let a = pd.connection(&pt.x)?;
    let b = curvature(pd, &pt.x)?;
    let c = &pd.c;
    let mut rate = Vec::with_capacity(n);
    for i in 0..m {
        let mut v = lx[i];
        for k in 0..n_g {
            v += lv[k] * (0..m).map(|j| b[(k, i, j)] * vel[j]).sum::<f64>();
        }
        for cc in 0..n_g {
            for p in 0..n_g {
                for d in 0..n_g {
                    v -= lv[cc] * c[(cc, p, d)] * a[(d, i)] * vbar[p];
                }
            }
        }
        rate.push(v);
    }
    for k in 0..n_g {
        let mut v = 0.0;
        for cc in 0..n_g {
            for d in 0..n_g {
                v += lv[cc] * c[(cc, k, d)] * (0..m).map(|i| a[(d, i)] * vel[i]).sum::<f64>();
                v -= lv[cc] * c[(cc, k, d)] * vbar[d];
            }
        }
        rate.push(v);
    }
    // subtract the explicit base dependence of the momenta, then solve
    // with the fiber Hessian
    let rhs: Vec<f64> = (0..n)
        .map(|r| rate[r] - (0..m).map(|i| hess[(i, m + r)] * vel[i]).sum::<f64>())
        .collect();
    let w = Matrix::from_fn(n, n, |r, s| hess[(m + r, m + s)]);
    let lu = w.lu()?;
    let condition = lu.condition();
    if condition > DEFAULT_COND_TOL {
        return Err(Error::SingularHessian { condition });
    }
    Ok(LpRhs {
        xdot,
        generic,
        explicit: lu.solve(&rhs),
    })
}

/// Defect of the invariance `c[c][a][b] κ[c][d] + c[c][a][d] κ[c][b] = 0`
/// of a metric on the Lie algebra.
pub fn bi_invariance_defect(c: &Tensor3, kappa: &Matrix) -> f64 {
    let n = c.dims()[0];
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                let s: f64 = (0..n)
                    .map(|e| c[(e, a, b)] * kappa[(e, d)] + c[(e, a, d)] * kappa[(e, b)])
                    .sum();
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

fn spd(what: &str, k: &Matrix) -> Result<()> {
    if k.rows() != k.cols() {
        return Err(Error::InvalidMetric(format!("{what} is not square")));
    }
    let asym = k.sub(&k.transpose()).max_abs();
    if asym > CONSTANT_TOL * (1.0 + k.max_abs()) {
        return Err(Error::InvalidMetric(format!(
            "{what} is not symmetric (defect {asym:e})"
        )));
    }
    if k.cholesky().is_none() {
        return Err(Error::InvalidMetric(format!(
            "{what} is not positive definite"
        )));
    }
    Ok(())
}

/// Metric data of the Wong system: an invariant inner product `κ` on the
/// Lie algebra and a Riemannian metric `g(x)` on the base.
#[derive(Debug, Clone)]
pub struct WongData {
    kappa: Matrix,
    kappa_inv: Matrix,
    metric: TensorField,
}

impl WongData {
    /// `metric` maps `x` to the `m × m` matrix `g[i][j]`, row-major.
    pub fn new(kappa: Matrix, metric: TensorField) -> Result<Self> {
        spd("kappa", &kappa)?;
        let m = metric.dim();
        if metric.shape() != [m, m] {
            return Err(Error::shape("base metric field", m * m, metric.len()));
        }
        let kappa_inv = kappa.lu()?.inverse();
        Ok(WongData {
            kappa,
            kappa_inv,
            metric,
        })
    }

    pub fn kappa(&self) -> &Matrix {
        &self.kappa
    }

    /// `g(x)`, checked to be symmetric positive definite.
    pub fn metric(&self, x: &[f64]) -> Result<Matrix> {
        let m = self.metric.dim();
        let g = Matrix::from_row_major(m, m, self.metric.eval(x)?);
        spd("base metric", &g)?;
        Ok(g)
    }
}

/// Locked body angular velocity `v̄ = κ⁻¹ p̄`.
pub fn locked_velocity(wd: &WongData, pbar: &[f64]) -> Result<Vec<f64>> {
    ensure_len("group momentum", pbar, wd.kappa.rows())?;
    Ok(wd.kappa_inv.mul_vec(pbar))
}

fn check_wong(pd: &PrincipalData, wd: &WongData) -> Result<()> {
    if wd.kappa.rows() != pd.n_g {
        return Err(Error::shape(
            "kappa",
            pd.n_g * pd.n_g,
            wd.kappa.rows() * wd.kappa.cols(),
        ));
    }
    if wd.metric.dim() != pd.m {
        return Err(Error::shape("base metric argument", pd.m, wd.metric.dim()));
    }
    let defect = bi_invariance_defect(&pd.c, &wd.kappa);
    if defect > CONSTANT_TOL {
        return Err(Error::InvalidMetric(format!(
            "kappa is not invariant (defect {defect:e})"
        )));
    }
    let lo = alloc::vec![-1.0; pd.m];
    let hi = alloc::vec![1.0; pd.m];
    for x in halton_points(&lo, &hi, 8, 1) {
        wd.metric(&x)?;
    }
    Ok(())
}

/// `∂g[j][k]/∂x^i` as `m` matrices.
fn metric_derivatives(wd: &WongData, x: &[f64], cfg: &DiffConfig) -> Result<Vec<Matrix>> {
    let m = x.len();
    let jac = fd_jacobian(&wd.metric, x, cfg)?;
    Ok((0..m)
        .map(|i| Matrix::from_fn(m, m, |j, k| jac[(j * m + k, i)]))
        .collect())
}

/// Lagrangian `l = ½(κ(v̄, v̄) + g(ẋ, ẋ))` and Hamiltonian
/// `h = ½(κ⁻¹(p̄, p̄) + g⁻¹(p, p))` on the Atiyah chart, both with analytic
/// gradients.
pub fn wong_system(
    pd: &PrincipalData,
    wd: &WongData,
) -> Result<(LagrangianSystem, HamiltonianSystem)> {
    check_wong(pd, wd)?;
    let (m, n_g) = (pd.m, pd.n_g);
    let chart = atiyah_chart(pd);
    let cfg = pd.diff;

    let (w1, w2) = (wd.clone(), wd.clone());
    let l = ScalarField::fallible(2 * m + n_g, move |z| {
        let (x, v, vbar) = (&z[..m], &z[m..2 * m], &z[2 * m..]);
        let g = w1.metric(x)?;
        Ok(0.5 * (dot(vbar, &w1.kappa.mul_vec(vbar)) + dot(v, &g.mul_vec(v))))
    })
    .with_fallible_gradient(move |z| {
        let (x, v, vbar) = (&z[..m], &z[m..2 * m], &z[2 * m..]);
        let g = w2.metric(x)?;
        let dg = metric_derivatives(&w2, x, &cfg)?;
        let mut out: Vec<f64> = dg.iter().map(|d| 0.5 * dot(v, &d.mul_vec(v))).collect();
        out.extend(g.mul_vec(v));
        out.extend(w2.kappa.mul_vec(vbar));
        Ok(out)
    });

    let (w3, w4) = (wd.clone(), wd.clone());
    let h = ScalarField::fallible(2 * m + n_g, move |z| {
        let (x, p, pbar) = (&z[..m], &z[m..2 * m], &z[2 * m..]);
        let u = w3.metric(x)?.lu()?.solve(p);
        Ok(0.5 * (dot(pbar, &w3.kappa_inv.mul_vec(pbar)) + dot(p, &u)))
    })
    .with_fallible_gradient(move |z| {
        let (x, p, pbar) = (&z[..m], &z[m..2 * m], &z[2 * m..]);
        let u = w4.metric(x)?.lu()?.solve(p);
        let dg = metric_derivatives(&w4, x, &cfg)?;
        let mut out: Vec<f64> = dg.iter().map(|d| -0.5 * dot(&u, &d.mul_vec(&u))).collect();
        out.extend_from_slice(&u);
        out.extend(w4.kappa_inv.mul_vec(pbar));
        Ok(out)
    });

    let sys_l = LagrangianSystem::new(chart.clone(), l)?.with_diff(cfg);
    let sys_h = HamiltonianSystem::new(chart, h)?.with_diff(cfg);
    Ok((sys_l, sys_h))
}

/// Wong's equations in their textbook form:
///
/// `ẋ^i = g^{ij} p_j`,
/// `ṗ_i = -½ ∂g^{jk}/∂x^i p_j p_k - p̄_a B[a][j][i] g^{jk} p_k`,
/// `ṗ̄_b = -c[a][d][b] A[d][i] p̄_a ẋ^i`,
///
/// with `∂g^{jk}/∂x^i = -(g⁻¹ ∂_i g g⁻¹)^{jk}`.
pub fn wong_rhs(
    pd: &PrincipalData,
    wd: &WongData,
    pt: &DualPoint,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_wong(pd, wd)?;
    let (m, n_g) = (pd.m, pd.n_g);
    ensure_len("base point", &pt.x, m)?;
    ensure_len("reduced momentum", &pt.p, m + n_g)?;
    let (p, pbar) = (&pt.p[..m], &pt.p[m..]);
    let ginv = wd.metric(&pt.x)?.lu()?.inverse();
    let dg = metric_derivatives(wd, &pt.x, &pd.diff)?;
    let a = pd.connection(&pt.x)?;
    let b = curvature(pd, &pt.x)?;
    let c = &pd.c;
    let xdot = ginv.mul_vec(p);
    let pdot = (0..m)
        .map(|i| {
            let dginv = ginv.matmul(&dg[i]).matmul(&ginv);
            let mut v = 0.5 * dot(p, &dginv.mul_vec(p));
            for k in 0..n_g {
                v -= pbar[k] * (0..m).map(|j| b[(k, j, i)] * xdot[j]).sum::<f64>();
            }
            v
        })
        .collect();
    let pbar_dot = (0..n_g)
        .map(|bb| {
            let mut v = 0.0;
            for k in 0..n_g {
                for d in 0..n_g {
                    v -= c[(k, d, bb)] * pbar[k] * (0..m).map(|i| a[(d, i)] * xdot[i]).sum::<f64>();
                }
            }
            v
        })
        .collect();
    Ok((xdot, pdot, pbar_dot))
}

/// `(ẋ, ṗ, ṗ̄)` from [`wong_rhs`] concatenated, for the integrators.
pub fn wong_field<'a>(
    pd: &'a PrincipalData,
    wd: &'a WongData,
) -> impl Fn(&[f64]) -> Result<Vec<f64>> + 'a {
    move |z| {
        let (xdot, pdot, qdot) = wong_rhs(pd, wd, &DualPoint::from_coords(z, pd.m))?;
        Ok(concat(&concat(&xdot, &pdot), &qdot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::validate_structure;
    use crate::hamiltonian::hamilton_vector_field;
    use crate::linalg::max_abs;
    use alloc::vec;

    fn magnetic(b0: f64) -> PrincipalData {
        let a = TensorField::new(2, &[1, 2], move |x| vec![0.0, b0 * x[0]]);
        PrincipalData::new(2, Tensor3::zeros(1, 1, 1), a).unwrap()
    }

    fn nonabelian() -> PrincipalData {
        let a = TensorField::new(2, &[3, 2], |x| {
            vec![
                libm::sin(x[1]),
                0.3 * x[0],
                x[0] * x[1],
                libm::cos(x[0]),
                0.5,
                -0.2 * x[1] * x[1],
            ]
        });
        PrincipalData::new(2, Tensor3::levi_civita(), a).unwrap()
    }

    #[test]
    fn constants_are_validated() {
        let mut c = Tensor3::levi_civita();
        c[(0, 1, 2)] = 2.0;
        let a = TensorField::constant(1, &[3, 1], vec![0.0; 3]);
        assert!(PrincipalData::new(1, c, a.clone()).is_err());
        let mut c = Tensor3::zeros(3, 3, 3);
        c[(0, 0, 1)] = 1.0;
        c[(0, 1, 0)] = -1.0;
        c[(1, 1, 2)] = 1.0;
        c[(1, 2, 1)] = -1.0;
        assert!(lie_jacobi_defect(&c) > 0.0);
        assert!(PrincipalData::new(1, c, a).is_err());
        assert_eq!(lie_jacobi_defect(&Tensor3::levi_civita()), 0.0);
    }

    #[test]
    fn curvature_examples() {
        let b = curvature(&magnetic(1.5), &[0.3, -0.7]).unwrap();
        assert!((b[(0, 0, 1)] - 1.5).abs() < 1e-9);
        assert_eq!(b[(0, 1, 0)], -b[(0, 0, 1)]);
        assert_eq!(b[(0, 0, 0)], 0.0);

        let zero = TensorField::constant(2, &[3, 2], vec![0.0; 6]);
        let pd = PrincipalData::new(2, Tensor3::levi_civita(), zero).unwrap();
        assert_eq!(curvature(&pd, &[0.1, 0.2]).unwrap().max_abs(), 0.0);

        let konst = TensorField::constant(2, &[1, 2], vec![0.4, -1.0]);
        let pd = PrincipalData::new(2, Tensor3::zeros(1, 1, 1), konst).unwrap();
        assert_eq!(curvature(&pd, &[0.1, 0.2]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn nonabelian_curvature_has_quadratic_term() {
        // constant A: only the commutator term survives
        let konst = TensorField::constant(2, &[3, 2], vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let pd = PrincipalData::new(2, Tensor3::levi_civita(), konst).unwrap();
        let b = curvature(&pd, &[0.0, 0.0]).unwrap();
        // A_1 = e_1, A_2 = e_2, -[e_1, e_2] = -e_3
        assert_eq!(b[(2, 0, 1)], -1.0);
        assert_eq!(b[(0, 0, 1)], 0.0);
    }

    #[test]
    fn magnetic_chart_structure() {
        let chart = atiyah_chart(&magnetic(1.0));
        let c = chart.structure(&[0.2, 0.4]).unwrap();
        assert!((c[(2, 0, 1)] + 1.0).abs() < 1e-9);
        assert!((c[(2, 1, 0)] - 1.0).abs() < 1e-9);
        let mut rest = c.clone();
        rest[(2, 0, 1)] = 0.0;
        rest[(2, 1, 0)] = 0.0;
        assert!(rest.max_abs() < 1e-9);
        assert_eq!(
            chart.anchor(&[0.0, 0.0]).unwrap(),
            Matrix::from_fn(2, 3, |i, a| (i == a) as u8 as f64)
        );
    }

    #[test]
    fn flat_product_chart() {
        let zero = TensorField::constant(2, &[1, 2], vec![0.0; 2]);
        let pd = PrincipalData::new(2, Tensor3::zeros(1, 1, 1), zero).unwrap();
        assert_eq!(
            atiyah_chart(&pd).structure(&[0.5, 0.5]).unwrap().max_abs(),
            0.0
        );
    }

    #[test]
    fn nonabelian_chart_satisfies_structure_equations() {
        let chart = atiyah_chart(&nonabelian());
        let pts = halton_points(&[-1.0, -1.0], &[1.0, 1.0], 10, 1);
        let report = validate_structure(&chart, &pts, 1e-6, &DiffConfig::default()).unwrap();
        assert!(report.pass, "{report:?}");
    }

    fn free_wong() -> WongData {
        WongData::new(
            Matrix::identity(3),
            TensorField::constant(2, &[2, 2], vec![1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn hamilton_poincare_matches_generic_flow() {
        let pd = nonabelian();
        let wd = WongData::new(
            Matrix::identity(3),
            TensorField::new(2, &[2, 2], |x| {
                vec![2.0 + libm::sin(x[0]), 0.1 * x[1], 0.1 * x[1], 1.5]
            }),
        )
        .unwrap();
        let (_, sys) = wong_system(&pd, &wd).unwrap();
        let pt = DualPoint::new(vec![0.3, -0.4], vec![0.5, -1.0, 0.2, 0.7, -0.3]);
        let (xdot, pdot) = hamilton_vector_field(&sys, &pt).unwrap();
        let (ex, ep, eq) = hp_rhs(&pd, &sys.hamiltonian, &pt).unwrap();
        assert!(distance(&xdot, &ex) < 1e-12);
        assert!(distance(&pdot, &concat(&ep, &eq)) < 1e-10);

        let (wx, wp, wq) = wong_rhs(&pd, &wd, &pt).unwrap();
        assert!(distance(&xdot, &wx) < 1e-10);
        assert!(distance(&pdot, &concat(&wp, &wq)) < 1e-8);
    }

    #[test]
    fn abelian_group_momentum_is_frozen() {
        let pd = magnetic(2.0);
        let h = ScalarField::new(5, |z| {
            0.5 * (z[2] * z[2] + z[3] * z[3] + z[4] * z[4]) + z[0] * z[1]
        });
        let (_, _, q) = hp_rhs(
            &pd,
            &h,
            &DualPoint::new(vec![0.1, 0.2], vec![1.0, 0.5, 3.0]),
        )
        .unwrap();
        assert_eq!(q, vec![0.0]);
    }

    #[test]
    fn lagrange_poincare_agrees() {
        let pd = nonabelian();
        let (sys, _) = wong_system(&pd, &free_wong()).unwrap();
        let r = lp_rhs(
            &pd,
            &sys.lagrangian,
            &PrimalPoint::new(vec![0.2, 0.1], vec![0.4, -0.6, 1.0, 0.3, -0.8]),
        )
        .unwrap();
        let (h, v) = r.residual();
        assert!(h.max(v) < 1e-8, "{h} {v}");
    }

    #[test]
    fn lagrange_poincare_abelian_vertical_momentum() {
        let pd = magnetic(1.0);
        let (sys, _) = wong_system(
            &pd,
            &WongData::new(
                Matrix::identity(1),
                TensorField::constant(2, &[2, 2], vec![1.0, 0.0, 0.0, 1.0]),
            )
            .unwrap(),
        )
        .unwrap();
        let r = lp_rhs(
            &pd,
            &sys.lagrangian,
            &PrimalPoint::new(vec![0.2, 0.1], vec![0.4, -0.6, 1.0]),
        )
        .unwrap();
        assert!(max_abs(&r.explicit[2..]) < 1e-12);
    }

    #[test]
    fn locked_velocity_examples() {
        assert_eq!(
            locked_velocity(&free_wong(), &[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let wd = WongData::new(
            Matrix::diag(&[2.0]),
            TensorField::constant(1, &[1, 1], vec![1.0]),
        )
        .unwrap();
        assert_eq!(locked_velocity(&wd, &[3.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn metrics_are_checked() {
        let bad = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            WongData::new(bad, TensorField::constant(1, &[1, 1], vec![1.0])),
            Err(Error::InvalidMetric(_))
        ));
        let wd = WongData::new(
            Matrix::diag(&[1.0, 2.0, 3.0]),
            TensorField::constant(2, &[2, 2], vec![1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!(bi_invariance_defect(&Tensor3::levi_civita(), wd.kappa()) > 0.1);
        assert!(matches!(
            wong_system(&nonabelian(), &wd),
            Err(Error::InvalidMetric(_))
        ));
        assert!(
            bi_invariance_defect(&Tensor3::levi_civita(), &Matrix::diag(&[2.0, 2.0, 2.0])) == 0.0
        );

        let indefinite = TensorField::new(2, &[2, 2], |x| vec![x[0], 0.0, 0.0, 1.0]);
        let wd = WongData::new(Matrix::identity(1), indefinite).unwrap();
        assert!(matches!(
            wong_system(&magnetic(1.0), &wd),
            Err(Error::InvalidMetric(_))
        ));
    }
}
