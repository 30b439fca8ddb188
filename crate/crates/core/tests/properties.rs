use amech_core::algebroid::{
    basis_section, bracket_sections, d_function, d_oneform, halton_points, validate_structure,
};
use amech_core::atiyah::{atiyah_chart, hp_rhs, wong_field};
use amech_core::field::{central_gradient, fd_gradient, fd_hessian, fd_jacobian};
use amech_core::hamiltonian::{
    canonical_symplectic, conserved_momentum, hamilton_residual, hamiltonian_section_of, hj_lift,
    hj_residual, poisson_flow_defect, symmetry_defect,
};
use amech_core::integrate::{drift, rk4_integrate, IntegratorConfig, Monitor};
use amech_core::lagrangian::{cartan_data, el_vector_field, quadratic_lagrangian};
use amech_core::legendre::{legendre_inverse, legendre_map, omega_pullback};
use amech_core::linalg::{concat, dot, Matrix, Tensor3};
use amech_core::models::{atiyah_so3, rigid_body, wong_abelian, Model};
use amech_core::poisson::poisson_bracket;
use amech_core::tulczyjew::{a_map, flat_map, sh_point};
use amech_core::{
    AlgebroidChart, DiffConfig, DualPoint, HamiltonianSystem, LagrangianSystem, LegendreConfig,
    PrimalPoint, PrincipalData, ProlPointEstar, ScalarField, TensorField,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `Σ_k a_k sin(b_k · x + c_k)` from a flat coefficient list of
/// `TERMS * (dim + 2)` entries, with analytic gradient.
const TERMS: usize = 3;

fn trig_terms(dim: usize, coef: &[f64]) -> Vec<(f64, Vec<f64>, f64)> {
    coef.chunks(dim + 2)
        .map(|c| (c[0], c[1..=dim].to_vec(), 2.0 * c[dim + 1]))
        .collect()
}

fn trig_value(terms: &[(f64, Vec<f64>, f64)], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|(a, b, c)| a * (dot(b, x) + c).sin())
        .sum()
}

fn trig_gradient(terms: &[(f64, Vec<f64>, f64)], x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for (a, b, c) in terms {
        let s = a * (dot(b, x) + c).cos();
        for (gi, bi) in g.iter_mut().zip(b) {
            *gi += s * bi;
        }
    }
    g
}

fn trig_field(dim: usize, coef: &[f64]) -> ScalarField {
    let (t1, t2) = (trig_terms(dim, coef), trig_terms(dim, coef));
    ScalarField::new(dim, move |x| trig_value(&t1, x)).with_gradient(move |x| trig_gradient(&t2, x))
}

/// Vector field whose component `k` is the trig sum of block `k`.
fn trig_vector(dim: usize, len: usize, coef: &[f64]) -> TensorField {
    trig_tensor(dim, &[len], coef)
}

fn trig_tensor(dim: usize, shape: &[usize], coef: &[f64]) -> TensorField {
    let len: usize = shape.iter().product();
    let block = TERMS * (dim + 2);
    let comps: Vec<_> = (0..len)
        .map(|k| trig_terms(dim, &coef[k * block..(k + 1) * block]))
        .collect();
    let comps2 = comps.clone();
    TensorField::new(dim, shape, move |x| {
        comps.iter().map(|t| trig_value(t, x)).collect()
    })
    .with_jacobian(move |x| {
        let rows: Vec<f64> = comps2.iter().flat_map(|t| trig_gradient(t, x)).collect();
        Matrix::from_row_major(len, dim, rows)
    })
}

fn coefs(count: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-1.0f64..1.0, count)
}

fn unit(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-1.0f64..1.0, len)
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

fn so3_chart() -> AlgebroidChart {
    atiyah_so3().chart
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn central_differences_are_exact_on_quadratics(
        q in vec(-2.0f64..2.0, 9), b in unit(3), c in -1.0f64..1.0, x in unit(3),
    ) {
        let q = Matrix::from_row_major(3, 3, q).symmetrized();
        let (q1, b1) = (q.clone(), b.clone());
        let f = ScalarField::new(3, move |x| c + dot(&b1, x) + 0.5 * dot(x, &q1.mul_vec(x)));
        let exact: Vec<f64> = q.mul_vec(&x).iter().zip(&b).map(|(a, b)| a + b).collect();
        let fd = central_gradient(&f, &x, DiffConfig::default().h).unwrap();
        let scale = exact.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        prop_assert!(max_diff(&fd, &exact) <= 1e-9 * scale);
        let hess = fd_hessian(&f, &x, &DiffConfig::default()).unwrap();
        prop_assert!(hess.sub(&q).max_abs() <= 1e-6 * q.max_abs().max(1.0));
    }

    #[test]
    fn analytic_and_fd_derivatives_agree(c in coefs(TERMS * 6), x in unit(4)) {
        let f = trig_field(4, &c);
        let analytic = fd_gradient(&f, &x, &DiffConfig::default()).unwrap();
        let numeric = fd_gradient(&f.clone().without_derivatives(), &x, &DiffConfig::default()).unwrap();
        let scale = analytic.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        prop_assert!(max_diff(&analytic, &numeric) <= 1e-4 * scale);

        let v = trig_vector(4, 2, &concat(&c, &c.iter().rev().copied().collect::<Vec<_>>()));
        let ja = fd_jacobian(&v, &x, &DiffConfig::default()).unwrap();
        let jn = fd_jacobian(&v.clone().without_derivatives(), &x, &DiffConfig::default()).unwrap();
        prop_assert!(ja.sub(&jn).max_abs() <= 1e-4 * ja.max_abs().max(1.0));
    }

    #[test]
    fn bracket_of_sections_is_antisymmetric(c in coefs(2 * 5 * TERMS * 4), x in unit(2)) {
        let chart = so3_chart();
        let block = 5 * TERMS * 4;
        let xs = trig_vector(2, 5, &c[..block]);
        let ys = trig_vector(2, 5, &c[block..]);
        let cfg = DiffConfig::default();
        let xy = bracket_sections(&chart, &xs, &ys, &x, &cfg).unwrap();
        let yx = bracket_sections(&chart, &ys, &xs, &x, &cfg).unwrap();
        let sum: Vec<f64> = xy.iter().zip(&yx).map(|(a, b)| a + b).collect();
        prop_assert!(sum.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn d_squared_vanishes(c in coefs(TERMS * 4), x in unit(2)) {
        let chart = so3_chart();
        let f = trig_field(2, &c);
        let cfg = DiffConfig::default();
        let (chart1, cfg1) = (chart.clone(), cfg);
        let df = TensorField::fallible(2, &[5], move |x| d_function(&chart1, &f, x, &cfg1));
        let dd = d_oneform(&chart, &df, &x, &cfg.nested()).unwrap();
        prop_assert!(dd.max_abs() <= 1e-4, "{}", dd.max_abs());
    }

    #[test]
    fn poisson_bracket_identities(c in coefs(3 * TERMS * 9), x in unit(2), p in unit(5)) {
        let chart = so3_chart();
        let block = TERMS * 9;
        let [f, g, h] = [0, 1, 2].map(|k| trig_field(7, &c[k * block..(k + 1) * block]));
        let pt = DualPoint::new(x, p);
        let cfg = DiffConfig::default();
        let fg = poisson_bracket(&chart, &f, &g, &pt, &cfg).unwrap();
        let gf = poisson_bracket(&chart, &g, &f, &pt, &cfg).unwrap();
        prop_assert!((fg + gf).abs() <= 1e-12);

        let (g1, h1) = (g.clone(), h.clone());
        let gh = ScalarField::fallible(7, move |z| Ok(g1.eval(z)? * h1.eval(z)?));
        let lhs = poisson_bracket(&chart, &f, &gh, &pt, &cfg).unwrap();
        let z = pt.coords();
        let rhs = g.eval(&z).unwrap() * poisson_bracket(&chart, &f, &h, &pt, &cfg).unwrap()
            + h.eval(&z).unwrap() * fg;
        prop_assert!((lhs - rhs).abs() <= 1e-6, "{lhs} vs {rhs}");

        let xf = hamiltonian_section_of(&chart, &f, &pt, &cfg).unwrap();
        let xg = hamiltonian_section_of(&chart, &g, &pt, &cfg).unwrap();
        let omega = canonical_symplectic(&chart, &pt).unwrap();
        prop_assert!((fg + omega.pair((&xf.0, &xf.1), (&xg.0, &xg.1))).abs() <= 1e-6);
    }

    #[test]
    fn sode_property_is_exact(x in unit(2), y in unit(5)) {
        let model = atiyah_so3();
        let (xdot, _) = el_vector_field(&model.lagrangian, &PrimalPoint::new(x.clone(), y.clone())).unwrap();
        prop_assert_eq!(xdot, model.chart.anchor(&x).unwrap().mul_vec(&y));
    }

    #[test]
    fn hamilton_field_is_the_poisson_flow(x in unit(2), p in unit(5)) {
        let model = atiyah_so3();
        prop_assert!(poisson_flow_defect(&model.hamiltonian, &DualPoint::new(x, p)).unwrap() <= 1e-10);
    }

    #[test]
    fn legendre_round_trips(x in unit(2), y in unit(5)) {
        let sys = anharmonic_lagrangian();
        let cfg = LegendreConfig::default();
        let pt = PrimalPoint::new(x, y);
        let dual = legendre_map(&sys, &pt).unwrap();
        let back = legendre_inverse(&sys, &dual, None, &cfg).unwrap();
        prop_assert!(max_diff(&back.y, &pt.y) <= 10.0 * cfg.newton_tol);
        let again = legendre_map(&sys, &back).unwrap();
        prop_assert!(max_diff(&again.p, &dual.p) <= cfg.newton_tol);
    }

    #[test]
    fn legendre_round_trips_with_fd_derivatives(x in unit(2), y in unit(5)) {
        // Central differences put a floor near 1e-11 under the residual.
        let sys = LagrangianSystem::new(so3_chart(), anharmonic_field()).unwrap();
        let cfg = LegendreConfig { newton_tol: 1e-9, ..Default::default() };
        let pt = PrimalPoint::new(x, y);
        let dual = legendre_map(&sys, &pt).unwrap();
        let back = legendre_inverse(&sys, &dual, None, &cfg).unwrap();
        prop_assert!(max_diff(&back.y, &pt.y) <= 10.0 * cfg.newton_tol);
    }

    #[test]
    fn cartan_two_form_is_the_pulled_back_symplectic_form(x in unit(2), y in unit(5)) {
        let sys = anharmonic_lagrangian();
        let pt = PrimalPoint::new(x, y);
        let direct = cartan_data(&sys, &pt).unwrap().omega;
        let pulled = omega_pullback(&sys, &pt).unwrap();
        prop_assert!(direct.sub(&pulled).max_abs() <= 1e-5);
    }

    #[test]
    fn triple_base_projections(x in unit(2), p in unit(5), z in unit(5), v in unit(5)) {
        let chart = so3_chart();
        let pt = ProlPointEstar { x, p, z, v };
        let a = a_map(&chart, &pt).unwrap();
        let f = flat_map(&chart, &pt).unwrap();
        prop_assert_eq!((&a.x, &a.base), (&pt.x, &pt.z));
        prop_assert_eq!((&f.x, &f.base), (&pt.x, &pt.p));
    }

    #[test]
    fn hj_lift_of_linear_action(c in unit(2), x0 in unit(2)) {
        // H = ½|p|² - ½|c|² with S = c·x solves the Hamilton-Jacobi equation.
        let chart = AlgebroidChart::standard(2);
        let e = 0.5 * dot(&c, &c);
        let h = ScalarField::new(4, move |z| 0.5 * (z[2] * z[2] + z[3] * z[3]) - e);
        let sys = HamiltonianSystem::new(chart.clone(), h.clone()).unwrap();
        let alpha = TensorField::constant(2, &[2], c.clone());
        let (cocycle, hj) = hj_residual(&chart, &h, &alpha, &x0, &DiffConfig::default()).unwrap().max();
        prop_assert!(cocycle <= 1e-8 && hj <= 1e-8);
        let samples = hj_lift(&sys, &alpha, &x0, &IntegratorConfig::new(1e-2, 1.0).unwrap()).unwrap();
        let r = hamilton_residual(&sys, &samples).unwrap();
        prop_assert!(r.iter().all(|v| *v <= 1e-6));
    }
}

/// `L = ½|y|² + ¼ Σ (y^a)⁴ + sin(x¹) y^0 - cos(x²)` on the Atiyah chart of
/// the builtin `so(3)` model; its fiber Hessian is positive definite.
fn anharmonic_lagrangian() -> LagrangianSystem {
    LagrangianSystem::new(
        so3_chart(),
        anharmonic_field().with_gradient(|z| {
            let y = &z[2..];
            let mut g = vec![z[0].cos() * y[0], z[1].sin()];
            g.extend(y.iter().map(|v| v + v.powi(3)));
            g[2] += z[0].sin();
            g
        }),
    )
    .unwrap()
}

fn anharmonic_field() -> ScalarField {
    ScalarField::new(7, |z| {
        let y = &z[2..];
        0.5 * dot(y, y) + 0.25 * y.iter().map(|v| v.powi(4)).sum::<f64>() + z[0].sin() * y[0]
            - z[1].cos()
    })
}

/// Random Lie algebra and connection for [`atiyah_charts_are_algebroids`].
fn principal_strategy() -> impl Strategy<Value = PrincipalData> {
    (0usize..3, coefs(6 * TERMS * 4)).prop_map(|(kind, c)| {
        let (ng, structure) = match kind {
            0 => (1, Tensor3::zeros(1, 1, 1)),
            1 => (3, Tensor3::levi_civita()),
            // Heisenberg algebra: [e0, e1] = e2.
            _ => (
                3,
                Tensor3::from_fn([3, 3, 3], |g, a, b| match (g, a, b) {
                    (2, 0, 1) => 1.0,
                    (2, 1, 0) => -1.0,
                    _ => 0.0,
                }),
            ),
        };
        PrincipalData::new(2, structure, trig_tensor(2, &[ng, 2], &c)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn atiyah_charts_are_algebroids(pd in principal_strategy()) {
        let chart = atiyah_chart(&pd);
        let pts = halton_points(&[-1.0, -1.0], &[1.0, 1.0], 50, 1);
        let report = validate_structure(&chart, &pts, 1e-6, &DiffConfig::default()).unwrap();
        prop_assert!(report.pass, "{:?}", report);
    }
}

fn integrate_with(
    model: &Model,
    field: impl Fn(&[f64]) -> amech_core::Result<Vec<f64>>,
    x0: &[f64],
    t_end: f64,
    monitors: &[Monitor<'_>],
) -> amech_core::Trajectory {
    let traj = rk4_integrate(
        field,
        x0,
        &IntegratorConfig::new(1e-3, t_end).unwrap(),
        monitors,
    )
    .unwrap();
    assert!(traj.error.is_none(), "{}: {:?}", model.name, traj.error);
    traj
}

#[test]
fn lagrangian_energy_is_conserved() {
    for (model, x0) in [
        (rigid_body(), vec![0.0, 0.3, 1.0, -0.7]),
        (wong_abelian(), vec![0.1, -0.2, 0.5, 0.4, 1.2]),
        (atiyah_so3(), vec![0.2, -0.1, 0.3, 0.1, 0.5, -0.4, 0.2]),
    ] {
        let m = model.chart.base_dim();
        let sys = &model.lagrangian;
        let energy = Monitor::new("energy", |s: &[f64]| {
            sys.energy(&PrimalPoint::from_coords(s, m))
        });
        let traj = integrate_with(&model, sys.vector_field(), &x0, 10.0, &[energy]);
        let d = drift(&traj, "energy").unwrap().abs;
        assert!(d <= 1e-8, "{}: {d}", model.name);
    }
}

#[test]
fn hamiltonian_is_conserved() {
    for (model, x0) in [
        (rigid_body(), vec![0.0, 0.3, 2.0, -2.1]),
        (atiyah_so3(), vec![0.2, -0.1, 0.3, 0.1, 0.5, -0.4, 0.2]),
    ] {
        let m = model.chart.base_dim();
        let sys = &model.hamiltonian;
        let energy = Monitor::new("H", |s: &[f64]| sys.value(&DualPoint::from_coords(s, m)));
        let traj = integrate_with(&model, sys.vector_field(), &x0, 10.0, &[energy]);
        let d = drift(&traj, "H").unwrap().abs;
        assert!(d <= 1e-8, "{}: {d}", model.name);
    }
}

#[test]
fn noether_charge_of_the_gauge_direction() {
    let model = wong_abelian();
    let section = basis_section(2, 3, 2);
    let sys = &model.hamiltonian;
    let charge = Monitor::new("charge", |s: &[f64]| {
        conserved_momentum(&section, &DualPoint::from_coords(s, 2))
    });
    let traj = integrate_with(
        &model,
        sys.vector_field(),
        &[0.3, 0.1, -0.5, 0.8, 1.7],
        10.0,
        &[charge],
    );
    for s in &traj.states {
        assert!(
            symmetry_defect(sys, &section, &DualPoint::from_coords(s, 2))
                .unwrap()
                .abs()
                <= 1e-10
        );
    }
    assert!(drift(&traj, "charge").unwrap().abs <= 1e-8);
}

#[test]
fn nonabelian_wong_conserves_the_charge_norm() {
    let model = atiyah_so3();
    let (pd, wd) = model.principal.as_ref().unwrap();
    let norm2 = Monitor::new("norm2", |s: &[f64]| Ok(dot(&s[4..], &s[4..])));
    let traj = integrate_with(
        &model,
        wong_field(pd, wd),
        &[0.2, -0.1, 0.3, 0.1, 0.5, -0.4, 0.2],
        10.0,
        &[norm2],
    );
    assert!(drift(&traj, "norm2").unwrap().abs <= 1e-8);
}

#[test]
fn generic_and_hamilton_poincare_flows_coincide() {
    let model = atiyah_so3();
    let (pd, _) = model.principal.as_ref().unwrap();
    let h = model.hamiltonian.hamiltonian.clone();
    let hp = |s: &[f64]| {
        let (x, p, q) = hp_rhs(pd, &h, &DualPoint::from_coords(s, 2))?;
        Ok(concat(&x, &concat(&p, &q)))
    };
    let x0 = [0.2, -0.1, 0.3, 0.1, 0.5, -0.4, 0.2];
    let a = integrate_with(&model, model.hamiltonian.vector_field(), &x0, 5.0, &[]);
    let b = integrate_with(&model, hp, &x0, 5.0, &[]);
    let sup = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(u, v)| max_diff(u, v))
        .fold(0.0, f64::max);
    assert!(sup <= 1e-6, "{sup}");
}

#[test]
fn hamilton_solutions_are_admissible_in_sh() {
    let model = rigid_body();
    let sys = &model.hamiltonian;
    let dt = 1e-3;
    let traj = integrate_with(&model, sys.vector_field(), &[0.0, 0.3, 1.0, -0.7], 2.0, &[]);
    let mut worst = 0.0f64;
    for k in 1..traj.len() - 1 {
        let pt = sh_point(sys, &DualPoint::from_coords(&traj.states[k], 1)).unwrap();
        let dp: Vec<f64> = (1..4)
            .map(|a| (traj.states[k + 1][a] - traj.states[k - 1][a]) / (2.0 * dt))
            .collect();
        worst = worst.max(max_diff(&pt.v, &dp));
    }
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn quadratic_lagrangian_el_field_on_standard_chart() {
    // L = ½|y|² - ½|x|² gives ẏ = -x.
    let v = ScalarField::new(2, |x| 0.5 * dot(x, x));
    let sys = LagrangianSystem::new(
        AlgebroidChart::standard(2),
        quadratic_lagrangian(2, Matrix::identity(2), v),
    )
    .unwrap();
    let (_, ydot) =
        el_vector_field(&sys, &PrimalPoint::new(vec![0.3, -1.2], vec![0.5, 0.5])).unwrap();
    assert!(max_diff(&ydot, &[-0.3, 1.2]) <= 1e-9);
}
