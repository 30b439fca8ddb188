//! Builtin models with analytic derivatives.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebroid::AlgebroidChart;
use crate::atiyah::{atiyah_chart, wong_system, PrincipalData, WongData};
use crate::error::Result;
use crate::field::{DiffConfig, ScalarField, TensorField};
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::{quadratic_lagrangian, LagrangianSystem};
use crate::linalg::{dot, Matrix, Tensor3};

pub const BUILTIN_NAMES: [&str; 4] = ["euclid-sho", "so3-rigid-body", "wong-abelian", "atiyah-so3"];

/// Principal moments of inertia of the builtin rigid body.
pub const RIGID_BODY_INERTIA: [f64; 3] = [1.0, 2.0, 3.0];

/// Field strength of the builtin abelian Wong model.
pub const WONG_FIELD: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub chart: AlgebroidChart,
    pub lagrangian: LagrangianSystem,
    pub hamiltonian: HamiltonianSystem,
    /// Present for models built as Atiyah algebroids.
    pub principal: Option<(PrincipalData, WongData)>,
    /// Half-width of the box `[-r, r]` used for random base points.
    pub base_radius: f64,
    /// Half-width of the box used for random fiber points.
    pub fiber_radius: f64,
}

pub fn builtin(name: &str) -> Option<Model> {
    match name {
        "euclid-sho" => Some(euclid_sho()),
        "so3-rigid-body" | "so3" => Some(rigid_body()),
        "wong-abelian" => Some(wong_abelian()),
        "atiyah-so3" => Some(atiyah_so3()),
        _ => None,
    }
}

/// Harmonic oscillator on the plane, `L = ½|y|² - ½|x|²`.
pub fn euclid_sho() -> Model {
    let chart = AlgebroidChart::standard(2);
    let v = ScalarField::new(2, |x| 0.5 * dot(x, x))
        .with_gradient(|x| x.to_vec())
        .with_hessian(|_| Matrix::identity(2));
    let l = quadratic_lagrangian(2, Matrix::identity(2), v);
    let h = ScalarField::new(4, |z| 0.5 * dot(z, z))
        .with_gradient(|z| z.to_vec())
        .with_hessian(|_| Matrix::identity(4));
    Model {
        name: "euclid-sho".into(),
        lagrangian: LagrangianSystem::new(chart.clone(), l).expect("dimensions"),
        hamiltonian: HamiltonianSystem::new(chart.clone(), h).expect("dimensions"),
        chart,
        principal: None,
        base_radius: 2.0,
        fiber_radius: 2.0,
    }
}

/// Free rigid body on so(3) with inertia `diag(1, 2, 3)`.
pub fn rigid_body() -> Model {
    let chart = AlgebroidChart::so3();
    let inertia = Matrix::diag(&RIGID_BODY_INERTIA);
    let l = quadratic_lagrangian(1, inertia, ScalarField::constant(1, 0.0));
    let inv: Vec<f64> = RIGID_BODY_INERTIA.iter().map(|i| 1.0 / i).collect();
    let (i1, i2, i3) = (inv.clone(), inv.clone(), inv);
    let h = ScalarField::new(4, move |z| {
        0.5 * (1..4).map(|a| i1[a - 1] * z[a] * z[a]).sum::<f64>()
    })
    .with_gradient(move |z| vec![0.0, i2[0] * z[1], i2[1] * z[2], i2[2] * z[3]])
    .with_hessian(move |_| Matrix::diag(&[0.0, i3[0], i3[1], i3[2]]));
    Model {
        name: "so3-rigid-body".into(),
        lagrangian: LagrangianSystem::new(chart.clone(), l).expect("dimensions"),
        hamiltonian: HamiltonianSystem::new(chart.clone(), h).expect("dimensions"),
        chart,
        principal: None,
        base_radius: 1.0,
        fiber_radius: 2.0,
    }
}

fn euclidean_metric(m: usize) -> TensorField {
    TensorField::constant(m, &[m, m], Matrix::identity(m).into_vec())
}

impl Model {
    /// The Wong system of `(pd, wd)` on its Atiyah chart.
    pub fn from_principal(
        name: impl Into<String>,
        pd: PrincipalData,
        wd: WongData,
        base_radius: f64,
    ) -> Result<Model> {
        let (lagrangian, hamiltonian) = wong_system(&pd, &wd)?;
        Ok(Model {
            name: name.into(),
            chart: atiyah_chart(&pd),
            lagrangian,
            hamiltonian,
            principal: Some((pd, wd)),
            base_radius,
            fiber_radius: 1.5,
        })
    }

    /// Rebuilds the model so every finite difference uses `diff`.
    pub fn with_diff(self, diff: DiffConfig) -> Result<Model> {
        match self.principal {
            Some((pd, wd)) => {
                Model::from_principal(self.name, pd.with_diff(diff), wd, self.base_radius)
            }
            None => Ok(Model {
                lagrangian: self.lagrangian.with_diff(diff),
                hamiltonian: self.hamiltonian.with_diff(diff),
                ..self
            }),
        }
    }
}

fn wong_model(name: &str, pd: PrincipalData, wd: WongData, base_radius: f64) -> Model {
    Model::from_principal(name, pd, wd, base_radius).expect("builtin Wong data is valid")
}

/// Connection `A = (0, B₀ x¹)` of a uniform magnetic field on the plane.
pub fn magnetic_connection(b0: f64) -> TensorField {
    TensorField::new(2, &[1, 2], move |x| vec![0.0, b0 * x[0]])
        .with_jacobian(move |_| Matrix::from_row_major(2, 2, vec![0.0, 0.0, b0, 0.0]))
}

/// Charged particle in a uniform magnetic field as an abelian Wong
/// system: `m = 2`, `U(1)` gauge group, `κ = 1`, `g = I`.
pub fn wong_abelian() -> Model {
    let pd = PrincipalData::new(2, Tensor3::zeros(1, 1, 1), magnetic_connection(WONG_FIELD))
        .expect("valid");
    let wd = WongData::new(Matrix::identity(1), euclidean_metric(2)).expect("valid");
    wong_model("wong-abelian", pd, wd, 2.0)
}

/// A smooth non-abelian `so(3)` connection on the plane:
/// `A_1 = (sin x², 0.3 x¹, x¹x²)`, `A_2 = (cos x¹, 0.5, -0.2 (x²)²)`,
/// stored as `A[a][i]`.
pub fn smooth_so3_connection() -> TensorField {
    TensorField::new(2, &[3, 2], |x| {
        vec![
            libm::sin(x[1]),
            libm::cos(x[0]),
            0.3 * x[0],
            0.5,
            x[0] * x[1],
            -0.2 * x[1] * x[1],
        ]
    })
    .with_jacobian(|x| {
        Matrix::from_row_major(
            6,
            2,
            vec![
                0.0,
                libm::cos(x[1]),
                -libm::sin(x[0]),
                0.0,
                0.3,
                0.0,
                0.0,
                0.0,
                x[1],
                x[0],
                0.0,
                -0.4 * x[1],
            ],
        )
    })
}

/// Atiyah algebroid of the trivial `SO(3)` bundle over the plane with
/// [`smooth_so3_connection`], carrying the Wong system with `κ = I`,
/// `g = I`.
pub fn atiyah_so3() -> Model {
    let pd = PrincipalData::new(2, Tensor3::levi_civita(), smooth_so3_connection()).expect("valid");
    let wd = WongData::new(Matrix::identity(3), euclidean_metric(2)).expect("valid");
    wong_model("atiyah-so3", pd, wd, 1.0)
}
