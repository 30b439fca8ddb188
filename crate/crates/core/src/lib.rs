//! Lagrangian and Hamiltonian mechanics on Lie algebroids.
//!
//! A Lie algebroid is described in one coordinate chart by its anchor
//! `rho[i][alpha](x)` and structure functions `C[gamma][alpha][beta](x)`.
//! Everything in this crate works from those two fields: the differential
//! and bracket calculus, the linear Poisson structure on the dual, the
//! Euler-Lagrange and Hamilton sections, the Legendre transformation,
//! the canonical involution and Tulczyjew maps, and the Atiyah algebroid
//! of a principal bundle with its Wong system.
//!
//! Index layout is fixed throughout: base indices `i, j` run over `0..m`,
//! fiber indices `alpha, beta, gamma` over `0..n`, and the structure tensor
//! is stored as `C[gamma][alpha][beta]`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;

pub mod algebroid;
pub mod atiyah;
pub mod field;
pub mod hamiltonian;
pub mod integrate;
pub mod lagrangian;
pub mod legendre;
pub mod linalg;
pub mod models;
pub mod poisson;
pub mod tulczyjew;

pub use algebroid::{AlgebroidChart, StructureReport};
pub use atiyah::{PrincipalData, WongData};
pub use error::{Error, Result};
pub use field::{DiffConfig, ScalarField, TensorField, VectorField};
pub use hamiltonian::{HamiltonianSystem, SymplecticMatrix};
pub use integrate::{IntegratorConfig, Trajectory};
pub use lagrangian::PrimalPoint;
pub use lagrangian::{CartanData, LagrangianSystem};
pub use legendre::LegendreConfig;
pub use linalg::{Matrix, Tensor3};
pub use poisson::{DualPoint, PoissonBivector};
pub use tulczyjew::{ProlPointE, ProlPointEstar};
