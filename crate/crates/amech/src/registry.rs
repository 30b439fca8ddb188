//! Resolution of model names and files, and the global FD step override.

use std::path::Path;

use amech_core::field::DiffConfig;
use amech_core::hamiltonian::HamiltonianSystem;
use amech_core::lagrangian::{quadratic_lagrangian, LagrangianSystem};
use amech_core::legendre::{induced_hamiltonian, LegendreConfig};
use amech_core::linalg::{dot, Matrix};
use amech_core::models::{builtin, Model, BUILTIN_NAMES};
use amech_core::{AlgebroidChart, ScalarField};
use anyhow::{anyhow, bail, Context, Result};

use crate::formats::{matrix, parse_model_file, ChartSpec, ModelFile};

pub const FD_STEP_VAR: &str = "AMECH_FD_H";

/// Finite-difference configuration, with the first-derivative step taken
/// from `AMECH_FD_H` when it is set.
pub fn diff_from_env() -> Result<DiffConfig> {
    match std::env::var(FD_STEP_VAR) {
        Ok(v) => {
            let h: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("{FD_STEP_VAR}={v} is not a number"))?;
            Ok(DiffConfig::with_step(h)?)
        }
        Err(std::env::VarError::NotPresent) => Ok(DiffConfig::default()),
        Err(e) => Err(anyhow!("{FD_STEP_VAR}: {e}")),
    }
}

/// `builtin:<name>`, a bare builtin name, or a path to a JSON model file.
pub fn resolve(spec: &str, diff: DiffConfig) -> Result<Model> {
    let name = spec.strip_prefix("builtin:").unwrap_or(spec);
    if let Some(model) = builtin(name) {
        return Ok(model.with_diff(diff)?);
    }
    if spec.starts_with("builtin:") {
        bail!(
            "unknown builtin model `{name}` (available: {})",
            BUILTIN_NAMES.join(", ")
        );
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("file")
        .to_string();
    match parse_model_file(&text)? {
        ModelFile::Principal(spec) => {
            let (pd, wd) = spec.build()?;
            let name = spec.label.clone().unwrap_or(label);
            Ok(Model::from_principal(name, pd.with_diff(diff), wd, 1.0)?)
        }
        ModelFile::Chart(spec) => chart_model(&spec, label, diff),
    }
}

fn chart_model(spec: &ChartSpec, label: String, diff: DiffConfig) -> Result<Model> {
    let name = spec.label.clone().unwrap_or(label);
    let chart = AlgebroidChart::constant(name.clone(), spec.anchor()?, spec.structure()?)?;
    let (m, n) = (spec.m, spec.n);
    let (kinetic, k) = match &spec.lagrangian {
        Some(q) => (matrix(&q.kinetic, n, n, "kinetic")?, q.stiffness),
        None => (Matrix::identity(n), 0.0),
    };
    let potential = ScalarField::new(m, move |x| 0.5 * k * dot(x, x))
        .with_gradient(move |x| x.iter().map(|v| k * v).collect())
        .with_hessian(move |_| Matrix::diag(&vec![k; m]));
    let lagrangian = LagrangianSystem::new(
        chart.clone(),
        quadratic_lagrangian(m, kinetic.clone(), potential),
    )?
    .with_diff(diff);
    let inverse = kinetic
        .symmetrized()
        .lu()
        .ok()
        .filter(|lu| lu.condition() <= lagrangian.cond_tol)
        .map(|lu| lu.inverse());
    let hamiltonian = match inverse {
        Some(kinv) => {
            let (k1, k2) = (kinv.clone(), kinv);
            let h = ScalarField::new(m + n, move |z| {
                0.5 * dot(&z[m..], &k1.mul_vec(&z[m..])) + 0.5 * k * dot(&z[..m], &z[..m])
            })
            .with_gradient(move |z| {
                let mut g: Vec<f64> = z[..m].iter().map(|v| k * v).collect();
                g.extend(k2.mul_vec(&z[m..]));
                g
            });
            HamiltonianSystem::new(chart.clone(), h)?.with_diff(diff)
        }
        // irregular: every evaluation reports the singular Hessian
        None => induced_hamiltonian(&lagrangian, &LegendreConfig::default()),
    };
    Ok(Model {
        name,
        chart,
        lagrangian,
        hamiltonian,
        principal: None,
        base_radius: 1.0,
        fiber_radius: 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve_with_and_without_prefix() {
        let d = DiffConfig::default();
        assert_eq!(resolve("builtin:so3", d).unwrap().name, "so3-rigid-body");
        assert_eq!(resolve("euclid-sho", d).unwrap().name, "euclid-sho");
        assert!(resolve("builtin:nothing", d).is_err());
        assert!(resolve("/nonexistent/model.json", d).is_err());
    }
}
