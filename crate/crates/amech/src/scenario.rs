//! Scenario files (TOML) and the monitors they name.

use amech_core::hamiltonian::HamiltonianSystem;
use amech_core::integrate::{IntegratorConfig, Monitor};
use amech_core::lagrangian::PrimalPoint;
use amech_core::linalg::dot;
use amech_core::models::Model;
use amech_core::DualPoint;
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    Lagrangian,
    Hamiltonian,
    Wong,
}

impl Dynamics {
    /// Whether the fiber part of the state is a momentum.
    pub fn is_dual(self) -> bool {
        !matches!(self, Dynamics::Lagrangian)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: String,
    pub dynamics: Dynamics,
    pub initial_state: Vec<f64>,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub monitors: Vec<String>,
    /// Coefficients `a` of the linear function `S(x) = a·x` used by the
    /// `hj-residual` monitor.
    #[serde(default)]
    pub hj_section: Option<Vec<f64>>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        toml::from_str(text).context("malformed scenario")
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        Ok(IntegratorConfig::new(
            self.integrator.dt,
            self.integrator.t_end,
        )?)
    }

    pub fn check(&self, model: &Model) -> Result<()> {
        let d = model.chart.base_dim() + model.chart.rank();
        ensure!(
            self.initial_state.len() == d,
            "initial_state has {} entries, model `{}` needs {d}",
            self.initial_state.len(),
            model.name
        );
        ensure!(
            self.initial_state.iter().all(|v| v.is_finite()),
            "initial_state must be finite"
        );
        if self.dynamics == Dynamics::Wong && model.principal.is_none() {
            bail!("wong dynamics needs a model built from principal bundle data");
        }
        Ok(())
    }
}

fn section_index(name: &str, n: usize) -> Result<usize> {
    let k: usize = name
        .strip_prefix('e')
        .and_then(|s| s.parse().ok())
        .with_context(|| format!("unknown section `{name}` (expected e1..e{n})"))?;
    ensure!(
        (1..=n).contains(&k),
        "section `{name}` out of range e1..e{n}"
    );
    Ok(k - 1)
}

fn energy_of(sys: &HamiltonianSystem, m: usize) -> impl Fn(&[f64]) -> amech_core::Result<f64> + '_ {
    move |z| sys.value(&DualPoint::from_coords(z, m))
}

/// Builds the monitors named in a scenario.
///
/// `energy` is `E_L` or `H`; `momentum:eK` the momentum paired with the
/// K-th basis section; `casimir:norm2` the squared norm of the momentum
/// and `casimir:group` the κ-norm of the Lie algebra momentum of an
/// Atiyah model; `hj-residual` is `|H(x, d S(x))|` for the scenario's
/// linear `S`.
pub fn monitors<'a>(scenario: &'a Scenario, model: &'a Model) -> Result<Vec<Monitor<'a>>> {
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let dual = scenario.dynamics.is_dual();
    let lag = &model.lagrangian;
    let momentum = move |z: &[f64]| -> amech_core::Result<Vec<f64>> {
        if dual {
            Ok(z[m..].to_vec())
        } else {
            lag.fiber_derivative(&PrimalPoint::from_coords(z, m))
        }
    };
    let mut out = Vec::new();
    for name in &scenario.monitors {
        let monitor = match name.split_once(':') {
            None if name == "energy" => {
                if dual {
                    Monitor::new(name.clone(), energy_of(&model.hamiltonian, m))
                } else {
                    Monitor::new(name.clone(), move |z: &[f64]| {
                        lag.energy(&PrimalPoint::from_coords(z, m))
                    })
                }
            }
            None if name == "hj-residual" => {
                ensure!(dual, "hj-residual needs hamiltonian dynamics");
                let a = scenario
                    .hj_section
                    .clone()
                    .context("hj-residual needs `hj_section` in the scenario")?;
                ensure!(a.len() == m, "hj_section must have {m} entries");
                let sys = &model.hamiltonian;
                Monitor::new(name.clone(), move |z: &[f64]| {
                    let x = &z[..m];
                    let p = sys.chart.anchor(x)?.tr_mul_vec(&a);
                    Ok(sys.value(&DualPoint::new(x.to_vec(), p))?.abs())
                })
            }
            Some(("momentum", section)) => {
                let k = section_index(section, n)?;
                Monitor::new(name.clone(), move |z: &[f64]| Ok(momentum(z)?[k]))
            }
            Some(("casimir", "norm2")) => Monitor::new(name.clone(), move |z: &[f64]| {
                let p = momentum(z)?;
                Ok(dot(&p, &p))
            }),
            Some(("casimir", "group")) => {
                let (_, wd) = model
                    .principal
                    .as_ref()
                    .context("casimir:group needs an Atiyah model")?;
                ensure!(dual, "casimir:group is defined on momenta");
                Monitor::new(name.clone(), move |z: &[f64]| {
                    let pbar = &z[2 * m..];
                    let v = amech_core::atiyah::locked_velocity(wd, pbar)?;
                    Ok(dot(pbar, &v))
                })
            }
            _ => bail!("unknown monitor `{name}`"),
        };
        out.push(monitor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use amech_core::models::builtin;

    const TEXT: &str = r#"
model = "builtin:so3-rigid-body"
dynamics = "hamiltonian"
initial_state = [0.0, 1.0, 0.5, -0.3]
monitors = ["energy", "momentum:e2", "casimir:norm2"]

[integrator]
dt = 1e-3
t_end = 1.0
"#;

    #[test]
    fn parses_and_builds_monitors() {
        let sc = Scenario::parse(TEXT).unwrap();
        assert_eq!(sc.dynamics, Dynamics::Hamiltonian);
        let model = builtin("so3").unwrap();
        sc.check(&model).unwrap();
        let mons = monitors(&sc, &model).unwrap();
        assert_eq!(mons.len(), 3);
        assert_eq!((mons[1].f)(&sc.initial_state).unwrap(), 0.5);
        assert!(((mons[2].f)(&sc.initial_state).unwrap() - 1.34).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Scenario::parse("model = 1").is_err());
        let mut sc = Scenario::parse(TEXT).unwrap();
        sc.initial_state.pop();
        assert!(sc.check(&builtin("so3").unwrap()).is_err());
        let mut sc = Scenario::parse(TEXT).unwrap();
        sc.monitors = vec!["momentum:e9".into()];
        assert!(monitors(&sc, &builtin("so3").unwrap()).is_err());
        sc.monitors = vec!["entropy".into()];
        assert!(monitors(&sc, &builtin("so3").unwrap()).is_err());
    }
}
