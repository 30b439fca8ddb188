//! The `validate`, `simulate` and `check` commands.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use amech_core::algebroid::validate_structure;
use amech_core::atiyah::{hp_rhs, lp_rhs, wong_field};
use amech_core::field::DiffConfig;
use amech_core::hamiltonian::hamilton_vector_field;
use amech_core::integrate::{drift, rk4_integrate, Trajectory};
use amech_core::lagrangian::{is_regular, PrimalPoint};
use amech_core::legendre::{relatedness_defect, LegendreConfig};
use amech_core::linalg::{concat, distance};
use amech_core::models::Model;
use amech_core::tulczyjew::{
    a_map, a_map_inverse, flat_inverse, flat_map, sh_point, sh_residual, sigma, sl_point,
    sl_residual,
};
use amech_core::{DualPoint, Error, ProlPointE, ProlPointEstar};
use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::registry::resolve;
use crate::scenario::{monitors, Dynamics, Scenario};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_MALFORMED: u8 = 2;
pub const EXIT_NONFINITE: u8 = 3;

/// Exit code and JSON report of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: u8,
    pub report: Value,
}

impl Outcome {
    fn verdict(pass: bool, report: Value) -> Outcome {
        Outcome {
            code: if pass { EXIT_PASS } else { EXIT_FAIL },
            report,
        }
    }
}

/// Seeded sampler for random points in the model's boxes.
pub struct Sampler {
    rng: ChaCha8Rng,
    base: f64,
    fiber: f64,
}

impl Sampler {
    pub fn new(model: &Model, seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            base: model.base_radius,
            fiber: model.fiber_radius,
        }
    }

    fn uniform(&mut self, len: usize, r: f64) -> Vec<f64> {
        (0..len).map(|_| self.rng.gen_range(-r..=r)).collect()
    }

    pub fn base(&mut self, m: usize) -> Vec<f64> {
        self.uniform(m, self.base)
    }

    pub fn fiber(&mut self, n: usize) -> Vec<f64> {
        self.uniform(n, self.fiber)
    }
}

pub fn validate(
    model: &str,
    points: usize,
    tol: f64,
    seed: u64,
    diff: DiffConfig,
) -> Result<Outcome> {
    let model = resolve(model, diff)?;
    let mut sampler = Sampler::new(&model, seed);
    let pts: Vec<Vec<f64>> = (0..points)
        .map(|_| sampler.base(model.chart.base_dim()))
        .collect();
    let start = Instant::now();
    let report = validate_structure(&model.chart, &pts, tol, &diff)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(Outcome::verdict(
        report.pass,
        json!({
            "model": model.name,
            "samples": report.samples,
            "tolerance": report.tolerance,
            "antisymmetry": report.antisymmetry,
            "anchor_residual": report.anchor_residual,
            "jacobi_residual": report.jacobi_residual,
            "pass": report.pass,
            "seconds": elapsed,
        }),
    ))
}

#[derive(Debug, Clone, Copy, Serialize)]
struct DriftEntry {
    abs: f64,
    rel: f64,
}

/// Sidecar path for a CSV output: `<out>.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn run_scenario(scenario: &Scenario, model: &Model) -> Result<Trajectory> {
    scenario.check(model)?;
    let cfg = scenario.integrator()?;
    let mons = monitors(scenario, model)?;
    let x0 = &scenario.initial_state;
    let traj = match scenario.dynamics {
        Dynamics::Lagrangian => rk4_integrate(model.lagrangian.vector_field(), x0, &cfg, &mons)?,
        Dynamics::Hamiltonian => rk4_integrate(model.hamiltonian.vector_field(), x0, &cfg, &mons)?,
        Dynamics::Wong => {
            let (pd, wd) = model
                .principal
                .as_ref()
                .context("wong dynamics needs principal data")?;
            rk4_integrate(wong_field(pd, wd), x0, &cfg, &mons)?
        }
    };
    Ok(traj)
}

pub fn csv_header(scenario: &Scenario, model: &Model) -> Vec<String> {
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let fiber = if scenario.dynamics.is_dual() {
        "p"
    } else {
        "y"
    };
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|a| format!("{fiber}{a}")));
    header.extend(scenario.monitors.iter().cloned());
    header
}

/// Shortest representation that reads back to the same `f64`; always uses
/// a decimal point regardless of locale.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, header: &[String], traj: &Trajectory) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for (k, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut row = vec![format_float(*t)];
        row.extend(state.iter().map(|v| format_float(*v)));
        row.extend(traj.monitors.iter().map(|(_, c)| format_float(c[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(
    config: &Path,
    model_override: Option<&str>,
    out: &Path,
    diff: DiffConfig,
) -> Result<Outcome> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("cannot read {}", config.display()))?;
    let mut scenario = Scenario::parse(&text)?;
    if let Some(m) = model_override {
        scenario.model = m.to_string();
    }
    let model = resolve(&scenario.model, diff)?;
    let traj = run_scenario(&scenario, &model)?;
    write_csv(out, &csv_header(&scenario, &model), &traj)?;

    let mut drifts = serde_json::Map::new();
    for name in &scenario.monitors {
        let d = drift(&traj, name)?;
        drifts.insert(
            name.clone(),
            serde_json::to_value(DriftEntry {
                abs: d.abs,
                rel: d.rel,
            })?,
        );
    }
    let code = match &traj.error {
        None => EXIT_PASS,
        Some(Error::NonFiniteField { .. }) => EXIT_NONFINITE,
        Some(e) => bail!("simulation stopped: {e}"),
    };
    let report = json!({
        "model": model.name,
        "dynamics": scenario.dynamics,
        "rows": traj.len(),
        "t_final": traj.times.last(),
        "completed": traj.error.is_none(),
        "error": traj.error.as_ref().map(|e| e.to_string()),
        "drift": drifts,
    });
    let mut f = File::create(sidecar_path(out))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(Outcome { code, report })
}

pub const CHECK_NAMES: [&str; 5] = ["involution", "triple", "legendre", "sl-eq-sh", "hp-lp"];

/// Default tolerance of each check.
pub fn default_tolerance(check: &str) -> Option<f64> {
    match check {
        "involution" => Some(1e-14),
        "triple" => Some(1e-12),
        "legendre" | "sl-eq-sh" => Some(1e-6),
        "hp-lp" => Some(1e-8),
        _ => None,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check_involution(model: &Model, s: &mut Sampler, points: usize) -> Result<Value> {
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let (mut worst, mut interchange) = (0.0f64, true);
    for _ in 0..points {
        let pt = ProlPointE {
            x: s.base(m),
            y: s.fiber(n),
            z: s.fiber(n),
            v: s.fiber(n),
        };
        let once = sigma(&model.chart, &pt)?;
        interchange &= once.x == pt.x && once.y == pt.z && once.z == pt.y;
        let twice = sigma(&model.chart, &once)?;
        for (a, b) in [
            (&twice.x, &pt.x),
            (&twice.y, &pt.y),
            (&twice.z, &pt.z),
            (&twice.v, &pt.v),
        ] {
            worst = worst.max(max_abs_diff(a, b));
        }
    }
    Ok(json!({ "max_residual": worst, "projection_interchange": interchange }))
}

fn check_triple(model: &Model, s: &mut Sampler, points: usize) -> Result<Value> {
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let (mut worst, mut projections) = (0.0f64, true);
    for _ in 0..points {
        let pt = ProlPointEstar {
            x: s.base(m),
            p: s.fiber(n),
            z: s.fiber(n),
            v: s.fiber(n),
        };
        let a = a_map(&model.chart, &pt)?;
        let f = flat_map(&model.chart, &pt)?;
        projections &= a.base == pt.z && f.base == pt.p && a.x == pt.x && f.x == pt.x;
        for back in [
            a_map_inverse(&model.chart, &a)?,
            flat_inverse(&model.chart, &f)?,
        ] {
            worst = worst.max(max_abs_diff(
                &concat(&back.p, &back.z),
                &concat(&pt.p, &pt.z),
            ));
            worst = worst.max(max_abs_diff(&back.v, &pt.v));
        }
    }
    Ok(json!({ "max_residual": worst, "base_projections": projections }))
}

fn check_legendre(model: &Model, s: &mut Sampler, points: usize) -> Result<Value> {
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let mut worst = 0.0f64;
    for _ in 0..points {
        let pt = PrimalPoint::new(s.base(m), s.fiber(n));
        worst = worst.max(relatedness_defect(
            &model.lagrangian,
            &pt,
            &LegendreConfig::default(),
        )?);
    }
    Ok(json!({ "max_residual": worst }))
}

fn check_sl_sh(model: &Model, s: &mut Sampler, points: usize) -> Result<Value> {
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let sys = &model.lagrangian;
    let (mut sl_in_sh, mut sh_in_sl) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let pt = PrimalPoint::new(s.base(m), s.fiber(n));
        if !is_regular(sys, &pt, sys.cond_tol) {
            return Err(Error::PreconditionFailed(format!(
                "Lagrangian of `{}` is not regular at x = {:?}, y = {:?}",
                model.name, pt.x, pt.y
            ))
            .into());
        }
        sl_in_sh = sl_in_sh.max(sh_residual(&model.hamiltonian, &sl_point(sys, &pt)?)?.max());
        let dual = DualPoint::new(s.base(m), s.fiber(n));
        sh_in_sl = sh_in_sl.max(sl_residual(sys, &sh_point(&model.hamiltonian, &dual)?)?.max());
    }
    Ok(
        json!({ "max_residual": sl_in_sh.max(sh_in_sl), "sl_in_sh": sl_in_sh, "sh_in_sl": sh_in_sl }),
    )
}

fn check_hp_lp(model: &Model, s: &mut Sampler, points: usize) -> Result<Value> {
    let Some((pd, _)) = &model.principal else {
        return Err(
            Error::PreconditionFailed(format!("`{}` is not an Atiyah model", model.name)).into(),
        );
    };
    let (m, n) = (model.chart.base_dim(), model.chart.rank());
    let (mut hp, mut lp) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let dual = DualPoint::new(s.base(m), s.fiber(n));
        let (xdot, pdot) = hamilton_vector_field(&model.hamiltonian, &dual)?;
        let (ex, ep, eq) = hp_rhs(pd, &model.hamiltonian.hamiltonian, &dual)?;
        hp = hp.max(distance(
            &concat(&xdot, &pdot),
            &concat(&ex, &concat(&ep, &eq)),
        ));
        let primal = PrimalPoint::new(s.base(m), s.fiber(n));
        let r = lp_rhs(pd, &model.lagrangian.lagrangian, &primal)?.residual();
        lp = lp.max(r.0.max(r.1));
    }
    Ok(json!({ "max_residual": hp.max(lp), "hamilton_poincare": hp, "lagrange_poincare": lp }))
}

pub fn check(
    name: &str,
    model: &str,
    points: usize,
    tol: Option<f64>,
    seed: u64,
    diff: DiffConfig,
) -> Result<Outcome> {
    let Some(default_tol) = default_tolerance(name) else {
        bail!(
            "unknown check `{name}` (available: {})",
            CHECK_NAMES.join(", ")
        );
    };
    let tol = tol.unwrap_or(default_tol);
    if tol.is_nan() || tol < 0.0 {
        bail!("tolerance must be non-negative, got {tol}");
    }
    let model = resolve(model, diff)?;
    let mut sampler = Sampler::new(&model, seed);
    let mut report = match name {
        "involution" => check_involution(&model, &mut sampler, points)?,
        "triple" => check_triple(&model, &mut sampler, points)?,
        "legendre" => check_legendre(&model, &mut sampler, points)?,
        "sl-eq-sh" => check_sl_sh(&model, &mut sampler, points)?,
        _ => check_hp_lp(&model, &mut sampler, points)?,
    };
    let worst = report["max_residual"].as_f64().unwrap_or(f64::INFINITY);
    let flags_ok = ["projection_interchange", "base_projections"]
        .iter()
        .all(|k| report.get(*k).and_then(Value::as_bool).unwrap_or(true));
    let pass = worst <= tol && flags_ok;
    let obj = report.as_object_mut().expect("check reports are objects");
    obj.insert("check".into(), json!(name));
    obj.insert("model".into(), json!(model.name));
    obj.insert("points".into(), json!(points));
    obj.insert("tolerance".into(), json!(tol));
    obj.insert("pass".into(), json!(pass));
    Ok(Outcome::verdict(pass, report))
}
