//! Fixed-step classic RK4 with per-step scalar monitors.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            t_end: 1.0,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let cfg = IntegratorConfig { dt, t_end };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig("t_end must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        let k = libm::ceil(self.t_end / self.dt - 1e-9) as usize;
        k.max(1)
    }
}

type MonitorFn<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + 'a>;

/// A named scalar function of the state, sampled at every accepted state.
pub struct Monitor<'a> {
    pub name: String,
    pub f: MonitorFn<'a>,
}

impl<'a> Monitor<'a> {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> Result<f64> + 'a) -> Self {
        Monitor {
            name: name.into(),
            f: Box::new(f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// One channel per monitor, aligned with `times`.
    pub monitors: Vec<(String, Vec<f64>)>,
    /// Set when the run stopped early; the samples up to that point are kept.
    pub error: Option<Error>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.monitors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownChannel(name.into()))
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

fn checked(v: Vec<f64>, d: usize) -> Result<Vec<f64>> {
    if v.len() != d {
        return Err(Error::shape("velocity", d, v.len()));
    }
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFiniteField { index }),
        None => Ok(v),
    }
}

fn rk4_step(field: &impl Fn(&[f64]) -> Result<Vec<f64>>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let d = x.len();
    let k1 = checked(field(x)?, d)?;
    let k2 = checked(field(&axpy(x, 0.5 * h, &k1))?, d)?;
    let k3 = checked(field(&axpy(x, 0.5 * h, &k2))?, d)?;
    let k4 = checked(field(&axpy(x, h, &k3))?, d)?;
    let next: Vec<f64> = (0..d)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    checked(next, d)
}

/// Integrates `ẋ = field(x)` from `x0` over `[0, t_end]`.
///
/// Errors raised by the field or by monitors after the start truncate the
/// trajectory and are stored in [`Trajectory::error`]; only invalid
/// configurations and failures at the initial state are returned as `Err`.
pub fn rk4_integrate(
    field: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    cfg: &IntegratorConfig,
    monitors: &[Monitor<'_>],
) -> Result<Trajectory> {
    cfg.validate()?;
    let x0 = checked(x0.to_vec(), x0.len())?;
    let steps = cfg.steps();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        monitors: monitors
            .iter()
            .map(|m| (m.name.clone(), Vec::with_capacity(steps + 1)))
            .collect(),
        error: None,
    };
    let sample = |traj: &mut Trajectory, t: f64, x: Vec<f64>| -> Result<()> {
        let values = monitors
            .iter()
            .map(|m| (m.f)(&x))
            .collect::<Result<Vec<_>>>()?;
        for (chan, v) in traj.monitors.iter_mut().zip(values) {
            chan.1.push(v);
        }
        traj.times.push(t);
        traj.states.push(x);
        Ok(())
    };
    sample(&mut traj, 0.0, x0)?;
    for k in 1..=steps {
        let t_prev = traj.times[k - 1];
        let t = if k == steps {
            cfg.t_end
        } else {
            k as f64 * cfg.dt
        };
        let prev = &traj.states[k - 1];
        let next = rk4_step(&field, prev, t - t_prev).and_then(|x| sample(&mut traj, t, x));
        if let Err(e) = next {
            traj.error = Some(e);
            break;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    /// `max_t |c(t) - c(0)|`
    pub abs: f64,
    /// `abs / |c(0)|`, or `abs` when `c(0) = 0`.
    pub rel: f64,
}

pub fn drift(traj: &Trajectory, channel: &str) -> Result<Drift> {
    let values = traj.channel(channel)?;
    let Some(&c0) = values.first() else {
        return Ok(Drift { abs: 0.0, rel: 0.0 });
    };
    let abs = values.iter().map(|c| (c - c0).abs()).fold(0.0, f64::max);
    let rel = if c0 == 0.0 { abs } else { abs / c0.abs() };
    Ok(Drift { abs, rel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn decay(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![-x[0]])
    }

    #[test]
    fn exponential_decay() {
        let traj = rk4_integrate(
            decay,
            &[1.0],
            &IntegratorConfig::new(1e-3, 1.0).unwrap(),
            &[],
        )
        .unwrap();
        assert_eq!(traj.len(), 1001);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!((traj.last().unwrap()[0] - libm::exp(-1.0)).abs() < 1e-10);
    }

    #[test]
    fn zero_field_is_constant() {
        let traj = rk4_integrate(
            |_| Ok(vec![0.0, 0.0]),
            &[1.5, -2.0],
            &IntegratorConfig::new(0.1, 1.0).unwrap(),
            &[],
        )
        .unwrap();
        assert!(traj.states.iter().all(|s| s == &[1.5, -2.0]));
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |dt| {
            let traj = rk4_integrate(decay, &[1.0], &IntegratorConfig::new(dt, 1.0).unwrap(), &[])
                .unwrap();
            (traj.last().unwrap()[0] - libm::exp(-1.0)).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn short_last_step_lands_on_t_end() {
        let traj = rk4_integrate(
            decay,
            &[1.0],
            &IntegratorConfig::new(0.3, 1.0).unwrap(),
            &[],
        )
        .unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| Ok(vec![x[1], -libm::sin(x[0])]);
        let cfg = IntegratorConfig::new(1e-2, 3.0).unwrap();
        let a = rk4_integrate(f, &[1.0, 0.0], &cfg, &[]).unwrap();
        let b = rk4_integrate(f, &[1.0, 0.0], &cfg, &[]).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn blow_up_truncates() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0]]);
        let traj =
            rk4_integrate(f, &[1.0], &IntegratorConfig::new(1e-2, 2.0).unwrap(), &[]).unwrap();
        assert!(matches!(traj.error, Some(Error::NonFiniteField { .. })));
        assert!(traj.len() > 50 && traj.len() < 201);
        assert!(traj.states.iter().all(|s| s[0].is_finite()));
    }

    #[test]
    fn monitors_and_drift() {
        let energy = Monitor::new("energy", |x: &[f64]| Ok(0.5 * (x[0] * x[0] + x[1] * x[1])));
        let pos = Monitor::new("x", |x: &[f64]| Ok(x[0]));
        let one = Monitor::new("one", |_: &[f64]| Ok(1.0));
        let f = |x: &[f64]| Ok(vec![x[1], -x[0]]);
        let traj = rk4_integrate(
            f,
            &[1.0, 0.0],
            &IntegratorConfig::new(1e-3, 10.0).unwrap(),
            &[energy, pos, one],
        )
        .unwrap();
        assert!(drift(&traj, "energy").unwrap().abs <= 1e-8);
        assert!(drift(&traj, "x").unwrap().abs > 1.0);
        assert_eq!(drift(&traj, "one").unwrap().abs, 0.0);
        assert!(matches!(
            drift(&traj, "momentum"),
            Err(Error::UnknownChannel(_))
        ));
    }

    #[test]
    fn invalid_config() {
        assert!(IntegratorConfig::new(0.0, 1.0).is_err());
        assert!(IntegratorConfig::new(1e-3, -1.0).is_err());
    }
}
