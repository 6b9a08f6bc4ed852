//! Evolution under different time parametrizations `t = f(tau)`.

use rayon::prelude::*;
use serde::Serialize;

use super::interp::cubic;
use super::{step_plan, Dynamics, PhaseState};
use crate::expr::{Compiled, Expr};
use crate::{Error, Result};

const TAU: &str = "tau";
const MONOTONE_CHECKS: usize = 2000;

#[derive(Clone, Debug, Serialize)]
pub struct GaugeRun {
    pub parametrization: String,
    pub tau_start: f64,
    pub tau_end: f64,
    pub steps: usize,
    /// Evolution parameter at each tau sample.
    pub times: Vec<f64>,
    /// State at each tau sample, in [`Dynamics::names`] order.
    pub values: Vec<Vec<f64>>,
    /// Largest deviation from the first run on the common grid.
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    pub names: Vec<String>,
    /// Common uniform grid of the evolution parameter.
    pub grid: Vec<f64>,
    pub runs: Vec<GaugeRun>,
    pub max_deviation: f64,
}

struct Reparam {
    text: String,
    f: Compiled,
    df: Compiled,
}

impl Reparam {
    fn new(e: &Expr) -> Result<Reparam> {
        if let Some(s) = e.symbols().into_iter().find(|s| s != TAU) {
            return Err(Error::Config(format!(
                "parametrization `{e}` may only depend on `{TAU}`, found `{s}`"
            )));
        }
        let slots = [TAU.to_string()];
        Ok(Reparam {
            text: e.to_string(),
            f: Compiled::new(e, &slots)?,
            df: Compiled::new(&e.differentiate(TAU), &slots)?,
        })
    }

    fn f(&self, tau: f64) -> Result<f64> {
        Ok(self.f.eval(&[tau])?)
    }

    fn df(&self, tau: f64) -> Result<f64> {
        let d = self.df.eval(&[tau])?;
        if !(d > 0.0) {
            return Err(Error::NonMonotone {
                expr: self.text.clone(),
                tau,
            });
        }
        Ok(d)
    }

    /// `tau` with `f(tau) = t`.
    fn invert(&self, t: f64) -> Result<f64> {
        let (mut lo, mut hi) = (t - 1.0, t + 1.0);
        let mut widen = 0;
        while self.f(lo)? > t || self.f(hi)? < t {
            widen += 1;
            if widen > 200 {
                return Err(Error::NonMonotone {
                    expr: self.text.clone(),
                    tau: if self.f(lo)? > t { lo } else { hi },
                });
            }
            let w = hi - lo;
            if self.f(lo)? > t {
                lo -= w;
            }
            if self.f(hi)? < t {
                hi += w;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.f(mid)? < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if (self.f(lo)? - t).abs() <= (self.f(hi)? - t).abs() {
            lo
        } else {
            hi
        })
    }
}

fn run(
    dynamics: &Dynamics,
    initial: &PhaseState,
    end: f64,
    reparam: &Reparam,
    dtau: f64,
) -> Result<GaugeRun> {
    let tau0 = reparam.invert(initial.time)?;
    let tau1 = reparam.invert(end)?;
    for k in 0..=MONOTONE_CHECKS {
        reparam.df(tau0 + (tau1 - tau0) * k as f64 / MONOTONE_CHECKS as f64)?;
    }
    let (n, h) = step_plan(tau1 - tau0, dtau)?;
    let rhs = |tau: f64, y: &[f64]| -> Result<Vec<f64>> {
        let speed = reparam.df(tau)?;
        let (d, _) = dynamics.rhs(reparam.f(tau)?, y)?;
        Ok(d.into_iter().map(|v| v * speed).collect())
    };
    let shift = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(y, k)| y + a * k).collect()
    };
    let mut y = initial.values.clone();
    let mut times = vec![initial.time];
    let mut values = vec![y.clone()];
    for i in 0..n {
        let tau = tau0 + i as f64 * h;
        let k1 = rhs(tau, &y)?;
        let k2 = rhs(tau + h / 2.0, &shift(&y, &k1, h / 2.0))?;
        let k3 = rhs(tau + h / 2.0, &shift(&y, &k2, h / 2.0))?;
        let k4 = rhs(tau + h, &shift(&y, &k3, h))?;
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t = if i + 1 == n {
            end
        } else {
            reparam.f(tau0 + (i + 1) as f64 * h)?
        };
        times.push(t);
        values.push(y.clone());
    }
    Ok(GaugeRun {
        parametrization: reparam.text.clone(),
        tau_start: tau0,
        tau_end: tau1,
        steps: n,
        times,
        values,
        deviation: 0.0,
    })
}

fn resample(run: &GaugeRun, column: usize, grid: &[f64]) -> Vec<f64> {
    let ys: Vec<f64> = run.values.iter().map(|v| v[column]).collect();
    grid.iter().map(|&t| cubic(&run.times, &ys, t)).collect()
}

/// Integrates from `initial` to `end` in `tau` under each parametrization
/// `t = f(tau)` and compares the states on a common uniform grid of `t`
/// with spacing close to `dtau`.
pub fn gauge_independence_check(
    dynamics: &Dynamics,
    initial: &PhaseState,
    end: f64,
    parametrizations: &[Expr],
    dtau: f64,
) -> Result<GaugeReport> {
    if parametrizations.len() < 2 {
        return Err(Error::Config(
            "at least two parametrizations are needed".into(),
        ));
    }
    if !(end > initial.time) {
        return Err(Error::Config(format!(
            "end {end} must lie after the initial time {}",
            initial.time
        )));
    }
    let reparams = parametrizations
        .iter()
        .map(Reparam::new)
        .collect::<Result<Vec<_>>>()?;
    let mut runs = reparams
        .par_iter()
        .map(|r| run(dynamics, initial, end, r, dtau))
        .collect::<Result<Vec<_>>>()?;

    let (m, h) = step_plan(end - initial.time, dtau)?;
    let grid: Vec<f64> = (0..=m)
        .map(|k| {
            if k == m {
                end
            } else {
                initial.time + k as f64 * h
            }
        })
        .collect();
    let columns = dynamics.names.len();
    let reference: Vec<Vec<f64>> = (0..columns).map(|c| resample(&runs[0], c, &grid)).collect();
    let mut max_deviation: f64 = 0.0;
    for r in runs.iter_mut().skip(1) {
        let mut worst: f64 = 0.0;
        for (c, base) in reference.iter().enumerate() {
            for (a, b) in resample(r, c, &grid).iter().zip(base) {
                worst = worst.max((a - b).abs());
            }
        }
        r.deviation = worst;
        max_deviation = max_deviation.max(worst);
    }
    Ok(GaugeReport {
        names: dynamics.names.clone(),
        grid,
        runs,
        max_deviation,
    })
}
