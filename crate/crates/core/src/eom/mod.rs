//! Total differential equations of motion, their integration in the
//! physical time and the canonical action.

mod gauge;
pub mod interp;

use std::collections::BTreeMap;
use std::io::Write;

use log::warn;
use serde::Serialize;

use crate::expr::{Bindings, Compiled, Expr, ProbeConfig};
use crate::hjpde::{as_string, HjpdeSet};
use crate::integrability::{consistency_iterate, flow, IntegrabilityReport};
use crate::{Error, Result};

pub use gauge::{gauge_independence_check, GaugeReport, GaugeRun};

/// Default surface tolerance for constraint residuals.
pub const SURFACE_TOL: f64 = 1e-8;
/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Right-hand side of one symbol's total differential.
#[derive(Clone, Debug, Serialize)]
pub struct Differential {
    pub symbol: String,
    /// `sum_beta rate_beta dt_beta` written with `d<param>` symbols.
    #[serde(serialize_with = "as_string")]
    pub total: Expr,
    /// Rate along the evolution parameter.
    #[serde(serialize_with = "as_string")]
    pub rate: Expr,
}

/// Symbolic equations of motion of an integrable Hamilton-Jacobi set.
#[derive(Clone, Debug, Serialize)]
pub struct Eom {
    /// Evolution parameter (physical time).
    pub parameter: String,
    /// `q_a`, the other parameters `t_b`, `p_a`, then `p_b` for every
    /// direction.
    pub differentials: Vec<Differential>,
    /// `dZ` along the evolution parameter: `-H + p_a dH'/dp_a`.
    #[serde(serialize_with = "as_string")]
    pub action_rate: Expr,
    #[serde(serialize_with = "as_string")]
    pub action_total: Expr,
}

impl Eom {
    pub fn rate(&self, symbol: &str) -> Option<&Expr> {
        self.differentials
            .iter()
            .find(|d| d.symbol == symbol)
            .map(|d| &d.rate)
    }

    pub fn state_names(&self) -> Vec<String> {
        self.differentials
            .iter()
            .map(|d| d.symbol.clone())
            .collect()
    }
}

fn state_order(set: &HjpdeSet) -> Vec<String> {
    let evo = set.evolution;
    let mut names: Vec<String> = set.pairs.iter().map(|p| p.coordinate.clone()).collect();
    names.extend(
        set.directions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != evo)
            .map(|(_, d)| d.parameter.clone()),
    );
    names.extend(set.pairs.iter().map(|p| p.momentum.clone()));
    names.extend(set.directions.iter().map(|d| d.momentum.clone()));
    names
}

/// Equations of motion without the integrability precondition; used by
/// [`derive_eom`] once the consistency iteration has succeeded.
pub fn equations(set: &HjpdeSet) -> Eom {
    let evo = set.evolution;
    let flows: Vec<BTreeMap<String, Expr>> = (0..set.directions.len())
        .map(|b| flow(set, b).into_iter().collect())
        .collect();
    let positive = &set.system.positive;
    let differentials = state_order(set)
        .into_iter()
        .map(|symbol| {
            let total = Expr::sum(
                set.directions
                    .iter()
                    .zip(&flows)
                    .map(|(d, f)| f[&symbol].clone() * Expr::sym(format!("d{}", d.parameter)))
                    .collect(),
            )
            .simplify_with(positive);
            let rate = flows[evo][&symbol].simplify_with(positive);
            Differential {
                symbol,
                total,
                rate,
            }
        })
        .collect();
    let z_rate = |d: &crate::hjpde::Direction| {
        let mut terms = vec![-d.hamiltonian.clone()];
        for p in &set.pairs {
            terms.push(Expr::sym(p.momentum.clone()) * d.expression.differentiate(&p.momentum));
        }
        Expr::sum(terms).simplify_with(positive)
    };
    let action_total = Expr::sum(
        set.directions
            .iter()
            .map(|d| z_rate(d) * Expr::sym(format!("d{}", d.parameter)))
            .collect(),
    );
    Eom {
        parameter: set.directions[evo].parameter.clone(),
        differentials,
        action_rate: z_rate(&set.directions[evo]),
        action_total,
    }
}

/// Equations of motion of an integrable system, with its integrability
/// report.
pub fn derive_eom(set: &HjpdeSet, config: &ProbeConfig) -> Result<(Eom, IntegrabilityReport)> {
    let report = consistency_iterate(set, config)?;
    if !report.integrable {
        let why = if report.relations.is_empty() {
            "some total variations do not vanish".to_string()
        } else {
            report
                .relations
                .iter()
                .map(|r| {
                    format!(
                        "d{} fixed by the variation of {}",
                        r.parameter, r.constraint
                    )
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        return Err(Error::NotIntegrable(why));
    }
    Ok((equations(set), report))
}

/// Numeric point of extended phase space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseState {
    /// Value of the evolution parameter.
    pub time: f64,
    /// Values in the order of [`Dynamics::names`].
    pub values: Vec<f64>,
    /// Accumulated canonical action.
    pub action: f64,
}

/// Equations of motion compiled for numerical work: functions inlined,
/// physical constants bound.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub system: String,
    pub parameter: String,
    pub names: Vec<String>,
    /// Constraint residual above which a warning is logged.
    pub surface_tol: f64,
    rates: Vec<Compiled>,
    action: Compiled,
    constraints: Vec<(String, Compiled)>,
    hamiltonians: Vec<(String, String, Compiled)>,
}

fn numeric(set: &HjpdeSet, e: &Expr) -> Result<Expr> {
    let inlined = set.system.functions.inline(e)?;
    let constants: BTreeMap<String, Expr> = set
        .system
        .parameters
        .iter()
        .map(|(k, v)| (k.clone(), Expr::num(*v)))
        .collect();
    Ok(inlined.substitute(&constants))
}

impl Dynamics {
    pub fn new(set: &HjpdeSet, eom: &Eom) -> Result<Dynamics> {
        let names = eom.state_names();
        let mut slots = vec![eom.parameter.clone()];
        slots.extend(names.iter().cloned());
        let compile =
            |e: &Expr| -> Result<Compiled> { Ok(Compiled::new(&numeric(set, e)?, &slots)?) };
        let rates = eom
            .differentials
            .iter()
            .map(|d| compile(&d.rate))
            .collect::<Result<Vec<_>>>()?;
        let constraints = set
            .directions
            .iter()
            .map(|d| Ok((d.label.clone(), compile(&d.expression)?)))
            .collect::<Result<Vec<_>>>()?;
        let hamiltonians = set
            .directions
            .iter()
            .map(|d| {
                Ok((
                    d.label.clone(),
                    d.momentum.clone(),
                    compile(&d.hamiltonian)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dynamics {
            system: set.system.name.clone(),
            parameter: eom.parameter.clone(),
            names,
            surface_tol: SURFACE_TOL,
            rates,
            action: compile(&eom.action_rate)?,
            constraints,
            hamiltonians,
        })
    }

    /// Compiles any expression over the state slots.
    pub fn compile(&self, set: &HjpdeSet, e: &Expr) -> Result<Compiled> {
        let mut slots = vec![self.parameter.clone()];
        slots.extend(self.names.iter().cloned());
        Ok(Compiled::new(&numeric(set, e)?, &slots)?)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn slots(&self, time: f64, values: &[f64]) -> Vec<f64> {
        let mut s = Vec::with_capacity(values.len() + 1);
        s.push(time);
        s.extend_from_slice(values);
        s
    }

    /// State derivative and action rate at `(time, values)`.
    pub fn rhs(&self, time: f64, values: &[f64]) -> Result<(Vec<f64>, f64)> {
        let s = self.slots(time, values);
        let d = self
            .rates
            .iter()
            .map(|r| r.eval(&s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok((d, self.action.eval(&s)?))
    }

    /// `max |H'_a|` over all directions.
    pub fn residual(&self, time: f64, values: &[f64]) -> Result<f64> {
        let s = self.slots(time, values);
        let mut worst: f64 = 0.0;
        for (_, c) in &self.constraints {
            worst = worst.max(c.eval(&s)?.abs());
        }
        Ok(worst)
    }

    /// State on the constraint surface: missing coordinates, momenta and
    /// parameters default to 0, every `p_a` is set to `-H_a`.
    pub fn initial_state(&self, given: &Bindings) -> Result<PhaseState> {
        for (name, _) in given.iter() {
            if name != &self.parameter && self.index(name).is_none() {
                return Err(Error::Config(format!(
                    "`{name}` is not a state variable (expected one of {}, {})",
                    self.parameter,
                    self.names.join(", ")
                )));
            }
        }
        let time = given.get(&self.parameter).unwrap_or(0.0);
        let mut values: Vec<f64> = self
            .names
            .iter()
            .map(|n| given.get(n).unwrap_or(0.0))
            .collect();
        for (label, momentum, h) in &self.hamiltonians {
            let s = self.slots(time, &values);
            let v = -h.eval(&s)?;
            let i = self
                .index(momentum)
                .expect("direction momentum is a state variable");
            if let Some(g) = given.get(momentum) {
                if (g - v).abs() > self.surface_tol {
                    warn!("{momentum} = {g} is off the surface of H'_{label}; using {v}");
                }
            }
            values[i] = v;
        }
        Ok(PhaseState {
            time,
            values,
            action: 0.0,
        })
    }

    fn rk4_step(&self, time: f64, y: &[f64], z: f64, h: f64) -> Result<(Vec<f64>, f64)> {
        let n = y.len();
        let shift = |base: &[f64], k: &[f64], a: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(b, d)| b + a * d).collect()
        };
        let (k1, z1) = self.rhs(time, y)?;
        let (k2, z2) = self.rhs(time + h / 2.0, &shift(y, &k1, h / 2.0))?;
        let (k3, z3) = self.rhs(time + h / 2.0, &shift(y, &k2, h / 2.0))?;
        let (k4, z4) = self.rhs(time + h, &shift(y, &k3, h))?;
        let next = (0..n)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        Ok((next, z + h / 6.0 * (z1 + 2.0 * z2 + 2.0 * z3 + z4)))
    }
}

/// Sampled solution of the equations of motion.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub system: String,
    pub parameter: String,
    pub names: Vec<String>,
    pub step: f64,
    pub samples: Vec<PhaseState>,
    /// `max |H'_a|` at each sample.
    pub residuals: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if name == self.parameter {
            return Some(self.times());
        }
        if name == "Z" {
            return Some(self.samples.iter().map(|s| s.action).collect());
        }
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.samples.iter().map(|s| s.values[i]).collect())
    }

    pub fn last(&self) -> &PhaseState {
        self.samples
            .last()
            .expect("trajectories hold at least one sample")
    }

    pub fn value(&self, sample: usize, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.samples[sample].values[i])
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|x(t) - x(t_0)|` of one column.
    pub fn drift(&self, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        let first = col[0];
        Some(col.iter().map(|v| (v - first).abs()).fold(0.0, f64::max))
    }

    /// CSV with header `param, names..., Z, constraint_residual`; values
    /// with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec![self.parameter.clone()];
        header.extend(self.names.iter().cloned());
        header.push("Z".into());
        header.push("constraint_residual".into());
        writeln!(out, "{}", header.join(","))?;
        for (s, r) in self.samples.iter().zip(&self.residuals) {
            let mut row = vec![format!("{:.16e}", s.time)];
            row.extend(s.values.iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", s.action));
            row.push(format!("{r:.16e}"));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Number of steps and adjusted step so that `n * h` covers `span`
/// exactly.
pub(crate) fn step_plan(span: f64, step: f64) -> Result<(usize, f64)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidStep(step));
    }
    if span == 0.0 {
        return Ok((0, step));
    }
    let n = ((span.abs() / step) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// Fixed-step RK4 from `initial.time` to `end`, accumulating `Z`.
pub fn integrate(
    dynamics: &Dynamics,
    initial: &PhaseState,
    end: f64,
    step: f64,
) -> Result<Trajectory> {
    let (n, h) = step_plan(end - initial.time, step)?;
    let mut samples = Vec::with_capacity(n + 1);
    let mut residuals = Vec::with_capacity(n + 1);
    let mut y = initial.values.clone();
    let mut z = initial.action;
    residuals.push(dynamics.residual(initial.time, &y)?);
    samples.push(initial.clone());
    for i in 0..n {
        let time = initial.time + i as f64 * h;
        let (next, zn) = dynamics.rk4_step(time, &y, z, h)?;
        y = next;
        z = zn;
        let time = if i + 1 == n {
            end
        } else {
            initial.time + (i + 1) as f64 * h
        };
        residuals.push(dynamics.residual(time, &y)?);
        samples.push(PhaseState {
            time,
            values: y.clone(),
            action: z,
        });
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > dynamics.surface_tol {
        warn!(
            "constraint residual reached {worst:e} (surface tolerance {:e})",
            dynamics.surface_tol
        );
    }
    Ok(Trajectory {
        system: dynamics.system.clone(),
        parameter: dynamics.parameter.clone(),
        names: dynamics.names.clone(),
        step: h,
        samples,
        residuals,
    })
}

/// Accumulated action at the end of the trajectory.
pub fn action_along(traj: &Trajectory) -> f64 {
    traj.last().action
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, FunctionDef};
    use crate::hjpde::build_constraints;
    use crate::legendre::{parametrize, LagrangianSystem};

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    fn oscillator(v: &str) -> HjpdeSet {
        let mut l =
            LagrangianSystem::new("oscillator", &["q"], parse("qdot^2/2 - V(q)").unwrap()).unwrap();
        l.functions
            .define("V", FunctionDef::new(&["q"], parse(v).unwrap()));
        build_constraints(&parametrize(&l, &cfg()).unwrap(), &cfg()).unwrap()
    }

    #[test]
    fn oscillator_equations() {
        let set = oscillator("q^2/2");
        let (eom, _) = derive_eom(&set, &cfg()).unwrap();
        assert_eq!(eom.parameter, "t");
        assert_eq!(eom.rate("q").unwrap(), &Expr::sym("p_q"));
        assert_eq!(eom.rate("p_q").unwrap(), &parse("-V'(q)").unwrap());
        assert!(eom.rate("p_t").unwrap().is_zero_literal());
        assert_eq!(eom.state_names(), vec!["q", "p_q", "p_t"]);
        assert_eq!(eom.action_rate, parse("p_q^2/2 - V(q)").unwrap());
    }

    #[test]
    fn step_plan_divides_the_span() {
        let (n, h) = step_plan(std::f64::consts::PI, 1e-3).unwrap();
        assert_eq!(n, 3142);
        assert!((n as f64 * h - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(step_plan(1.0, 0.25).unwrap(), (4, 0.25));
        assert!(matches!(step_plan(1.0, 0.0), Err(Error::InvalidStep(_))));
        assert!(matches!(step_plan(1.0, -1.0), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn free_motion_and_action() {
        let set = oscillator("0");
        let (eom, _) = derive_eom(&set, &cfg()).unwrap();
        let dynamics = Dynamics::new(&set, &eom).unwrap();
        let start = dynamics
            .initial_state(&Bindings::new().with("q", 0.5).with("p_q", 1.0))
            .unwrap();
        assert_eq!(start.values[2], -0.5);
        let traj = integrate(&dynamics, &start, 3.0, 1e-2).unwrap();
        assert!((traj.value(traj.samples.len() - 1, "q").unwrap() - 3.5).abs() < 1e-12);
        assert!((action_along(&traj) - 1.5).abs() < 1e-12);
        let empty = integrate(&dynamics, &start, 0.0, 1e-2).unwrap();
        assert_eq!(empty.samples.len(), 1);
        assert_eq!(action_along(&empty), 0.0);
    }

    #[test]
    fn unknown_initial_symbol_is_rejected() {
        let set = oscillator("q^2/2");
        let (eom, _) = derive_eom(&set, &cfg()).unwrap();
        let dynamics = Dynamics::new(&set, &eom).unwrap();
        assert!(dynamics
            .initial_state(&Bindings::new().with("x", 1.0))
            .is_err());
    }

    #[test]
    fn csv_layout() {
        let set = oscillator("q^2/2");
        let (eom, _) = derive_eom(&set, &cfg()).unwrap();
        let dynamics = Dynamics::new(&set, &eom).unwrap();
        let start = dynamics
            .initial_state(&Bindings::new().with("q", 1.0))
            .unwrap();
        let traj = integrate(&dynamics, &start, 0.01, 1e-3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q,p_q,p_t,Z,constraint_residual");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[1], "1.0000000000000000e0");
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn undefined_potential_cannot_be_compiled() {
        let l = LagrangianSystem::new("o", &["q"], parse("qdot^2/2 - V(q)").unwrap()).unwrap();
        let set = build_constraints(&parametrize(&l, &cfg()).unwrap(), &cfg()).unwrap();
        let (eom, _) = derive_eom(&set, &cfg()).unwrap();
        assert!(Dynamics::new(&set, &eom).is_err());
    }
}
