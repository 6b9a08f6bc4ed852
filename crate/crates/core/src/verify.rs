//! Self-check suite: reproduces the closed-form results for the registered
//! systems and reports one line per check.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::eom::{derive_eom, gauge_independence_check, integrate, Dynamics, Trajectory};
use crate::expr::{is_zero, parse, Bindings, Expr, FunctionDef, ProbeConfig, ZeroVerdict};
use crate::hjpde::{build_constraints, HjpdeSet};
use crate::integrability::{consistency_iterate, total_variation};
use crate::legendre::{homogeneity_residual, parametrize, LagrangianSystem};
use crate::quantize::{
    evolve_observed, expectations, Boundary, Grid, HamiltonianOperator, Wavefunction,
};
use crate::systems::{instantiate, TemplateId};

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(&ProbeConfig) -> std::result::Result<String, String>;

const CHECKS: [(&str, Check); 10] = [
    ("vanishing Hamiltonian", vanishing),
    ("constraint reproduction", constraints),
    ("integrability", integrability),
    ("oscillator dynamics", oscillator),
    ("free relativistic particle", free_particle),
    ("charged particle", charged),
    ("gauge independence", gauge),
    ("action consistency", action),
    ("quantization", quantization),
    ("homogeneity", homogeneity),
];

/// Runs every check in order. A check that panics is reported as failed.
pub fn run_all(config: &ProbeConfig) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let start = Instant::now();
            let result = std::panic::catch_unwind(|| check(config))
                .unwrap_or_else(|_| Err("panicked".to_string()));
            let (passed, detail) = match result {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                id: i + 1,
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn set_of(
    id: TemplateId,
    pairs: &[(&str, &str)],
    config: &ProbeConfig,
) -> std::result::Result<HjpdeSet, String> {
    let params: BTreeMap<String, String> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    build_constraints(&instantiate(id, &params).map_err(err)?, config).map_err(err)
}

fn trajectory(
    set: &HjpdeSet,
    given: &[(&str, f64)],
    end: f64,
    config: &ProbeConfig,
) -> std::result::Result<Trajectory, String> {
    let (eom, _) = derive_eom(set, config).map_err(err)?;
    let dynamics = Dynamics::new(set, &eom).map_err(err)?;
    let start = dynamics
        .initial_state(&given.iter().map(|(k, v)| (*k, *v)).collect())
        .map_err(err)?;
    integrate(&dynamics, &start, end, 1e-3).map_err(err)
}

fn column(t: &Trajectory, name: &str) -> std::result::Result<Vec<f64>, String> {
    t.column(name).ok_or_else(|| format!("no column `{name}`"))
}

fn max_dev(xs: &[f64]) -> f64 {
    xs.iter().map(|x| (x - xs[0]).abs()).fold(0.0, f64::max)
}

fn vanishing(config: &ProbeConfig) -> std::result::Result<String, String> {
    let mut notes = Vec::new();
    for id in TemplateId::ALL {
        let set = set_of(id, &[], config)?;
        let relativistic = matches!(
            id,
            TemplateId::RelativisticCharged | TemplateId::RelativisticFree
        );
        match &set.vanishing {
            ZeroVerdict::SymbolicallyZero => notes.push(format!("{id} symbolic")),
            ZeroVerdict::NumericallyZero {
                probes,
                max_residual,
            } if relativistic && *probes >= 20 && *max_residual < 1e-9 => {
                notes.push(format!("{id} numeric"))
            }
            v => return Err(format!("{id}: {v:?}")),
        }
    }
    Ok(notes.join(", "))
}

fn constraints(config: &ProbeConfig) -> std::result::Result<String, String> {
    let osc = set_of(TemplateId::ParametrizedOscillator, &[], config)?;
    let expected = parse("p_t + p_q^2/2 + V(q)").map_err(err)?.simplify();
    ensure(osc.directions[0].expression == expected, || {
        format!("oscillator: {}", osc.directions[0].expression)
    })?;
    let rel = set_of(TemplateId::RelativisticCharged, &[], config)?;
    let a = |i: usize| format!("A{i}(q0, q1, q2, q3)");
    let text = format!(
        "p0 + sqrt((p1 + e/c*{})^2 + (p2 + e/c*{})^2 + (p3 + e/c*{})^2 + m^2*c^2) + e/c*{}",
        a(1),
        a(2),
        a(3),
        a(0)
    );
    let expected = parse(&text).map_err(err)?.simplify();
    let got = &rel.directions[0].expression;
    ensure(*got == expected, || format!("charged: {got}"))?;
    Ok("H'_t and H'_0 reproduced".into())
}

fn integrability(config: &ProbeConfig) -> std::result::Result<String, String> {
    let osc = set_of(TemplateId::ParametrizedOscillator, &[], config)?;
    let vt = total_variation(&osc, "t", config).map_err(err)?;
    let rel = set_of(TemplateId::RelativisticCharged, &[], config)?;
    let v0 = total_variation(&rel, "0", config).map_err(err)?;
    ensure(vt.verdict.is_zero() && v0.verdict.is_zero(), || {
        format!("dH'_t {:?}, dH'_0 {:?}", vt.verdict, v0.verdict)
    })?;
    for id in TemplateId::ALL {
        let report = consistency_iterate(&set_of(id, &[], config)?, config).map_err(err)?;
        ensure(report.closed_at_generation_zero(), || {
            format!("{id} needs more generations")
        })?;
    }
    let sys = LagrangianSystem::new(
        "synthetic",
        &["q1", "q2"],
        parse("q1dot^2/2 + q1*q2").map_err(err)?,
    )
    .map_err(err)?;
    let report =
        consistency_iterate(&build_constraints(&sys, config).map_err(err)?, config).map_err(err)?;
    let q1 = Expr::sym("q1");
    let found = report.generations.get(1).is_some_and(|g| {
        g.len() == 1 && (g[0].expression == q1 || g[0].expression == (-q1).simplify())
    });
    ensure(found, || {
        format!("synthetic generations {:?}", report.generations)
    })?;
    Ok("templates closed; synthetic secondary q1".into())
}

fn oscillator(config: &ProbeConfig) -> std::result::Result<String, String> {
    let set = set_of(
        TemplateId::ParametrizedOscillator,
        &[("V", "q^2/2")],
        config,
    )?;
    let t = trajectory(&set, &[("q", 1.0)], PI, config)?;
    let (q, p) = (column(&t, "q")?, column(&t, "p_q")?);
    let e = (q[q.len() - 1] + 1.0).abs().max(p[p.len() - 1].abs());
    ensure(e < 1e-6, || format!("error at pi {e:e}"))?;
    let t = trajectory(&set, &[("q", 1.0)], 100.0, config)?;
    let (q, p) = (column(&t, "q")?, column(&t, "p_q")?);
    let energy: Vec<f64> = q
        .iter()
        .zip(&p)
        .map(|(q, p)| (q * q + p * p) / 2.0)
        .collect();
    let drift = max_dev(&energy);
    ensure(drift < 1e-8, || format!("energy drift {drift:e}"))?;
    Ok(format!("error {e:.1e}, drift {drift:.1e}"))
}

fn free_particle(config: &ProbeConfig) -> std::result::Result<String, String> {
    let set = set_of(
        TemplateId::RelativisticFree,
        &[("m", "1"), ("c", "1")],
        config,
    )?;
    let t = trajectory(&set, &[("p1", 3.0)], 10.0, config)?;
    let mut drift: f64 = 0.0;
    for name in ["p1", "p2", "p3", "p0"] {
        drift = drift.max(max_dev(&column(&t, name)?));
    }
    ensure(drift < 1e-10, || format!("momentum drift {drift:e}"))?;
    let slope = 3.0 / 10f64.sqrt();
    let dev = column(&t, "q0")?
        .iter()
        .zip(column(&t, "q1")?)
        .map(|(t, x)| (x - slope * t).abs())
        .fold(0.0, f64::max);
    ensure(dev < 1e-10, || format!("q_x deviation {dev:e}"))?;
    Ok(format!("slope {slope}, deviation {dev:.1e}"))
}

fn charged(config: &ProbeConfig) -> std::result::Result<String, String> {
    let field = [
        ("m", "1"),
        ("c", "1"),
        ("e", "1"),
        ("A0", "-q1"),
        ("A1", "0"),
        ("A2", "0"),
        ("A3", "0"),
    ];
    let set = set_of(TemplateId::RelativisticCharged, &field, config)?;
    let t = trajectory(&set, &[("p1", 0.5), ("q1", 0.1)], 10.0, config)?;
    let residual = t.max_residual();
    ensure(residual < 1e-8, || format!("H'_0 residual {residual:e}"))?;
    let field = [
        ("m", "1"),
        ("c", "1"),
        ("e", "1"),
        ("A0", "0"),
        ("A1", "-q2/2"),
        ("A2", "q1/2"),
        ("A3", "0"),
    ];
    let set = set_of(TemplateId::RelativisticCharged, &field, config)?;
    let t = trajectory(&set, &[("p1", 1.0), ("p3", 0.3)], 10.0, config)?;
    let (q1, q2) = (column(&t, "q1")?, column(&t, "q2")?);
    let (p1, p2, p3) = (column(&t, "p1")?, column(&t, "p2")?, column(&t, "p3")?);
    let k: Vec<f64> = (0..q1.len())
        .map(|i| {
            ((p1[i] - q2[i] / 2.0).powi(2) + (p2[i] + q1[i] / 2.0).powi(2) + p3[i].powi(2)).sqrt()
        })
        .collect();
    let drift = max_dev(&k);
    ensure(drift < 1e-7, || format!("|k| drift {drift:e}"))?;
    Ok(format!("residual {residual:.1e}, |k| drift {drift:.1e}"))
}

fn gauge(config: &ProbeConfig) -> std::result::Result<String, String> {
    let set = set_of(
        TemplateId::ParametrizedOscillator,
        &[("V", "q^2/2")],
        config,
    )?;
    let (eom, _) = derive_eom(&set, config).map_err(err)?;
    let dynamics = Dynamics::new(&set, &eom).map_err(err)?;
    let start = dynamics
        .initial_state(&Bindings::new().with("q", 1.0))
        .map_err(err)?;
    let f = [Expr::sym("tau"), parse("tau + tau^3/10").map_err(err)?];
    let report = gauge_independence_check(&dynamics, &start, TAU, &f, 1e-3).map_err(err)?;
    ensure(report.max_deviation < 1e-8, || {
        format!("deviation {:e}", report.max_deviation)
    })?;
    Ok(format!("deviation {:.1e}", report.max_deviation))
}

/// Composite Simpson rule, closing with a 3/8 panel for an odd count.
pub(crate) fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    let (even, tail) = if n.is_multiple_of(2) {
        (n, 0.0)
    } else {
        let k = n - 3;
        (
            k,
            3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]),
        )
    };
    let inner: f64 = (1..even)
        .map(|i| y[i] * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (y[0] + y[even] + inner) * h / 3.0 + tail
}

/// Fourth-order finite differences on a uniform grid.
pub(crate) fn derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h)
            } else if i < 2 {
                (-25.0 * y[i] + 48.0 * y[i + 1] - 36.0 * y[i + 2] + 16.0 * y[i + 3]
                    - 3.0 * y[i + 4])
                    / (12.0 * h)
            } else {
                (25.0 * y[i] - 48.0 * y[i - 1] + 36.0 * y[i - 2] - 16.0 * y[i - 3] + 3.0 * y[i - 4])
                    / (12.0 * h)
            }
        })
        .collect()
}

fn action(config: &ProbeConfig) -> std::result::Result<String, String> {
    let set = set_of(
        TemplateId::ParametrizedOscillator,
        &[("V", "q^2/2")],
        config,
    )?;
    let t = trajectory(&set, &[("q", 1.0)], TAU, config)?;
    let q = column(&t, "q")?;
    let l: Vec<f64> = q
        .iter()
        .zip(derivative(&q, t.step))
        .map(|(q, v)| (v * v - q * q) / 2.0)
        .collect();
    let integral = simpson(&l, t.step);
    let z = t.last().action;
    ensure((z - integral).abs() < 1e-5 && z.abs() < 1e-5, || {
        format!("Z = {z:e}, integral {integral:e}")
    })?;
    Ok(format!("Z = {z:.1e}, integral {integral:.1e}"))
}

fn quantization(config: &ProbeConfig) -> std::result::Result<String, String> {
    let v = parse("q^2/2").map_err(err)?;
    let grid = Grid::new(-10.0, 10.0, 1024, Boundary::Dirichlet).map_err(err)?;
    let op = HamiltonianOperator::potential(&v, &grid).map_err(err)?;
    let ground = Wavefunction::gaussian(&grid, 0.0, 1.0, 0.0).map_err(err)?;
    let rho0 = ground.density();
    let mut moved: f64 = 0.0;
    let (_, stats) = evolve_observed(&ground, &op, 1e-3, 10_000, 100, |w| {
        for (a, b) in w.density().iter().zip(&rho0) {
            moved = moved.max((a - b).abs());
        }
    })
    .map_err(err)?;
    ensure(moved < 1e-6, || format!("ground density moved {moved:e}"))?;
    let mut drift = stats.max_norm_drift;

    let set = set_of(
        TemplateId::ParametrizedOscillator,
        &[("V", "q^2/2")],
        config,
    )?;
    let classical = trajectory(&set, &[("q", 1.0)], TAU, config)?;
    let (cq, cp) = (column(&classical, "q")?, column(&classical, "p_q")?);
    let wide = Grid::new(-14.0, 14.0, 1434, Boundary::Dirichlet).map_err(err)?;
    let wide_op = HamiltonianOperator::potential(&v, &wide).map_err(err)?;
    let coherent = Wavefunction::gaussian(&wide, 1.0, 1.0, 0.0).map_err(err)?;
    let (mut i, mut worst, mut failed) = (0, 0.0f64, None);
    let (_, stats) = evolve_observed(&coherent, &wide_op, classical.step, cq.len() - 1, 50, |w| {
        match expectations(w, &wide_op) {
            Ok(e) => {
                worst = worst
                    .max((e.position - cq[i]).abs())
                    .max((e.momentum - cp[i]).abs())
            }
            Err(e) => failed = Some(e.to_string()),
        }
        i += 50;
    })
    .map_err(err)?;
    if let Some(f) = failed {
        return Err(f);
    }
    ensure(worst < 1e-3, || format!("Ehrenfest deviation {worst:e}"))?;
    drift = drift.max(stats.max_norm_drift);

    let ring = Grid::new(0.0, TAU, 256, Boundary::Periodic).map_err(err)?;
    let rel = HamiltonianOperator::relativistic(1.0, 1.0, &ring).map_err(err)?;
    let plane = Wavefunction::plane_wave(&ring, 3).map_err(err)?;
    let (end, stats) = evolve_observed(&plane, &rel, 1e-3, 1000, 0, |_| {}).map_err(err)?;
    let phase = Complex64::from_polar(1.0, -10f64.sqrt() * end.time);
    let phase_err = end
        .psi
        .iter()
        .zip(&plane.psi)
        .map(|(a, b)| (a - phase * b).norm())
        .fold(0.0, f64::max);
    ensure(phase_err < 1e-12, || format!("phase error {phase_err:e}"))?;
    drift = drift.max(stats.max_norm_drift);
    ensure(drift < 1e-10, || format!("norm drift {drift:e}"))?;
    Ok(format!(
        "stationarity {moved:.1e}, Ehrenfest {worst:.1e}, norm {drift:.1e}, phase {phase_err:.1e}"
    ))
}

fn homogeneity(config: &ProbeConfig) -> std::result::Result<String, String> {
    let mut osc =
        LagrangianSystem::new("oscillator", &["q"], parse("qdot^2/2 - V(q)").map_err(err)?)
            .map_err(err)?;
    osc.functions.define(
        "V",
        FunctionDef::new(&["q"], parse("q^4/4 - q^2").map_err(err)?),
    );
    let arc = LagrangianSystem::new(
        "arc",
        &["x"],
        parse("sqrt(1 + xdot^2) + x*xdot").map_err(err)?,
    )
    .map_err(err)?;
    let mut systems = Vec::new();
    for regular in [osc, arc] {
        systems.push(parametrize(&regular, config).map_err(err)?);
    }
    for id in TemplateId::ALL {
        systems.push(set_of(id, &[], config)?.system);
    }
    for sys in &systems {
        for lambda in [0.5, 2.0, 7.0] {
            let r = homogeneity_residual(sys, lambda);
            let verdict = is_zero(&r, &mut sys.sampler(config));
            ensure(verdict.is_zero(), || {
                format!("{} at {lambda}: {verdict:?}", sys.name)
            })?;
        }
    }
    Ok(format!("{} Lagrangians homogeneous", systems.len()))
}
