use std::collections::BTreeMap;

use hjdyn::eom::{derive_eom, integrate, Dynamics};
use hjdyn::expr::{evaluate, is_zero, parse, Bindings, Expr, ProbeConfig};
use hjdyn::hjpde::{build_constraints, PhasePair};
use hjdyn::integrability::poisson_bracket;
use hjdyn::legendre::{
    analyze, conjugate_momenta, euler_residual, hessian, parametrize, LagrangianSystem,
};
use hjdyn::quantize::{evolve_observed, Boundary, Grid, HamiltonianOperator, Wavefunction};
use hjdyn::systems::{instantiate, TemplateId};
use num_complex::Complex64;
use proptest::prelude::*;

fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn pairs() -> Vec<PhasePair> {
    ["x", "y"]
        .iter()
        .map(|q| PhasePair {
            coordinate: q.to_string(),
            momentum: format!("p_{q}"),
        })
        .collect()
}

const ATOMS: [&str; 10] = [
    "x",
    "y",
    "p_x",
    "p_y",
    "x*p_y",
    "p_x^2/2",
    "ln(2 + x^2)",
    "ln(1 + p_y^2)",
    "sqrt(1 + p_x^2)",
    "x^2*y",
];

fn phase_expr() -> impl Strategy<Value = Expr> {
    let atom = (0..ATOMS.len(), -3i32..=3)
        .prop_map(|(i, c)| Expr::num(f64::from(c)) * parse(ATOMS[i]).unwrap());
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner).prop_map(|(a, b)| a * b),
        ]
    })
}

fn phase_point() -> impl Strategy<Value = Bindings> {
    prop::array::uniform4(-1.5f64..1.5).prop_map(|[x, y, px, py]| {
        Bindings::new()
            .with("x", x)
            .with("y", y)
            .with("p_x", px)
            .with("p_y", py)
    })
}

fn grid_vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(|v| {
        v.into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect()
    })
}

fn inner(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    a.iter()
        .zip(b)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        * dx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric(a in phase_expr(), b in phase_expr()) {
        let ab = poisson_bracket(&a, &b, &pairs());
        let ba = poisson_bracket(&b, &a, &pairs());
        let sum = (ab + ba).simplify();
        prop_assert!(sum.is_zero_literal(), "{}", sum);
    }

    #[test]
    fn bracket_obeys_leibniz(a in phase_expr(), b in phase_expr(), c in phase_expr(), at in phase_point()) {
        let pp = pairs();
        let lhs = poisson_bracket(&(a.clone() * b.clone()), &c, &pp);
        let rhs = a.clone() * poisson_bracket(&b, &c, &pp) + poisson_bracket(&a, &c, &pp) * b;
        let (l, r) = (evaluate(&lhs, &at).unwrap(), evaluate(&rhs, &at).unwrap());
        prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()), "{l} vs {r}");
    }

    #[test]
    fn potential_operator_is_hermitian(
        a in -1.0f64..1.0,
        b in 0.0f64..0.2,
        c in -2.0f64..2.0,
        periodic in any::<bool>(),
        psi in grid_vector(48),
        phi in grid_vector(48),
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        let grid = Grid::new(-6.0, 6.0, 48, boundary).unwrap();
        let v = parse(&format!("({a})*q^2 + ({b})*q^4 + ({c})*ln(1 + q^2)")).unwrap();
        let op = HamiltonianOperator::potential(&v, &grid).unwrap();
        let dx = grid.dx();
        let left = inner(&op.apply(&psi), &phi, dx);
        let right = inner(&psi, &op.apply(&phi), dx);
        prop_assert!((left - right).norm() < 1e-10 * (1.0 + left.norm()), "{left} vs {right}");
    }

    #[test]
    fn relativistic_operator_is_hermitian(
        m in 0.0f64..3.0,
        psi in grid_vector(64),
        phi in grid_vector(64),
    ) {
        let grid = Grid::new(0.0, 10.0, 64, Boundary::Periodic).unwrap();
        let op = HamiltonianOperator::relativistic(m, 1.0, &grid).unwrap();
        let dx = grid.dx();
        let left = inner(&op.apply(&psi), &phi, dx);
        let right = inner(&psi, &op.apply(&phi), dx);
        prop_assert!((left - right).norm() < 1e-10 * (1.0 + left.norm()), "{left} vs {right}");
    }

    #[test]
    fn evolution_is_unitary(
        center in -2.0f64..2.0,
        width in 0.4f64..1.5,
        k in -3.0f64..3.0,
        quartic in 0.0f64..0.3,
        dt in 1e-4f64..5e-2,
    ) {
        let grid = Grid::new(-12.0, 12.0, 400, Boundary::Dirichlet).unwrap();
        let v = parse(&format!("q^2/2 + {quartic}*q^4")).unwrap();
        let op = HamiltonianOperator::potential(&v, &grid).unwrap();
        let psi = Wavefunction::gaussian(&grid, center, width, k).unwrap();
        let (_, stats) = evolve_observed(&psi, &op, dt, 50, 0, |_| {}).unwrap();
        prop_assert!(stats.max_norm_drift < 1e-10, "{}", stats.max_norm_drift);

        let ring = Grid::new(-12.0, 12.0, 256, Boundary::Periodic).unwrap();
        let rel = HamiltonianOperator::relativistic(1.0, 1.0, &ring).unwrap();
        let psi = Wavefunction::gaussian(&ring, center, width, k).unwrap();
        let (_, stats) = evolve_observed(&psi, &rel, dt, 50, 0, |_| {}).unwrap();
        prop_assert!(stats.max_norm_drift < 1e-10, "{}", stats.max_norm_drift);
    }

    #[test]
    fn parametrized_systems_have_vanishing_hamiltonian(
        mass in 0.5f64..3.0,
        k in 0.1f64..2.0,
        g in -1.0f64..1.0,
        shape in 0usize..3,
    ) {
        let config = ProbeConfig::default();
        let (coords, text): (&[&str], String) = match shape {
            0 => (&["x"], format!("{mass}*xdot^2/2 - {k}*x^2/2 + {g}*x^3")),
            1 => (&["x", "y"], format!("{mass}*(xdot^2 + ydot^2)/2 - {k}*x*y + {g}*x*ydot")),
            _ => (&["x"], format!("{mass}*(1 + x^2)*xdot^2/2 + {g}*x*xdot")),
        };
        let regular = LagrangianSystem::new("random", coords, parse(&text).unwrap()).unwrap();
        let sys = parametrize(&regular, &config).unwrap();
        let euler = is_zero(&euler_residual(&sys), &mut sys.sampler(&config));
        prop_assert!(euler.is_zero(), "{euler:?}");
        let set = build_constraints(&sys, &config).unwrap();
        prop_assert!(set.vanishing.is_zero(), "{:?}", set.vanishing);
    }
}

#[test]
fn solved_velocities_reproduce_the_momenta() {
    let config = ProbeConfig::default();
    let regular = LagrangianSystem::new(
        "coupled",
        &["x", "y"],
        parse("xdot^2 + xdot*ydot + ydot^2 - x*y").unwrap(),
    )
    .unwrap();
    for sys in [regular.clone(), parametrize(&regular, &config).unwrap()] {
        let sys = analyze(&sys, &config).unwrap();
        let w = sys.solved_velocities.clone().unwrap();
        let mut checked = 0;
        for (p, momentum) in conjugate_momenta(&sys) {
            let Some(q) = p.strip_prefix("p_") else {
                continue;
            };
            let Some(v) = sys.velocity_of(q) else {
                continue;
            };
            if !w.contains_key(v) {
                continue;
            }
            let residual = momentum.substitute(&w) - Expr::sym(p.clone());
            let verdict = is_zero(&residual, &mut sys.sampler(&config));
            assert!(verdict.is_zero(), "{} {p}: {verdict:?}", sys.name);
            checked += 1;
        }
        assert_eq!(checked, 2, "{}", sys.name);
    }
}

#[test]
fn template_hessian_ranks() {
    let config = ProbeConfig::default();
    for id in TemplateId::ALL {
        for extra in [&[][..], &[("n", "3")][..]] {
            if !extra.is_empty() && id != TemplateId::ParametrizedRegular {
                continue;
            }
            let p = params(extra);
            let sys = instantiate(id, &p).unwrap();
            let report = hessian(&sys, &config).unwrap();
            assert_eq!(report.rank, id.expected_rank(&p).unwrap(), "{id}");
        }
    }
    let osc = instantiate(TemplateId::ParametrizedOscillator, &params(&[])).unwrap();
    assert_eq!(hessian(&osc, &config).unwrap().rank, 1);
    let free = instantiate(TemplateId::RelativisticFree, &params(&[])).unwrap();
    assert_eq!(hessian(&free, &config).unwrap().rank, 3);
}

fn dynamics_of(id: TemplateId, p: &[(&str, &str)]) -> Dynamics {
    let config = ProbeConfig::default();
    let set = build_constraints(&instantiate(id, &params(p)).unwrap(), &config).unwrap();
    let (eom, _) = derive_eom(&set, &config).unwrap();
    Dynamics::new(&set, &eom).unwrap()
}

#[test]
fn charged_particle_without_field_is_free() {
    let mc = [("m", "1.3"), ("c", "0.7")];
    let free = dynamics_of(TemplateId::RelativisticFree, &mc);
    let mut with_field = mc.to_vec();
    with_field.extend([
        ("e", "2"),
        ("A0", "0"),
        ("A1", "0"),
        ("A2", "0"),
        ("A3", "0"),
    ]);
    let charged = dynamics_of(TemplateId::RelativisticCharged, &with_field);
    assert_eq!(free.names, charged.names);
    let mut state = vec![0.0; free.names.len()];
    for trial in 0..20 {
        for (i, s) in state.iter_mut().enumerate() {
            *s = ((trial * 7 + i * 3) as f64 * 0.37).sin() * 2.0;
        }
        let (a, za) = free.rhs(0.3, &state).unwrap();
        let (b, zb) = charged.rhs(0.3, &state).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14, "{a:?} vs {b:?}");
        }
        assert!((za - zb).abs() < 1e-14);
    }
}

#[test]
fn constraints_hold_over_long_runs() {
    type Case<'a> = (TemplateId, &'a [(&'a str, &'a str)], &'a [(&'a str, f64)]);
    let cases: [Case; 3] = [
        (
            TemplateId::ParametrizedOscillator,
            &[("V", "q^2/2")],
            &[("q", 1.0)],
        ),
        (
            TemplateId::RelativisticFree,
            &[("m", "1"), ("c", "1")],
            &[("p1", 3.0), ("p2", -1.0)],
        ),
        (
            TemplateId::RelativisticCharged,
            &[
                ("m", "1"),
                ("c", "1"),
                ("e", "1"),
                ("A0", "-q1"),
                ("A1", "0"),
                ("A2", "0"),
                ("A3", "0"),
            ],
            &[("p1", 0.5), ("q1", 0.1)],
        ),
    ];
    for (id, p, initial) in cases {
        let dynamics = dynamics_of(id, p);
        let mut given = Bindings::new();
        for (k, v) in initial {
            given.set(*k, *v);
        }
        let start = dynamics.initial_state(&given).unwrap();
        let traj = integrate(&dynamics, &start, 100.0, 1e-3).unwrap();
        assert!(traj.max_residual() < 1e-8, "{id}: {}", traj.max_residual());
        match id {
            TemplateId::ParametrizedOscillator => {
                assert!(traj.drift("p_t").unwrap() < 1e-10);
            }
            TemplateId::RelativisticFree => {
                for name in ["p1", "p2", "p3", "p0"] {
                    assert!(traj.drift(name).unwrap() < 1e-10, "{name}");
                }
            }
            _ => {}
        }
    }
}

#[test]
fn anharmonic_energy_is_conserved() {
    let dynamics = dynamics_of(
        TemplateId::ParametrizedOscillator,
        &[("V", "q^4/4 - q^2/2")],
    );
    let start = dynamics
        .initial_state(&Bindings::new().with("q", 1.5))
        .unwrap();
    let traj = integrate(&dynamics, &start, 100.0, 1e-3).unwrap();
    let (q, p) = (traj.column("q").unwrap(), traj.column("p_q").unwrap());
    let energy: Vec<f64> = q
        .iter()
        .zip(&p)
        .map(|(q, p)| p * p / 2.0 + q.powi(4) / 4.0 - q * q / 2.0)
        .collect();
    let drift = energy
        .iter()
        .map(|e| (e - energy[0]).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-8, "{drift:e}");
    assert!(traj.drift("p_t").unwrap() < 1e-10);
}
