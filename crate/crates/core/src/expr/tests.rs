use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::parse::parse_uncanonical;
use super::*;

fn p(text: &str) -> Expr {
    parse(text).unwrap()
}

fn bind(pairs: &[(&str, f64)]) -> Bindings {
    pairs.iter().map(|(k, v)| (*k, *v)).collect()
}

fn central_difference(e: &Expr, s: &str, at: &Bindings, h: f64) -> f64 {
    let mut hi = at.clone();
    let mut lo = at.clone();
    hi.set(s, at.get(s).unwrap() + h);
    lo.set(s, at.get(s).unwrap() - h);
    (evaluate(e, &hi).unwrap() - evaluate(e, &lo).unwrap()) / (2.0 * h)
}

#[test]
fn parse_potential_hamiltonian_shape() {
    let e = p("p^2/2 + V(q)");
    let expected = Expr::Sum(vec![
        Expr::Product(vec![
            Expr::Const(0.5),
            Expr::Pow(Box::new(Expr::sym("p")), Box::new(Expr::Const(2.0))),
        ]),
        Expr::Apply {
            name: "V".into(),
            args: vec![Expr::sym("q")],
        },
    ]);
    assert_eq!(e, expected);
}

#[test]
fn parse_zero_and_sqrt_over_four_terms() {
    assert_eq!(p("0"), Expr::Const(0.0));
    match p("sqrt(px^2+py^2+pz^2+m^2*c^2)") {
        Expr::Sqrt(inner) => match *inner {
            Expr::Sum(ts) => assert_eq!(ts.len(), 4),
            other => panic!("expected a sum, got {other:?}"),
        },
        other => panic!("expected sqrt, got {other:?}"),
    }
}

#[test]
fn parse_errors_carry_offsets() {
    match parse("p + * q") {
        Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
        other => panic!("{other:?}"),
    }
    match parse("(p + q") {
        Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 6),
        other => panic!("{other:?}"),
    }
    match parse("p $ q") {
        Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 2),
        other => panic!("{other:?}"),
    }
    let declared: BTreeSet<String> = ["V".to_string()].into();
    match parse_with("V(q) + W(q)", &declared) {
        Err(ExprError::UnknownFunction { name, offset }) => {
            assert_eq!(name, "W");
            assert_eq!(offset, 7);
        }
        other => panic!("{other:?}"),
    }
    assert!(parse_with("sqrt(V(q))", &declared).is_ok());
}

#[test]
fn unary_minus_and_exponents() {
    assert_eq!(p("-x^2"), -(Expr::sym("x").powi(2)));
    assert_eq!(p("2^-1"), Expr::num(0.5));
    assert_eq!(p("x^-1"), Expr::sym("x").recip());
    assert_eq!(p("1e-3*x"), 1e-3 * Expr::sym("x"));
    assert_eq!(p("2^3^2"), Expr::num(512.0));
}

#[test]
fn print_round_trips_canonical_forms() {
    for text in [
        "p^2/2 + V(q)",
        "p_t + p_q^2/2 + V(q)",
        "tdot*((qprime/tdot)^2/2 - V(q))",
        "-(m*c*sqrt(q0dot^2 - q1dot^2) + e/c*q0dot*A0(q0, q1))",
        "x/(y*z^2) - 3/(a + b)",
        "V''(q)*x - A0'[1,1](q0, q1)",
        "(x + 1)^7 + (-2)^0.5 + x^(-y)",
        "1e-12*x + 1e20*y",
        "ln(x)*x^y",
    ] {
        let e = p(text);
        let printed = e.to_string();
        assert_eq!(p(&printed), e, "{text} printed as {printed}");
    }
}

#[test]
fn canonical_form_collects_and_distributes() {
    assert!(p("dp_t + p*dp - p*dp - dp_t").is_zero_literal());
    assert_eq!(p("x*y + 2*y*x"), p("3*x*y"));
    assert_eq!(p("x*x^-1"), Expr::one());
    assert_eq!(p("(a + b)^2"), p("a^2 + 2*a*b + b^2"));
    assert_eq!(p("(x*y)^2/y"), p("x^2*y"));
    assert_eq!(p("sqrt(x)^2"), Expr::sym("x"));
    assert_eq!(p("x*0 + y^1"), Expr::sym("y"));
    assert_eq!(p("x - x"), Expr::zero());
}

#[test]
fn sqrt_of_square_needs_positivity() {
    let e = p("sqrt(tdot^2)");
    assert!(matches!(e, Expr::Sqrt(_)));
    let positive: BTreeSet<String> = ["tdot".to_string()].into();
    assert_eq!(e.simplify_with(&positive), Expr::sym("tdot"));
}

#[test]
fn simplify_is_idempotent_on_examples() {
    for text in [
        "tdot*((qprime/tdot)^2/2 - V(q))",
        "(p1 + A1(q))^2 + (p2 + A2(q))^2 + 1",
        "x/(1 + x)^3 - 2*x*sqrt(x + 1)",
    ] {
        let raw = parse_uncanonical(text).unwrap();
        let once = raw.simplify();
        assert_eq!(once.simplify(), once, "{text}");
    }
}

#[test]
fn derivative_of_potential_hamiltonian_is_formal() {
    let h = p("p^2/2 + V(q)");
    let dv = h.differentiate("q");
    assert_eq!(
        dv,
        Expr::Deriv {
            name: "V".into(),
            wrt: vec![0],
            args: vec![Expr::sym("q")]
        }
    );
    assert_eq!(dv.to_string(), "V'(q)");
    assert!(p("c0").differentiate("p").is_zero_literal());
    assert_eq!(h.differentiate("p"), Expr::sym("p"));
}

#[test]
fn derivative_of_relativistic_dispersion_matches_finite_differences() {
    let e = p("sqrt(px^2 + m^2*c^2)");
    let d = e.differentiate("px");
    assert_eq!(d, p("px/sqrt(px^2 + m^2*c^2)"));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let at = bind(&[
            ("px", rng.gen_range(-3.0..3.0)),
            ("m", rng.gen_range(0.5..2.0)),
            ("c", rng.gen_range(0.5..2.0)),
        ]);
        let exact = evaluate(&d, &at).unwrap();
        let fd = central_difference(&e, "px", &at, 1e-6);
        assert!(((exact - fd) / exact).abs() < 1e-7, "{exact} vs {fd}");
    }
}

#[test]
fn chain_rule_through_named_functions() {
    let e = p("V(q^2)");
    assert_eq!(e.differentiate("q"), p("2*q*V'(q^2)"));
    let a = p("A0(q0, q1)*q1");
    assert_eq!(a.differentiate("q1"), p("A0(q0, q1) + q1*A0'[1](q0, q1)"));
    let second = a.differentiate("q1").differentiate("q0");
    assert_eq!(second, p("A0'[0](q0, q1) + q1*A0'[0,1](q0, q1)"));
}

#[test]
fn evaluate_examples() {
    assert_eq!(evaluate(&p("p^2/2"), &bind(&[("p", 2.0)])).unwrap(), 2.0);
    let slope = evaluate(&p("3/sqrt(3^2+1)"), &Bindings::new()).unwrap();
    assert_eq!(slope, 0.9486832980505138);
    assert_eq!(
        evaluate(&p("x + y"), &bind(&[("x", 1.0)])),
        Err(ExprError::UnboundSymbol("y".into()))
    );
    assert!(matches!(
        evaluate(&p("sqrt(x)"), &bind(&[("x", -1.0)])),
        Err(ExprError::NegativeSqrt(_))
    ));
    assert_eq!(
        evaluate(&p("V(q)"), &bind(&[("q", 1.0)])),
        Err(ExprError::UndefinedFunction("V".into()))
    );
}

#[test]
fn compiled_agrees_with_tree_evaluation() {
    let e = p("x^3/(1 + y^2) - sqrt(x*y + 4) + x^0.5");
    let slots = vec!["x".to_string(), "y".to_string()];
    let c = Compiled::new(&e, &slots).unwrap();
    for (x, y) in [(0.3, 1.2), (2.0, -0.7), (1.5, 0.0)] {
        let tree = evaluate(&e, &bind(&[("x", x), ("y", y)])).unwrap();
        assert_eq!(c.eval(&[x, y]).unwrap(), tree);
    }
    assert_eq!(
        Compiled::new(&p("x + z"), &slots).unwrap_err(),
        ExprError::UnboundSymbol("z".into())
    );
}

#[test]
fn function_definitions_inline_with_derivatives() {
    let mut table = FunctionTable::new();
    table.define("V", FunctionDef::new(&["x"], p("x^2/2")));
    let e = p("p^2/2 + V(q) + V'(q)");
    assert_eq!(table.inline(&e).unwrap(), p("p^2/2 + q^2/2 + q"));
    table.define("A", FunctionDef::new(&["x", "y"], p("x*y^2")));
    // Parameter names colliding with argument symbols are substituted at once.
    assert_eq!(table.inline(&p("A(y, x)")).unwrap(), p("y*x^2"));
    assert_eq!(table.inline(&p("A'[1,1](u, v)")).unwrap(), p("2*u"));
    assert_eq!(
        table.inline(&p("W(q)")).unwrap_err(),
        ExprError::UndefinedFunction("W".into())
    );
    assert_eq!(table.inline_defined(&p("W(q) + V(q)")), p("W(q) + q^2/2"));
}

#[test]
fn zero_verdicts() {
    let mut sampler = Sampler::new(ProbeConfig::default());
    assert_eq!(
        is_zero(&p("dp_t + p*dp - p*dp - dp_t"), &mut sampler),
        ZeroVerdict::SymbolicallyZero
    );
    match is_zero(&p("p^2 - q"), &mut sampler) {
        ZeroVerdict::Nonzero { witness, residual } => {
            let again = evaluate(&p("p^2 - q"), &witness).unwrap();
            assert_eq!(again, residual);
            assert!(residual.abs() >= 1e-9);
        }
        other => panic!("{other:?}"),
    }
    // sqrt(x^2) - |x| style identity the simplifier leaves alone.
    match is_zero(&p("sqrt(x^2*y^2) - sqrt(x^2)*sqrt(y^2)"), &mut sampler) {
        ZeroVerdict::NumericallyZero {
            probes,
            max_residual,
        } => {
            assert_eq!(probes, 20);
            assert!(max_residual < 1e-9);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn oscillator_constraint_variation_vanishes() {
    // dH'_t = dp_t + p_q dp_q + V'(q) dq with dq = p_q dt, dp_q = -V'(q) dt,
    // dp_t = 0 substituted; the dt coefficient must vanish.
    let variation = p("dp_t + p_q*dp_q + V'(q)*dq");
    let mut eom = std::collections::BTreeMap::new();
    eom.insert("dq".to_string(), p("p_q*dt"));
    eom.insert("dp_q".to_string(), p("-V'(q)*dt"));
    eom.insert("dp_t".to_string(), Expr::zero());
    let substituted = variation.substitute(&eom);
    let mut sampler = Sampler::new(ProbeConfig::default());
    assert_eq!(
        is_zero(&substituted, &mut sampler),
        ZeroVerdict::SymbolicallyZero
    );
}

#[test]
fn opaque_functions_are_probed_as_random_polynomials() {
    let mut sampler = Sampler::new(ProbeConfig::default());
    // True for every V: derivative of V(2q) is 2 V'(2q).
    let identity = p("V(2*q)").differentiate("q") - p("2*V'(2*q)");
    assert!(is_zero(&identity, &mut sampler).is_zero());
    // False for generic V.
    let wrong = p("V'(q) - V(q)");
    assert!(!is_zero(&wrong, &mut sampler).is_zero());
}

#[test]
fn surface_projection_makes_weak_identities_vanish() {
    // p_t + H vanishes only on the surface p_t = -H.
    let h = p("p^2/2 + V(q)");
    let constraint = Expr::sym("p_t") + h.clone();
    let mut off = Sampler::new(ProbeConfig::default());
    assert!(!is_zero(&constraint, &mut off).is_zero());
    let mut on = Sampler::new(ProbeConfig::default()).with_surface(vec![SurfaceRule::Assign {
        symbol: "p_t".into(),
        value: -h,
    }]);
    assert!(is_zero(&constraint, &mut on).is_zero());
}
