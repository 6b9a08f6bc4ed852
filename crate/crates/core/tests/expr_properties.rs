use hjdyn::expr::{evaluate, parse, Bindings, Expr};
use proptest::prelude::*;

const SYMBOLS: [&str; 3] = ["x", "y", "z"];

/// Raw (non-canonical) trees built directly from the node constructors so
/// that the simplifier has real work to do.
fn raw_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4i32..=4).prop_map(|k| Expr::Const(f64::from(k))),
        prop::sample::select(vec![0.5, 1.5, -2.25, 3.0]).prop_map(Expr::Const),
        prop::sample::select(SYMBOLS.to_vec()).prop_map(Expr::sym),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Product),
            (inner.clone(), -1i32..=3)
                .prop_map(|(b, k)| { Expr::Pow(Box::new(b), Box::new(Expr::Const(f64::from(k)))) }),
            inner.clone().prop_map(|x| Expr::Neg(Box::new(x))),
            // Keep square roots well inside their domain.
            inner.prop_map(|x| {
                Expr::Sqrt(Box::new(Expr::Sum(vec![
                    Expr::Pow(Box::new(x), Box::new(Expr::Const(2.0))),
                    Expr::Const(1.0),
                ])))
            }),
        ]
    })
}

fn point() -> impl Strategy<Value = Bindings> {
    prop::collection::vec(-2.0f64..2.0, 3).prop_map(|v| {
        SYMBOLS
            .iter()
            .zip(v)
            .map(|(s, x)| (*s, x))
            .collect::<Bindings>()
    })
}

fn finite(e: &Expr, b: &Bindings) -> Option<f64> {
    evaluate(e, b)
        .ok()
        .filter(|v| v.is_finite() && v.abs() < 1e6)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn simplify_is_idempotent(e in raw_expr()) {
        let once = e.simplify();
        prop_assert_eq!(once.simplify(), once);
    }

    #[test]
    fn canonical_sums_and_products_are_flat(e in raw_expr()) {
        let s = e.simplify();
        let mut ok = true;
        s.visit(&mut |n| match n {
            Expr::Sum(xs) => ok &= xs.len() >= 2 && !xs.iter().any(|x| matches!(x, Expr::Sum(_))),
            Expr::Product(xs) => {
                ok &= xs.len() >= 2 && !xs.iter().any(|x| matches!(x, Expr::Product(_)))
            }
            Expr::Neg(_) => ok = false,
            _ => {}
        });
        prop_assert!(ok, "{s:?}");
    }

    #[test]
    fn simplify_preserves_value(e in raw_expr(), b in point()) {
        let Some(raw) = finite(&e, &b) else { return Ok(()) };
        let s = e.simplify();
        let Some(canon) = finite(&s, &b) else {
            return Err(TestCaseError::fail(format!("{s} undefined where raw = {raw}")));
        };
        // Expansion of powers of sums reassociates floating-point terms;
        // scale the tolerance by the magnitude of the largest partial term.
        let scale = magnitude(&s, &b).max(1.0);
        prop_assert!((raw - canon).abs() <= 1e-12 * scale, "{raw} vs {canon} for {s}");
    }

    #[test]
    fn print_then_parse_is_identity(e in raw_expr()) {
        let s = e.simplify();
        let printed = s.to_string();
        prop_assert_eq!(parse(&printed).unwrap(), s, "{}", printed);
    }

    #[test]
    fn differentiation_is_linear(
        f in raw_expr(),
        g in raw_expr(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (f, g) = (f.simplify(), g.simplify());
        let combined = (a * f.clone() + b * g.clone()).differentiate("x");
        let separate = a * f.differentiate("x") + b * g.differentiate("x");
        if combined == separate {
            return Ok(());
        }
        // Structural forms can differ only by floating-point coefficient
        // rounding; the difference must then be negligible everywhere.
        let diff = (combined.clone() - separate.clone()).simplify();
        for p in [[0.3, -0.7, 1.1], [1.3, 0.2, -0.4], [-1.1, 0.9, 0.6]] {
            let bind: Bindings = SYMBOLS.iter().zip(p).map(|(s, v)| (*s, v)).collect();
            if let (Some(d), Some(c)) = (finite(&diff, &bind), finite(&combined, &bind)) {
                prop_assert!(d.abs() <= 1e-9 * c.abs().max(1.0), "{combined} vs {separate}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences(e in raw_expr(), b in point()) {
        let e = e.simplify();
        let d = e.differentiate("x");
        let h = 1e-6;
        let x = b.get("x").unwrap();
        let (hi, lo) = (b.clone().with("x", x + h), b.clone().with("x", x - h));
        let (Some(exact), Some(fp), Some(fm)) = (finite(&d, &b), finite(&e, &hi), finite(&e, &lo))
        else {
            return Ok(());
        };
        // Skip points next to a pole where the stencil straddles a singularity.
        let curvature = finite(&d.differentiate("x"), &b).unwrap_or(f64::INFINITY);
        prop_assume!(curvature.abs() < 1e4);
        let fd = (fp - fm) / (2.0 * h);
        prop_assert!(close(exact, fd, 1e-6), "{exact} vs {fd} for {e}");
    }
}

/// Largest absolute value among the additive terms of `e` at `b`; bounds
/// the cancellation error in a canonical sum.
fn magnitude(e: &Expr, b: &Bindings) -> f64 {
    let mut m: f64 = 0.0;
    e.visit(&mut |n| {
        if let Some(v) = finite(n, b) {
            m = m.max(v.abs());
        }
    });
    m
}

#[test]
fn fifty_expressions_at_ten_points_agree_with_finite_differences() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, TestRng, TestRunner};

    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let mut checked = 0;
    let mut points_checked = 0;
    while checked < 50 {
        let e = raw_expr()
            .new_tree(&mut runner)
            .unwrap()
            .current()
            .simplify();
        if !e.contains_symbol("x") {
            continue;
        }
        let d = e.differentiate("x");
        let mut good = 0;
        for _ in 0..10 {
            let b = point().new_tree(&mut runner).unwrap().current();
            let x = b.get("x").unwrap();
            let h = 1e-6;
            let vals = (
                finite(&d, &b),
                finite(&e, &b.clone().with("x", x + h)),
                finite(&e, &b.clone().with("x", x - h)),
                finite(&d.differentiate("x"), &b),
            );
            if let (Some(exact), Some(fp), Some(fm), Some(c)) = vals {
                if c.abs() < 1e4 {
                    let fd = (fp - fm) / (2.0 * h);
                    assert!(close(exact, fd, 1e-6), "{exact} vs {fd} for {e}");
                    good += 1;
                }
            }
        }
        if good > 0 {
            checked += 1;
            points_checked += good;
        }
    }
    assert!(
        points_checked >= 250,
        "only {points_checked} admissible points"
    );
}
