//! Cross-module properties: grammar round trips, catalog closed forms,
//! derivative oracles, and mid-depth denominator pipelines.

use proptest::prelude::*;
use sobmult::{build_denominator, catalog, parse, DenomConfig, Expr, QuadConfig, RealFunction};

fn closed_form(name: &str) -> fn(f64) -> f64 {
    match name {
        "sin1x" => |x| (1.0 / x).sin(),
        "invx" => |x| 1.0 / x,
        "exp1x" => |x| (1.0 / x).exp(),
        "semicircle" => |x| (0.25 - (x - 0.5) * (x - 0.5)).sqrt(),
        "hump" => |x| x * (1.0 - x),
        "hump2" => |x| x * x * (1.0 - x),
        "x" => |x| x,
        "x2" => |x| x * x,
        "one" => |_| 1.0,
        "zero" => |_| 0.0,
        other => panic!("no closed form for {other}"),
    }
}

#[test]
fn catalog_round_trips_against_closed_forms() {
    for e in catalog::CATALOG {
        let expr = parse(e.expression).unwrap();
        let f = closed_form(e.name);
        for j in 0..100 {
            let x = (f64::from(j) + 0.5) / 100.0;
            let got = expr.evaluate(x).unwrap();
            let want = f(x);
            assert!(
                (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "{}: {got} vs {want} at {x}",
                e.name
            );
        }
    }
}

#[test]
fn catalog_derivatives_match_finite_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0707);
    for e in catalog::CATALOG {
        let expr = parse(e.expression).unwrap();
        let d = expr.differentiate();
        for _ in 0..20 {
            let x = rng.gen_range(0.1..0.9);
            let h = 1e-6;
            let fd = (expr.evaluate(x + h).unwrap() - expr.evaluate(x - h).unwrap()) / (2.0 * h);
            let sym = d.evaluate(x).unwrap();
            assert!(
                ((sym - fd) / (1.0 + sym.abs())).abs() < 1e-5,
                "{} at {x}: {sym} vs {fd}",
                e.name
            );
        }
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0..100.0_f64).prop_map(Expr::Constant),
        Just(Expr::X),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), -9..=9_i32).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Exp(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Sqrt(Box::new(a))),
            inner.prop_map(|a| Expr::Log(Box::new(a))),
        ]
    })
}

proptest! {
    /// Printing and reparsing reconstructs the tree (and in particular the
    /// same text always parses to the same tree).
    #[test]
    fn display_parse_round_trip(e in arb_expr()) {
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        prop_assert_eq!(reparsed, e, "printed: {}", printed);
    }
}

#[test]
fn mid_depth_pipelines_certify() {
    // full-depth runs live in the acceptance suite; this guards the
    // construction at a depth where everything stays in plain f64 range
    let cfg = DenomConfig {
        depth: 16,
        quad: QuadConfig::default(),
        cell_budget: 16_384,
        classify: sobmult::ClassifyConfig { levels: 10, ..Default::default() },
    };
    for name in ["sin1x", "invx", "exp1x", "semicircle"] {
        let phi = catalog::build(catalog::resolve(name).unwrap());
        let r = build_denominator(&phi, &cfg).unwrap();
        assert!(!r.trivial, "{name} needs the dyadic construction");
        assert!(r.certificate.valid, "{name}: {:?}", r.certificate.failed_checks);
        assert_eq!(RealFunction::value(&r.d, 0.0).unwrap(), 0.0);
        assert_eq!(RealFunction::value(&r.d, 1.0).unwrap(), 0.0);
        assert!(r.certificate.ln_min_abs_d > f64::NEG_INFINITY, "{name} vanishes inside");
    }
}
