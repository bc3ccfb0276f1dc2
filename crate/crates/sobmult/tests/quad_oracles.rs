//! Independent oracles for the quadrature engine: closed-form
//! antiderivatives of random polynomials, exact piecewise-linear square
//! integrals, and the dyadic profiles of the built-in singular symbols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobmult::{catalog, dyadic_profile, integrate, PiecewiseLinear, QuadConfig, Side};

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_antiderivative(coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    for (k, c) in coeffs.iter().enumerate() {
        out.push(c / (k as f64 + 1.0));
    }
    out
}

#[test]
fn polynomials_match_antiderivatives() {
    let cfg = QuadConfig::default().with_rel_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0501);
    for case in 0..100 {
        let deg = rng.gen_range(0..=6);
        let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let a = rng.gen_range(-1.0..1.5);
        let b = a + rng.gen_range(0.01..1.5);
        let anti = poly_antiderivative(&coeffs);
        let expected = poly_eval(&anti, b) - poly_eval(&anti, a);
        let got = integrate(|x| Ok(poly_eval(&coeffs, x)), a, b, &cfg).unwrap();
        assert!(
            (got.value - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
            "case {case}: deg {deg} on [{a},{b}]: {} vs {expected}",
            got.value
        );
    }
}

#[test]
fn piecewise_squares_match_adaptive_quadrature() {
    let cfg = QuadConfig::default().with_rel_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0502);
    for case in 0..200 {
        let n_nodes = rng.gen_range(2..=8);
        let mut xs: Vec<f64> = (0..n_nodes).map(|_| rng.gen_range(0.0..1.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if xs.len() < 2 {
            continue;
        }
        let nodes: Vec<(f64, f64)> = xs.iter().map(|&x| (x, rng.gen_range(-3.0..3.0))).collect();
        let p = PiecewiseLinear::from_nodes(&nodes).unwrap();
        let a = rng.gen_range(-0.2..1.0);
        let b = a + rng.gen_range(0.0..1.2);
        let expected = p.square_integral(a, b);

        // adaptive quadrature of p^2, split at the kinks
        let mut pts = vec![a, b];
        for &x in p.breakpoints() {
            if x > a && x < b {
                pts.push(x);
            }
        }
        pts.sort_by(f64::total_cmp);
        let mut got = 0.0;
        for w in pts.windows(2) {
            got += integrate(|x| Ok(p.value(x) * p.value(x)), w[0], w[1], &cfg).unwrap().value;
        }
        assert!(
            (got - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
            "case {case}: {got} vs {expected}"
        );
    }
}

#[test]
fn singular_catalog_profiles_increase() {
    let cfg = QuadConfig::default().with_max_panels(32_768);
    for name in ["sin1x", "invx", "exp1x"] {
        let phi = catalog::build(catalog::resolve(name).unwrap());
        let p = dyadic_profile(&phi, Side::Left, 20, &cfg).unwrap();
        for n in 2..20 {
            assert!(
                p.energy(n + 1).ln() > p.energy(n).ln(),
                "{name}: a_{} = {} !> a_{} = {}",
                n + 1,
                p.energy(n + 1).ln(),
                n,
                p.energy(n).ln()
            );
        }
    }
}
