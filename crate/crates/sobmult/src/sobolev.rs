//! The Hilbert-space structure: inner product, norm, reproducing kernel,
//! and membership tests for W^{1,2}[a,b] and W_0.
//!
//! The reproducing kernel of W^{1,2}[0,1] under `⟨f,g⟩ = ∫ f g + f' g'` is
//!
//! ```text
//! k_x(y) = cosh(min(x,y)) · cosh(1 - max(x,y)) / sinh(1)
//! ```
//!
//! the Green's function of `-u'' + u` with Neumann boundary conditions. It is
//! not taken on faith: the reproducing property `⟨f, k_x⟩ = f(x)` is itself a
//! build gate (see the acceptance suite), certified through quadrature.

use serde::Serialize;

use crate::expr::DomainError;
use crate::funcspace::DifferentiableFunction;
use crate::logscale::Magnitude;
use crate::quad::{
    divergence_probe, integrate, sobolev_energy, Approach, EnergyError, ProbeVerdict, QuadConfig,
    QuadError, QuadratureResult,
};

#[derive(Clone, Debug, Serialize)]
pub struct MembershipConfig {
    pub quad: QuadConfig,
    /// Levels for endpoint/singularity divergence probes.
    pub probe_levels: usize,
    /// Increment-decay ratio at or above which a probe reports divergence.
    pub ratio_threshold: f64,
    /// |f(0)|, |f(1)| tolerance for W_0 membership.
    pub endpoint_tol: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            quad: QuadConfig::default(),
            probe_levels: 20,
            ratio_threshold: 0.9,
            endpoint_tol: 1e-9,
        }
    }
}

/// How an energy request resolved; divergence and evaluation failures carry
/// their evidence instead of collapsing into a bare boolean.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyOutcome {
    Finite { energy: Magnitude, rel_error: f64, converged: bool },
    DivergenceSuspected { ln_partial: f64, probed_point: Option<f64> },
    EvaluationFailed { x: f64, message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub interval: (f64, f64),
    pub energy: EnergyOutcome,
    pub member: bool,
    /// Populated by the W_0 test.
    pub endpoint_values: Option<(f64, f64)>,
}

/// `⟨f,g⟩ = ∫ f g + f' g' dx` over [0,1] (real-valued model, so conjugation
/// is the identity). The integral is split at the breakpoints and declared
/// singular points of both functions.
pub fn inner_product(
    f: &DifferentiableFunction,
    g: &DifferentiableFunction,
    cfg: &QuadConfig,
) -> Result<QuadratureResult, QuadError> {
    let mut pts = vec![0.0, 1.0];
    for s in f
        .breaks()
        .iter()
        .chain(f.singularities())
        .chain(g.breaks())
        .chain(g.singularities())
    {
        if *s > 0.0 && *s < 1.0 {
            pts.push(*s);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let integrand = |x: f64| -> Result<f64, DomainError> {
        Ok(f.value(x)? * g.value(x)? + f.derivative(x)? * g.derivative(x)?)
    };
    let mut value = 0.0;
    let mut err = 0.0;
    let mut subdivisions = 0;
    let mut converged = true;
    for w in pts.windows(2) {
        let r = integrate(&integrand, w[0], w[1], cfg)?;
        value += r.value;
        err += r.error_estimate;
        subdivisions += r.subdivisions;
        converged &= r.converged;
    }
    Ok(QuadratureResult { value, error_estimate: err, subdivisions, converged })
}

/// Norm induced by the inner product.
pub fn norm(f: &DifferentiableFunction, cfg: &QuadConfig) -> Result<f64, QuadError> {
    Ok(inner_product(f, f, cfg)?.value.max(0.0).sqrt())
}

/// `k_x(y)`; symmetric in its arguments by construction.
pub fn kernel_value(x: f64, y: f64) -> f64 {
    let lo = x.min(y);
    let hi = x.max(y);
    lo.cosh() * (1.0 - hi).cosh() / 1.0_f64.sinh()
}

/// `y ↦ k_x(y)` with its a.e. derivative. The derivative has a jump at
/// `y = x`; evaluation exactly there returns the right-hand slope, and the
/// kink is declared as a breakpoint so quadrature splits on it.
pub fn kernel_function(x: f64) -> DifferentiableFunction {
    assert!((0.0..=1.0).contains(&x), "kernel center must lie in [0,1]");
    let sinh1 = 1.0_f64.sinh();
    let value = move |y: f64| kernel_value(x, y);
    let derivative = move |y: f64| {
        if y < x {
            y.sinh() * (1.0 - x).cosh() / sinh1
        } else {
            -(x.cosh() * (1.0 - y).sinh() / sinh1)
        }
    };
    let breaks = if x > 0.0 && x < 1.0 { vec![x] } else { Vec::new() };
    DifferentiableFunction::from_closures(format!("k_{x}"), value, derivative).with_breaks(breaks)
}

/// Gram matrix of kernel sections at the given points.
pub fn kernel_gram(points: &[f64]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|&x| points.iter().map(|&y| kernel_value(x, y)).collect())
        .collect()
}

/// Leading principal minors det(G[..k][..k]), k = 1..n, by Gaussian
/// elimination (the k-th minor is the product of the first k pivots).
pub fn leading_principal_minors(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut m: Vec<Vec<f64>> = matrix.to_vec();
    let mut minors = Vec::with_capacity(n);
    let mut det = 1.0;
    for k in 0..n {
        det *= m[k][k];
        minors.push(det);
        if m[k][k] != 0.0 {
            for i in k + 1..n {
                let factor = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= factor * m[k][j];
                }
            }
        }
    }
    minors
}

/// Probes the singular points of `f` that fall in [a,b], then integrates.
/// Membership is a numerical verdict with the evidence attached.
pub fn is_member(
    f: &DifferentiableFunction,
    a: f64,
    b: f64,
    cfg: &MembershipConfig,
) -> MembershipReport {
    assert!(a <= b, "interval must be ordered");
    for &s in f.singularities() {
        if s < a || s > b {
            continue;
        }
        let mut directions = Vec::new();
        if s > a {
            directions.push(Approach::FromBelow);
        }
        if s < b {
            directions.push(Approach::FromAbove);
        }
        for dir in directions {
            match divergence_probe(f, s, dir, cfg.probe_levels, cfg.ratio_threshold, &cfg.quad) {
                Ok(report) => {
                    if report.verdict == ProbeVerdict::Divergent {
                        let ln_partial = report
                            .increments
                            .iter()
                            .fold(Magnitude::ZERO, |acc, m| acc + *m)
                            .ln();
                        return MembershipReport {
                            interval: (a, b),
                            energy: EnergyOutcome::DivergenceSuspected {
                                ln_partial,
                                probed_point: Some(s),
                            },
                            member: false,
                            endpoint_values: None,
                        };
                    }
                }
                Err(e) => {
                    return MembershipReport {
                        interval: (a, b),
                        energy: EnergyOutcome::EvaluationFailed { x: e.x, message: e.to_string() },
                        member: false,
                        endpoint_values: None,
                    };
                }
            }
        }
    }
    match sobolev_energy(f, a, b, &cfg.quad) {
        Ok(r) => MembershipReport {
            interval: (a, b),
            energy: EnergyOutcome::Finite {
                energy: r.value,
                rel_error: r.rel_error,
                converged: r.converged,
            },
            member: true,
            endpoint_values: None,
        },
        Err(EnergyError::DivergenceSuspected { ln_partial, .. }) => MembershipReport {
            interval: (a, b),
            energy: EnergyOutcome::DivergenceSuspected { ln_partial, probed_point: None },
            member: false,
            endpoint_values: None,
        },
        Err(EnergyError::Evaluation(e)) => MembershipReport {
            interval: (a, b),
            energy: EnergyOutcome::EvaluationFailed { x: e.x, message: e.to_string() },
            member: false,
            endpoint_values: None,
        },
    }
}

/// W_0 membership: finite global energy and both endpoint values within
/// `endpoint_tol` (piecewise-linear functions evaluate their endpoints
/// exactly, so their check is exact).
pub fn is_member_w0(f: &DifferentiableFunction, cfg: &MembershipConfig) -> MembershipReport {
    let mut report = is_member(f, 0.0, 1.0, cfg);
    let v0 = f.value(0.0);
    let v1 = f.value(1.0);
    match (v0, v1) {
        (Ok(v0), Ok(v1)) => {
            report.endpoint_values = Some((v0, v1));
            report.member =
                report.member && v0.abs() <= cfg.endpoint_tol && v1.abs() <= cfg.endpoint_tol;
        }
        (Err(e), _) | (_, Err(e)) => {
            report.member = false;
            if matches!(report.energy, EnergyOutcome::Finite { .. }) {
                report.energy = EnergyOutcome::EvaluationFailed { x: e.x, message: e.to_string() };
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::funcspace::PiecewiseLinear;
    use approx::assert_relative_eq;

    fn func(text: &str, sings: Vec<f64>) -> DifferentiableFunction {
        DifferentiableFunction::from_expr(&parse(text).unwrap(), text, sings)
    }

    #[test]
    fn inner_product_examples() {
        let cfg = QuadConfig::default();
        let one = DifferentiableFunction::constant(1.0);
        let x = func("x", vec![]);
        assert_relative_eq!(inner_product(&one, &one, &cfg).unwrap().value, 1.0, max_relative = 1e-10);
        assert_relative_eq!(inner_product(&x, &x, &cfg).unwrap().value, 4.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(inner_product(&x, &one, &cfg).unwrap().value, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn norms_and_cauchy_schwarz() {
        let cfg = QuadConfig::default();
        let one = DifferentiableFunction::constant(1.0);
        let x = func("x", vec![]);
        let n1 = norm(&one, &cfg).unwrap();
        let nx = norm(&x, &cfg).unwrap();
        assert_relative_eq!(n1, 1.0, max_relative = 1e-10);
        assert_relative_eq!(nx, (4.0_f64 / 3.0).sqrt(), max_relative = 1e-10);
        let ip = inner_product(&x, &one, &cfg).unwrap().value;
        assert!(ip.abs() <= nx * n1 + 1e-12);
        // and norm of the zero function vanishes
        let zero = DifferentiableFunction::constant(0.0);
        assert_eq!(norm(&zero, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn kernel_closed_form_values() {
        // k(0,0) = cosh(1)/sinh(1) = coth(1)
        assert_relative_eq!(kernel_value(0.0, 0.0), 1.0 / 1.0_f64.tanh(), max_relative = 1e-15);
        // symmetric bitwise: same min/max decomposition both ways
        for (x, y) in [(0.1, 0.7), (0.33, 0.34), (0.0, 1.0), (0.5, 0.5)] {
            assert_eq!(kernel_value(x, y).to_bits(), kernel_value(y, x).to_bits());
        }
    }

    #[test]
    fn reproducing_property_on_grid() {
        let cfg = QuadConfig::default();
        let family: Vec<DifferentiableFunction> = vec![
            DifferentiableFunction::constant(1.0),
            func("x", vec![]),
            func("x^2", vec![]),
            DifferentiableFunction::from_closures("cosh", f64::cosh, f64::sinh),
        ];
        for f in &family {
            for i in 0..=10 {
                let x = f64::from(i) / 10.0;
                let k = kernel_function(x);
                let ip = inner_product(f, &k, &cfg).unwrap().value;
                let fx = f.value(x).unwrap();
                assert!((ip - fx).abs() < 1e-6, "{} at {x}: {ip} vs {fx}", f.name());
            }
        }
    }

    #[test]
    fn kernel_derivative_formulas() {
        let x = 0.6;
        let k = kernel_function(x);
        let sinh1 = 1.0_f64.sinh();
        // left branch
        let y = 0.3;
        assert_relative_eq!(
            k.derivative(y).unwrap(),
            y.sinh() * (1.0 - x).cosh() / sinh1,
            max_relative = 1e-14
        );
        // finite-difference cross-check away from the kink
        let h = 1e-7;
        let fd = (k.value(y + h).unwrap() - k.value(y - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(k.derivative(y).unwrap(), fd, max_relative = 1e-6);
        // one-sided slopes at the kink differ
        let left = x.sinh() * (1.0 - x).cosh() / sinh1;
        let right = -(x.cosh() * (1.0 - x).sinh() / sinh1);
        assert!(left > 0.0 && right < 0.0);
        assert_eq!(k.derivative(x).unwrap(), right, "right-hand convention at the kink");
        // degenerate min-branch at x = 0: k_0(y) = cosh(1-y)/sinh(1)
        let k0 = kernel_function(0.0);
        for y in [0.0, 0.2, 0.9] {
            assert_relative_eq!(
                k0.value(y).unwrap(),
                (1.0 - y).cosh() / sinh1,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn gram_minors_stay_nonnegative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x50b0_1e57);
        for _ in 0..5 {
            let n = rng.gen_range(2..=6);
            let mut pts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            pts.sort_by(f64::total_cmp);
            pts.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let gram = kernel_gram(&pts);
            for minor in leading_principal_minors(&gram) {
                assert!(minor > -1e-12, "minor {minor} for points {pts:?}");
            }
        }
    }

    #[test]
    fn multiplier_kernel_identity_for_bounded_symbol() {
        let cfg = QuadConfig::default();
        let phi = parse("x*(1-x)").unwrap();
        for f_text in ["x*(1-x)", "x^2*(1-x)"] {
            let f = parse(f_text).unwrap();
            let phif = crate::expr::Expr::Mul(Box::new(phi.clone()), Box::new(f.clone()));
            let f = DifferentiableFunction::from_expr(&f, f_text, vec![]);
            let phif = DifferentiableFunction::from_expr(&phif, "phi*f", vec![]);
            for i in 0..=10 {
                let x = f64::from(i) / 10.0;
                let k = kernel_function(x);
                let lhs = inner_product(&phif, &k, &cfg).unwrap().value;
                let rhs = phi.evaluate(x).unwrap() * inner_product(&f, &k, &cfg).unwrap().value;
                assert!((lhs - rhs).abs() < 1e-6, "{f_text} at {x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn membership_examples() {
        let cfg = MembershipConfig::default();
        let recip = func("1/x", vec![0.0]);
        let r = is_member(&recip, 0.25, 0.5, &cfg);
        assert!(r.member);
        match r.energy {
            EnergyOutcome::Finite { energy, .. } => {
                assert_relative_eq!(energy.value(), 62.0 / 3.0, max_relative = 1e-9);
            }
            other => panic!("expected finite energy, got {other:?}"),
        }

        let r = is_member(&recip, 0.0, 0.5, &cfg);
        assert!(!r.member);
        assert!(matches!(r.energy, EnergyOutcome::DivergenceSuspected { .. }));

        let sq = func("x^2", vec![]);
        assert!(is_member(&sq, 0.0, 1.0, &cfg).member);
    }

    #[test]
    fn w0_membership_examples() {
        let cfg = MembershipConfig::default();
        let hump = func("x*(1-x)", vec![]);
        let r = is_member_w0(&hump, &cfg);
        assert!(r.member);
        assert_eq!(r.endpoint_values, Some((0.0, 0.0)));

        let one = DifferentiableFunction::constant(1.0);
        let r = is_member_w0(&one, &cfg);
        assert!(!r.member, "constants fail the endpoint condition");
        assert!(matches!(r.energy, EnergyOutcome::Finite { .. }));

        // sqrt(x) vanishes at 0 but its derivative energy diverges
        let root = func("sqrt(x)", vec![0.0]);
        let r = is_member_w0(&root, &cfg);
        assert!(!r.member);
        assert!(matches!(r.energy, EnergyOutcome::DivergenceSuspected { .. }));
    }

    #[test]
    fn w0_membership_uses_exact_pl_endpoints() {
        let cfg = MembershipConfig::default();
        let pl = PiecewiseLinear::from_nodes(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap();
        let f = DifferentiableFunction::from_piecewise_linear(pl, "tent");
        let r = is_member_w0(&f, &cfg);
        assert!(r.member);
        assert_eq!(r.endpoint_values, Some((0.0, 0.0)));
    }
}
