//! Construction of the non-vanishing denominator.
//!
//! For a symbol φ that is densely defined on W_0 but not in W^{1,2}[0,1],
//! the recipe is: measure the dyadic energy profile `a_n` toward each
//! endpoint, clamp node heights with `b_n = min{1/a_n, 1/a_{n-1}, 1}`,
//! linearly interpolate the points `(2^-n, b_n·2^-2n)` on the left (mirrored
//! on the right, rescaled to glue continuously at 1/2), and weight by
//! `x(1-x)`. The result `d` is positive on the open support, vanishes at 0
//! and 1 exactly, and the clamps force `φ·d` back into W_0; every one of
//! those claims is checked numerically and recorded in a
//! [`VerificationReport`].
//!
//! All heights and energies are carried in log scale. For a symbol like
//! `exp(1/x)` the true node heights fall below the smallest positive f64
//! around the ninth dyadic level; the plain-value view of the denominator
//! underflows to 0 there, while the log-scale view stays exact and is what
//! the certificate integrates.

use serde::Serialize;

use crate::classify::{classify_full, ClassifyConfig, Decision};
use crate::expr::DomainError;
use crate::funcspace::{multiply, DifferentiableFunction, PiecewiseLinear, ProductFunction};
use crate::logscale::{LnScalar, Magnitude};
use crate::quad::{
    dyadic_cell, dyadic_profile, integrate_ln, sobolev_energy, DyadicProfile, EnergyError,
    ProfileError, QuadConfig, Side,
};
use crate::sobolev::EnergyOutcome;

/// Profile entries are floored here before taking reciprocals, so cells
/// where the symbol vanishes still produce positive clamps (which then
/// saturate at 1 exactly as tiny energies should).
pub const B_FLOOR: f64 = 1e-300;

/// Majorant slack: per-cell quadrature may exceed the bound by at most this
/// factor before the certificate is invalidated.
pub const MAJORANT_SLACK: f64 = 1.0 + 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct DenomConfig {
    /// Truncation depth N: dyadic levels per side.
    pub depth: usize,
    pub quad: QuadConfig,
    /// Panel budget for per-cell integrals. Deep cells of oscillatory
    /// symbols stall against this budget with a stable estimate; that is
    /// expected and recorded, not an error.
    pub cell_budget: u32,
    pub classify: ClassifyConfig,
}

impl Default for DenomConfig {
    fn default() -> Self {
        DenomConfig {
            depth: 40,
            quad: QuadConfig::default(),
            cell_budget: 32_768,
            classify: ClassifyConfig::default(),
        }
    }
}

impl DenomConfig {
    fn cell_cfg(&self) -> QuadConfig {
        self.quad.clone().with_max_panels(self.cell_budget)
    }
}

/// The clamp sequence `b_n = min{1/a_n, 1/a_{n-1}, 1}` with `a_0 := a_1`.
///
/// Held in log scale, where the defining inequalities `b_n ≤ 1`,
/// `a_n·b_n ≤ 1` and `a_n·b_{n+1} ≤ 1` hold exactly.
#[derive(Debug, Clone, Serialize)]
pub struct BSequence {
    values: Vec<Magnitude>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DenomError {
    #[error("profile is empty")]
    EmptyProfile,
    #[error("construction refused: {0}")]
    Refused(#[from] ProfileError),
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] DomainError),
    #[error("energy computation failed: {0}")]
    Energy(#[from] EnergyError),
}

/// Clamp sequence from a measured profile.
pub fn b_sequence(profile: &DyadicProfile) -> Result<BSequence, DenomError> {
    if profile.energies.is_empty() {
        return Err(DenomError::EmptyProfile);
    }
    let floor = Magnitude::from_value(B_FLOOR);
    let floored: Vec<Magnitude> = profile.energies.iter().map(|a| a.max(floor)).collect();
    let mut values = Vec::with_capacity(floored.len());
    for n in 0..floored.len() {
        let prev = if n == 0 { floored[0] } else { floored[n - 1] };
        let ln_b = -(floored[n].ln().max(prev.ln()).max(0.0));
        values.push(Magnitude::from_ln(ln_b));
    }
    Ok(BSequence { values })
}

impl BSequence {
    pub fn values(&self) -> &[Magnitude] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 1-based accessor.
    pub fn b(&self, n: usize) -> Magnitude {
        self.values[n - 1]
    }
}

/// Node height `b_n · 2^-2n · scale` in both representations.
fn height(b: Magnitude, n: usize, scale: Magnitude) -> (f64, LnScalar) {
    let ln = b.ln() + scale.ln() - 2.0 * n as f64 * std::f64::consts::LN_2;
    let plain = b.value() * scale.value() * (2.0_f64).powi(-2 * (n as i32));
    (plain, LnScalar::new(1, ln))
}

/// The left-half interpolant through `(2^-n, b_n·2^-2n)`, n = 1..N, closed
/// at the truncation edge with one extra node `(2^-(N+1), b_N·2^-2(N+1))`
/// continuing the last slope pattern; outside its span the function is 0,
/// which realizes `f(0) = 0`.
pub fn left_interpolant(b: &BSequence) -> PiecewiseLinear {
    let n_max = b.len();
    let mut xs = Vec::with_capacity(n_max + 1);
    let mut plain = Vec::with_capacity(n_max + 1);
    let mut lns = Vec::with_capacity(n_max + 1);
    let closure = height(b.b(n_max), n_max + 1, Magnitude::ONE);
    xs.push((2.0_f64).powi(-(n_max as i32 + 1)));
    plain.push(closure.0);
    lns.push(closure.1);
    for n in (1..=n_max).rev() {
        let (v, ln) = height(b.b(n), n, Magnitude::ONE);
        xs.push((2.0_f64).powi(-(n as i32)));
        plain.push(v);
        lns.push(ln);
    }
    PiecewiseLinear::from_dual_nodes(xs, plain, lns).expect("dyadic breakpoints are ordered")
}

/// Per-side data retained for verification.
#[derive(Debug, Clone, Serialize)]
pub struct SideData {
    pub side: Side,
    pub profile: DyadicProfile,
    pub b: BSequence,
    /// Heights v_1..v_{N+1} actually used in the merged denominator
    /// (glue-rescaled on the right); v_{N+1} is the closure node.
    pub heights: Vec<Magnitude>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SideCertificate {
    pub side: Side,
    /// Per-cell Sobolev energy of φ·d.
    pub cell_energies: Vec<Magnitude>,
    pub cells_converged: Vec<bool>,
    /// Consecutive per-cell energy ratios (decay evidence).
    pub cell_ratios: Vec<f64>,
    /// Majorant series terms a_n · max{(b_n 2^-2n)^2, (b_{n+1} 2^-2(n+1))^2}.
    pub majorant_terms: Vec<Magnitude>,
    /// Consecutive majorant-term ratios.
    pub tail_ratios: Vec<f64>,
    /// Per-cell ∫|φ·f|^2 over its majorant term; must stay ≤ 1 + 1e-6.
    pub majorant_factors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub depth: usize,
    /// The clamp formula references a_0, which the profile never defines.
    pub a0_equals_a1: bool,
    pub b_floor: f64,
    /// ln of the positive constant multiplying the right half.
    pub ln_glue_scale: Option<f64>,
    pub endpoint_weight: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub failed_checks: Vec<String>,
    pub energy_d: Magnitude,
    pub energy_d_converged: bool,
    pub energy_phi_d: EnergyOutcome,
    /// min |d| over the certification grid (midpoints of breakpoint gaps);
    /// the plain value may underflow, the log value is authoritative.
    pub min_abs_d: f64,
    pub ln_min_abs_d: f64,
    pub endpoint_values: (f64, f64),
    pub left: Option<SideCertificate>,
    pub right: Option<SideCertificate>,
    pub conventions: Conventions,
}

/// The constructed denominator and everything needed to audit it.
#[derive(Clone, Debug, Serialize)]
pub struct DenominatorResult {
    /// `d = x(1-x) · f` with f the merged interpolant (or the constant 1 on
    /// the trivial branch).
    #[serde(skip)]
    pub d: ProductFunction,
    /// `φ · d`, for sampling and verification.
    #[serde(skip)]
    pub phi_d: ProductFunction,
    pub trivial: bool,
    pub depth: usize,
    pub left: Option<SideData>,
    pub right: Option<SideData>,
    pub ln_glue_scale: Option<f64>,
    pub certificate: VerificationReport,
}

fn ratio_list(values: &[Magnitude]) -> Vec<f64> {
    values
        .windows(2)
        .map(|w| {
            let r = w[1].ratio(w[0]);
            if r.is_nan() {
                0.0
            } else {
                r
            }
        })
        .collect()
}

/// Builds the denominator for `phi`. Assumes `classify_w0(phi)` came back
/// yes (the caller runs classification; an interior singularity still
/// surfaces here as a refused construction when a dyadic cell diverges).
pub fn build_denominator(
    phi: &DifferentiableFunction,
    cfg: &DenomConfig,
) -> Result<DenominatorResult, DenomError> {
    assert!(cfg.depth >= 1, "depth must be at least 1");
    let full = classify_full(phi, &cfg.classify);
    if full.densely_defined == Decision::Yes {
        return trivial_denominator(phi, cfg);
    }

    let cell_cfg = cfg.cell_cfg();
    let left_profile = dyadic_profile(phi, Side::Left, cfg.depth, &cell_cfg)?;
    let right_profile = dyadic_profile(phi, Side::Right, cfg.depth, &cell_cfg)?;
    let left_b = b_sequence(&left_profile)?;
    let right_b = b_sequence(&right_profile)?;

    let n_max = cfg.depth;
    // continuity at 1/2 fixes the rescale of the right half
    let glue = left_b.b(1) / right_b.b(1);

    let mut xs = Vec::with_capacity(2 * n_max + 2);
    let mut plain = Vec::with_capacity(2 * n_max + 2);
    let mut lns = Vec::with_capacity(2 * n_max + 2);
    let mut left_heights = Vec::with_capacity(n_max + 1);
    let mut right_heights = Vec::with_capacity(n_max + 1);

    // left half ascending: closure node, then n = N..1 (x = 2^-n)
    let closure = height(left_b.b(n_max), n_max + 1, Magnitude::ONE);
    xs.push((2.0_f64).powi(-(n_max as i32 + 1)));
    plain.push(closure.0);
    lns.push(closure.1);
    for n in (1..=n_max).rev() {
        let (v, ln) = height(left_b.b(n), n, Magnitude::ONE);
        xs.push((2.0_f64).powi(-(n as i32)));
        plain.push(v);
        lns.push(ln);
    }
    for n in 1..=n_max {
        left_heights.push(height(left_b.b(n), n, Magnitude::ONE).1.magnitude());
    }
    left_heights.push(closure.1.magnitude());

    // right half: mirror nodes 1 - 2^-n for n = 2..N plus the closure; the
    // shared node at 1/2 keeps the left value (the glue scale makes both
    // halves agree there).
    for n in 2..=n_max {
        let (v, ln) = height(right_b.b(n), n, glue);
        xs.push(1.0 - (2.0_f64).powi(-(n as i32)));
        plain.push(v);
        lns.push(ln);
    }
    let r_closure = height(right_b.b(n_max), n_max + 1, glue);
    xs.push(1.0 - (2.0_f64).powi(-(n_max as i32 + 1)));
    plain.push(r_closure.0);
    lns.push(r_closure.1);
    for n in 1..=n_max {
        right_heights.push(height(right_b.b(n), n, glue).1.magnitude());
    }
    right_heights.push(r_closure.1.magnitude());

    let merged = PiecewiseLinear::from_dual_nodes(xs, plain, lns).expect("merged nodes are ordered");
    let one = DifferentiableFunction::constant(1.0);
    let d = multiply(one, merged.clone(), true);
    let phi_d = multiply(phi.clone(), merged, true);

    let left = SideData { side: Side::Left, profile: left_profile, b: left_b, heights: left_heights };
    let right =
        SideData { side: Side::Right, profile: right_profile, b: right_b, heights: right_heights };

    let certificate = certify(phi, &d, &phi_d, Some(&left), Some(&right), Some(glue.ln()), cfg);
    Ok(DenominatorResult {
        d,
        phi_d,
        trivial: false,
        depth: cfg.depth,
        left: Some(left),
        right: Some(right),
        ln_glue_scale: Some(glue.ln()),
        certificate,
    })
}

/// φ already lives in W^{1,2}[0,1]: `d = x(1-x)` works as-is.
fn trivial_denominator(
    phi: &DifferentiableFunction,
    cfg: &DenomConfig,
) -> Result<DenominatorResult, DenomError> {
    let flat = PiecewiseLinear::from_nodes(&[(0.0, 1.0), (1.0, 1.0)]).expect("two nodes");
    let one = DifferentiableFunction::constant(1.0);
    let d = multiply(one, flat.clone(), true);
    let phi_d = multiply(phi.clone(), flat, true);
    let certificate = certify(phi, &d, &phi_d, None, None, None, cfg);
    Ok(DenominatorResult {
        d,
        phi_d,
        trivial: true,
        depth: cfg.depth,
        left: None,
        right: None,
        ln_glue_scale: None,
        certificate,
    })
}

/// Recomputes the verification certificate for a constructed denominator.
pub fn verify_denominator(
    phi: &DifferentiableFunction,
    result: &DenominatorResult,
    cfg: &DenomConfig,
) -> VerificationReport {
    certify(
        phi,
        &result.d,
        &result.phi_d,
        result.left.as_ref(),
        result.right.as_ref(),
        result.ln_glue_scale,
        cfg,
    )
}

fn certify(
    phi: &DifferentiableFunction,
    d: &ProductFunction,
    phi_d: &ProductFunction,
    left: Option<&SideData>,
    right: Option<&SideData>,
    ln_glue_scale: Option<f64>,
    cfg: &DenomConfig,
) -> VerificationReport {
    use crate::funcspace::RealFunction;

    let mut failed: Vec<String> = Vec::new();
    let d_fn = d.as_function("denominator");
    let phi_d_fn = phi_d.as_function("phi*denominator");

    // endpoint values: exactly zero through the x(1-x) weight and the
    // outside-support convention
    let d0 = RealFunction::value(d, 0.0).unwrap_or(f64::NAN);
    let d1 = RealFunction::value(d, 1.0).unwrap_or(f64::NAN);
    if d0 != 0.0 || d1 != 0.0 {
        failed.push(format!("endpoint values not exactly zero: d(0)={d0}, d(1)={d1}"));
    }

    // positivity at interior nodes and on the certification grid of gap
    // midpoints
    let pl = d.piecewise();
    let mut ln_min = f64::INFINITY;
    for (i, &x) in pl.breakpoints().iter().enumerate() {
        if x <= 0.0 || x >= 1.0 {
            continue;
        }
        if pl.ln_node_values()[i].sign() <= 0 {
            failed.push(format!("node value at breakpoint {x} is not positive"));
        }
    }
    for w in pl.breakpoints().windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        match RealFunction::ln_value(d, mid) {
            Ok(v) if v.sign() > 0 => ln_min = ln_min.min(v.ln_abs()),
            Ok(_) => {
                failed.push(format!("d is not positive at grid point {mid}"));
                ln_min = f64::NEG_INFINITY;
            }
            Err(e) => failed.push(format!("d evaluation failed at {mid}: {e}")),
        }
    }
    if ln_min == f64::INFINITY {
        ln_min = f64::NEG_INFINITY;
    }

    // Sobolev energy of d
    let (energy_d, energy_d_converged) = match sobolev_energy(&d_fn, 0.0, 1.0, &cfg.quad) {
        Ok(r) => (r.value, r.converged),
        Err(e) => {
            failed.push(format!("energy of d did not settle: {e}"));
            (Magnitude::ZERO, false)
        }
    };
    if !energy_d.is_finite() {
        failed.push("energy of d is not finite".into());
    }

    // per-cell energies of φ·d, the majorant series, and its tail
    let cell_cfg = cfg.cell_cfg();
    let mut total_phi_d = Magnitude::ZERO;
    let mut total_rel = 0.0_f64;
    let mut all_converged = true;
    let mut diverged: Option<f64> = None;
    let mut sides = Vec::new();
    for side_data in [left, right].into_iter().flatten() {
        let n_cells = side_data.profile.depth();
        let mut cell_energies = Vec::with_capacity(n_cells);
        let mut cells_converged = Vec::with_capacity(n_cells);
        let mut majorant_terms = Vec::with_capacity(n_cells);
        let mut majorant_factors = Vec::with_capacity(n_cells);
        let phi_f = multiply(phi.clone(), pl.clone(), false);
        for n in 1..=n_cells {
            let (lo, hi) = dyadic_cell(side_data.side, n);
            match sobolev_energy(&phi_d_fn, lo, hi, &cell_cfg) {
                Ok(r) => {
                    cell_energies.push(r.value);
                    cells_converged.push(r.converged);
                    total_phi_d = total_phi_d + r.value;
                    total_rel = total_rel.max(r.rel_error);
                    all_converged &= r.converged;
                }
                Err(e) => {
                    failed.push(format!(
                        "energy of phi*d on cell {n} ({:?}) did not settle: {e}",
                        side_data.side
                    ));
                    if let EnergyError::DivergenceSuspected { ln_partial, .. } = e {
                        diverged = Some(ln_partial);
                    }
                    cell_energies.push(Magnitude::ZERO);
                    cells_converged.push(false);
                    all_converged = false;
                }
            }
            let vmax = side_data.heights[n - 1].max(side_data.heights[n]);
            let term = side_data.profile.energy(n) * vmax.powi(2);
            majorant_terms.push(term);
            match integrate_ln(
                |x| {
                    if let Ok(v) = RealFunction::value(&phi_f, x) {
                        let s = v * v;
                        if s.is_normal() {
                            return Ok(s.ln());
                        }
                    }
                    let v = RealFunction::ln_value(&phi_f, x)?;
                    Ok(2.0 * v.ln_abs())
                },
                lo,
                hi,
                &cell_cfg,
            ) {
                Ok(r) => {
                    let factor = r.value.ratio(term);
                    let factor = if factor.is_nan() { 0.0 } else { factor };
                    majorant_factors.push(factor);
                    if factor > MAJORANT_SLACK {
                        failed.push(format!(
                            "majorant exceeded on cell {n} ({:?}): factor {factor}",
                            side_data.side
                        ));
                    }
                }
                Err(e) => {
                    majorant_factors.push(f64::INFINITY);
                    failed.push(format!(
                        "majorant integral on cell {n} ({:?}) did not settle: {e}",
                        side_data.side
                    ));
                }
            }
        }
        let cell_ratios = ratio_list(&cell_energies);
        if cell_ratios.len() >= 5 {
            let tail = &cell_ratios[cell_ratios.len() - 5..];
            if tail.iter().any(|r| !(*r < 1.0)) {
                failed.push(format!(
                    "phi*d cell energies are not decaying on the {:?} side: {tail:?}",
                    side_data.side
                ));
            }
        }
        let tail_ratios = ratio_list(&majorant_terms);
        sides.push(SideCertificate {
            side: side_data.side,
            cell_energies,
            cells_converged,
            cell_ratios,
            majorant_terms,
            tail_ratios,
            majorant_factors,
        });
    }

    let energy_phi_d = if left.is_none() {
        // trivial branch: one global integral
        match sobolev_energy(&phi_d_fn, 0.0, 1.0, &cfg.quad) {
            Ok(r) => {
                EnergyOutcome::Finite { energy: r.value, rel_error: r.rel_error, converged: r.converged }
            }
            Err(EnergyError::DivergenceSuspected { ln_partial, .. }) => {
                failed.push("energy of phi*d appears divergent".into());
                EnergyOutcome::DivergenceSuspected { ln_partial, probed_point: None }
            }
            Err(EnergyError::Evaluation(e)) => {
                failed.push(format!("phi*d evaluation failed: {e}"));
                EnergyOutcome::EvaluationFailed { x: e.x, message: e.to_string() }
            }
        }
    } else if let Some(ln_partial) = diverged {
        EnergyOutcome::DivergenceSuspected { ln_partial, probed_point: None }
    } else {
        EnergyOutcome::Finite { energy: total_phi_d, rel_error: total_rel, converged: all_converged }
    };

    let mut side_iter = sides.into_iter();
    let (left_cert, right_cert) =
        if left.is_some() { (side_iter.next(), side_iter.next()) } else { (None, None) };

    VerificationReport {
        valid: failed.is_empty(),
        failed_checks: failed,
        energy_d,
        energy_d_converged,
        energy_phi_d,
        min_abs_d: ln_min.exp(),
        ln_min_abs_d: ln_min,
        endpoint_values: (d0, d1),
        left: left_cert,
        right: right_cert,
        conventions: Conventions {
            depth: cfg.depth,
            a0_equals_a1: true,
            b_floor: B_FLOOR,
            ln_glue_scale,
            endpoint_weight: "x*(1-x)",
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::funcspace::RealFunction;
    use approx::assert_relative_eq;

    fn func(text: &str, sings: Vec<f64>) -> DifferentiableFunction {
        DifferentiableFunction::from_expr(&parse(text).unwrap(), text, sings)
    }

    fn profile_from(values: &[f64]) -> DyadicProfile {
        DyadicProfile {
            side: Side::Left,
            energies: values.iter().map(|v| Magnitude::from_value(*v)).collect(),
            cell_rel_errors: vec![0.0; values.len()],
            cells_converged: vec![true; values.len()],
        }
    }

    fn fast_cfg(depth: usize) -> DenomConfig {
        DenomConfig {
            depth,
            classify: ClassifyConfig { levels: 10, ..ClassifyConfig::default() },
            ..DenomConfig::default()
        }
    }

    #[test]
    fn clamp_formula_with_a0_convention() {
        let b = b_sequence(&profile_from(&[2.0, 8.0, 32.0])).unwrap();
        assert_relative_eq!(b.b(1).value(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(b.b(2).value(), 0.125, max_relative = 1e-14);
        assert_relative_eq!(b.b(3).value(), 1.0 / 32.0, max_relative = 1e-14);
    }

    #[test]
    fn clamp_saturates_at_one() {
        let b = b_sequence(&profile_from(&[0.25, 0.125])).unwrap();
        assert_eq!(b.b(1).value(), 1.0);
        assert_eq!(b.b(2).value(), 1.0);
    }

    #[test]
    fn clamp_from_reciprocal_profile() {
        let b = b_sequence(&profile_from(&[62.0 / 3.0, 153.0])).unwrap();
        assert_relative_eq!(b.b(1).value(), 3.0 / 62.0, max_relative = 1e-14);
    }

    #[test]
    fn clamp_inequalities_hold_exactly_in_log_scale() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xb5e9_0e22);
        for _ in 0..200 {
            let len = rng.gen_range(1..=30);
            let energies: Vec<f64> = (0..len)
                .map(|_| {
                    let ln: f64 = rng.gen_range(-27.6..27.6); // 1e-12 .. 1e12
                    ln.exp()
                })
                .collect();
            let profile = profile_from(&energies);
            let b = b_sequence(&profile).unwrap();
            for n in 1..=len {
                let a_n = profile.energy(n);
                assert!(b.b(n).ln() <= 0.0, "b_n <= 1");
                assert!(a_n.ln() + b.b(n).ln() <= 0.0, "a_n b_n <= 1");
                if n < len {
                    assert!(a_n.ln() + b.b(n + 1).ln() <= 0.0, "a_n b_(n+1) <= 1");
                }
            }
        }
    }

    #[test]
    fn zero_cells_are_floored() {
        let b = b_sequence(&profile_from(&[0.0, 4.0])).unwrap();
        assert_eq!(b.b(1).value(), 1.0, "floored reciprocal clamps at 1");
        assert_relative_eq!(b.b(2).value(), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn unit_clamps_reproduce_x_squared_nodes() {
        let b = b_sequence(&profile_from(&[0.5; 8])).unwrap();
        let f = left_interpolant(&b);
        for (i, &x) in f.breakpoints().iter().enumerate() {
            assert_eq!(f.node_values()[i], x * x, "node at {x}");
        }
    }

    #[test]
    fn interpolant_piece_slopes_match_clamp_formula() {
        let b = b_sequence(&profile_from(&[2.0, 16.0, 5.0, 800.0, 0.3])).unwrap();
        let f = left_interpolant(&b);
        let n_max = b.len();
        for n in 1..n_max {
            let x_mid = 0.75 * (2.0_f64).powi(-(n as i32)); // inside (2^-(n+1), 2^-n)
            let slope = f.derivative(x_mid);
            let expected =
                (4.0 * b.b(n).value() - b.b(n + 1).value()) / (2.0_f64).powi(n as i32 + 1);
            assert_relative_eq!(slope, expected, max_relative = 1e-12);
        }
        // truncated tail continues the last slope pattern: ghost b_{N+1} = b_N
        let x_mid = 0.75 * (2.0_f64).powi(-(n_max as i32));
        let expected =
            (4.0 * b.b(n_max).value() - b.b(n_max).value()) / (2.0_f64).powi(n_max as i32 + 1);
        assert_relative_eq!(f.derivative(x_mid), expected, max_relative = 1e-12);
    }

    #[test]
    fn interpolant_pieces_are_continuous() {
        // the line through (2^-n, v_n) with the clamp slope passes through
        // (2^-(n+1), v_(n+1))
        let b = b_sequence(&profile_from(&[3.0, 7.0, 2.0, 90.0])).unwrap();
        let f = left_interpolant(&b);
        for n in 1..b.len() {
            let x = (2.0_f64).powi(-(n as i32 + 1));
            let from_formula = {
                let slope =
                    (4.0 * b.b(n).value() - b.b(n + 1).value()) / (2.0_f64).powi(n as i32 + 1);
                let x_n = (2.0_f64).powi(-(n as i32));
                slope * (x - x_n) + b.b(n).value() * (2.0_f64).powi(-2 * (n as i32))
            };
            assert_relative_eq!(f.value(x), from_formula, max_relative = 1e-12);
        }
    }

    #[test]
    fn interpolant_positive_and_zero_outside() {
        let b = b_sequence(&profile_from(&[10.0, 100.0, 1000.0])).unwrap();
        let f = left_interpolant(&b);
        for v in f.ln_node_values() {
            assert!(v.sign() > 0);
        }
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(0.75), 0.0);
    }

    #[test]
    fn trivial_branch_for_smooth_symbols() {
        let cfg = fast_cfg(8);
        let phi = func("x", vec![]);
        let r = build_denominator(&phi, &cfg).unwrap();
        assert!(r.trivial);
        // d(x) = x(1-x)
        assert_relative_eq!(RealFunction::value(&r.d, 0.3).unwrap(), 0.21, max_relative = 1e-14);
        assert_eq!(RealFunction::value(&r.d, 0.0).unwrap(), 0.0);
        assert_eq!(RealFunction::value(&r.d, 1.0).unwrap(), 0.0);
        assert!(r.certificate.valid, "{:?}", r.certificate.failed_checks);
    }

    #[test]
    fn trivial_branch_identity_symbol_energy() {
        // φ ≡ 1: energies of d and φ·d agree
        let cfg = fast_cfg(8);
        let phi = DifferentiableFunction::constant(1.0);
        let r = build_denominator(&phi, &cfg).unwrap();
        assert!(r.trivial && r.certificate.valid);
        match r.certificate.energy_phi_d {
            EnergyOutcome::Finite { energy, .. } => {
                assert_relative_eq!(
                    energy.value(),
                    r.certificate.energy_d.value(),
                    max_relative = 1e-8
                );
            }
            ref other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn reciprocal_denominator_matches_profile_oracle() {
        let cfg = fast_cfg(10);
        let phi = func("1/x", vec![0.0]);
        let r = build_denominator(&phi, &cfg).unwrap();
        assert!(!r.trivial);
        let left = r.left.as_ref().unwrap();
        // profile oracle: a_n = 2^n + (7/3) 8^n, increasing with a_1 > 1,
        // so b_n = 1/a_n throughout (a_0 := a_1 only affects b_1's min)
        let a = |n: i32| (2.0_f64).powi(n) + (7.0 / 3.0) * (8.0_f64).powi(n);
        for n in 1..=10_usize {
            assert_relative_eq!(left.profile.energy(n).value(), a(n as i32), max_relative = 1e-7);
            assert_relative_eq!(left.b.b(n).value(), 1.0 / a(n as i32), max_relative = 1e-7);
        }
        // node heights b_n 2^-2n appear in the merged interpolant
        let pl = r.d.piecewise();
        for n in 1..=10_usize {
            let x = (2.0_f64).powi(-(n as i32));
            let i = pl.breakpoints().iter().position(|&b| b == x).unwrap();
            let expected = (1.0 / a(n as i32)) * (2.0_f64).powi(-2 * (n as i32));
            assert_relative_eq!(pl.node_values()[i], expected, max_relative = 1e-7);
        }
        assert!(r.certificate.valid, "{:?}", r.certificate.failed_checks);
        // consecutive majorant terms decay by ~1/128 here, comfortably <= 1/16
        let tails = &r.certificate.left.as_ref().unwrap().tail_ratios;
        for t in &tails[2..] {
            assert!(*t <= 1.0 / 16.0, "tail ratio {t}");
        }
    }

    #[test]
    fn glue_makes_f_continuous_at_half() {
        let cfg = fast_cfg(8);
        let phi = func("1/x", vec![0.0]);
        let r = build_denominator(&phi, &cfg).unwrap();
        let pl = r.d.piecewise();
        let v_half = pl.value(0.5);
        let eps = 1e-12;
        assert_relative_eq!(pl.value(0.5 - eps), v_half, max_relative = 1e-9);
        assert_relative_eq!(pl.value(0.5 + eps), v_half, max_relative = 1e-9);
    }

    #[test]
    fn interior_pole_refuses_construction() {
        let cfg = fast_cfg(8);
        let phi = func("1/(x-1/2)", vec![0.5]);
        let err = build_denominator(&phi, &cfg).unwrap_err();
        assert!(matches!(err, DenomError::Refused(_)), "got {err:?}");
    }

    #[test]
    fn certificates_survive_rescaling() {
        let cfg = fast_cfg(8);
        let phi = func("1/x", vec![0.0]);
        for c in [0.1, 1.0, 10.0] {
            let r = build_denominator(&phi.scaled(c), &cfg).unwrap();
            assert!(r.certificate.valid, "c = {c}: {:?}", r.certificate.failed_checks);
        }
    }

    #[test]
    fn verify_recomputes_the_certificate() {
        let cfg = fast_cfg(6);
        let phi = func("1/x", vec![0.0]);
        let r = build_denominator(&phi, &cfg).unwrap();
        let again = verify_denominator(&phi, &r, &cfg);
        assert_eq!(again.valid, r.certificate.valid);
        assert_eq!(again.ln_min_abs_d.to_bits(), r.certificate.ln_min_abs_d.to_bits());
    }
}
