//! Classification of multiplication operators.
//!
//! Densely defined on `W_0` means the symbol has finite Sobolev energy on
//! every compact subinterval of (0,1); densely defined on the full space
//! means finite energy on all of [0,1], in which case the operator is in
//! fact bounded. No finite computation exhausts "every compact
//! subinterval", so the decidable surrogate is a geometric family of
//! compacts plus divergence probes at every declared or scanned singular
//! point, with an explicit `Inconclusive` verdict for honest failure.

use serde::Serialize;

use crate::funcspace::{multiply, DifferentiableFunction, PiecewiseLinear};
use crate::logscale::Magnitude;
use crate::quad::{divergence_probe, sobolev_energy, Approach, EnergyError, ProbeReport, ProbeVerdict};
use crate::sobolev::{is_member, EnergyOutcome, MembershipConfig, MembershipReport};

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyConfig {
    pub membership: MembershipConfig,
    /// Compact family / probe depth K: intervals [2^-k, 1-2^-k], k = 2..K.
    pub levels: usize,
    /// Grid used to scan for undeclared singular points.
    pub scan_grid: usize,
    /// Stress-family depth m for the boundedness probe (tents k = 2..m).
    pub stress_levels: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            membership: MembershipConfig::default(),
            levels: 20,
            scan_grid: 1024,
            stress_levels: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    W0,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    Membership(MembershipReport),
    Probe(ProbeReport),
    SingularityScan { detected: Vec<f64> },
    EvaluationFailure { x: f64, message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierVerdict {
    pub space: Space,
    pub densely_defined: Decision,
    pub evidence: Vec<Evidence>,
    pub sup_estimate: Option<f64>,
    pub global_energy: Option<EnergyOutcome>,
    /// Recorded when the full-space verdict is yes: densely defined there
    /// implies bounded.
    pub bounded: Option<bool>,
}

/// Grid scan for singular points the caller did not declare. Supplements
/// but does not replace declaration; only exact grid hits are found.
pub fn scan_singularities(phi: &DifferentiableFunction, grid: usize) -> Vec<f64> {
    let mut found = Vec::new();
    for j in 1..grid {
        let x = j as f64 / grid as f64;
        if phi.value(x).is_err() || phi.derivative(x).is_err() {
            found.push(x);
        }
    }
    found
}

fn known_singularities(phi: &DifferentiableFunction, cfg: &ClassifyConfig) -> (Vec<f64>, Vec<f64>) {
    let scanned: Vec<f64> = scan_singularities(phi, cfg.scan_grid)
        .into_iter()
        .filter(|s| !phi.singularities().iter().any(|d| (d - s).abs() < 1e-12))
        .collect();
    let mut all = phi.singularities().to_vec();
    all.extend_from_slice(&scanned);
    all.sort_by(f64::total_cmp);
    all.dedup();
    (all, scanned)
}

/// With its singular points attached (scan hits included), so probes on a
/// symbol with an undeclared interior pole still split correctly.
fn with_singularities(phi: &DifferentiableFunction, sings: &[f64]) -> DifferentiableFunction {
    if sings == phi.singularities() {
        phi.clone()
    } else {
        let mut f = phi.clone();
        // rebuild with the extended singularity list
        f = DifferentiableFunctionExt::replace_singularities(&f, sings.to_vec());
        f
    }
}

trait DifferentiableFunctionExt {
    fn replace_singularities(&self, sings: Vec<f64>) -> DifferentiableFunction;
}

impl DifferentiableFunctionExt for DifferentiableFunction {
    fn replace_singularities(&self, sings: Vec<f64>) -> DifferentiableFunction {
        DifferentiableFunction::new(
            std::sync::Arc::new(ForwardTo(self.clone())),
            self.name().to_owned(),
            sings,
            self.breaks().to_vec(),
        )
    }
}

struct ForwardTo(DifferentiableFunction);

impl crate::funcspace::RealFunction for ForwardTo {
    fn value(&self, x: f64) -> Result<f64, crate::expr::DomainError> {
        self.0.value(x)
    }
    fn derivative(&self, x: f64) -> Result<f64, crate::expr::DomainError> {
        self.0.derivative(x)
    }
    fn ln_value(&self, x: f64) -> Result<crate::logscale::LnScalar, crate::expr::DomainError> {
        self.0.ln_value(x)
    }
    fn ln_derivative(&self, x: f64) -> Result<crate::logscale::LnScalar, crate::expr::DomainError> {
        self.0.ln_derivative(x)
    }
}

/// Densely defined on W_0 iff the symbol stays in W^{1,2} of every compact
/// subinterval: probes every interior singular point from both sides, then
/// checks membership on the compact family [2^-k, 1-2^-k], k = 2..K.
/// Endpoint singularities are allowed and not probed here.
pub fn classify_w0(phi: &DifferentiableFunction, cfg: &ClassifyConfig) -> MultiplierVerdict {
    let (all_sings, scanned) = known_singularities(phi, cfg);
    let phi = with_singularities(phi, &all_sings);
    let mut evidence = Vec::new();
    if !scanned.is_empty() {
        evidence.push(Evidence::SingularityScan { detected: scanned });
    }
    let mut inconclusive = false;

    for &s in all_sings.iter().filter(|s| **s > 0.0 && **s < 1.0) {
        for dir in [Approach::FromBelow, Approach::FromAbove] {
            match divergence_probe(
                &phi,
                s,
                dir,
                cfg.levels,
                cfg.membership.ratio_threshold,
                &cfg.membership.quad,
            ) {
                Ok(report) => {
                    let verdict = report.verdict;
                    evidence.push(Evidence::Probe(report));
                    match verdict {
                        ProbeVerdict::Divergent => {
                            return MultiplierVerdict {
                                space: Space::W0,
                                densely_defined: Decision::No,
                                evidence,
                                sup_estimate: None,
                                global_energy: None,
                                bounded: None,
                            };
                        }
                        ProbeVerdict::Inconclusive => inconclusive = true,
                        ProbeVerdict::Finite => {}
                    }
                }
                Err(e) => {
                    evidence.push(Evidence::EvaluationFailure { x: e.x, message: e.to_string() });
                    inconclusive = true;
                }
            }
        }
    }

    for k in 2..=cfg.levels {
        let a = (2.0_f64).powi(-(k as i32));
        let report = is_member(&phi, a, 1.0 - a, &cfg.membership);
        let member = report.member;
        let divergent = matches!(report.energy, EnergyOutcome::DivergenceSuspected { .. });
        evidence.push(Evidence::Membership(report));
        if !member {
            if divergent {
                return MultiplierVerdict {
                    space: Space::W0,
                    densely_defined: Decision::No,
                    evidence,
                    sup_estimate: None,
                    global_energy: None,
                    bounded: None,
                };
            }
            inconclusive = true;
        }
    }

    MultiplierVerdict {
        space: Space::W0,
        densely_defined: if inconclusive { Decision::Inconclusive } else { Decision::Yes },
        evidence,
        sup_estimate: None,
        global_energy: None,
        bounded: None,
    }
}

/// Densely defined on the full space iff the global Sobolev energy is
/// finite; a yes verdict also records that the operator is bounded.
pub fn classify_full(phi: &DifferentiableFunction, cfg: &ClassifyConfig) -> MultiplierVerdict {
    let (all_sings, scanned) = known_singularities(phi, cfg);
    let phi = with_singularities(phi, &all_sings);
    let mut evidence = Vec::new();
    if !scanned.is_empty() {
        evidence.push(Evidence::SingularityScan { detected: scanned });
    }
    let mut inconclusive = false;

    let mut probe_points: Vec<(f64, Vec<Approach>)> = vec![
        (0.0, vec![Approach::FromAbove]),
        (1.0, vec![Approach::FromBelow]),
    ];
    for &s in all_sings.iter().filter(|s| **s > 0.0 && **s < 1.0) {
        probe_points.push((s, vec![Approach::FromBelow, Approach::FromAbove]));
    }

    for (point, dirs) in probe_points {
        for dir in dirs {
            match divergence_probe(
                &phi,
                point,
                dir,
                cfg.levels,
                cfg.membership.ratio_threshold,
                &cfg.membership.quad,
            ) {
                Ok(report) => {
                    let verdict = report.verdict;
                    let ln_partial = report
                        .increments
                        .iter()
                        .fold(Magnitude::ZERO, |acc, m| acc + *m)
                        .ln();
                    evidence.push(Evidence::Probe(report));
                    match verdict {
                        ProbeVerdict::Divergent => {
                            return MultiplierVerdict {
                                space: Space::Full,
                                densely_defined: Decision::No,
                                evidence,
                                sup_estimate: None,
                                global_energy: Some(EnergyOutcome::DivergenceSuspected {
                                    ln_partial,
                                    probed_point: Some(point),
                                }),
                                bounded: None,
                            };
                        }
                        ProbeVerdict::Inconclusive => inconclusive = true,
                        ProbeVerdict::Finite => {}
                    }
                }
                Err(e) => {
                    evidence.push(Evidence::EvaluationFailure { x: e.x, message: e.to_string() });
                    inconclusive = true;
                }
            }
        }
    }

    match sobolev_energy(&phi, 0.0, 1.0, &cfg.membership.quad) {
        Ok(r) => {
            let outcome = EnergyOutcome::Finite {
                energy: r.value,
                rel_error: r.rel_error,
                converged: r.converged,
            };
            let yes = r.converged || !inconclusive;
            MultiplierVerdict {
                space: Space::Full,
                densely_defined: if yes { Decision::Yes } else { Decision::Inconclusive },
                evidence,
                sup_estimate: None,
                global_energy: Some(outcome),
                bounded: if yes { Some(true) } else { None },
            }
        }
        Err(EnergyError::DivergenceSuspected { ln_partial, .. }) => MultiplierVerdict {
            space: Space::Full,
            densely_defined: Decision::No,
            evidence,
            sup_estimate: None,
            global_energy: Some(EnergyOutcome::DivergenceSuspected { ln_partial, probed_point: None }),
            bounded: None,
        },
        Err(EnergyError::Evaluation(e)) => MultiplierVerdict {
            space: Space::Full,
            densely_defined: Decision::Inconclusive,
            evidence,
            sup_estimate: None,
            global_energy: Some(EnergyOutcome::EvaluationFailed { x: e.x, message: e.to_string() }),
            bounded: None,
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSample {
    /// Which endpoint the tent concentrates on (0 or 1).
    pub endpoint: f64,
    /// Tent level k: support [2^-k-1, 2^-k+1] or its mirror.
    pub level: usize,
    /// ‖φ·f_k‖ / ‖f_k‖ in the Sobolev norm; None when the sample is invalid.
    pub ratio: Option<f64>,
    pub invalid_reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    /// max |φ| over a refined grid avoiding singular points.
    pub sup_estimate: f64,
    pub ratio_samples: Vec<RatioSample>,
    /// True when a ratio sequence is increasing without saturation across
    /// its last five samples.
    pub unbounded_suspected: bool,
}

fn tent(endpoint: f64, k: usize) -> PiecewiseLinear {
    let lo = (2.0_f64).powi(-(k as i32 + 1));
    let mid = (2.0_f64).powi(-(k as i32));
    let hi = (2.0_f64).powi(-(k as i32 - 1));
    let nodes = if endpoint == 0.0 {
        [(lo, 0.0), (mid, 1.0), (hi, 0.0)]
    } else {
        [(1.0 - hi, 0.0), (1.0 - mid, 1.0), (1.0 - lo, 0.0)]
    };
    PiecewiseLinear::from_nodes(&nodes).expect("tent nodes are ordered")
}

/// Stress-tests the operator with unit tents shrinking into each endpoint:
/// `ratio_k = ‖φ·f_k‖/‖f_k‖`. Assumes `classify_w0(phi)` came back yes.
pub fn boundedness_probe(phi: &DifferentiableFunction, cfg: &ClassifyConfig) -> BoundednessReport {
    let quad = &cfg.membership.quad;
    // sup over a uniform grid refined dyadically toward both endpoints
    let mut grid: Vec<f64> = (0..=4096).map(|j| f64::from(j) / 4096.0).collect();
    for j in 1..=40 {
        grid.push((2.0_f64).powi(-j));
        grid.push(1.0 - (2.0_f64).powi(-j));
    }
    let mut sup = 0.0_f64;
    for &x in &grid {
        if let Ok(v) = phi.value(x) {
            if v.is_finite() {
                sup = sup.max(v.abs());
            }
        }
    }

    let mut samples = Vec::new();
    let mut suspected = false;
    for endpoint in [0.0, 1.0] {
        let mut ratios: Vec<f64> = Vec::new();
        for k in 2..=cfg.stress_levels {
            let t = tent(endpoint, k);
            let (lo, hi) = t.support();
            let tent_fn = DifferentiableFunction::from_piecewise_linear(t.clone(), "tent");
            let product = multiply(phi.clone(), t, false).as_function("phi*tent");
            let denom = sobolev_energy(&tent_fn, lo, hi, quad);
            let numer = sobolev_energy(&product, lo, hi, quad);
            match (numer, denom) {
                (Ok(n), Ok(d)) => {
                    let ratio = (n.value / d.value).sqrt().value();
                    ratios.push(ratio);
                    samples.push(RatioSample { endpoint, level: k, ratio: Some(ratio), invalid_reason: None });
                }
                (n, d) => {
                    let reason = [n.err().map(|e| e.to_string()), d.err().map(|e| e.to_string())]
                        .into_iter()
                        .flatten()
                        .collect::<Vec<_>>()
                        .join("; ");
                    samples.push(RatioSample {
                        endpoint,
                        level: k,
                        ratio: None,
                        invalid_reason: Some(reason),
                    });
                }
            }
        }
        if ratios.len() >= 5 {
            let w = &ratios[ratios.len() - 5..];
            let increasing = w.windows(2).all(|p| p[1] > p[0]);
            let unsaturated = w[4] / w[0] > 1.05;
            if increasing && unsaturated {
                suspected = true;
            }
        }
    }

    BoundednessReport { sup_estimate: sup, ratio_samples: samples, unbounded_suspected: suspected }
}
