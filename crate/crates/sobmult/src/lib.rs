//! Multiplication operators on the Sobolev space W^{1,2}[0,1].
//!
//! The space is the absolutely continuous functions on [0,1] with
//! square-integrable derivative, under `⟨f,g⟩ = ∫ f g + f' g' dx`; `W_0` is
//! its subspace of functions vanishing at both endpoints. For a symbol `φ`
//! this crate decides numerically whether the multiplication operator
//! `M_φ f = φ·f` is densely defined on `W_0` and on the full space, probes
//! operator boundedness, and constructs a non-vanishing denominator
//! `d = x(1-x)·f` with `d` and `φ·d` both in `W_0`, together with a
//! machine-checked certificate for every claimed property.
//!
//! Modules follow the pipeline:
//!
//! * [`expr`] — symbol grammar, exact symbolic derivatives, stable (log
//!   scale) evaluation;
//! * [`funcspace`] — the function model: evaluator pairs, piecewise-linear
//!   functions with exact integrals, products;
//! * [`quad`] — open-rule adaptive quadrature, Sobolev energies, dyadic
//!   energy profiles, divergence probes;
//! * [`sobolev`] — inner product, norm, reproducing kernel, membership;
//! * [`classify`] — densely-defined verdicts and the boundedness probe;
//! * [`denom`] — the constructive non-vanishing denominator with its
//!   verification certificate;
//! * [`catalog`] — the built-in symbols used throughout the test rig.

pub mod catalog;
pub mod classify;
pub mod denom;
pub mod expr;
pub mod funcspace;
pub mod logscale;
pub mod quad;
pub mod sobolev;

pub use classify::{
    boundedness_probe, classify_full, classify_w0, BoundednessReport, ClassifyConfig, Decision,
    Evidence, MultiplierVerdict, Space,
};
pub use denom::{
    b_sequence, build_denominator, left_interpolant, verify_denominator, BSequence, DenomConfig,
    DenomError, DenominatorResult, VerificationReport,
};
pub use expr::{parse, DomainError, Expr, ParseError};
pub use funcspace::{
    multiply, DifferentiableFunction, PiecewiseLinear, ProductFunction, RealFunction,
};
pub use logscale::{LnScalar, Magnitude};
pub use quad::{
    divergence_probe, dyadic_profile, integrate, integrate_ln, sobolev_energy, Approach,
    DyadicProfile, ProbeReport, ProbeVerdict, QuadConfig, QuadratureResult, Side,
};
pub use sobolev::{
    inner_product, is_member, is_member_w0, kernel_function, kernel_gram, kernel_value,
    leading_principal_minors, norm, EnergyOutcome, MembershipConfig, MembershipReport,
};
