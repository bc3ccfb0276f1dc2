//! Function model shared by the whole pipeline.
//!
//! Everything downstream consumes a [`DifferentiableFunction`]: an evaluator
//! pair (value, a.e. derivative) plus the declared singular points and the
//! derivative-kink locations used as quadrature split hints. Implementations
//! may override the log-scale evaluators when they can do better than
//! `ln(value(x))`; expression-backed symbols do, which is what keeps
//! integrands like `|exp(1/x)|^2` computable where the plain value overflows.

use std::sync::Arc;

use crate::expr::{DomainError, Expr};
use crate::logscale::{LnScalar, Magnitude};

/// Evaluator pair with optional log-scale overrides.
pub trait RealFunction: Send + Sync {
    fn value(&self, x: f64) -> Result<f64, DomainError>;
    fn derivative(&self, x: f64) -> Result<f64, DomainError>;

    fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.value(x).map(LnScalar::from_value)
    }

    fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.derivative(x).map(LnScalar::from_value)
    }
}

/// A named function on [0,1] with its a.e. derivative and declared
/// singular points.
#[derive(Clone)]
pub struct DifferentiableFunction {
    inner: Arc<dyn RealFunction>,
    name: String,
    singularities: Vec<f64>,
    breaks: Vec<f64>,
}

impl std::fmt::Debug for DifferentiableFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DifferentiableFunction")
            .field("name", &self.name)
            .field("singularities", &self.singularities)
            .finish_non_exhaustive()
    }
}

impl DifferentiableFunction {
    pub fn new(
        inner: Arc<dyn RealFunction>,
        name: impl Into<String>,
        singularities: Vec<f64>,
        breaks: Vec<f64>,
    ) -> Self {
        let mut singularities = singularities;
        singularities.sort_by(f64::total_cmp);
        singularities.dedup();
        let mut breaks = breaks;
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Self { inner, name: name.into(), singularities, breaks }
    }

    /// Wraps an expression together with its exact symbolic derivative.
    pub fn from_expr(expr: &Expr, name: impl Into<String>, singularities: Vec<f64>) -> Self {
        let derivative = expr.differentiate();
        Self::new(
            Arc::new(ExprFunction { value: expr.clone(), derivative }),
            name,
            singularities,
            Vec::new(),
        )
    }

    pub fn from_closures(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            Arc::new(ClosureFunction { value: Box::new(value), derivative: Box::new(derivative) }),
            name,
            Vec::new(),
            Vec::new(),
        )
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        let mut breaks = breaks;
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub fn from_piecewise_linear(pl: PiecewiseLinear, name: impl Into<String>) -> Self {
        let breaks = pl.breakpoints().to_vec();
        Self::new(Arc::new(pl), name, Vec::new(), breaks)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_closures(format!("{c}"), move |_| c, |_| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn singularities(&self) -> &[f64] {
        &self.singularities
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn value(&self, x: f64) -> Result<f64, DomainError> {
        self.inner.value(x)
    }

    pub fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        self.inner.derivative(x)
    }

    pub fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.inner.ln_value(x)
    }

    pub fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.inner.ln_derivative(x)
    }

    /// The rescaled symbol `c * f`.
    pub fn scaled(&self, c: f64) -> Self {
        Self::new(
            Arc::new(Scaled { inner: self.clone(), c }),
            format!("{c}*{}", self.name),
            self.singularities.clone(),
            self.breaks.clone(),
        )
    }

    /// The reflection `x -> f(1 - x)`; maps behaviour at 1 onto 0.
    pub fn reflected(&self) -> Self {
        let reflect = |points: &[f64]| points.iter().map(|s| 1.0 - s).collect::<Vec<_>>();
        Self::new(
            Arc::new(Reflected { inner: self.clone() }),
            format!("{}(1-x)", self.name),
            reflect(&self.singularities),
            reflect(&self.breaks),
        )
    }
}

struct ExprFunction {
    value: Expr,
    derivative: Expr,
}

impl RealFunction for ExprFunction {
    fn value(&self, x: f64) -> Result<f64, DomainError> {
        self.value.evaluate(x)
    }

    fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        self.derivative.evaluate(x)
    }

    fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.value.evaluate_ln(x)
    }

    fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.derivative.evaluate_ln(x)
    }
}

struct ClosureFunction {
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RealFunction for ClosureFunction {
    fn value(&self, x: f64) -> Result<f64, DomainError> {
        Ok((self.value)(x))
    }

    fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        Ok((self.derivative)(x))
    }
}

struct Scaled {
    inner: DifferentiableFunction,
    c: f64,
}

impl RealFunction for Scaled {
    fn value(&self, x: f64) -> Result<f64, DomainError> {
        Ok(self.c * self.inner.value(x)?)
    }

    fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        Ok(self.c * self.inner.derivative(x)?)
    }

    fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        Ok(LnScalar::from_value(self.c) * self.inner.ln_value(x)?)
    }

    fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        Ok(LnScalar::from_value(self.c) * self.inner.ln_derivative(x)?)
    }
}

struct Reflected {
    inner: DifferentiableFunction,
}

impl RealFunction for Reflected {
    fn value(&self, x: f64) -> Result<f64, DomainError> {
        self.inner.value(1.0 - x)
    }

    fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        Ok(-self.inner.derivative(1.0 - x)?)
    }

    fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        self.inner.ln_value(1.0 - x)
    }

    fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        Ok(-self.inner.ln_derivative(1.0 - x)?)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PiecewiseError {
    #[error("piecewise-linear functions need at least two nodes")]
    TooFewNodes,
    #[error("breakpoints must be strictly increasing (violated at index {0})")]
    NonIncreasingBreakpoints(usize),
}

/// Continuous piecewise-linear function, zero outside its breakpoint span.
///
/// Node values are stored both as plain `f64` (exact for ordinary data) and
/// in signed log scale; constructions whose node heights underflow f64 (deep
/// denominator nodes) remain positive in the log representation, and the
/// log-scale evaluators interpolate in value space using the exact convex
/// combination of the two surrounding nodes.
#[derive(Clone, Debug)]
pub struct PiecewiseLinear {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    ln_values: Vec<LnScalar>,
}

impl PiecewiseLinear {
    /// Linear interpolant through `nodes`; exact (bitwise) at every node.
    pub fn from_nodes(nodes: &[(f64, f64)]) -> Result<Self, PiecewiseError> {
        if nodes.len() < 2 {
            return Err(PiecewiseError::TooFewNodes);
        }
        for (i, pair) in nodes.windows(2).enumerate() {
            if !(pair[0].0 < pair[1].0) {
                return Err(PiecewiseError::NonIncreasingBreakpoints(i + 1));
            }
        }
        Ok(Self {
            breakpoints: nodes.iter().map(|n| n.0).collect(),
            values: nodes.iter().map(|n| n.1).collect(),
            ln_values: nodes.iter().map(|n| LnScalar::from_value(n.1)).collect(),
        })
    }

    /// Interpolant with nonnegative log-scale node heights.
    pub fn from_ln_nodes(breakpoints: Vec<f64>, heights: &[Magnitude]) -> Result<Self, PiecewiseError> {
        let values = heights.iter().map(|m| m.value()).collect();
        let lns = heights.iter().map(|m| LnScalar::from_magnitude(*m)).collect();
        Self::from_dual_nodes(breakpoints, values, lns)
    }

    /// Interpolant given both representations of each node height. The plain
    /// values drive the plain evaluators (and may have underflowed to 0);
    /// the log-scale values are authoritative for the log evaluators.
    pub fn from_dual_nodes(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        ln_values: Vec<LnScalar>,
    ) -> Result<Self, PiecewiseError> {
        if breakpoints.len() < 2 {
            return Err(PiecewiseError::TooFewNodes);
        }
        if breakpoints.len() != values.len() || breakpoints.len() != ln_values.len() {
            return Err(PiecewiseError::TooFewNodes);
        }
        for (i, pair) in breakpoints.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(PiecewiseError::NonIncreasingBreakpoints(i + 1));
            }
        }
        Ok(Self { breakpoints, values, ln_values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    pub fn ln_node_values(&self) -> &[LnScalar] {
        &self.ln_values
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Index of the segment containing x, or None outside the span.
    fn segment(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return None;
        }
        // partition_point: first breakpoint > x, so x lies in [bp[i-1], bp[i]]
        let i = self.breakpoints.partition_point(|&b| b <= x);
        Some(if i == self.breakpoints.len() { i - 2 } else { i - 1 })
    }

    pub fn value(&self, x: f64) -> f64 {
        let Some(i) = self.segment(x) else { return 0.0 };
        if x == self.breakpoints[i] {
            return self.values[i];
        }
        if x == self.breakpoints[i + 1] {
            return self.values[i + 1];
        }
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// a.e. derivative; right-hand slope at breakpoints, 0 outside the span
    /// (so also 0 at the last breakpoint).
    pub fn derivative(&self, x: f64) -> f64 {
        let Some(i) = self.segment(x) else { return 0.0 };
        if x == *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        (self.values[i + 1] - self.values[i]) / (x1 - x0)
    }

    pub fn value_ln(&self, x: f64) -> LnScalar {
        let Some(i) = self.segment(x) else { return LnScalar::ZERO };
        if x == self.breakpoints[i] {
            return self.ln_values[i];
        }
        if x == self.breakpoints[i + 1] {
            return self.ln_values[i + 1];
        }
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.ln_values[i] * LnScalar::from_value(1.0 - t) + self.ln_values[i + 1] * LnScalar::from_value(t)
    }

    pub fn derivative_ln(&self, x: f64) -> LnScalar {
        let Some(i) = self.segment(x) else { return LnScalar::ZERO };
        if x == *self.breakpoints.last().unwrap() {
            return LnScalar::ZERO;
        }
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        (self.ln_values[i + 1] - self.ln_values[i]) / LnScalar::from_value(x1 - x0)
    }

    /// Exact `∫_a^b p(x)^2 dx` from the closed-form antiderivative of a
    /// squared linear function on each segment.
    pub fn square_integral(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b, "integration bounds must be ordered");
        let (lo, hi) = self.support();
        let a = a.max(lo);
        let b = b.min(hi);
        if a >= b {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..self.breakpoints.len() - 1 {
            let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let c = a.max(x0);
            let d = b.min(x1);
            if c >= d {
                continue;
            }
            let m = (self.values[i + 1] - self.values[i]) / (x1 - x0);
            if m == 0.0 {
                total += self.values[i] * self.values[i] * (d - c);
            } else {
                let p = |t: f64| self.values[i] + m * (t - x0);
                total += (p(d).powi(3) - p(c).powi(3)) / (3.0 * m);
            }
        }
        total
    }

    /// CSV dump, one `x,y` row per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\r\n");
        for (x, y) in self.breakpoints.iter().zip(&self.values) {
            out.push_str(&format!("{x},{y}\r\n"));
        }
        out
    }
}

impl RealFunction for PiecewiseLinear {
    fn value(&self, x: f64) -> Result<f64, DomainError> {
        Ok(PiecewiseLinear::value(self, x))
    }

    fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        Ok(PiecewiseLinear::derivative(self, x))
    }

    fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        Ok(self.value_ln(x))
    }

    fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        Ok(self.derivative_ln(x))
    }
}

/// `smooth(x) * pl(x)` and optionally `* x(1-x)`; derivative by the product
/// rule across all parts. Outside the span of the piecewise-linear part the
/// product is identically zero and the smooth factor is never evaluated,
/// matching the compact-support convention.
#[derive(Clone, Debug)]
pub struct ProductFunction {
    smooth: DifferentiableFunction,
    pl: PiecewiseLinear,
    endpoint_weight: bool,
}

fn weight(x: f64) -> f64 {
    x * (1.0 - x)
}

fn weight_derivative(x: f64) -> f64 {
    1.0 - 2.0 * x
}

/// Pointwise product of a symbol with a piecewise-linear function.
pub fn multiply(
    smooth: DifferentiableFunction,
    pl: PiecewiseLinear,
    endpoint_weight: bool,
) -> ProductFunction {
    ProductFunction { smooth, pl, endpoint_weight }
}

impl ProductFunction {
    pub fn smooth(&self) -> &DifferentiableFunction {
        &self.smooth
    }

    pub fn piecewise(&self) -> &PiecewiseLinear {
        &self.pl
    }

    pub fn has_endpoint_weight(&self) -> bool {
        self.endpoint_weight
    }

    fn outside_support(&self, x: f64) -> bool {
        let (lo, hi) = self.pl.support();
        x < lo || x > hi
    }

    pub fn as_function(&self, name: impl Into<String>) -> DifferentiableFunction {
        let mut breaks = self.smooth.breaks().to_vec();
        breaks.extend_from_slice(self.pl.breakpoints());
        DifferentiableFunction::new(
            Arc::new(self.clone()),
            name,
            self.smooth.singularities().to_vec(),
            breaks,
        )
    }
}

impl RealFunction for ProductFunction {
    fn value(&self, x: f64) -> Result<f64, DomainError> {
        if self.outside_support(x) {
            return Ok(0.0);
        }
        let mut v = self.smooth.value(x)? * PiecewiseLinear::value(&self.pl, x);
        if self.endpoint_weight {
            v *= weight(x);
        }
        Ok(v)
    }

    fn derivative(&self, x: f64) -> Result<f64, DomainError> {
        if self.outside_support(x) {
            return Ok(0.0);
        }
        let s = self.smooth.value(x)?;
        let ds = self.smooth.derivative(x)?;
        let p = PiecewiseLinear::value(&self.pl, x);
        let dp = PiecewiseLinear::derivative(&self.pl, x);
        if self.endpoint_weight {
            let w = weight(x);
            let dw = weight_derivative(x);
            Ok(ds * p * w + s * dp * w + s * p * dw)
        } else {
            Ok(ds * p + s * dp)
        }
    }

    fn ln_value(&self, x: f64) -> Result<LnScalar, DomainError> {
        if self.outside_support(x) {
            return Ok(LnScalar::ZERO);
        }
        let mut v = self.smooth.ln_value(x)? * self.pl.value_ln(x);
        if self.endpoint_weight {
            v = v * LnScalar::from_value(weight(x));
        }
        Ok(v)
    }

    fn ln_derivative(&self, x: f64) -> Result<LnScalar, DomainError> {
        if self.outside_support(x) {
            return Ok(LnScalar::ZERO);
        }
        let s = self.smooth.ln_value(x)?;
        let ds = self.smooth.ln_derivative(x)?;
        let p = self.pl.value_ln(x);
        let dp = self.pl.derivative_ln(x);
        if self.endpoint_weight {
            let w = LnScalar::from_value(weight(x));
            let dw = LnScalar::from_value(weight_derivative(x));
            Ok(ds * p * w + s * dp * w + s * p * dw)
        } else {
            Ok(ds * p + s * dp)
        }
    }
}
