//! Adaptive quadrature and the energy integrals built on it.
//!
//! The panel rule is 15-point Gauss–Kronrod. All of its abscissae are
//! interior, so interval endpoints are never evaluated and integrable
//! endpoint singularities are tolerated. Refinement is worst-panel-first
//! bisection with a fixed tie-break order and a final positional summation,
//! which makes results bitwise reproducible.
//!
//! A refinement that exhausts its panel budget is classified by the history
//! of the running total: a monotonically growing total is reported as
//! suspected divergence, a stable one as a stalled (non-converged but
//! bounded) estimate with its achieved error. The stalled outcome is what
//! rapidly oscillating integrands such as `|d/dx sin(1/x)|^2` produce on
//! deep dyadic cells, where resolving every oscillation is hopeless but the
//! value itself is perfectly stable.
//!
//! Energy integrals run in log scale (see [`crate::logscale`]) so that
//! integrands spanning thousands of orders of magnitude are handled without
//! overflow; each panel is locally rescaled by its own maximum.

use std::collections::BinaryHeap;

use serde::Serialize;

use crate::expr::DomainError;
use crate::funcspace::DifferentiableFunction;
use crate::logscale::Magnitude;

/// 15-point Kronrod abscissae (positive half; last entry is the center).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// 7-point Gauss weights (for XGK[1], XGK[3], XGK[5] pairs and the center).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod weights matching XGK.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const CHECKPOINT_EVERY: u32 = 16;
const HISTORY_LEN: usize = 8;
/// Relative growth across the history window that flags divergence.
const GROWTH_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct QuadConfig {
    /// Requested relative tolerance on the accumulated value.
    pub rel_tol: f64,
    /// Panel budget per integration call.
    pub max_panels: u32,
    /// Bisection depth cap.
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-9, max_panels: 1_000_000, max_depth: 55 }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_panels(mut self, max_panels: u32) -> Self {
        self.max_panels = max_panels;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Panels in the final partition.
    pub subdivisions: u32,
    /// False when the budget ran out before the tolerance was met (the
    /// estimate is still usable together with `error_estimate`).
    pub converged: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum QuadError {
    #[error("integral appears divergent (partial value {partial:e} after {subdivisions} panels)")]
    DivergenceSuspected { partial: f64, error_estimate: f64, subdivisions: u32 },
    #[error("integrand evaluation failed: {0}")]
    Evaluation(#[from] DomainError),
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    res_abs: f64,
    depth: u32,
    /// In the log lane, `value`/`err`/`res_abs` are scaled by exp(-offset).
    offset: f64,
}

impl Panel {
    fn key(&self) -> (f64, f64) {
        // log lane: compare on offset + ln(err); plain lane has offset 0
        (self.offset + self.err.ln(), self.a)
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (e1, a1) = self.key();
        let (e2, a2) = other.key();
        // larger error first; ties resolved left to right
        e1.total_cmp(&e2).then(a2.total_cmp(&a1))
    }
}

/// One Gauss–Kronrod pass over [a,b] for a plain integrand.
fn qk15_plain<F>(f: &F, a: f64, b: f64, depth: u32) -> Result<Panel, QuadError>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [0.0_f64; 15];
    for (j, &xi) in XGK.iter().enumerate() {
        let dx = half * xi;
        if j == 7 {
            fv[7] = f(center)?;
        } else {
            fv[j] = f(center - dx)?;
            fv[14 - j] = f(center + dx)?;
        }
    }
    let mut resk = WGK[7] * fv[7];
    let mut resg = WG[3] * fv[7];
    let mut res_abs = WGK[7] * fv[7].abs();
    for j in 0..7 {
        let sum = fv[j] + fv[14 - j];
        resk += WGK[j] * sum;
        res_abs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * sum;
        }
    }
    let mean = resk * 0.5;
    let mut res_asc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let err = ((resk - resg) * half).abs();
    let value = resk * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    Ok(Panel { a, b, value, err: rescale_error(err, res_abs, res_asc), res_abs, depth, offset: 0.0 })
}

/// Gauss–Kronrod pass for a nonnegative integrand given by its natural log.
/// The panel is rescaled by its own node maximum, so integrands of any
/// magnitude are handled; `offset` carries the scale.
fn qk15_ln<F>(ln_f: &F, a: f64, b: f64, depth: u32) -> Result<Panel, QuadError>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut lv = [f64::NEG_INFINITY; 15];
    for (j, &xi) in XGK.iter().enumerate() {
        let dx = half * xi;
        if j == 7 {
            lv[7] = ln_f(center)?;
        } else {
            lv[j] = ln_f(center - dx)?;
            lv[14 - j] = ln_f(center + dx)?;
        }
    }
    let m = lv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        // integrand vanishes on the whole panel
        return Ok(Panel { a, b, value: 0.0, err: 0.0, res_abs: 0.0, depth, offset: f64::NEG_INFINITY });
    }
    if m == f64::INFINITY {
        return Err(QuadError::DivergenceSuspected { partial: f64::INFINITY, error_estimate: f64::INFINITY, subdivisions: 1 });
    }
    let mut fv = [0.0_f64; 15];
    for j in 0..15 {
        fv[j] = (lv[j] - m).exp();
    }
    let mut resk = WGK[7] * fv[7];
    let mut resg = WG[3] * fv[7];
    for j in 0..7 {
        let sum = fv[j] + fv[14 - j];
        resk += WGK[j] * sum;
        if j % 2 == 1 {
            resg += WG[j / 2] * sum;
        }
    }
    let mean = resk * 0.5;
    let mut res_asc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let err = ((resk - resg) * half).abs();
    let value = resk * half;
    let res_abs = value; // integrand is nonnegative
    let res_asc = res_asc * half.abs();
    Ok(Panel { a, b, value, err: rescale_error(err, res_abs, res_asc), res_abs, depth, offset: m })
}

enum Lane {
    Plain,
    Ln,
}

struct Driver<'a, F> {
    f: &'a F,
    lane: Lane,
    cfg: &'a QuadConfig,
}

struct RawResult {
    /// Plain lane: the value. Ln lane: ln of the value.
    value: f64,
    /// Same scale as `value` (ln lane: ln of the error).
    error: f64,
    subdivisions: u32,
    converged: bool,
}

impl<'a, F> Driver<'a, F>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    fn panel(&self, a: f64, b: f64, depth: u32) -> Result<Panel, QuadError> {
        let p = match self.lane {
            Lane::Plain => qk15_plain(self.f, a, b, depth)?,
            Lane::Ln => qk15_ln(self.f, a, b, depth)?,
        };
        if !p.value.is_finite() || !p.err.is_finite() {
            return Err(QuadError::DivergenceSuspected {
                partial: f64::INFINITY,
                error_estimate: f64::INFINITY,
                subdivisions: 1,
            });
        }
        Ok(p)
    }

    /// Worst-first bisection. Running totals are kept in a shared scale
    /// `exp(-base)` (base = 0 in the plain lane) and re-based when a panel
    /// exceeds it; the returned value is a positional re-summation, so the
    /// result does not depend on refinement bookkeeping noise.
    fn run(&self, a: f64, b: f64) -> Result<RawResult, QuadError> {
        assert!(a <= b, "integration bounds must be ordered");
        if a == b {
            return Ok(RawResult { value: self.zero_value(), error: self.zero_value(), subdivisions: 1, converged: true });
        }
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        let first = self.panel(a, b, 0)?;
        let mut base = first.offset;
        let mut total_v = first.value;
        let mut total_e = first.err;
        let mut total_abs = first.res_abs;
        heap.push(first);
        let mut panels: u32 = 1;
        let mut splits: u32 = 0;
        let mut history: Vec<f64> = Vec::new();

        let converged = loop {
            let scale_ok = total_e <= 50.0 * f64::EPSILON * total_abs;
            if total_e <= self.cfg.rel_tol * total_v.abs().max(1e-290) || scale_ok {
                break true;
            }
            if panels >= self.cfg.max_panels {
                break false;
            }
            let Some(top) = heap.pop() else { break false };
            if top.depth >= self.cfg.max_depth || {
                let mid = 0.5 * (top.a + top.b);
                mid <= top.a || mid >= top.b
            } {
                // A panel that cannot be refined further yet still holds most
                // of the accumulated mass is a singular endpoint whose
                // contribution keeps growing under refinement.
                if top.res_abs * (top.offset - base).exp() > 0.5 * total_abs {
                    return Err(QuadError::DivergenceSuspected {
                        partial: self.snapshot(base, total_v),
                        error_estimate: self.snapshot(base, total_e),
                        subdivisions: panels,
                    });
                }
                frozen.push(top);
                if heap.is_empty() {
                    break false;
                }
                continue;
            }
            let mid = 0.5 * (top.a + top.b);
            let left = self.panel(top.a, mid, top.depth + 1)?;
            let right = self.panel(mid, top.b, top.depth + 1)?;
            // re-base the running totals if a child dwarfs the current scale
            let child_max = left.offset.max(right.offset);
            if child_max > base && child_max > f64::NEG_INFINITY {
                let shrink = (base - child_max).exp();
                total_v *= shrink;
                total_e *= shrink;
                total_abs *= shrink;
                base = child_max;
            }
            let rs = |p: &Panel| (p.offset - base).exp();
            total_v += left.value * rs(&left) + right.value * rs(&right) - top.value * rs(&top);
            total_e += left.err * rs(&left) + right.err * rs(&right) - top.err * rs(&top);
            total_abs += left.res_abs * rs(&left) + right.res_abs * rs(&right) - top.res_abs * rs(&top);
            total_v = total_v.max(0.0_f64.min(total_v)); // keep NaN out of control flow
            heap.push(left);
            heap.push(right);
            panels += 1;
            splits += 1;
            if splits % CHECKPOINT_EVERY == 0 {
                history.push(self.snapshot_ln(base, total_v));
            }
            if total_v.is_infinite() || total_abs.is_infinite() {
                return Err(QuadError::DivergenceSuspected {
                    partial: f64::INFINITY,
                    error_estimate: f64::INFINITY,
                    subdivisions: panels,
                });
            }
        };

        // deterministic final summation in positional order
        let mut all: Vec<Panel> = heap.into_vec();
        all.extend(frozen);
        all.sort_by(|p, q| p.a.total_cmp(&q.a));
        let top_offset = all.iter().map(|p| p.offset).fold(f64::NEG_INFINITY, f64::max);
        let (value, error) = match self.lane {
            Lane::Plain => {
                let v: f64 = all.iter().map(|p| p.value).sum();
                let e: f64 = all.iter().map(|p| p.err).sum();
                (v, e)
            }
            Lane::Ln => {
                if top_offset == f64::NEG_INFINITY {
                    (f64::NEG_INFINITY, f64::NEG_INFINITY)
                } else {
                    let v: f64 = all.iter().map(|p| p.value * (p.offset - top_offset).exp()).sum();
                    let e: f64 = all.iter().map(|p| p.err * (p.offset - top_offset).exp()).sum();
                    let ln = |s: f64| if s <= 0.0 { f64::NEG_INFINITY } else { top_offset + s.ln() };
                    (ln(v), ln(e))
                }
            }
        };

        if !converged && grew(&history) {
            return Err(QuadError::DivergenceSuspected {
                partial: value, // ln of the partial value in the log lane
                error_estimate: error,
                subdivisions: panels,
            });
        }
        Ok(RawResult { value, error, subdivisions: panels, converged })
    }

    fn zero_value(&self) -> f64 {
        match self.lane {
            Lane::Plain => 0.0,
            Lane::Ln => f64::NEG_INFINITY,
        }
    }

    /// Running total in the lane's own units (plain value vs ln).
    fn snapshot(&self, base: f64, scaled: f64) -> f64 {
        match self.lane {
            Lane::Plain => scaled,
            Lane::Ln => {
                if scaled <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    base + scaled.ln()
                }
            }
        }
    }

    /// ln of the running total magnitude, for the growth history.
    fn snapshot_ln(&self, base: f64, scaled: f64) -> f64 {
        match self.lane {
            Lane::Plain => scaled.abs().max(1e-300).ln(),
            Lane::Ln => self.snapshot(base, scaled.max(1e-300)),
        }
    }
}

/// Distinguishes a total that keeps growing under refinement (suspected
/// divergence) from one that has merely stopped improving (oscillatory
/// stall). History entries are logs of the running total magnitude.
fn grew(history: &[f64]) -> bool {
    let n = history.len();
    if n < 2 {
        return false;
    }
    // Overall growth by more than x1.5 without a real dip anywhere.
    let no_dips = history.windows(2).all(|p| p[1] >= p[0] - 0.01);
    if no_dips && history[n - 1] - history[0] > 0.405 {
        return true;
    }
    // Or a trailing window that is still monotonically climbing.
    if n >= HISTORY_LEN {
        let tail = &history[n - HISTORY_LEN..];
        let mono = tail.windows(2).all(|p| p[1] >= p[0]);
        if mono && tail[HISTORY_LEN - 1] - tail[0] > GROWTH_THRESHOLD {
            return true;
        }
    }
    false
}

/// Adaptive integral of a signed integrand over [a,b].
///
/// The endpoints themselves are never evaluated. Non-convergence within the
/// panel budget comes back either as `Ok` with `converged = false` (stable
/// estimate, achieved error attached) or as
/// [`QuadError::DivergenceSuspected`] carrying the partial value when the
/// running total keeps growing under refinement.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadratureResult, QuadError>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    let driver = Driver { f: &f, lane: Lane::Plain, cfg };
    let raw = driver.run(a, b)?;
    Ok(QuadratureResult {
        value: raw.value,
        error_estimate: raw.error,
        subdivisions: raw.subdivisions,
        converged: raw.converged,
    })
}

/// Result of a log-scale integral of a nonnegative integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LnQuadratureResult {
    pub value: Magnitude,
    /// Achieved error relative to the value.
    pub rel_error: f64,
    pub subdivisions: u32,
    pub converged: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum EnergyError {
    #[error("energy appears divergent on [{a}, {b}] (ln of partial sum {ln_partial})")]
    DivergenceSuspected { a: f64, b: f64, ln_partial: f64, subdivisions: u32 },
    #[error("integrand evaluation failed: {0}")]
    Evaluation(#[from] DomainError),
}

/// Adaptive integral of `exp(ln_f)` where `ln_f` reports the natural log of
/// a nonnegative integrand (−inf where it vanishes).
pub fn integrate_ln<F>(ln_f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<LnQuadratureResult, EnergyError>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    let driver = Driver { f: &ln_f, lane: Lane::Ln, cfg };
    match driver.run(a, b) {
        Ok(raw) => {
            let value = Magnitude::from_ln(raw.value);
            let rel = Magnitude::from_ln(raw.error).ratio(value);
            Ok(LnQuadratureResult {
                value,
                rel_error: if rel.is_nan() { 0.0 } else { rel },
                subdivisions: raw.subdivisions,
                converged: raw.converged,
            })
        }
        Err(QuadError::DivergenceSuspected { partial, subdivisions, .. }) => {
            Err(EnergyError::DivergenceSuspected { a, b, ln_partial: partial, subdivisions })
        }
        Err(QuadError::Evaluation(e)) => Err(EnergyError::Evaluation(e)),
    }
}

fn ln_sum_exp2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// ln(|f(x)|^2 + |f'(x)|^2), the Sobolev energy integrand in log scale.
///
/// Plain evaluation is used whenever it stays in the normal f64 range; the
/// log-scale evaluators only take over where the plain value overflows,
/// underflows, or fails (for instance a division by an underflowed
/// denominator that is perfectly invertible in log scale).
fn ln_energy_integrand(f: &DifferentiableFunction, x: f64) -> Result<f64, DomainError> {
    if let (Ok(v), Ok(d)) = (f.value(x), f.derivative(x)) {
        let s = v * v + d * d;
        if s.is_normal() {
            return Ok(s.ln());
        }
    }
    let v = f.ln_value(x)?.ln_abs();
    let d = f.ln_derivative(x)?.ln_abs();
    Ok(ln_sum_exp2(2.0 * v, 2.0 * d))
}

/// Splits [a,b] at the interior singularities and derivative kinks of `f`.
fn split_points(f: &DifferentiableFunction, a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a];
    for &s in f.singularities().iter().chain(f.breaks().iter()) {
        if s > a && s < b {
            pts.push(s);
        }
    }
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫_a^b |f|^2 + |f'|^2 dx` in log scale.
///
/// The interval is split at declared singularities and breakpoints, so a
/// singular point supplied by the caller always sits at a panel boundary
/// where the open rule never evaluates.
pub fn sobolev_energy(
    f: &DifferentiableFunction,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<LnQuadratureResult, EnergyError> {
    let pts = split_points(f, a, b);
    let mut value = Magnitude::ZERO;
    let mut err = Magnitude::ZERO;
    let mut subdivisions = 0;
    let mut converged = true;
    for w in pts.windows(2) {
        let r = integrate_ln(|x| ln_energy_integrand(f, x), w[0], w[1], cfg).map_err(|e| match e {
            EnergyError::DivergenceSuspected { ln_partial, subdivisions, .. } => {
                EnergyError::DivergenceSuspected { a, b, ln_partial, subdivisions }
            }
            other => other,
        })?;
        value = value + r.value;
        err = err + r.value * Magnitude::from_value(r.rel_error.max(0.0));
        subdivisions += r.subdivisions;
        converged &= r.converged;
    }
    let rel = err.ratio(value);
    Ok(LnQuadratureResult {
        value,
        rel_error: if rel.is_nan() { 0.0 } else { rel },
        subdivisions,
        converged,
    })
}

/// Which endpoint of [0,1] a dyadic decomposition approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// The sequence `a_n` of Sobolev energies over the dyadic cells
/// `[2^-(n+1), 2^-n]` (left) or their reflections (right).
#[derive(Debug, Clone, Serialize)]
pub struct DyadicProfile {
    pub side: Side,
    /// `a_1..a_N`.
    pub energies: Vec<Magnitude>,
    pub cell_rel_errors: Vec<f64>,
    pub cells_converged: Vec<bool>,
}

impl DyadicProfile {
    pub fn depth(&self) -> usize {
        self.energies.len()
    }

    /// 1-based accessor matching the usual indexing.
    pub fn energy(&self, n: usize) -> Magnitude {
        self.energies[n - 1]
    }

    /// CSV dump `n,a_n` (plain value; may print `inf` for extreme symbols).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n,ln_a_n\r\n");
        for (i, e) in self.energies.iter().enumerate() {
            out.push_str(&format!("{},{},{}\r\n", i + 1, e.value(), e.ln()));
        }
        out
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProfileError {
    #[error("dyadic cell {index} on the {side:?} side appears divergent (interior singularity?)")]
    DivergentCell { side: Side, index: usize, ln_partial: f64 },
    #[error("evaluation failed inside a dyadic cell: {0}")]
    Evaluation(#[from] DomainError),
}

/// The left or right dyadic cell with 1-based index `n`.
pub fn dyadic_cell(side: Side, n: usize) -> (f64, f64) {
    let lo = (2.0_f64).powi(-(n as i32 + 1));
    let hi = (2.0_f64).powi(-(n as i32));
    match side {
        Side::Left => (lo, hi),
        Side::Right => (1.0 - hi, 1.0 - lo),
    }
}

/// Dyadic energy profile of depth `n`. One code path serves both sides: the
/// right side integrates the reflection `x -> phi(1-x)` over the left cells.
pub fn dyadic_profile(
    phi: &DifferentiableFunction,
    side: Side,
    depth: usize,
    cfg: &QuadConfig,
) -> Result<DyadicProfile, ProfileError> {
    assert!(depth >= 1, "profile depth must be at least 1");
    let oriented = match side {
        Side::Left => phi.clone(),
        Side::Right => phi.reflected(),
    };
    let mut energies = Vec::with_capacity(depth);
    let mut cell_rel_errors = Vec::with_capacity(depth);
    let mut cells_converged = Vec::with_capacity(depth);
    for n in 1..=depth {
        let (lo, hi) = dyadic_cell(Side::Left, n);
        match sobolev_energy(&oriented, lo, hi, cfg) {
            Ok(r) => {
                energies.push(r.value);
                cell_rel_errors.push(r.rel_error);
                cells_converged.push(r.converged);
            }
            Err(EnergyError::DivergenceSuspected { ln_partial, .. }) => {
                return Err(ProfileError::DivergentCell { side, index: n, ln_partial });
            }
            Err(EnergyError::Evaluation(e)) => return Err(ProfileError::Evaluation(e)),
        }
    }
    Ok(DyadicProfile { side, energies, cell_rel_errors, cells_converged })
}

/// Direction from which nested intervals approach the probed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    FromAbove,
    FromBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Evidence from probing one point: per-level energy increments on nested
/// dyadic shells and their consecutive ratios.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub point: f64,
    pub direction: Approach,
    /// Shallow levels skipped because their shell left [0,1] or contained
    /// another declared singularity.
    pub skipped_levels: usize,
    pub increments: Vec<Magnitude>,
    pub ratios: Vec<f64>,
    pub verdict: ProbeVerdict,
    /// Set when a shell integral itself refused to settle.
    pub divergent_cell: Option<usize>,
}

/// How many trailing ratios decide a probe verdict.
pub const PROBE_WINDOW: usize = 5;

/// Probes whether the Sobolev energy of `phi` stays finite as intervals
/// approach `point` from one side.
///
/// Level `k` integrates over the shell at distance `[2^-(k+1), 2^-k]` from
/// the point. Increments that keep up (consecutive ratio at or above
/// `ratio_threshold` across the last [`PROBE_WINDOW`] levels) mean the
/// cumulative energy is not settling: divergent. Increments that all decay
/// below the threshold: finite. Anything else is reported as inconclusive
/// rather than coerced.
pub fn divergence_probe(
    phi: &DifferentiableFunction,
    point: f64,
    direction: Approach,
    levels: usize,
    ratio_threshold: f64,
    cfg: &QuadConfig,
) -> Result<ProbeReport, DomainError> {
    assert!((0.0..=1.0).contains(&point), "probe point must lie in [0,1]");
    let other_sings: Vec<f64> = phi
        .singularities()
        .iter()
        .copied()
        .filter(|&s| s != point)
        .collect();
    let shell = |k: usize| -> (f64, f64) {
        let near = (2.0_f64).powi(-(k as i32 + 1));
        let far = (2.0_f64).powi(-(k as i32));
        match direction {
            Approach::FromAbove => (point + near, point + far),
            Approach::FromBelow => (point - far, point - near),
        }
    };
    let valid = |k: usize| -> bool {
        let (lo, hi) = shell(k);
        lo >= 0.0 && hi <= 1.0 && !other_sings.iter().any(|&s| s >= lo && s <= hi)
    };
    let mut k0 = 1;
    while k0 <= levels && !valid(k0) {
        k0 += 1;
    }
    let mut increments = Vec::new();
    let mut divergent_cell = None;
    for k in k0..=levels {
        let (lo, hi) = shell(k);
        match sobolev_energy(phi, lo, hi, cfg) {
            Ok(r) => increments.push(r.value),
            Err(EnergyError::DivergenceSuspected { .. }) => {
                divergent_cell = Some(k);
                break;
            }
            Err(EnergyError::Evaluation(e)) => return Err(e),
        }
    }
    let mut ratios = Vec::new();
    for w in increments.windows(2) {
        let r = w[1].ratio(w[0]);
        ratios.push(if r.is_nan() { 0.0 } else { r });
    }
    let verdict = if divergent_cell.is_some() {
        ProbeVerdict::Divergent
    } else if increments.iter().all(|m| m.is_zero()) && !increments.is_empty() {
        ProbeVerdict::Finite
    } else if ratios.len() < PROBE_WINDOW {
        ProbeVerdict::Inconclusive
    } else {
        let tail = &ratios[ratios.len() - PROBE_WINDOW..];
        if tail.iter().all(|&r| r >= ratio_threshold) {
            ProbeVerdict::Divergent
        } else if tail.iter().all(|&r| r < ratio_threshold) {
            ProbeVerdict::Finite
        } else {
            ProbeVerdict::Inconclusive
        }
    };
    Ok(ProbeReport {
        point,
        direction,
        skipped_levels: k0 - 1,
        increments,
        ratios,
        verdict,
        divergent_cell,
    })
}
