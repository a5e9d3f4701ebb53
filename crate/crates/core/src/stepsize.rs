//! Step-length rules.
//!
//! All rules follow the update convention `x⁺ = x − γd` and return
//! `γ ∈ [0, gamma_max]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm_sq, step_point};
use crate::objective::{Objective, Quadratic};

/// Inputs shared by all step rules.
pub struct StepContext<'a> {
    pub objective: &'a dyn Objective,
    pub x: &'a [f64],
    /// Descent direction; the next iterate is `x − γd`.
    pub d: &'a [f64],
    pub grad: &'a [f64],
    /// `f(x)`, already known to the caller.
    pub primal: f64,
    pub gamma_max: f64,
    pub t: usize,
}

/// `ℓ / (t + ℓ)`
pub fn agnostic_step(t: usize, ell: u32) -> f64 {
    let ell = ell as f64;
    ell / (t as f64 + ell)
}

/// `g(t) / (t + g(t))`
pub fn generalized_agnostic_step(t: usize, g: impl Fn(usize) -> f64) -> f64 {
    let gt = g(t);
    if gt == 0.0 && t == 0 {
        return 0.0;
    }
    gt / (t as f64 + gt)
}

/// Default schedule `g(t) = 2 + ln(t + 1)`.
pub fn log_schedule(t: usize) -> f64 {
    2.0 + (t as f64 + 1.0).ln()
}

/// `min(⟨g, d⟩ / (L‖d‖²), gamma_max)`, or 0 for non-descent directions.
pub fn short_step(grad: &[f64], d: &[f64], lipschitz: f64, gamma_max: f64) -> f64 {
    let gd = dot(grad, d);
    let dn2 = norm_sq(d);
    if gd <= 0.0 || dn2 == 0.0 {
        return 0.0;
    }
    (gd / (lipschitz * dn2)).min(gamma_max)
}

/// Exact line search for `½xᵀAx + bᵀx` along `−d`.
pub fn quadratic_exact_step(q: &dyn Quadratic, x: &[f64], d: &[f64], gamma_max: f64) -> f64 {
    let mut ax = vec![0.0; x.len()];
    q.apply(x, &mut ax);
    let num = dot(&ax, d) + dot(q.linear(), d);
    let mut ad = vec![0.0; d.len()];
    q.apply(d, &mut ad);
    exact_from_products(num, dot(&ad, d), norm_sq(d), gamma_max)
}

/// Exact quadratic step from `⟨Ax + b, d⟩`, `⟨Ad, d⟩` and `‖d‖²`.
pub fn exact_from_products(num: f64, curvature: f64, dn2: f64, gamma_max: f64) -> f64 {
    if curvature <= 1e-16 * dn2 {
        return if num > 0.0 { gamma_max } else { 0.0 };
    }
    (num / curvature).clamp(0.0, gamma_max)
}

/// Cumulative halving exponent of the monotonic open-loop rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonotonicState {
    pub n: u32,
}

impl Default for MonotonicState {
    fn default() -> Self {
        Self { n: 1 }
    }
}

const MONOTONIC_EXTRA_HALVINGS: u32 = 64;

/// Largest `γ(N) = 2^{−N}/(2+t)`, `N ≥ state.n`, whose trial point is in the
/// domain and strictly decreases `f`. Returns 0 when none is found.
pub fn monotonic_step(ctx: &StepContext<'_>, state: &mut MonotonicState) -> f64 {
    let obj = ctx.objective;
    let mut y = vec![0.0; ctx.x.len()];
    for n in state.n..=state.n + MONOTONIC_EXTRA_HALVINGS {
        let gamma = (0.5f64.powi(n as i32) / (2.0 + ctx.t as f64)).min(ctx.gamma_max);
        step_point(ctx.x, ctx.d, gamma, &mut y);
        if obj.has_domain_check() && !obj.in_domain(&y) {
            continue;
        }
        if obj.value(&y) < ctx.primal {
            state.n = n;
            return gamma;
        }
    }
    0.0
}

/// Smoothness estimate and progress parameters of the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    /// `None` until the first call, which probes the gradient once.
    pub l_estimate: Option<f64>,
    pub eta: f64,
    pub tau_grow: f64,
}

impl Default for AdaptiveState {
    fn default() -> Self {
        Self::new(0.9, 2.0)
    }
}

impl AdaptiveState {
    pub fn new(eta: f64, tau_grow: f64) -> Self {
        Self {
            l_estimate: None,
            eta,
            tau_grow,
        }
    }
}

const ADAPTIVE_MAX_DOUBLINGS: usize = 100;
const PROBE_STEP: f64 = 1e-4;
const L_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOutcome {
    pub gamma: f64,
    pub l_accepted: f64,
    /// Set when the doubling cap was hit without acceptance.
    pub stalled: bool,
}

fn initial_smoothness(ctx: &StepContext<'_>, dn: f64) -> Result<f64> {
    let obj = ctx.objective;
    let mut h = PROBE_STEP;
    let mut y = vec![0.0; ctx.x.len()];
    step_point(ctx.x, ctx.d, h, &mut y);
    let mut halvings = 0;
    while obj.has_domain_check() && !obj.in_domain(&y) {
        halvings += 1;
        if halvings > 64 {
            return Err(Error::Domain(
                "smoothness probe never entered the domain".into(),
            ));
        }
        h /= 2.0;
        step_point(ctx.x, ctx.d, h, &mut y);
    }
    let mut gy = vec![0.0; y.len()];
    obj.gradient_into(&y, &mut gy);
    if !all_finite(&gy) {
        return Err(Error::numerical(
            ctx.t,
            "non-finite gradient in smoothness probe",
        ));
    }
    let diff: f64 = ctx
        .grad
        .iter()
        .zip(&gy)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok((diff / (h * dn)).max(L_FLOOR))
}

/// Adaptive short step with a persistent smoothness estimate.
pub fn adaptive_step(ctx: &StepContext<'_>, state: &mut AdaptiveState) -> Result<AdaptiveOutcome> {
    let gd = dot(ctx.grad, ctx.d);
    if gd < 0.0 {
        return Err(Error::contract("adaptive step needs ⟨∇f, d⟩ ≥ 0"));
    }
    let dn2 = norm_sq(ctx.d);
    let l_prev = match state.l_estimate {
        Some(l) => l,
        None if dn2 > 0.0 => initial_smoothness(ctx, dn2.sqrt())?,
        None => L_FLOOR,
    };
    state.l_estimate = Some(l_prev);
    if gd == 0.0 || dn2 == 0.0 || ctx.gamma_max <= 0.0 {
        return Ok(AdaptiveOutcome {
            gamma: 0.0,
            l_accepted: l_prev,
            stalled: false,
        });
    }
    let obj = ctx.objective;
    let mut m = state.eta * l_prev;
    let mut y = vec![0.0; ctx.x.len()];
    let mut gy = vec![0.0; ctx.x.len()];
    let mut gamma = 0.0;
    for _ in 0..=ADAPTIVE_MAX_DOUBLINGS {
        gamma = (gd / (m * dn2)).min(ctx.gamma_max);
        step_point(ctx.x, ctx.d, gamma, &mut y);
        if !obj.has_domain_check() || obj.in_domain(&y) {
            obj.gradient_into(&y, &mut gy);
            if !all_finite(&gy) {
                return Err(Error::numerical(
                    ctx.t,
                    "non-finite gradient in adaptive step",
                ));
            }
            if dot(&gy, ctx.d) >= 0.0 {
                state.l_estimate = Some(m);
                return Ok(AdaptiveOutcome {
                    gamma,
                    l_accepted: m,
                    stalled: false,
                });
            }
        }
        m *= state.tau_grow;
    }
    Ok(AdaptiveOutcome {
        gamma,
        l_accepted: m,
        stalled: true,
    })
}

pub const SECANT_MAX_ITERATIONS: usize = 40;
pub const SECANT_TOLERANCE: f64 = 1e-10;

/// Secant root search on `h(γ) = ⟨∇f(x − γd), d⟩` over `[0, gamma_max]`.
pub fn secant_step(ctx: &StepContext<'_>, max_iterations: usize, tol: f64) -> Result<f64> {
    if max_iterations == 0 {
        return Err(Error::contract("secant needs at least one iteration"));
    }
    let obj = ctx.objective;
    let h0 = dot(ctx.grad, ctx.d);
    if h0 <= 0.0 || ctx.gamma_max <= 0.0 {
        return Ok(0.0);
    }
    let n = ctx.x.len();
    let mut y = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut gmax = ctx.gamma_max;
    step_point(ctx.x, ctx.d, gmax, &mut y);
    let mut halvings = 0;
    while obj.has_domain_check() && !obj.in_domain(&y) {
        halvings += 1;
        if halvings > 64 {
            return Err(Error::Domain(
                "secant bracket never entered the domain".into(),
            ));
        }
        gmax /= 2.0;
        step_point(ctx.x, ctx.d, gmax, &mut y);
    }
    let mut h = |gamma: f64, y: &mut [f64]| -> Result<f64> {
        step_point(ctx.x, ctx.d, gamma, y);
        obj.gradient_into(y, &mut gy);
        if !all_finite(&gy) {
            return Err(Error::numerical(
                ctx.t,
                "non-finite gradient in secant step",
            ));
        }
        Ok(dot(&gy, ctx.d))
    };
    let (mut g0, mut hv0) = (0.0, h0);
    let (mut g1, mut hv1) = (gmax, h(gmax, &mut y)?);
    if hv1 >= 0.0 {
        // still descending at the far end
        return Ok(gmax);
    }
    let threshold = tol * (1.0 + h0.abs());
    let mut probed = vec![g1];
    for _ in 0..max_iterations {
        let denom = hv1 - hv0;
        if denom.abs() <= threshold {
            return Ok(g1);
        }
        let g2 = (g1 - hv1 * (g1 - g0) / denom).clamp(0.0, gmax);
        let hv2 = h(g2, &mut y)?;
        probed.push(g2);
        (g0, hv0, g1, hv1) = (g1, hv1, g2, hv2);
        if hv1 == 0.0 || (hv1 - hv0).abs() <= threshold {
            return Ok(g1);
        }
    }
    let mut best = (0.0, ctx.primal);
    for &g in &probed {
        step_point(ctx.x, ctx.d, g, &mut y);
        let val = obj.value(&y);
        if val < best.1 {
            best = (g, val);
        }
    }
    Ok(best.0)
}

/// Step-size strategy selected for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `ℓ/(t+ℓ)`
    Agnostic {
        ell: u32,
    },
    /// `g(t)/(t+g(t))` with `g(t) = 2 + ln(t+1)`.
    LogAgnostic,
    Monotonic,
    Adaptive {
        eta: f64,
        tau: f64,
    },
    Secant {
        max_iterations: usize,
        tolerance: f64,
    },
    ShortStep {
        lipschitz: f64,
    },
    /// Closed-form line search; quadratic objectives only.
    Exact,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Adaptive { eta: 0.9, tau: 2.0 }
    }
}

impl StepRule {
    /// Whether primal values are guaranteed not to increase.
    pub fn is_monotone(&self) -> bool {
        matches!(
            self,
            StepRule::Monotonic
                | StepRule::Adaptive { .. }
                | StepRule::Exact
                | StepRule::Secant { .. }
        )
    }

    pub fn is_open_loop(&self) -> bool {
        matches!(self, StepRule::Agnostic { .. } | StepRule::LogAgnostic)
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Agnostic { ell: 2 } => write!(f, "agnostic"),
            StepRule::Agnostic { ell } => write!(f, "agnostic:{ell}"),
            StepRule::LogAgnostic => write!(f, "log-agnostic"),
            StepRule::Monotonic => write!(f, "monotonic"),
            StepRule::Adaptive { eta, tau } if *eta == 0.9 && *tau == 2.0 => write!(f, "adaptive"),
            StepRule::Adaptive { eta, tau } => write!(f, "adaptive:{eta}:{tau}"),
            StepRule::Secant { .. } => write!(f, "secant"),
            StepRule::ShortStep { lipschitz } => write!(f, "short:{lipschitz}"),
            StepRule::Exact => write!(f, "exact"),
        }
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::contract(format!("unknown step rule `{s}`"));
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num =
            |i: usize| -> Result<f64> { args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad) };
        let rule = match (head, args.len()) {
            ("agnostic", 0) => StepRule::Agnostic { ell: 2 },
            ("agnostic", 1) => {
                let ell: u32 = args[0].parse().map_err(|_| bad())?;
                if ell == 0 {
                    return Err(bad());
                }
                StepRule::Agnostic { ell }
            }
            ("log-agnostic", 0) => StepRule::LogAgnostic,
            ("monotonic", 0) => StepRule::Monotonic,
            ("adaptive", 0) => StepRule::default(),
            ("adaptive", 2) => {
                let (eta, tau) = (num(0)?, num(1)?);
                if !(eta > 0.0 && eta <= 1.0 && tau > 1.0) {
                    return Err(bad());
                }
                StepRule::Adaptive { eta, tau }
            }
            ("secant", 0) => StepRule::Secant {
                max_iterations: SECANT_MAX_ITERATIONS,
                tolerance: SECANT_TOLERANCE,
            },
            ("short", 1) => {
                let lipschitz = num(0)?;
                if !(lipschitz > 0.0) {
                    return Err(bad());
                }
                StepRule::ShortStep { lipschitz }
            }
            ("exact", 0) => StepRule::Exact,
            _ => return Err(bad()),
        };
        Ok(rule)
    }
}

/// Result of one step-size query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub gamma: f64,
    pub stalled: bool,
}

/// A step rule together with the state it carries across iterations.
#[derive(Debug, Clone)]
pub struct StepSize {
    rule: StepRule,
    adaptive: AdaptiveState,
    monotonic: MonotonicState,
}

impl StepSize {
    pub fn new(rule: StepRule) -> Self {
        let adaptive = match rule {
            StepRule::Adaptive { eta, tau } => AdaptiveState::new(eta, tau),
            _ => AdaptiveState::default(),
        };
        Self {
            rule,
            adaptive,
            monotonic: MonotonicState::default(),
        }
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    pub fn adaptive_state(&self) -> &AdaptiveState {
        &self.adaptive
    }

    pub fn monotonic_state(&self) -> &MonotonicState {
        &self.monotonic
    }

    pub fn step(&mut self, ctx: &StepContext<'_>) -> Result<StepOutcome> {
        let done = |gamma: f64| {
            Ok(StepOutcome {
                gamma,
                stalled: false,
            })
        };
        if ctx.gamma_max <= 0.0 {
            return done(0.0);
        }
        match self.rule {
            StepRule::Agnostic { ell } => done(agnostic_step(ctx.t, ell).min(ctx.gamma_max)),
            StepRule::LogAgnostic => {
                done(generalized_agnostic_step(ctx.t, log_schedule).min(ctx.gamma_max))
            }
            StepRule::Monotonic => {
                let gamma = monotonic_step(ctx, &mut self.monotonic);
                Ok(StepOutcome {
                    gamma,
                    stalled: gamma == 0.0 && dot(ctx.grad, ctx.d) > 0.0,
                })
            }
            StepRule::Adaptive { .. } => {
                if dot(ctx.grad, ctx.d) <= 0.0 {
                    return done(0.0);
                }
                let out = adaptive_step(ctx, &mut self.adaptive)?;
                Ok(StepOutcome {
                    gamma: out.gamma,
                    stalled: out.stalled,
                })
            }
            StepRule::Secant {
                max_iterations,
                tolerance,
            } => done(secant_step(ctx, max_iterations, tolerance)?),
            StepRule::ShortStep { lipschitz } => {
                done(short_step(ctx.grad, ctx.d, lipschitz, ctx.gamma_max))
            }
            StepRule::Exact => {
                let q = ctx.objective.quadratic().ok_or_else(|| {
                    Error::contract("exact line search needs a quadratic objective")
                })?;
                let mut ad = vec![0.0; ctx.d.len()];
                q.apply(ctx.d, &mut ad);
                done(exact_from_products(
                    dot(ctx.grad, ctx.d),
                    dot(&ad, ctx.d),
                    norm_sq(ctx.d),
                    ctx.gamma_max,
                ))
            }
        }
    }
}
