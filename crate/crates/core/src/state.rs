//! Iteration state, dual-gap conventions, stopping rules and the callback protocol.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::activeset::ActiveSet;
use crate::error::{check_dim, Result};
use crate::lmo::Atom;

/// Kind of move performed at an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepType {
    /// State at `t = 0`, before any move.
    Initial,
    FrankWolfe,
    Pairwise,
    Away,
    InFace,
    Drop,
    LazyHit,
    Correction,
    /// Lazy variants: no move, the gap estimate was halved.
    GapUpdate,
}

impl StepType {
    pub fn tag(self) -> &'static str {
        match self {
            StepType::Initial => "initial",
            StepType::FrankWolfe => "fw",
            StepType::Pairwise => "pairwise",
            StepType::Away => "away",
            StepType::InFace => "in-face",
            StepType::Drop => "drop",
            StepType::LazyHit => "lazy-hit",
            StepType::Correction => "correction",
            StepType::GapUpdate => "gap-update",
        }
    }
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for StepType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "initial" => StepType::Initial,
            "fw" => StepType::FrankWolfe,
            "pairwise" => StepType::Pairwise,
            "away" => StepType::Away,
            "in-face" => StepType::InFace,
            "drop" => StepType::Drop,
            "lazy-hit" => StepType::LazyHit,
            "correction" => StepType::Correction,
            "gap-update" => StepType::GapUpdate,
            other => return Err(format!("unknown step type `{other}`")),
        })
    }
}

/// Snapshot handed to callbacks after each iterate update.
#[derive(Debug, Clone, Copy)]
pub struct IterationState<'a> {
    pub t: usize,
    pub x: &'a [f64],
    pub grad: &'a [f64],
    /// Last Frank-Wolfe vertex, when one was computed at this iterate.
    pub v: Option<&'a Atom>,
    pub gamma: f64,
    pub primal: f64,
    pub dual_gap: f64,
    pub step_type: StepType,
    pub elapsed_ns: u64,
    pub lmo_calls: usize,
    pub active_set_size: usize,
}

impl IterationState<'_> {
    pub fn record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            t: self.t,
            elapsed_ns: self.elapsed_ns,
            primal: self.primal,
            dual_gap: self.dual_gap,
            gamma: self.gamma,
            step_type: self.step_type,
            active_set_size: self.active_set_size,
            lmo_calls: self.lmo_calls,
        }
    }
}

/// Owned trajectory row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub elapsed_ns: u64,
    pub primal: f64,
    pub dual_gap: f64,
    pub gamma: f64,
    pub step_type: StepType,
    pub active_set_size: usize,
    pub lmo_calls: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub max_time: Duration,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            epsilon: 1e-7,
            max_iterations: 10_000,
            max_time: Duration::from_secs(3600),
        }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.max_time.is_zero() {
            return Err(crate::Error::contract(
                "stop criteria bounds must be strictly positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    GapReached,
    IterationLimit,
    TimeLimit,
    CallbackStop,
    NumericalStall,
}

impl Termination {
    pub fn tag(self) -> &'static str {
        match self {
            Termination::GapReached => "gap-reached",
            Termination::IterationLimit => "iteration-limit",
            Termination::TimeLimit => "time-limit",
            Termination::CallbackStop => "callback-stop",
            Termination::NumericalStall => "numerical-stall",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Termination {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "gap-reached" => Termination::GapReached,
            "iteration-limit" => Termination::IterationLimit,
            "time-limit" => Termination::TimeLimit,
            "callback-stop" => Termination::CallbackStop,
            "numerical-stall" => Termination::NumericalStall,
            other => return Err(format!("unknown termination `{other}`")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub x: Vec<f64>,
    pub primal: f64,
    /// Exact Frank-Wolfe gap at `x`, recomputed before returning.
    pub dual_gap: f64,
    pub iterations: usize,
    pub lmo_calls: usize,
    pub elapsed: Duration,
    pub trajectory: Vec<TrajectoryRecord>,
    pub termination: Termination,
    /// Final decomposition for active-set variants; `None` for the others.
    pub active_set: Option<ActiveSet>,
}

/// Which iterations end up in the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogStride {
    /// Every iteration up to this one is kept.
    pub dense_until: usize,
    /// Afterwards the gap between kept iterations grows by this factor.
    pub growth: f64,
}

impl Default for LogStride {
    fn default() -> Self {
        Self {
            dense_until: 1000,
            growth: 1.5,
        }
    }
}

impl LogStride {
    pub fn every_iteration() -> Self {
        Self {
            dense_until: usize::MAX,
            growth: 1.5,
        }
    }
}

/// Stateful filter over [`LogStride`].
#[derive(Debug, Clone)]
pub(crate) struct LogFilter {
    stride: LogStride,
    next: f64,
}

impl LogFilter {
    pub(crate) fn new(stride: LogStride) -> Self {
        Self {
            stride,
            next: (stride.dense_until as f64 * stride.growth).max(stride.dense_until as f64 + 1.0),
        }
    }

    pub(crate) fn keep(&mut self, t: usize) -> bool {
        if t <= self.stride.dense_until {
            return true;
        }
        if t as f64 >= self.next {
            while self.next <= t as f64 {
                self.next = (self.next * self.stride.growth).max(self.next + 1.0);
            }
            return true;
        }
        false
    }
}

/// `⟨grad, x − v⟩`.
pub fn fw_gap(grad: &[f64], x: &[f64], v: &[f64]) -> Result<f64> {
    check_dim(grad.len(), x.len())?;
    check_dim(grad.len(), v.len())?;
    Ok(grad
        .iter()
        .zip(x.iter().zip(v))
        .map(|(g, (xi, vi))| g * (xi - vi))
        .sum())
}

/// Multiplier relating the FW gap estimate to the strong (away) gap.
pub const STRONG_GAP_FACTOR: f64 = 2.0;

/// Upper bound `2Φ` on the strong FW gap `⟨∇f(x), a − v⟩` given a FW gap bound `Φ`.
pub fn strong_gap_bound(phi: f64) -> f64 {
    STRONG_GAP_FACTOR * phi
}

/// Continue/stop flag returned by callbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

impl From<bool> for Control {
    fn from(keep_going: bool) -> Self {
        if keep_going {
            Control::Continue
        } else {
            Control::Stop
        }
    }
}

impl From<()> for Control {
    fn from(_: ()) -> Self {
        Control::Continue
    }
}

type CallbackFn<'c> = dyn FnMut(&IterationState<'_>, Option<&ActiveSet>) -> Control + Send + 'c;

/// User hook run once per iteration. Returning `false` (or [`Control::Stop`])
/// terminates the solver with [`Termination::CallbackStop`]; returning `()`
/// means continue.
pub struct Callback<'c>(Box<CallbackFn<'c>>);

impl<'c> Callback<'c> {
    pub fn new<R, F>(mut f: F) -> Self
    where
        R: Into<Control>,
        F: FnMut(&IterationState<'_>, Option<&ActiveSet>) -> R + Send + 'c,
    {
        Callback(Box::new(move |s, a| f(s, a).into()))
    }

    pub fn call(&mut self, state: &IterationState<'_>, active_set: Option<&ActiveSet>) -> Control {
        (self.0)(state, active_set)
    }
}

impl fmt::Debug for Callback<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Callback(..)")
    }
}

/// Runs `cb` when present; a missing callback means continue. Panics inside
/// the callback propagate unchanged.
pub fn invoke_callback(
    cb: Option<&mut Callback<'_>>,
    state: &IterationState<'_>,
    active_set: Option<&ActiveSet>,
) -> Control {
    match cb {
        Some(cb) => cb.call(state, active_set),
        None => Control::Continue,
    }
}
