//! Bookkeeping shared by every solver loop: timing, trajectory decimation,
//! callbacks, stopping rules and error decoration.

use std::time::Instant;

use super::SolverConfig;
use crate::activeset::ActiveSet;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, step_point};
use crate::lmo::{Atom, LinearOracle, VertexCache};
use crate::objective::Objective;
use crate::state::{
    Callback, Control, IterationState, LogFilter, RunResult, StepType, StopCriteria, Termination,
    TrajectoryRecord,
};
use crate::stepsize::{StepContext, StepSize};

/// Consecutive zero-length steps tolerated before declaring a stall.
const MAX_ZERO_STEPS: usize = 10;

pub(crate) struct Driver<'a, 'c> {
    pub obj: &'a dyn Objective,
    pub stop: StopCriteria,
    pub kappa: f64,
    pub step: StepSize,
    start: Instant,
    filter: LogFilter,
    trajectory: Vec<TrajectoryRecord>,
    last: Option<TrajectoryRecord>,
    last_logged: bool,
    callback: Option<Callback<'c>>,
    pub lmo_calls: usize,
    zero_steps: usize,
}

impl<'a, 'c> Driver<'a, 'c> {
    pub fn new(obj: &'a dyn Objective, cfg: SolverConfig<'c>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            obj,
            stop: cfg.stop,
            kappa: cfg.kappa,
            step: StepSize::new(cfg.step),
            start: Instant::now(),
            filter: LogFilter::new(cfg.log_stride),
            trajectory: Vec::new(),
            last: None,
            last_logged: true,
            callback: cfg.callback,
            lmo_calls: 0,
            zero_steps: 0,
        })
    }

    pub fn elapsed_ns(&self) -> u64 {
        self.start.elapsed().as_nanos() as u64
    }

    /// Value and gradient at `x`, refusing points outside the domain and
    /// non-finite results.
    pub fn evaluate(&self, x: &[f64], grad: &mut [f64], t: usize) -> Result<f64> {
        if self.obj.has_domain_check() && !self.obj.in_domain(x) {
            return Err(Error::Domain(format!(
                "iterate {t} outside the objective domain"
            )));
        }
        let f = self.obj.value(x);
        self.obj.gradient_into(x, grad);
        if !f.is_finite() || !all_finite(grad) {
            return Err(Error::numerical(t, "non-finite objective or gradient"));
        }
        Ok(f)
    }

    /// Exact oracle call, counted.
    pub fn lmo(&mut self, lmo: &dyn LinearOracle, grad: &[f64]) -> Result<Atom> {
        self.lmo_calls += 1;
        lmo.extreme_point(grad)
    }

    /// Step length from the driver's own step rule.
    pub fn step_length(
        &mut self,
        x: &[f64],
        d: &[f64],
        grad: &[f64],
        primal: f64,
        gamma_max: f64,
        t: usize,
    ) -> Result<(f64, bool)> {
        guarded_step(self.obj, &mut self.step, x, d, grad, primal, gamma_max, t)
    }

    pub fn limits(&self, t: usize) -> Option<Termination> {
        if t >= self.stop.max_iterations {
            Some(Termination::IterationLimit)
        } else if self.start.elapsed() >= self.stop.max_time {
            Some(Termination::TimeLimit)
        } else {
            None
        }
    }

    fn log(&mut self, state: &IterationState<'_>) {
        let rec = state.record();
        if self.filter.keep(state.t) {
            self.trajectory.push(rec);
            self.last_logged = true;
        } else {
            self.last_logged = false;
        }
        self.last = Some(rec);
    }

    /// Records the starting state.
    pub fn initial(&mut self, state: &IterationState<'_>) {
        self.log(state);
    }

    /// Records an iteration, runs the callback and the stall detector.
    pub fn after_step(
        &mut self,
        state: &IterationState<'_>,
        aset: Option<&ActiveSet>,
    ) -> Option<Termination> {
        self.log(state);
        if let Some(cb) = self.callback.as_mut() {
            if cb.call(state, aset) == Control::Stop {
                return Some(Termination::CallbackStop);
            }
        }
        let counts = !matches!(state.step_type, StepType::GapUpdate | StepType::Correction);
        if counts && state.gamma == 0.0 {
            self.zero_steps += 1;
            if self.zero_steps >= MAX_ZERO_STEPS {
                return Some(Termination::NumericalStall);
            }
        } else if counts {
            self.zero_steps = 0;
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    pub fn result(
        mut self,
        x: Vec<f64>,
        primal: f64,
        dual_gap: f64,
        iterations: usize,
        termination: Termination,
        active_set: Option<ActiveSet>,
    ) -> RunResult {
        if !self.last_logged {
            if let Some(rec) = self.last {
                self.trajectory.push(rec);
            }
        }
        RunResult {
            x,
            primal,
            dual_gap,
            iterations,
            lmo_calls: self.lmo_calls,
            elapsed: self.start.elapsed(),
            trajectory: self.trajectory,
            termination,
            active_set,
        }
    }

    /// Attaches the partial trajectory to numerical errors.
    pub fn fail(mut self, err: Error) -> Error {
        if !self.last_logged {
            if let Some(rec) = self.last {
                self.trajectory.push(rec);
            }
        }
        err.with_partial(self.trajectory)
    }
}

/// `d = a − b` for two atoms, written densely.
pub(crate) fn atom_difference(a: &Atom, b: &Atom, d: &mut [f64]) {
    d.fill(0.0);
    a.add_scaled_to(1.0, d);
    b.add_scaled_to(-1.0, d);
}

/// `d = x − v`.
pub(crate) fn fw_direction(x: &[f64], v: &Atom, d: &mut [f64]) {
    d.copy_from_slice(x);
    v.add_scaled_to(-1.0, d);
}

/// `⟨g, x⟩ − ⟨g, v⟩`.
pub(crate) fn gap_of(grad: &[f64], x: &[f64], v: &Atom) -> f64 {
    dot(grad, x) - v.dot(grad)
}

/// Rejects infeasible or out-of-domain starting points.
pub(crate) fn check_start(obj: &dyn Objective, lmo: &dyn LinearOracle, x0: &[f64]) -> Result<()> {
    crate::error::check_dim(lmo.dim(), x0.len())?;
    crate::error::check_dim(obj.dim(), x0.len())?;
    if !lmo.contains(x0, 1e-9) {
        return Err(Error::contract("starting point is not feasible"));
    }
    if obj.has_domain_check() && !obj.in_domain(x0) {
        return Err(Error::Domain(
            "starting point outside the objective domain".into(),
        ));
    }
    Ok(())
}

/// Source of global Frank-Wolfe vertices, exact or lazified, together with
/// the gap estimate `Φ`. Without a cache `Φ` is the exact gap at the current
/// iterate.
pub(crate) struct Vertices {
    cache: Option<VertexCache>,
    lazy_tolerance: f64,
    pub phi: f64,
    /// Exact vertex at the current iterate and its gap, when computed.
    exact: Option<(Atom, f64)>,
    /// Most recent vertex, for reporting.
    pub last: Atom,
}

impl Vertices {
    /// Makes the initial exact call at `x`.
    pub fn start(
        drv: &mut Driver<'_, '_>,
        lmo: &dyn LinearOracle,
        grad: &[f64],
        x: &[f64],
        lazy: Option<(usize, f64)>,
    ) -> Result<Self> {
        let v = drv.lmo(lmo, grad)?;
        let gap = gap_of(grad, x, &v);
        let (cache, lazy_tolerance, phi) = match lazy {
            Some((cap, k)) => {
                let mut c = VertexCache::new(cap);
                c.insert(v.clone());
                (Some(c), k, gap / 2.0)
            }
            None => (None, 1.0, gap),
        };
        Ok(Self {
            cache,
            lazy_tolerance,
            phi,
            exact: Some((v.clone(), gap)),
            last: v,
        })
    }

    pub fn is_lazy(&self) -> bool {
        self.cache.is_some()
    }

    /// True once the exact gap at `x` is known to be at most `epsilon`. An
    /// exact call is spent only when `Φ` has dropped below `epsilon`.
    pub fn certified(
        &mut self,
        drv: &mut Driver<'_, '_>,
        lmo: &dyn LinearOracle,
        grad: &[f64],
        x: &[f64],
    ) -> Result<bool> {
        let eps = drv.stop.epsilon;
        if self.phi > eps {
            return Ok(false);
        }
        let gap = self.exact_gap(drv, lmo, grad, x)?;
        Ok(gap <= eps)
    }

    /// Exact gap at `x`, calling the oracle if it is not known yet.
    pub fn exact_gap(
        &mut self,
        drv: &mut Driver<'_, '_>,
        lmo: &dyn LinearOracle,
        grad: &[f64],
        x: &[f64],
    ) -> Result<f64> {
        if let Some((_, g)) = &self.exact {
            return Ok(*g);
        }
        let v = drv.lmo(lmo, grad)?;
        let g = gap_of(grad, x, &v);
        if let Some(c) = self.cache.as_mut() {
            c.insert(v.clone());
        }
        self.last = v.clone();
        self.exact = Some((v, g));
        Ok(g)
    }

    /// Global vertex at `x`. Returns the vertex, whether it came from the
    /// cache, and whether it fell short of `Φ / K` (so `Φ` was halved).
    pub fn global(
        &mut self,
        drv: &mut Driver<'_, '_>,
        lmo: &dyn LinearOracle,
        grad: &[f64],
        x: &[f64],
    ) -> Result<(Atom, bool, bool)> {
        if let Some((v, g)) = &self.exact {
            let short = self.is_lazy() && *g < self.phi / self.lazy_tolerance;
            if short {
                self.phi /= 2.0;
            }
            return Ok((v.clone(), false, short));
        }
        let c = self
            .cache
            .as_mut()
            .expect("exact vertex is always known without a cache");
        let out = c.cached_extreme_point(lmo, grad, x, self.phi, self.lazy_tolerance)?;
        if !out.hit {
            drv.lmo_calls += 1;
            self.exact = Some((out.atom.clone(), gap_of(grad, x, &out.atom)));
        }
        let halved = out.phi < self.phi;
        self.phi = out.phi;
        self.last = out.atom.clone();
        Ok((out.atom, out.hit, halved))
    }

    /// Call after the iterate moved to `x`.
    pub fn moved(
        &mut self,
        drv: &mut Driver<'_, '_>,
        lmo: &dyn LinearOracle,
        grad: &[f64],
        x: &[f64],
    ) -> Result<()> {
        self.exact = None;
        if !self.is_lazy() {
            self.phi = self.exact_gap(drv, lmo, grad, x)?;
        }
        Ok(())
    }
}

/// Step length along `d` from `x` together with the rule's stall flag.
/// Trial points outside the domain are pulled back by halving.
#[allow(clippy::too_many_arguments)]
pub(crate) fn guarded_step(
    obj: &dyn Objective,
    step: &mut StepSize,
    x: &[f64],
    d: &[f64],
    grad: &[f64],
    primal: f64,
    gamma_max: f64,
    t: usize,
) -> Result<(f64, bool)> {
    let ctx = StepContext {
        objective: obj,
        x,
        d,
        grad,
        primal,
        gamma_max,
        t,
    };
    let out = step.step(&ctx)?;
    let mut gamma = out.gamma.clamp(0.0, gamma_max.max(0.0));
    if gamma > 0.0 && obj.has_domain_check() {
        let mut y = vec![0.0; x.len()];
        let mut halvings = 0;
        loop {
            step_point(x, d, gamma, &mut y);
            if obj.in_domain(&y) {
                break;
            }
            halvings += 1;
            if halvings > 64 {
                return Err(Error::Domain("step never re-entered the domain".into()));
            }
            gamma /= 2.0;
        }
    }
    Ok((gamma, out.stalled))
}
