use super::driver::{check_start, fw_direction, Driver, Vertices};
use super::SolverConfig;
use crate::error::Result;
use crate::linalg::axpy;
use crate::lmo::LinearOracle;
use crate::objective::Objective;
use crate::state::{IterationState, RunResult, StepType, Termination};

/// Standard Frank-Wolfe from the feasible point `x0`.
pub fn frank_wolfe(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    x0: Vec<f64>,
    mut cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    cfg.lazy = false;
    run(obj, lmo, x0, cfg)
}

/// Frank-Wolfe with vertices served from a cache while they make enough
/// progress relative to the gap estimate `Φ`. The reported gap is `Φ`; the
/// returned gap is exact.
pub fn lazy_frank_wolfe(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    x0: Vec<f64>,
    mut cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    cfg.lazy = true;
    run(obj, lmo, x0, cfg)
}

fn run(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    x0: Vec<f64>,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    check_start(obj, lmo, &x0)?;
    let lazy = cfg.lazy.then_some((cfg.cache_capacity, cfg.lazy_tolerance));
    let mut drv = Driver::new(obj, cfg)?;
    let mut x = x0;
    match fw_loop(&mut drv, lmo, &mut x, lazy) {
        Ok((primal, gap, t, term)) => Ok(drv.result(x, primal, gap, t, term, None)),
        Err(e) => Err(drv.fail(e)),
    }
}

fn fw_loop(
    drv: &mut Driver<'_, '_>,
    lmo: &dyn LinearOracle,
    x: &mut [f64],
    lazy: Option<(usize, f64)>,
) -> Result<(f64, f64, usize, Termination)> {
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut t = 0;
    let mut primal = drv.evaluate(x, &mut grad, t)?;
    let mut vs = Vertices::start(drv, lmo, &grad, x, lazy)?;
    drv.initial(&IterationState {
        t,
        x,
        grad: &grad,
        v: Some(&vs.last),
        gamma: 0.0,
        primal,
        dual_gap: vs.phi,
        step_type: StepType::Initial,
        elapsed_ns: drv.elapsed_ns(),
        lmo_calls: drv.lmo_calls,
        active_set_size: 0,
    });

    let term = loop {
        if vs.certified(drv, lmo, &grad, x)? {
            break Termination::GapReached;
        }
        if let Some(term) = drv.limits(t) {
            break term;
        }
        let (v, hit, halved) = vs.global(drv, lmo, &grad, x)?;
        fw_direction(x, &v, &mut d);
        let (gamma, stalled) = drv.step_length(x, &d, &grad, primal, 1.0, t)?;
        if stalled {
            break Termination::NumericalStall;
        }
        axpy(-gamma, &d, x);
        if gamma == 1.0 {
            v.write_dense(x);
        }
        let step_type = if halved && gamma == 0.0 {
            StepType::GapUpdate
        } else if hit {
            StepType::LazyHit
        } else {
            StepType::FrankWolfe
        };
        t += 1;
        primal = drv.evaluate(x, &mut grad, t)?;
        vs.moved(drv, lmo, &grad, x)?;
        let state = IterationState {
            t,
            x,
            grad: &grad,
            v: Some(&vs.last),
            gamma,
            primal,
            dual_gap: vs.phi,
            step_type,
            elapsed_ns: drv.elapsed_ns(),
            lmo_calls: drv.lmo_calls,
            active_set_size: 0,
        };
        if let Some(term) = drv.after_step(&state, None) {
            break term;
        }
    };
    let gap = vs.exact_gap(drv, lmo, &grad, x)?;
    Ok((primal, gap, t, term))
}
