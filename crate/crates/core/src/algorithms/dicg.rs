//! Decomposition-invariant solvers. No active set is stored; away vertices
//! come from the in-face oracle of the minimal face containing the iterate.

use super::driver::{atom_difference, check_start, fw_direction, Driver, Vertices};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::lmo::{InFaceOracle, LinearOracle};
use crate::objective::Objective;
use crate::state::{IterationState, RunResult, StepType, Termination};

/// Decomposition-invariant pairwise CG: direction `a − v` with `a` the
/// in-face away vertex and `v` the global FW vertex.
pub fn dicg(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    x0: Vec<f64>,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    run(false, obj, lmo, x0, cfg)
}

/// Blended DICG: an in-face step `a − s` while
/// `κ⟨∇f, a − s⟩ ≥ ⟨∇f, x − v⟩`, a global FW step otherwise.
pub fn bdicg(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    x0: Vec<f64>,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    run(true, obj, lmo, x0, cfg)
}

fn run(
    blended: bool,
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    x0: Vec<f64>,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    let inface = lmo
        .in_face()
        .ok_or_else(|| Error::UnsupportedOracle(lmo.name().to_string()))?;
    check_start(obj, lmo, &x0)?;
    let mut drv = Driver::new(obj, cfg)?;
    let mut x = x0;
    match run_loop(blended, &mut drv, lmo, inface, &mut x) {
        Ok((primal, gap, t, term)) => Ok(drv.result(x, primal, gap, t, term, None)),
        Err(e) => Err(drv.fail(e)),
    }
}

/// Largest `γ` keeping `x − γd` within the coordinate bounds, with the
/// blocking coordinate and the bound it hits.
fn ratio_test(inface: &dyn InFaceOracle, x: &[f64], d: &[f64]) -> (f64, Option<(usize, f64)>) {
    let mut gmax = f64::INFINITY;
    let mut block = None;
    for (i, (&xi, &di)) in x.iter().zip(d).enumerate() {
        let (lo, up) = inface.bounds(i);
        let (limit, bound) = if di > 0.0 {
            ((xi - lo) / di, lo)
        } else if di < 0.0 {
            ((up - xi) / -di, up)
        } else {
            continue;
        };
        let limit = limit.max(0.0);
        if limit < gmax {
            gmax = limit;
            block = Some((i, bound));
        }
    }
    (gmax, block)
}

fn run_loop(
    blended: bool,
    drv: &mut Driver<'_, '_>,
    lmo: &dyn LinearOracle,
    inface: &dyn InFaceOracle,
    x: &mut [f64],
) -> Result<(f64, f64, usize, Termination)> {
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut t = 0;
    let mut primal = drv.evaluate(x, &mut grad, t)?;
    let mut vs = Vertices::start(drv, lmo, &grad, x, None)?;
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
        let (v, _, _) = vs.global(drv, lmo, &grad, x)?;
        let fix = inface.face_fixings(x);
        let a = inface.face_extreme_point(&grad, &fix, true)?;

        let mut step_type;
        let (gamma_max, block) = if blended {
            let s = inface.face_extreme_point(&grad, &fix, false)?;
            let local_gap = a.dot(&grad) - s.dot(&grad);
            if drv.kappa * local_gap >= vs.phi {
                step_type = StepType::InFace;
                atom_difference(&a, &s, &mut d);
                ratio_test(inface, x, &d)
            } else {
                step_type = StepType::FrankWolfe;
                fw_direction(x, &v, &mut d);
                (1.0, None)
            }
        } else {
            step_type = StepType::Pairwise;
            atom_difference(&a, &v, &mut d);
            ratio_test(inface, x, &d)
        };
        let gamma_max = gamma_max.min(1.0);

        let (gamma, stalled) = drv.step_length(x, &d, &grad, primal, gamma_max, t)?;
        if stalled {
            break Termination::NumericalStall;
        }
        axpy(-gamma, &d, x);
        if step_type == StepType::FrankWolfe && gamma == 1.0 {
            v.write_dense(x);
        }
        if gamma > 0.0 && gamma >= gamma_max {
            if let Some((i, bound)) = block {
                x[i] = bound;
                if step_type == StepType::Pairwise {
                    step_type = StepType::Drop;
                }
            }
        }
        inface.snap_to_bounds(x);

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
