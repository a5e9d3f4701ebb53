//! Active-set solvers: away-step FW, pairwise CG and blended pairwise CG.

use super::driver::{atom_difference, check_start, fw_direction, Driver, Vertices};
use super::SolverConfig;
use crate::activeset::{quad_correction, ActiveSet, CorrectionConfig, QuadCache, Target};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::lmo::LinearOracle;
use crate::objective::{Objective, Quadratic};
use crate::state::{IterationState, RunResult, StepType, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Away,
    Pairwise,
    Blended,
}

/// Away-step Frank-Wolfe. Chooses between the FW direction `x − v` and the
/// away direction `a − x` by the larger gap.
pub fn away_frank_wolfe(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    start: ActiveSet,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    run(Kind::Away, obj, lmo, start, cfg)
}

/// Pairwise conditional gradients: weight moves from the away atom to the
/// global FW vertex.
pub fn pairwise_cg(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    start: ActiveSet,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    run(Kind::Pairwise, obj, lmo, start, cfg)
}

/// Blended pairwise conditional gradients. Takes a pairwise step inside the
/// active set while `κ⟨∇f, a − s⟩ ≥ ⟨∇f, x − v⟩`, a global FW step otherwise.
///
/// With `cfg.lazy` the global vertex comes from a cache and the right-hand
/// side is the gap estimate `Φ`; an iteration whose cached and exact vertices
/// both fall short halves `Φ` without moving.
pub fn blended_pairwise_cg(
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    start: ActiveSet,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    run(Kind::Blended, obj, lmo, start, cfg)
}

struct Quad<'q> {
    q: &'q dyn Quadratic,
    cache: QuadCache,
    correction: Option<CorrectionConfig>,
}

fn run(
    kind: Kind,
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    mut aset: ActiveSet,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    check_start(obj, lmo, aset.x())?;
    let lazy = cfg.lazy.then_some((cfg.cache_capacity, cfg.lazy_tolerance));
    let quad = if kind == Kind::Blended && (cfg.quadratic_cache || cfg.correction.is_some()) {
        let q = obj
            .quadratic()
            .ok_or_else(|| Error::contract("the quadratic cache needs a quadratic objective"))?;
        Some(Quad {
            q,
            cache: QuadCache::new(q, &mut aset)?,
            correction: cfg.correction,
        })
    } else {
        None
    };
    let mut drv = Driver::new(obj, cfg)?;
    match run_loop(kind, &mut drv, lmo, &mut aset, lazy, quad) {
        Ok((primal, gap, t, term)) => {
            let x = aset.x().to_vec();
            Ok(drv.result(x, primal, gap, t, term, Some(aset)))
        }
        Err(e) => Err(drv.fail(e)),
    }
}

fn run_loop(
    kind: Kind,
    drv: &mut Driver<'_, '_>,
    lmo: &dyn LinearOracle,
    aset: &mut ActiveSet,
    lazy: Option<(usize, f64)>,
    mut quad: Option<Quad<'_>>,
) -> Result<(f64, f64, usize, Termination)> {
    let n = aset.dim();
    let mut grad = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut t = 0;
    let mut primal = drv.evaluate(aset.x(), &mut grad, t)?;
    let mut vs = Vertices::start(drv, lmo, &grad, aset.x(), lazy)?;
    drv.initial(&IterationState {
        t,
        x: aset.x(),
        grad: &grad,
        v: Some(&vs.last),
        gamma: 0.0,
        primal,
        dual_gap: vs.phi,
        step_type: StepType::Initial,
        elapsed_ns: drv.elapsed_ns(),
        lmo_calls: drv.lmo_calls,
        active_set_size: aset.len(),
    });

    let term = loop {
        if vs.certified(drv, lmo, &grad, aset.x())? {
            break Termination::GapReached;
        }
        if let Some(term) = drv.limits(t) {
            break term;
        }
        let ex = match quad.as_mut() {
            Some(qc) => {
                qc.cache.sync(qc.q, aset);
                qc.cache.argminmax()?
            }
            None => aset.argminmax(&grad)?,
        };
        let gx = dot(&grad, aset.x());
        let x = aset.x();

        // Each branch fills `d`, sets γmax and returns how to apply the step.
        enum Move {
            Fw(crate::lmo::Atom),
            Away(usize),
            Pair(usize, Target),
            Nothing,
        }
        let mut step_type;
        let gamma_max;
        let mv;
        match kind {
            Kind::Away => {
                let (v, hit, _) = vs.global(drv, lmo, &grad, x)?;
                let fw_gap = gx - v.dot(&grad);
                let away_gap = ex.away_value - gx;
                if fw_gap >= away_gap {
                    fw_direction(x, &v, &mut d);
                    gamma_max = 1.0;
                    step_type = if hit {
                        StepType::LazyHit
                    } else {
                        StepType::FrankWolfe
                    };
                    mv = Move::Fw(v);
                } else {
                    d.copy_from_slice(x);
                    for di in d.iter_mut() {
                        *di = -*di;
                    }
                    aset.atoms()[ex.away].add_scaled_to(1.0, &mut d);
                    gamma_max = aset.away_step_max(ex.away);
                    step_type = StepType::Away;
                    mv = Move::Away(ex.away);
                }
            }
            Kind::Pairwise => {
                let (v, _, _) = vs.global(drv, lmo, &grad, x)?;
                atom_difference(&aset.atoms()[ex.away], &v, &mut d);
                gamma_max = aset.weights()[ex.away];
                step_type = StepType::Pairwise;
                mv = Move::Pair(ex.away, Target::New(v));
            }
            Kind::Blended => {
                let local_gap = ex.away_value - ex.local_fw_value;
                if drv.kappa * local_gap >= vs.phi {
                    atom_difference(&aset.atoms()[ex.away], &aset.atoms()[ex.local_fw], &mut d);
                    gamma_max = aset.weights()[ex.away];
                    step_type = StepType::Pairwise;
                    mv = Move::Pair(ex.away, Target::Existing(ex.local_fw));
                } else {
                    let (v, hit, halved) = vs.global(drv, lmo, &grad, x)?;
                    if vs.is_lazy() && halved {
                        gamma_max = 0.0;
                        step_type = StepType::GapUpdate;
                        mv = Move::Nothing;
                    } else {
                        fw_direction(x, &v, &mut d);
                        gamma_max = 1.0;
                        step_type = if hit {
                            StepType::LazyHit
                        } else {
                            StepType::FrankWolfe
                        };
                        mv = Move::Fw(v);
                    }
                }
            }
        }

        let mut gamma = 0.0;
        if !matches!(mv, Move::Nothing) {
            let (g, stalled) = drv.step_length(aset.x(), &d, &grad, primal, gamma_max, t)?;
            if stalled {
                break Termination::NumericalStall;
            }
            gamma = g;
            match mv {
                Move::Fw(v) => aset.apply_fw(v, gamma)?,
                Move::Away(j) => aset.apply_away(j, gamma)?,
                Move::Pair(a, target) => aset.apply_pairwise(a, target, gamma)?,
                Move::Nothing => {}
            }
            if gamma > 0.0 && gamma >= gamma_max && step_type != StepType::FrankWolfe {
                step_type = StepType::Drop;
            }
        }
        t += 1;
        if let Some(qc) = quad.as_mut() {
            if let Some(c) = qc.correction {
                if t % c.trigger_interval == 0 {
                    let report = quad_correction(aset, &mut qc.cache, qc.q)?;
                    if report.improved {
                        step_type = StepType::Correction;
                    }
                }
            }
        }
        if !matches!(step_type, StepType::GapUpdate) {
            primal = drv.evaluate(aset.x(), &mut grad, t)?;
            vs.moved(drv, lmo, &grad, aset.x())?;
        }
        let state = IterationState {
            t,
            x: aset.x(),
            grad: &grad,
            v: Some(&vs.last),
            gamma,
            primal,
            dual_gap: vs.phi,
            step_type,
            elapsed_ns: drv.elapsed_ns(),
            lmo_calls: drv.lmo_calls,
            active_set_size: aset.len(),
        };
        if let Some(term) = drv.after_step(&state, Some(aset)) {
            break term;
        }
    };
    let gap = vs.exact_gap(drv, lmo, &grad, aset.x())?;
    Ok((primal, gap, t, term))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmo::{Atom, KSparseOracle, SimplexOracle};
    use crate::objective::QuadraticObjective;
    use crate::state::Callback;
    use std::sync::{Arc, Mutex};

    fn vertex(n: usize, i: usize) -> Atom {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Atom::Dense(v)
    }

    fn solvers(
    ) -> [fn(&dyn Objective, &dyn LinearOracle, ActiveSet, SolverConfig<'_>) -> Result<RunResult>; 3]
    {
        [away_frank_wolfe, pairwise_cg, blended_pairwise_cg]
    }

    #[test]
    fn two_face_optimum_is_sparse() {
        // Projection of y onto Δ5 lands on the face spanned by e0 and e1.
        let y = [0.9, 0.6, -0.3, -0.2, -0.4];
        let obj = QuadraticObjective::scaled_distance(1.0, &y);
        let lmo = SimplexOracle::new(5, 1.0);
        for solve in solvers() {
            let res = solve(
                &obj,
                &lmo,
                ActiveSet::singleton(vertex(5, 4)),
                SolverConfig::default(),
            )
            .unwrap();
            assert!(res.dual_gap <= 1e-7, "{}", res.dual_gap);
            assert!((res.x[0] - 0.65).abs() < 1e-6 && (res.x[1] - 0.35).abs() < 1e-6);
            let aset = res.active_set.unwrap();
            let big = aset.weights().iter().filter(|w| **w > 1e-12).count();
            assert!(big <= 2, "{big}");
        }
    }

    #[test]
    fn vertex_optimum_drops_to_singleton() {
        let obj = QuadraticObjective::scaled_distance(1.0, &[2.0, 0.0, 0.0]);
        let lmo = SimplexOracle::new(3, 1.0);
        let start = ActiveSet::from_weighted(
            vec![vertex(3, 0), vertex(3, 1), vertex(3, 2)],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        for solve in solvers() {
            let res = solve(&obj, &lmo, start.clone(), SolverConfig::default()).unwrap();
            assert_eq!(res.active_set.unwrap().len(), 1);
            assert_eq!(res.x, vec![1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn optimal_start_stops_at_zero() {
        let obj = QuadraticObjective::scaled_distance(1.0, &[2.0, 0.0, 0.0]);
        let lmo = SimplexOracle::new(3, 1.0);
        for solve in solvers() {
            let res = solve(
                &obj,
                &lmo,
                ActiveSet::singleton(vertex(3, 0)),
                SolverConfig::default(),
            )
            .unwrap();
            assert_eq!(res.iterations, 0);
            assert_eq!(res.termination, Termination::GapReached);
        }
    }

    #[test]
    fn interior_projection() {
        let obj = QuadraticObjective::scaled_distance(1.0, &[0.5, 0.3, 0.2]);
        let lmo = SimplexOracle::new(3, 1.0);
        for solve in solvers() {
            let res = solve(
                &obj,
                &lmo,
                ActiveSet::singleton(vertex(3, 0)),
                SolverConfig::default(),
            )
            .unwrap();
            assert!(res.dual_gap <= 1e-7);
            for (a, b) in res.x.iter().zip([0.5, 0.3, 0.2]) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn two_atom_seesaw() {
        // f(x) = (x0 − 0.3)² + (x1 − 0.7)² on the segment [e0, e1]: λ = (0.3, 0.7).
        let obj = QuadraticObjective::scaled_distance(2.0, &[0.3, 0.7]);
        let lmo = SimplexOracle::new(2, 1.0);
        let start =
            ActiveSet::from_weighted(vec![vertex(2, 0), vertex(2, 1)], vec![0.9, 0.1]).unwrap();
        let res = pairwise_cg(&obj, &lmo, start, SolverConfig::default()).unwrap();
        let aset = res.active_set.unwrap();
        let w0 = aset.find(&vertex(2, 0)).map_or(0.0, |i| aset.weights()[i]);
        assert!((w0 - 0.3).abs() < 1e-6);
    }

    #[test]
    fn ksparse_bpcg_cardinality_bound() {
        let n = 20;
        let y: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 40.0).collect();
        let obj = QuadraticObjective::scaled_distance(1.0, &y);
        let lmo = KSparseOracle::new(n, 3, 1.0);
        let mut g0 = vec![0.0; n];
        obj.gradient_into(&vec![0.0; n], &mut g0);
        let start = ActiveSet::singleton(lmo.extreme_point(&g0).unwrap());
        let bad = Arc::new(Mutex::new(Vec::new()));
        let seen = bad.clone();
        let cfg = SolverConfig::default()
            .with_max_iterations(100_000)
            .with_callback(Callback::new(move |s: &IterationState<'_>, _| {
                if s.active_set_size > s.t + 1 {
                    seen.lock().unwrap().push(s.t);
                }
            }));
        let res = blended_pairwise_cg(&obj, &lmo, start, cfg).unwrap();
        assert!(res.dual_gap <= 1e-7);
        assert!(bad.lock().unwrap().is_empty());
    }

    #[test]
    fn blended_selection_matches_tags() {
        let n = 12;
        let y: Vec<f64> = (0..n).map(|i| ((i * 5 % 7) as f64) / 10.0 - 0.2).collect();
        let obj = QuadraticObjective::scaled_distance(1.0, &y);
        let lmo = KSparseOracle::new(n, 2, 1.0);
        let start = ActiveSet::singleton(lmo.extreme_point(&[1.0; 12]).unwrap());
        // Expected tag of the next step, decided from the state handed out now.
        let pending: Arc<Mutex<Option<bool>>> = Arc::new(Mutex::new(None));
        let mismatches = Arc::new(Mutex::new(0usize));
        let (p, m) = (pending.clone(), mismatches.clone());
        let cfg = SolverConfig::default().with_callback(Callback::new(
            move |s: &IterationState<'_>, a: Option<&ActiveSet>| {
                let mut p = p.lock().unwrap();
                if let Some(local) = p.take() {
                    let ok = match s.step_type {
                        StepType::Pairwise | StepType::Drop => local,
                        StepType::FrankWolfe => !local,
                        _ => true,
                    };
                    if !ok {
                        *m.lock().unwrap() += 1;
                    }
                }
                let a = a.unwrap();
                let vals: Vec<f64> = a.atoms().iter().map(|v| v.dot(s.grad)).collect();
                let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
                let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
                let gap = dot(s.grad, s.x) - s.v.unwrap().dot(s.grad);
                *p = Some(2.0 * (hi - lo) >= gap);
            },
        ));
        let res = blended_pairwise_cg(&obj, &lmo, start, cfg).unwrap();
        assert!(res.iterations > 3);
        assert_eq!(*mismatches.lock().unwrap(), 0);
    }

    #[test]
    fn lazy_bpcg_matches() {
        let y = [0.35, 0.1, 0.25, 0.2, 0.1];
        let obj = QuadraticObjective::scaled_distance(1.0, &y);
        let lmo = SimplexOracle::new(5, 1.0);
        let a = blended_pairwise_cg(
            &obj,
            &lmo,
            ActiveSet::singleton(vertex(5, 0)),
            SolverConfig::default(),
        )
        .unwrap();
        let b = blended_pairwise_cg(
            &obj,
            &lmo,
            ActiveSet::singleton(vertex(5, 0)),
            SolverConfig::default().with_lazy(true),
        )
        .unwrap();
        assert!(b.dual_gap <= 1e-7);
        assert!((a.primal - b.primal).abs() < 1e-6);
        assert!(b.lmo_calls <= a.lmo_calls);
    }

    #[test]
    fn quadratic_cache_run_matches_plain() {
        let y = [0.35, 0.1, 0.25, 0.2, 0.1, -0.3];
        let obj = QuadraticObjective::scaled_distance(1.0, &y);
        let lmo = SimplexOracle::new(6, 1.0);
        let plain = blended_pairwise_cg(
            &obj,
            &lmo,
            ActiveSet::singleton(vertex(6, 5)),
            SolverConfig::default(),
        )
        .unwrap();
        let cached = blended_pairwise_cg(
            &obj,
            &lmo,
            ActiveSet::singleton(vertex(6, 5)),
            SolverConfig::default().with_correction(CorrectionConfig {
                trigger_interval: 3,
            }),
        )
        .unwrap();
        assert!(cached.dual_gap <= 1e-7);
        assert!((plain.primal - cached.primal).abs() < 1e-7);
    }

    #[test]
    fn quadratic_cache_requires_quadratic() {
        let obj = crate::objective::FnObjective::new(
            2,
            |x: &[f64]| x[0].exp(),
            |x: &[f64], g: &mut [f64]| {
                g[0] = x[0].exp();
                g[1] = 0.0;
            },
        );
        let lmo = SimplexOracle::new(2, 1.0);
        let err = blended_pairwise_cg(
            &obj,
            &lmo,
            ActiveSet::singleton(vertex(2, 0)),
            SolverConfig::default().with_quadratic_cache(true),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
