//! Block-coordinate Frank-Wolfe over a product of feasible regions.

use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::driver::{guarded_step, Driver};
use super::SolverConfig;
use crate::activeset::{ActiveSet, Target};
use crate::error::{check_dim, Error, Result};
use crate::linalg::dot;
use crate::lmo::{Atom, LinearOracle};
use crate::objective::Objective;
use crate::state::{IterationState, RunResult, StepType, Termination};
use crate::stepsize::StepSize;

/// Which blocks are updated in round `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOrder {
    /// Every block, every round.
    Full,
    /// Block `t mod m`.
    Cyclic,
    /// One block drawn uniformly per round.
    Random { seed: u64 },
    /// The listed block sets, repeated cyclically.
    Custom(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStep {
    FrankWolfe,
    BlendedPairwise,
}

#[derive(Clone)]
pub struct BlockProblem {
    oracles: Vec<Arc<dyn LinearOracle>>,
    offsets: Vec<usize>,
    pub order: UpdateOrder,
    pub block_step: BlockStep,
}

impl std::fmt::Debug for BlockProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockProblem")
            .field(
                "blocks",
                &self.oracles.iter().map(|o| o.name()).collect::<Vec<_>>(),
            )
            .field("offsets", &self.offsets)
            .field("order", &self.order)
            .field("block_step", &self.block_step)
            .finish()
    }
}

impl BlockProblem {
    pub fn new(
        oracles: Vec<Arc<dyn LinearOracle>>,
        order: UpdateOrder,
        block_step: BlockStep,
    ) -> Result<Self> {
        if oracles.is_empty() {
            return Err(Error::contract("a block problem needs at least one block"));
        }
        let mut offsets = vec![0];
        for o in &oracles {
            if o.dim() == 0 {
                return Err(Error::contract("empty block"));
            }
            offsets.push(offsets.last().unwrap() + o.dim());
        }
        if let UpdateOrder::Custom(sets) = &order {
            if sets.is_empty() || sets.iter().any(|s| s.is_empty()) {
                return Err(Error::contract("custom order needs nonempty block sets"));
            }
            if sets.iter().flatten().any(|&i| i >= oracles.len()) {
                return Err(Error::contract("custom order names a missing block"));
            }
        }
        Ok(Self {
            oracles,
            offsets,
            order,
            block_step,
        })
    }

    pub fn blocks(&self) -> &[Arc<dyn LinearOracle>] {
        &self.oracles
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

struct Selector {
    order: UpdateOrder,
    m: usize,
    rng: SplitMix64,
}

impl Selector {
    fn new(order: &UpdateOrder, m: usize) -> Self {
        let seed = match order {
            UpdateOrder::Random { seed } => *seed,
            _ => 0,
        };
        Self {
            order: order.clone(),
            m,
            rng: SplitMix64::seed_from_u64(seed),
        }
    }

    fn select(&mut self, t: usize) -> Vec<usize> {
        match &self.order {
            UpdateOrder::Full => (0..self.m).collect(),
            UpdateOrder::Cyclic => vec![t % self.m],
            UpdateOrder::Random { .. } => vec![self.rng.random_range(0..self.m)],
            UpdateOrder::Custom(sets) => sets[t % sets.len()].clone(),
        }
    }
}

/// Block-coordinate FW. Each round picks blocks by `blocks.order`, computes
/// their vertices from one gradient, then steps block by block (the gradient
/// is refreshed between blocks when the step rule or block step reads it).
/// The reported gap is the sum of the latest per-block gaps; termination is
/// certified with all blocks evaluated at the current iterate.
pub fn block_coordinate_fw(
    obj: &dyn Objective,
    blocks: &BlockProblem,
    x0: Vec<f64>,
    cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    block_coordinate_fw_with(obj, blocks, x0, cfg, &mut |_, _| {})
}

/// As [`block_coordinate_fw`], with `hook(t, x)` run after every round.
pub(crate) fn block_coordinate_fw_with(
    obj: &dyn Objective,
    blocks: &BlockProblem,
    x0: Vec<f64>,
    cfg: SolverConfig<'_>,
    hook: &mut dyn FnMut(usize, &[f64]),
) -> Result<RunResult> {
    check_dim(blocks.dim(), x0.len())?;
    check_dim(obj.dim(), x0.len())?;
    for (i, o) in blocks.oracles.iter().enumerate() {
        if !o.contains(&x0[blocks.range(i)], 1e-9) {
            return Err(Error::contract(format!(
                "block {i} of the start is infeasible"
            )));
        }
    }
    if obj.has_domain_check() && !obj.in_domain(&x0) {
        return Err(Error::Domain(
            "starting point outside the objective domain".into(),
        ));
    }
    let rule = cfg.step;
    let mut drv = Driver::new(obj, cfg)?;
    let mut x = x0;
    let mut state = BlockState::new(blocks, &x, rule);
    match run_loop(&mut drv, blocks, &mut x, &mut state, hook) {
        Ok((primal, gap, t, term)) => Ok(drv.result(x, primal, gap, t, term, None)),
        Err(e) => Err(drv.fail(e)),
    }
}

struct BlockState {
    steps: Vec<StepSize>,
    sets: Option<Vec<ActiveSet>>,
    vertices: Vec<Option<Atom>>,
    gaps: Vec<f64>,
    fresh: Vec<bool>,
}

impl BlockState {
    fn new(blocks: &BlockProblem, x: &[f64], rule: crate::stepsize::StepRule) -> Self {
        let m = blocks.oracles.len();
        let sets = (blocks.block_step == BlockStep::BlendedPairwise).then(|| {
            (0..m)
                .map(|i| ActiveSet::singleton(Atom::Dense(x[blocks.range(i)].to_vec())))
                .collect()
        });
        Self {
            steps: (0..m).map(|_| StepSize::new(rule)).collect(),
            sets,
            vertices: vec![None; m],
            gaps: vec![f64::INFINITY; m],
            fresh: vec![false; m],
        }
    }

    fn total_gap(&self) -> f64 {
        self.gaps.iter().sum()
    }

    fn set_size(&self) -> usize {
        self.sets
            .as_ref()
            .map_or(0, |s| s.iter().map(ActiveSet::len).sum())
    }

    fn refresh(
        &mut self,
        drv: &mut Driver<'_, '_>,
        blocks: &BlockProblem,
        i: usize,
        grad: &[f64],
        x: &[f64],
    ) -> Result<()> {
        if self.fresh[i] {
            return Ok(());
        }
        let r = blocks.range(i);
        let v = drv.lmo(blocks.oracles[i].as_ref(), &grad[r.clone()])?;
        self.gaps[i] = dot(&grad[r.clone()], &x[r.clone()]) - v.dot(&grad[r]);
        self.vertices[i] = Some(v);
        self.fresh[i] = true;
        Ok(())
    }
}

fn run_loop(
    drv: &mut Driver<'_, '_>,
    blocks: &BlockProblem,
    x: &mut [f64],
    st: &mut BlockState,
    hook: &mut dyn FnMut(usize, &[f64]),
) -> Result<(f64, f64, usize, Termination)> {
    let n = x.len();
    let m = blocks.oracles.len();
    let mut grad = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut t = 0;
    let mut primal = drv.evaluate(x, &mut grad, t)?;
    for i in 0..m {
        st.refresh(drv, blocks, i, &grad, x)?;
    }
    let mut selector = Selector::new(&blocks.order, m);
    let mut selected = selector.select(t);
    drv.initial(&IterationState {
        t,
        x,
        grad: &grad,
        v: None,
        gamma: 0.0,
        primal,
        dual_gap: st.total_gap(),
        step_type: StepType::Initial,
        elapsed_ns: drv.elapsed_ns(),
        lmo_calls: drv.lmo_calls,
        active_set_size: st.set_size(),
    });
    let reads_gradient =
        !drv.step.rule().is_open_loop() || blocks.block_step == BlockStep::BlendedPairwise;

    let term = loop {
        if st.total_gap() <= drv.stop.epsilon {
            for i in 0..m {
                st.refresh(drv, blocks, i, &grad, x)?;
            }
            if st.total_gap() <= drv.stop.epsilon {
                break Termination::GapReached;
            }
        }
        if let Some(term) = drv.limits(t) {
            break term;
        }
        for &i in &selected {
            st.refresh(drv, blocks, i, &grad, x)?;
        }

        let mut last_gamma = 0.0;
        let mut step_type = StepType::FrankWolfe;
        for (k, &i) in selected.iter().enumerate() {
            if k > 0 && reads_gradient {
                primal = drv.evaluate(x, &mut grad, t)?;
            }
            let r = blocks.range(i);
            let v = st.vertices[i]
                .clone()
                .expect("selected blocks are refreshed");
            d.fill(0.0);
            let (gamma_max, pairwise) = match st.sets.as_ref().map(|s| &s[i]) {
                Some(aset) => {
                    let g = &grad[r.clone()];
                    let ex = aset.argminmax(g)?;
                    let local = ex.away_value - ex.local_fw_value;
                    let gap = dot(g, &x[r.clone()]) - v.dot(g);
                    if drv.kappa * local >= gap {
                        let db = &mut d[r.clone()];
                        aset.atoms()[ex.away].add_scaled_to(1.0, db);
                        aset.atoms()[ex.local_fw].add_scaled_to(-1.0, db);
                        (aset.weights()[ex.away], Some((ex.away, ex.local_fw)))
                    } else {
                        d[r.clone()].copy_from_slice(&x[r.clone()]);
                        v.add_scaled_to(-1.0, &mut d[r.clone()]);
                        (1.0, None)
                    }
                }
                None => {
                    d[r.clone()].copy_from_slice(&x[r.clone()]);
                    v.add_scaled_to(-1.0, &mut d[r.clone()]);
                    (1.0, None)
                }
            };
            let (gamma, stalled) = guarded_step(
                drv.obj,
                &mut st.steps[i],
                x,
                &d,
                &grad,
                primal,
                gamma_max,
                t,
            )?;
            if stalled {
                return finish(
                    drv,
                    blocks,
                    st,
                    x,
                    &grad,
                    primal,
                    t,
                    Termination::NumericalStall,
                );
            }
            match st.sets.as_mut().map(|s| &mut s[i]) {
                Some(aset) => {
                    match pairwise {
                        Some((a, s)) => {
                            aset.apply_pairwise(a, Target::Existing(s), gamma)?;
                            step_type = if gamma > 0.0 && gamma >= gamma_max {
                                StepType::Drop
                            } else {
                                StepType::Pairwise
                            };
                        }
                        None => aset.apply_fw(v, gamma)?,
                    }
                    x[r].copy_from_slice(aset.x());
                }
                None => {
                    let xb = &mut x[r];
                    if gamma == 1.0 {
                        v.write_dense(xb);
                    } else {
                        for (xi, di) in xb.iter_mut().zip(&d[blocks.range(i)]) {
                            *xi -= gamma * di;
                        }
                    }
                }
            }
            last_gamma = gamma;
        }

        t += 1;
        primal = drv.evaluate(x, &mut grad, t)?;
        hook(t, x);
        st.fresh.iter_mut().for_each(|f| *f = false);
        selected = selector.select(t);
        for &i in &selected {
            st.refresh(drv, blocks, i, &grad, x)?;
        }
        let state = IterationState {
            t,
            x,
            grad: &grad,
            v: None,
            gamma: last_gamma,
            primal,
            dual_gap: st.total_gap(),
            step_type,
            elapsed_ns: drv.elapsed_ns(),
            lmo_calls: drv.lmo_calls,
            active_set_size: st.set_size(),
        };
        if let Some(term) = drv.after_step(&state, None) {
            break term;
        }
    };
    finish(drv, blocks, st, x, &grad, primal, t, term)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    drv: &mut Driver<'_, '_>,
    blocks: &BlockProblem,
    st: &mut BlockState,
    x: &[f64],
    grad: &[f64],
    primal: f64,
    t: usize,
    term: Termination,
) -> Result<(f64, f64, usize, Termination)> {
    // The gradient may be stale after a mid-round stall.
    let mut g = grad.to_vec();
    let p = if term == Termination::NumericalStall {
        drv.evaluate(x, &mut g, t)?
    } else {
        primal
    };
    if term == Termination::NumericalStall {
        st.fresh.iter_mut().for_each(|f| *f = false);
    }
    for i in 0..blocks.oracles.len() {
        st.refresh(drv, blocks, i, &g, x)?;
    }
    Ok((p, st.total_gap(), t, term))
}
