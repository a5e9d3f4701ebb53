//! Alternating linear minimization: find a point in (or near) the
//! intersection of several sets given only their linear oracles.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::bcfw::{block_coordinate_fw_with, BlockProblem, BlockStep, UpdateOrder};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::lmo::LinearOracle;
use crate::objective::Objective;
use crate::state::RunResult;

/// Rounds between checks of the penalty doubling rule.
pub const ALM_DOUBLING_INTERVAL: usize = 1000;

#[derive(Clone)]
pub struct AlmProblem {
    oracles: Vec<Arc<dyn LinearOracle>>,
    /// Initial penalty weight.
    pub lambda: f64,
    /// Optional objective evaluated at the block average.
    pub outer: Option<Arc<dyn Objective>>,
}

impl AlmProblem {
    pub fn new(oracles: Vec<Arc<dyn LinearOracle>>, lambda: f64) -> Result<Self> {
        if oracles.len() < 2 {
            return Err(Error::contract(
                "alternating minimization needs at least two sets",
            ));
        }
        let n = oracles[0].dim();
        if oracles.iter().any(|o| o.dim() != n) {
            return Err(Error::contract("all sets must live in the same space"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::contract("penalty weight must be positive"));
        }
        Ok(Self {
            oracles,
            lambda,
            outer: None,
        })
    }

    pub fn with_outer(mut self, f: Arc<dyn Objective>) -> Result<Self> {
        crate::error::check_dim(self.oracles[0].dim(), f.dim())?;
        self.outer = Some(f);
        Ok(self)
    }

    pub fn sets(&self) -> &[Arc<dyn LinearOracle>] {
        &self.oracles
    }
}

#[derive(Debug, Clone)]
pub struct AlmResult {
    pub run: RunResult,
    pub blocks: Vec<Vec<f64>>,
    pub average: Vec<f64>,
    /// `Σ_i ‖x_i − x̄‖²`.
    pub infeasibility: f64,
    /// Penalty weight in force at the end.
    pub lambda: f64,
}

/// `(λ/2) Σ_i ‖x_i − x̄‖² + f(x̄)` over the stacked blocks.
struct Penalty {
    m: usize,
    n: usize,
    lambda: AtomicU64,
    outer: Option<Arc<dyn Objective>>,
}

impl Penalty {
    fn lambda(&self) -> f64 {
        f64::from_bits(self.lambda.load(Ordering::Relaxed))
    }

    fn average(&self, x: &[f64]) -> Vec<f64> {
        let mut avg = vec![0.0; self.n];
        for b in x.chunks(self.n) {
            for (a, v) in avg.iter_mut().zip(b) {
                *a += v;
            }
        }
        avg.iter_mut().for_each(|a| *a /= self.m as f64);
        avg
    }

    fn infeasibility(&self, x: &[f64]) -> f64 {
        let avg = self.average(x);
        x.chunks(self.n)
            .map(|b| {
                b.iter()
                    .zip(&avg)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
            })
            .sum()
    }
}

impl Objective for Penalty {
    fn dim(&self) -> usize {
        self.m * self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let outer = self
            .outer
            .as_ref()
            .map_or(0.0, |f| f.value(&self.average(x)));
        0.5 * self.lambda() * self.infeasibility(x) + outer
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        let avg = self.average(x);
        let lambda = self.lambda();
        let mut outer = vec![0.0; self.n];
        if let Some(f) = &self.outer {
            f.gradient_into(&avg, &mut outer);
        }
        for (gb, xb) in grad.chunks_mut(self.n).zip(x.chunks(self.n)) {
            for j in 0..self.n {
                gb[j] = lambda * (xb[j] - avg[j]) + outer[j] / self.m as f64;
            }
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.outer
            .as_ref()
            .is_none_or(|f| !f.has_domain_check() || f.in_domain(&self.average(x)))
    }

    fn has_domain_check(&self) -> bool {
        self.outer.as_ref().is_some_and(|f| f.has_domain_check())
    }
}

/// Block-coordinate FW with blended pairwise block steps on the penalty
/// objective, all blocks per round. With an outer objective the penalty
/// doubles every [`ALM_DOUBLING_INTERVAL`] rounds in which infeasibility
/// failed to drop by 1%.
pub fn alternating_linear_minimization(
    alm: &AlmProblem,
    x0: Vec<Vec<f64>>,
    cfg: SolverConfig<'_>,
) -> Result<AlmResult> {
    let m = alm.oracles.len();
    let n = alm.oracles[0].dim();
    if x0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x0.len(),
        });
    }
    let mut start = Vec::with_capacity(m * n);
    for b in &x0 {
        crate::error::check_dim(n, b.len())?;
        start.extend_from_slice(b);
    }
    let penalty = Penalty {
        m,
        n,
        lambda: AtomicU64::new(alm.lambda.to_bits()),
        outer: alm.outer.clone(),
    };
    let blocks = BlockProblem::new(
        alm.oracles.clone(),
        UpdateOrder::Full,
        BlockStep::BlendedPairwise,
    )?;
    let mut last_infeasibility = penalty.infeasibility(&start);
    let doubling = alm.outer.is_some();
    let run = block_coordinate_fw_with(&penalty, &blocks, start, cfg, &mut |t, x| {
        if doubling && t % ALM_DOUBLING_INTERVAL == 0 {
            let inf = penalty.infeasibility(x);
            if inf > 0.99 * last_infeasibility {
                let l = penalty.lambda();
                penalty.lambda.store((2.0 * l).to_bits(), Ordering::Relaxed);
            }
            last_infeasibility = inf;
        }
    })?;
    let blocks: Vec<Vec<f64>> = run.x.chunks(n).map(<[f64]>::to_vec).collect();
    Ok(AlmResult {
        average: penalty.average(&run.x),
        infeasibility: penalty.infeasibility(&run.x),
        lambda: penalty.lambda(),
        blocks,
        run,
    })
}
