//! Solvers.
//!
//! All loops use the update `x⁺ = x − γd`. Point-based solvers (`frank_wolfe`,
//! `lazy_frank_wolfe`, `dicg`, `bdicg`) take a feasible starting point;
//! active-set solvers take an [`ActiveSet`], typically a single vertex.

mod alm;
mod bcfw;
mod dicg;
mod driver;
mod fw;
mod pairwise;

use std::fmt;
use std::str::FromStr;

pub use alm::{alternating_linear_minimization, AlmProblem, AlmResult, ALM_DOUBLING_INTERVAL};
pub use bcfw::{block_coordinate_fw, BlockProblem, BlockStep, UpdateOrder};
pub use dicg::{bdicg, dicg};
pub use fw::{frank_wolfe, lazy_frank_wolfe};
pub use pairwise::{away_frank_wolfe, blended_pairwise_cg, pairwise_cg};

use crate::activeset::{ActiveSet, CorrectionConfig};
use crate::error::{Error, Result};
use crate::lmo::{LinearOracle, DEFAULT_CACHE_CAPACITY, DEFAULT_LAZY_TOLERANCE};
use crate::objective::Objective;
use crate::state::{Callback, LogStride, RunResult, StopCriteria};
use crate::stepsize::StepRule;

pub struct SolverConfig<'c> {
    pub step: StepRule,
    pub stop: StopCriteria,
    /// Blending factor of BPCG/BDICG, at least 1.
    pub kappa: f64,
    pub lazy: bool,
    pub lazy_tolerance: f64,
    pub cache_capacity: usize,
    pub log_stride: LogStride,
    pub callback: Option<Callback<'c>>,
    /// BPCG only: keep `⟨v_i, Av_j⟩` products for quadratic objectives.
    pub quadratic_cache: bool,
    /// BPCG only: periodic affine-hull correction; implies `quadratic_cache`.
    pub correction: Option<CorrectionConfig>,
}

impl Default for SolverConfig<'_> {
    fn default() -> Self {
        Self {
            step: StepRule::default(),
            stop: StopCriteria::default(),
            kappa: 2.0,
            lazy: false,
            lazy_tolerance: DEFAULT_LAZY_TOLERANCE,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            log_stride: LogStride::default(),
            callback: None,
            quadratic_cache: false,
            correction: None,
        }
    }
}

impl fmt::Debug for SolverConfig<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("step", &self.step)
            .field("stop", &self.stop)
            .field("kappa", &self.kappa)
            .field("lazy", &self.lazy)
            .field("lazy_tolerance", &self.lazy_tolerance)
            .field("cache_capacity", &self.cache_capacity)
            .field("log_stride", &self.log_stride)
            .field("callback", &self.callback.is_some())
            .field("quadratic_cache", &self.quadratic_cache)
            .field("correction", &self.correction)
            .finish()
    }
}

impl<'c> SolverConfig<'c> {
    pub fn with_step(mut self, step: StepRule) -> Self {
        self.step = step;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.stop.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.stop.max_iterations = n;
        self
    }

    pub fn with_max_time(mut self, d: std::time::Duration) -> Self {
        self.stop.max_time = d;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_lazy(mut self, lazy: bool) -> Self {
        self.lazy = lazy;
        self
    }

    pub fn with_cache_capacity(mut self, cap: usize) -> Self {
        self.cache_capacity = cap;
        self
    }

    pub fn with_log_stride(mut self, stride: LogStride) -> Self {
        self.log_stride = stride;
        self
    }

    pub fn with_callback(mut self, cb: Callback<'c>) -> Self {
        self.callback = Some(cb);
        self
    }

    pub fn with_quadratic_cache(mut self, on: bool) -> Self {
        self.quadratic_cache = on;
        self
    }

    pub fn with_correction(mut self, c: CorrectionConfig) -> Self {
        self.correction = Some(c);
        self.quadratic_cache = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.stop.validate()?;
        if !(self.kappa >= 1.0) {
            return Err(Error::contract("kappa must be at least 1"));
        }
        if !(self.lazy_tolerance >= 1.0) {
            return Err(Error::contract("lazy tolerance must be at least 1"));
        }
        if let Some(c) = &self.correction {
            c.validate()?;
        }
        Ok(())
    }
}

/// Solver selector used by the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Fw,
    LazyFw,
    Afw,
    LazyAfw,
    Pcg,
    LazyPcg,
    Bpcg,
    LazyBpcg,
    /// BPCG with the quadratic product cache and periodic correction.
    BpcgQuad,
    Dicg,
    Bdicg,
}

impl Variant {
    pub const ALL: [Variant; 11] = [
        Variant::Fw,
        Variant::LazyFw,
        Variant::Afw,
        Variant::LazyAfw,
        Variant::Pcg,
        Variant::LazyPcg,
        Variant::Bpcg,
        Variant::LazyBpcg,
        Variant::BpcgQuad,
        Variant::Dicg,
        Variant::Bdicg,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::Fw => "fw",
            Variant::LazyFw => "lazy-fw",
            Variant::Afw => "afw",
            Variant::LazyAfw => "lazy-afw",
            Variant::Pcg => "pcg",
            Variant::LazyPcg => "lazy-pcg",
            Variant::Bpcg => "bpcg",
            Variant::LazyBpcg => "lazy-bpcg",
            Variant::BpcgQuad => "bpcg-quad",
            Variant::Dicg => "dicg",
            Variant::Bdicg => "bdicg",
        }
    }

    /// Lazy counterpart, if the variant has one.
    pub fn lazified(self) -> Option<Variant> {
        match self {
            Variant::Fw | Variant::LazyFw => Some(Variant::LazyFw),
            Variant::Afw | Variant::LazyAfw => Some(Variant::LazyAfw),
            Variant::Pcg | Variant::LazyPcg => Some(Variant::LazyPcg),
            Variant::Bpcg | Variant::LazyBpcg => Some(Variant::LazyBpcg),
            _ => None,
        }
    }

    pub fn is_lazy(self) -> bool {
        matches!(
            self,
            Variant::LazyFw | Variant::LazyAfw | Variant::LazyPcg | Variant::LazyBpcg
        )
    }

    pub fn needs_in_face(self) -> bool {
        matches!(self, Variant::Dicg | Variant::Bdicg)
    }

    pub fn needs_quadratic(self) -> bool {
        matches!(self, Variant::BpcgQuad)
    }

    pub fn uses_active_set(self) -> bool {
        !matches!(
            self,
            Variant::Fw | Variant::LazyFw | Variant::Dicg | Variant::Bdicg
        )
    }

    /// Whether the variant can run on this objective/oracle pair.
    pub fn applicable(self, obj: &dyn Objective, lmo: &dyn LinearOracle) -> bool {
        (!self.needs_in_face() || lmo.in_face().is_some())
            && (!self.needs_quadratic() || obj.quadratic().is_some())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::contract(format!("unknown variant `{s}`")))
    }
}

/// Runs `variant` from the decomposition `start`. Point-based variants start
/// from `start.x()`.
pub fn solve(
    variant: Variant,
    obj: &dyn Objective,
    lmo: &dyn LinearOracle,
    start: ActiveSet,
    mut cfg: SolverConfig<'_>,
) -> Result<RunResult> {
    if variant.needs_in_face() && lmo.in_face().is_none() {
        return Err(Error::UnsupportedOracle(lmo.name().to_string()));
    }
    if variant.needs_quadratic() && obj.quadratic().is_none() {
        return Err(Error::contract(format!(
            "variant `{variant}` needs a quadratic objective"
        )));
    }
    cfg.lazy = cfg.lazy || variant.is_lazy();
    match variant {
        Variant::Fw | Variant::LazyFw => {
            let x0 = start.x().to_vec();
            if cfg.lazy {
                lazy_frank_wolfe(obj, lmo, x0, cfg)
            } else {
                frank_wolfe(obj, lmo, x0, cfg)
            }
        }
        Variant::Afw | Variant::LazyAfw => away_frank_wolfe(obj, lmo, start, cfg),
        Variant::Pcg | Variant::LazyPcg => pairwise_cg(obj, lmo, start, cfg),
        Variant::Bpcg | Variant::LazyBpcg => blended_pairwise_cg(obj, lmo, start, cfg),
        Variant::BpcgQuad => {
            let cfg = cfg.with_correction(CorrectionConfig::default());
            blended_pairwise_cg(obj, lmo, start, cfg)
        }
        Variant::Dicg => dicg(obj, lmo, start.x().to_vec(), cfg),
        Variant::Bdicg => bdicg(obj, lmo, start.x().to_vec(), cfg),
    }
}
