//! Regularized Poisson regression over a box.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{stream, ProblemInstance, ProblemKind, ProblemSpec};
use crate::activeset::ActiveSet;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::lmo::{BoxOracle, LinearOracle};
use crate::objective::Objective;

/// Linear predictors are clipped here before exponentiation.
pub const EXP_CLIP: f64 = 500.0;

/// `Σ_i exp(wᵀxᵢ + b) − yᵢ(wᵀxᵢ + b) + α‖w‖²` over `(w, b)`, stored as
/// `[w..., b]`.
#[derive(Debug)]
pub struct PoissonObjective {
    design: Vec<f64>,
    counts: Vec<f64>,
    features: usize,
    alpha: f64,
    clipped: AtomicBool,
}

impl PoissonObjective {
    /// `design` is row-major `samples × features`.
    pub fn new(design: Vec<f64>, counts: Vec<f64>, alpha: f64) -> Result<Self> {
        let s = counts.len();
        if s == 0 || design.len() % s != 0 || design.is_empty() {
            return Err(Error::contract(
                "design must have one nonempty row per count",
            ));
        }
        if !(alpha >= 0.0) {
            return Err(Error::contract("alpha must be nonnegative"));
        }
        Ok(Self {
            features: design.len() / s,
            design,
            counts,
            alpha,
            clipped: AtomicBool::new(false),
        })
    }

    /// Whether some predictor has exceeded [`EXP_CLIP`].
    pub fn clipped(&self) -> bool {
        self.clipped.load(Ordering::Relaxed)
    }

    fn predictor(&self, x: &[f64], i: usize) -> f64 {
        let p = self.features;
        let eta = dot(&self.design[i * p..(i + 1) * p], &x[..p]) + x[p];
        if eta > EXP_CLIP {
            self.clipped.store(true, Ordering::Relaxed);
            EXP_CLIP
        } else {
            eta
        }
    }
}

impl Objective for PoissonObjective {
    fn dim(&self) -> usize {
        self.features + 1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.features;
        let fit: f64 = (0..self.counts.len())
            .map(|i| {
                let eta = self.predictor(x, i);
                eta.exp() - self.counts[i] * eta
            })
            .sum();
        fit + self.alpha * dot(&x[..p], &x[..p])
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        let p = self.features;
        grad.fill(0.0);
        for i in 0..self.counts.len() {
            let r = self.predictor(x, i).exp() - self.counts[i];
            for (g, a) in grad[..p].iter_mut().zip(&self.design[i * p..(i + 1) * p]) {
                *g += r * a;
            }
            grad[p] += r;
        }
        for (g, w) in grad[..p].iter_mut().zip(&x[..p]) {
            *g += 2.0 * self.alpha * w;
        }
    }
}

/// Seeded instance: Gaussian design scaled by `1/√p`, ground truth
/// `w* ~ N(0, I)`, `b* ~ N(0, 1/4)`, counts `yᵢ ~ Poisson(exp(w*ᵀxᵢ + b*))`.
pub fn gen_poisson(
    samples: usize,
    features: usize,
    alpha: f64,
    bound: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if samples == 0 || features == 0 {
        return Err(Error::contract(
            "poisson needs at least one sample and feature",
        ));
    }
    let scale = 1.0 / (features as f64).sqrt();
    let mut rng = stream(seed, 1);
    let design: Vec<f64> = (0..samples * features)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut rng = stream(seed, 2);
    let w: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
    let b: f64 = 0.5 * rng.sample::<f64, _>(StandardNormal);
    let mut rng = stream(seed, 3);
    let mut counts = Vec::with_capacity(samples);
    for i in 0..samples {
        let rate = (dot(&design[i * features..(i + 1) * features], &w) + b).exp();
        let y = Poisson::new(rate)
            .map_err(|e| Error::contract(format!("poisson rate {rate}: {e}")))?
            .sample(&mut rng);
        counts.push(y);
    }
    let mut inst = poisson_from(design, counts, alpha, bound)?;
    inst.spec = inst.spec.with_seed(seed).set("n_samples", samples)?;
    Ok(inst)
}

/// Instance from explicit data, starting at the origin as the midpoint of
/// two opposite box corners.
pub fn poisson_from(
    design: Vec<f64>,
    counts: Vec<f64>,
    alpha: f64,
    bound: f64,
) -> Result<ProblemInstance> {
    if !(bound > 0.0) {
        return Err(Error::contract("box bound must be positive"));
    }
    let obj = PoissonObjective::new(design, counts, alpha)?;
    let n = obj.dim();
    let lmo = BoxOracle::uniform(n, -bound, bound);
    let up = lmo.extreme_point(&vec![-1.0; n])?;
    let down = lmo.extreme_point(&vec![1.0; n])?;
    let start = ActiveSet::from_weighted(vec![up, down], vec![0.5, 0.5])?;
    let spec = ProblemSpec::new(ProblemKind::Poisson)
        .set("n_features", obj.features)?
        .set("alpha", alpha)?
        .set("bound", bound)?;
    Ok(ProblemInstance {
        spec,
        objective: Arc::new(obj),
        lmo: Arc::new(lmo),
        start,
    })
}
