//! One solver run on one problem instance.

use std::time::{Duration, Instant};

use condgrad::algorithms::{solve, SolverConfig, Variant};
use condgrad::problems::{ProblemInstance, ProblemSpec};
use condgrad::stepsize::StepRule;
use condgrad::Error;

use crate::alloc;
use crate::trajectory::{Row, RunMeta, Trajectory};
use crate::{BenchError, Result};

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub variant: Variant,
    pub step: StepRule,
    pub epsilon: f64,
    pub max_time: Duration,
    pub max_iterations: usize,
    pub kappa: f64,
}

impl RunSpec {
    pub fn new(problem: ProblemSpec, variant: Variant) -> Self {
        Self {
            problem,
            variant,
            step: StepRule::default(),
            epsilon: 1e-7,
            max_time: Duration::from_secs(60),
            max_iterations: usize::MAX,
            kappa: 2.0,
        }
    }

    /// Builds the instance and checks that variant and step rule fit it.
    pub fn prepare(&self) -> Result<ProblemInstance> {
        let inst = self
            .problem
            .build()
            .map_err(|e| BenchError::usage(e.to_string()))?;
        if !self
            .variant
            .applicable(inst.objective.as_ref(), inst.lmo.as_ref())
        {
            return Err(BenchError::usage(format!(
                "variant `{}` does not apply to `{}` (oracle `{}`)",
                self.variant,
                inst.id(),
                inst.lmo.name()
            )));
        }
        if matches!(self.step, StepRule::Exact) && !inst.is_quadratic() {
            return Err(BenchError::usage(format!(
                "step `exact` needs a quadratic objective; `{}` is not",
                inst.id()
            )));
        }
        self.config()
            .validate()
            .map_err(|e| BenchError::usage(e.to_string()))?;
        Ok(inst)
    }

    fn config(&self) -> SolverConfig<'static> {
        SolverConfig::default()
            .with_step(self.step)
            .with_epsilon(self.epsilon)
            .with_max_iterations(self.max_iterations)
            .with_max_time(self.max_time)
            .with_kappa(self.kappa)
    }

    /// Runs to completion. A numerical failure still yields a trajectory,
    /// holding the partial log and a `numerical-stall` termination.
    pub fn execute(&self, inst: &ProblemInstance) -> Result<Trajectory> {
        let baseline = alloc::start_window();
        let clock = Instant::now();
        let outcome = solve(
            self.variant,
            inst.objective.as_ref(),
            inst.lmo.as_ref(),
            inst.start.clone(),
            self.config(),
        );
        let time = clock.elapsed().as_secs_f64();
        let alloc_bytes = alloc::peak_since(baseline);
        let mut meta = RunMeta {
            id: inst.id(),
            problem: self.problem.kind.name().to_string(),
            dimension: self.problem.dimension_label(),
            variant: self.variant.tag().to_string(),
            step: self.step.to_string(),
            epsilon: self.epsilon,
            max_time: self.max_time.as_secs_f64(),
            seed: self.problem.seed(),
            termination: String::new(),
            time,
            iterations: 0,
            primal: f64::NAN,
            dual_gap: f64::NAN,
            lmo_calls: 0,
            alloc_bytes,
            error: None,
        };
        match outcome {
            Ok(res) => {
                meta.termination = res.termination.tag().to_string();
                meta.iterations = res.iterations;
                meta.primal = res.primal;
                meta.dual_gap = res.dual_gap;
                meta.lmo_calls = res.lmo_calls;
                Ok(Trajectory {
                    meta,
                    rows: res.trajectory.iter().map(Row::from).collect(),
                })
            }
            Err(Error::Numerical {
                iteration,
                message,
                partial,
            }) => {
                meta.termination = "numerical-stall".to_string();
                meta.iterations = iteration;
                if let Some(last) = partial.last() {
                    meta.primal = last.primal;
                    meta.dual_gap = last.dual_gap;
                    meta.lmo_calls = last.lmo_calls;
                }
                meta.error = Some(format!("iteration {iteration}: {message}"));
                Ok(Trajectory {
                    meta,
                    rows: partial.iter().map(Row::from).collect(),
                })
            }
            Err(e) => Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inapplicable_variant_is_a_usage_error() {
        let spec: ProblemSpec = "nuclear:n=4,k=1,missing=0.5,seed=0".parse().unwrap();
        let err = RunSpec::new(spec, Variant::Dicg).prepare().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn exact_step_needs_a_quadratic() {
        let spec: ProblemSpec = "d_criterion:m=10,n=3,seed=0".parse().unwrap();
        let mut run = RunSpec::new(spec, Variant::Fw);
        run.step = StepRule::Exact;
        assert_eq!(run.prepare().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn small_run_records_outcome() {
        let spec: ProblemSpec = "simplex_ls:m=10,n=20,seed=1".parse().unwrap();
        let run = RunSpec::new(spec, Variant::Bpcg);
        let inst = run.prepare().unwrap();
        let traj = run.execute(&inst).unwrap();
        assert!(traj.meta.solved(), "{:?}", traj.meta);
        assert_eq!(traj.meta.dimension, "m=10,n=20");
        assert_eq!(traj.rows.first().unwrap().step_type, "initial");
    }
}
