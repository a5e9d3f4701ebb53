//! Optimal experiment design over the probability simplex.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{stream, ProblemInstance, ProblemKind, ProblemSpec};
use crate::activeset::ActiveSet;
use crate::error::{Error, Result};
use crate::lmo::{LinearOracle, SimplexOracle};
use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `tr M(x)⁻¹`
    A,
    /// `−log det M(x)`
    D,
}

/// Design criterion of `M(x) = Aᵀ diag(x) A` for an `m × n` matrix `A`.
/// Outside the positive definite region the value is `+∞`.
#[derive(Debug, Clone)]
pub struct DesignObjective {
    criterion: Criterion,
    a: DMatrix<f64>,
}

impl DesignObjective {
    /// `a` is row-major `m × n` with `m > n`.
    pub fn new(criterion: Criterion, a: &[f64], m: usize, n: usize) -> Result<Self> {
        if a.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                found: a.len(),
            });
        }
        if m <= n || n == 0 {
            return Err(Error::contract("design needs m > n ≥ 1"));
        }
        Ok(Self {
            criterion,
            a: DMatrix::from_row_slice(m, n, a),
        })
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    fn information(&self, x: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.a.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= x[i];
        }
        self.a.transpose() * scaled
    }

    fn factor(&self, x: &[f64]) -> Option<Cholesky<f64, Dyn>> {
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        self.information(x).cholesky()
    }
}

impl Objective for DesignObjective {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Some(ch) = self.factor(x) else {
            return f64::INFINITY;
        };
        match self.criterion {
            Criterion::A => ch.inverse().trace(),
            Criterion::D => -2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        }
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        let Some(ch) = self.factor(x) else {
            grad.fill(f64::NAN);
            return;
        };
        for (i, g) in grad.iter_mut().enumerate() {
            let row: DVector<f64> = self.a.row(i).transpose();
            let solved = ch.solve(&row);
            *g = match self.criterion {
                Criterion::A => -solved.norm_squared(),
                Criterion::D => -row.dot(&solved),
            };
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.factor(x).is_some()
    }

    fn has_domain_check(&self) -> bool {
        true
    }
}

fn design(
    criterion: Criterion,
    a: &[f64],
    m: usize,
    n: usize,
    seed: u64,
) -> Result<ProblemInstance> {
    let obj = DesignObjective::new(criterion, a, m, n)?;
    let lmo = SimplexOracle::new(m, 1.0);
    // Uniform weights over every experiment keep M(x) positive definite.
    let mut atoms = Vec::with_capacity(m);
    for i in 0..m {
        let mut dir = vec![0.0; m];
        dir[i] = -1.0;
        atoms.push(lmo.extreme_point(&dir)?);
    }
    let start = ActiveSet::from_weighted(atoms, vec![1.0 / m as f64; m])?;
    if !obj.in_domain(start.x()) {
        return Err(Error::Domain(
            "information matrix is singular at the uniform design".into(),
        ));
    }
    let kind = match criterion {
        Criterion::A => ProblemKind::ACriterion,
        Criterion::D => ProblemKind::DCriterion,
    };
    let spec = ProblemSpec::new(kind)
        .with_seed(seed)
        .set("m", m)?
        .set("n", n)?;
    Ok(ProblemInstance {
        spec,
        objective: Arc::new(obj),
        lmo: Arc::new(lmo),
        start,
    })
}

fn gaussian(m: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 1);
    (0..m * n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A-criterion with a Gaussian `m × n` experiment matrix.
pub fn gen_a_criterion(m: usize, n: usize, seed: u64) -> Result<ProblemInstance> {
    if m <= n || n == 0 {
        return Err(Error::contract("design needs m > n ≥ 1"));
    }
    design(Criterion::A, &gaussian(m, n, seed), m, n, seed)
}

/// D-criterion with a Gaussian `m × n` experiment matrix.
pub fn gen_d_criterion(m: usize, n: usize, seed: u64) -> Result<ProblemInstance> {
    if m <= n || n == 0 {
        return Err(Error::contract("design needs m > n ≥ 1"));
    }
    design(Criterion::D, &gaussian(m, n, seed), m, n, seed)
}

/// A-criterion for an explicit row-major `m × n` matrix.
pub fn a_criterion_from(a: &[f64], m: usize, n: usize) -> Result<ProblemInstance> {
    design(Criterion::A, a, m, n, 0)
}

/// D-criterion for an explicit row-major `m × n` matrix.
pub fn d_criterion_from(a: &[f64], m: usize, n: usize) -> Result<ProblemInstance> {
    design(Criterion::D, a, m, n, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::finite_difference_error;

    #[test]
    fn gradients_at_uniform_design() {
        for inst in [
            gen_a_criterion(10, 3, 1).unwrap(),
            gen_d_criterion(10, 3, 1).unwrap(),
        ] {
            let err = finite_difference_error(inst.objective.as_ref(), &inst.x0(), 1e-6);
            assert!(err <= 1e-5, "{err}");
        }
    }

    #[test]
    fn identity_information_gives_trace_n() {
        // Columns of A orthonormal up to √m, so M(uniform) = I.
        let (m, n) = (4, 2);
        let s = 2.0f64.sqrt();
        let a = [s, 0.0, 0.0, s, s, 0.0, 0.0, s];
        let inst = a_criterion_from(&a, m, n).unwrap();
        assert!((inst.objective.value(&inst.x0()) - n as f64).abs() < 1e-12);
        let inst = d_criterion_from(&a, m, n).unwrap();
        assert!(inst.objective.value(&inst.x0()).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_design_is_outside_the_domain() {
        let inst = gen_a_criterion(6, 3, 2).unwrap();
        let x = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(!inst.objective.in_domain(&x));
        assert_eq!(inst.objective.value(&x), f64::INFINITY);
        assert!(inst.objective.has_domain_check());
        assert!(gen_d_criterion(3, 3, 0).is_err());
    }

    #[test]
    fn d_criterion_matches_log_determinant() {
        let inst = gen_d_criterion(8, 3, 4).unwrap();
        let x = inst.x0();
        let d = DesignObjective::new(Criterion::D, &gaussian(8, 3, 4), 8, 3).unwrap();
        let det = d.information(&x).determinant();
        assert!((inst.objective.value(&x) + det.ln()).abs() < 1e-10);
    }
}
