//! Objective functions: value, in-place gradient and an optional domain oracle.

use std::sync::Arc;

use crate::linalg::{axpy, dot};

/// A differentiable objective over dense `f64` vectors.
///
/// Algorithms call [`Objective::in_domain`] before evaluating the value or
/// gradient at any trial point that is not already known to lie in the domain.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `grad`.
    fn gradient_into(&self, x: &[f64], grad: &mut [f64]);

    /// Domain membership. Objectives defined everywhere keep the default.
    fn in_domain(&self, _x: &[f64]) -> bool {
        true
    }

    /// Whether [`Objective::in_domain`] is a real check.
    fn has_domain_check(&self) -> bool {
        false
    }

    /// Exposes `½xᵀAx + bᵀx + c` structure when the objective has it.
    fn quadratic(&self) -> Option<&dyn Quadratic> {
        None
    }
}

/// Access to the Hessian action and linear term of a quadratic objective.
pub trait Quadratic: Send + Sync {
    fn dim(&self) -> usize;
    /// `out = A x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
    fn linear(&self) -> &[f64];
    fn constant(&self) -> f64 {
        0.0
    }
}

impl<T: Objective + ?Sized> Objective for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient_into(x, grad)
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        (**self).in_domain(x)
    }
    fn has_domain_check(&self) -> bool {
        (**self).has_domain_check()
    }
    fn quadratic(&self) -> Option<&dyn Quadratic> {
        (**self).quadratic()
    }
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// `f(x) = ½xᵀAx + bᵀx + c` with `A` given as a symmetric PSD operator.
pub struct QuadraticObjective {
    dim: usize,
    apply: Box<ApplyFn>,
    b: Vec<f64>,
    c: f64,
}

impl QuadraticObjective {
    pub fn new(
        b: Vec<f64>,
        c: f64,
        apply: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim: b.len(),
            apply: Box::new(apply),
            b,
            c,
        }
    }

    /// `A = diag(a)`.
    pub fn diagonal(a: Vec<f64>, b: Vec<f64>, c: f64) -> Self {
        assert_eq!(a.len(), b.len());
        Self::new(b, c, move |x, out| {
            for ((o, ai), xi) in out.iter_mut().zip(&a).zip(x) {
                *o = ai * xi;
            }
        })
    }

    /// `f(x) = (s/2)‖x − y‖²`.
    pub fn scaled_distance(s: f64, y: &[f64]) -> Self {
        let b = y.iter().map(|v| -s * v).collect();
        let c = 0.5 * s * dot(y, y);
        Self::diagonal(vec![s; y.len()], b, c)
    }

    /// Dense row-major symmetric `A`.
    pub fn dense(a: Vec<f64>, b: Vec<f64>, c: f64) -> Self {
        let n = b.len();
        assert_eq!(a.len(), n * n);
        Self::new(b, c, move |x, out| crate::linalg::matvec(&a, n, n, x, out))
    }
}

impl Quadratic for QuadraticObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.apply)(x, out)
    }
    fn linear(&self) -> &[f64] {
        &self.b
    }
    fn constant(&self) -> f64 {
        self.c
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim];
        (self.apply)(x, &mut ax);
        0.5 * dot(x, &ax) + dot(&self.b, x) + self.c
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        (self.apply)(x, grad);
        axpy(1.0, &self.b, grad);
    }

    fn quadratic(&self) -> Option<&dyn Quadratic> {
        Some(self)
    }
}

/// Objective assembled from closures; handy in tests and examples.
pub struct FnObjective<F, G> {
    dim: usize,
    value: F,
    gradient: G,
    domain: Option<Box<dyn Fn(&[f64]) -> bool + Send + Sync>>,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient,
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Box::new(domain));
        self
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        (self.gradient)(x, grad)
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        self.domain.as_ref().is_none_or(|d| d(x))
    }
    fn has_domain_check(&self) -> bool {
        self.domain.is_some()
    }
}

/// Largest relative deviation between `gradient_into` and central differences.
pub fn finite_difference_error(obj: &dyn Objective, x: &[f64], h: f64) -> f64 {
    let n = x.len();
    let mut grad = vec![0.0; n];
    obj.gradient_into(x, &mut grad);
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    let scale = grad.iter().fold(1.0_f64, |m, g| m.max(g.abs()));
    for i in 0..n {
        probe[i] = x[i] + h;
        let up = obj.value(&probe);
        probe[i] = x[i] - h;
        let down = obj.value(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_affine() {
        let q = QuadraticObjective::dense(vec![2.0, 1.0, 1.0, 3.0], vec![1.0, -1.0], 0.5);
        let x = [0.3, -0.7];
        let mut g = [0.0; 2];
        q.gradient_into(&x, &mut g);
        assert_eq!(g, [2.0 * 0.3 - 0.7 + 1.0, 0.3 - 2.1 - 1.0]);
        assert!(finite_difference_error(&q, &x, 1e-5) < 1e-8);
    }

    #[test]
    fn scaled_distance_vanishes_at_target() {
        let y = [0.2, 0.5, 0.3];
        let q = QuadraticObjective::scaled_distance(2.0, &y);
        assert!(q.value(&y).abs() < 1e-15);
        assert!((q.value(&[0.0, 0.0, 0.0]) - dot(&y, &y)).abs() < 1e-15);
    }
}
