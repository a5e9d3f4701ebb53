//! Linear minimization oracles.
//!
//! Every oracle returns an [`Atom`], an extreme point of its feasible region
//! minimizing `⟨direction, ·⟩`. Ties are always broken towards the smallest
//! index so that runs are reproducible. Polytopes whose faces can be described
//! by pinning coordinates to their bounds also implement [`InFaceOracle`],
//! which the decomposition-invariant solvers require.

mod atom;
mod birkhoff;
mod boxes;
mod cache;
mod hypersimplex;
mod ksparse;
mod product;
mod simplex;
mod spectral;
mod subspace;

use std::sync::Arc;

pub use atom::Atom;
pub use birkhoff::{min_cost_assignment, BirkhoffOracle};
pub use boxes::BoxOracle;
pub use cache::{LazyOutcome, VertexCache, DEFAULT_CACHE_CAPACITY, DEFAULT_LAZY_TOLERANCE};
pub use hypersimplex::HypersimplexOracle;
pub use ksparse::KSparseOracle;
pub use product::ProductOracle;
pub use simplex::SimplexOracle;
pub use spectral::{
    leading_eigenpair, NuclearBallOracle, SpectraplexOracle, EIGEN_MAX_ITERATIONS, EIGEN_TOLERANCE,
};
pub use subspace::SubspaceOracle;

use crate::error::{Error, Result};

/// Coordinates within this distance of a bound are treated as lying on it.
pub const FACE_PIN_TOLERANCE: f64 = 1e-10;

pub trait LinearOracle: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// `argmin_{v ∈ X} ⟨direction, v⟩` over the extreme points of `X`.
    fn extreme_point(&self, direction: &[f64]) -> Result<Atom>;

    /// Membership test for the feasible region.
    fn contains(&self, x: &[f64], tol: f64) -> bool;

    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        None
    }
}

impl<T: LinearOracle + ?Sized> LinearOracle for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn extreme_point(&self, direction: &[f64]) -> Result<Atom> {
        (**self).extreme_point(direction)
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        (**self).contains(x, tol)
    }
    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        (**self).in_face()
    }
}

impl<T: LinearOracle + ?Sized> LinearOracle for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn extreme_point(&self, direction: &[f64]) -> Result<Atom> {
        (**self).extreme_point(direction)
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        (**self).contains(x, tol)
    }
    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        (**self).in_face()
    }
}

/// Coordinates pinned by the minimal face containing an iterate.
///
/// For 0/1 polytopes `fixed_zero`/`fixed_one` are the coordinates at 0 and at
/// the upper value; for boxes they are the coordinates at the lower and upper
/// bound.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaceFixings {
    pub fixed_zero: Vec<usize>,
    pub fixed_one: Vec<usize>,
}

impl FaceFixings {
    pub fn is_empty(&self) -> bool {
        self.fixed_zero.is_empty() && self.fixed_one.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut zero = self.fixed_zero.clone();
        zero.sort_unstable();
        if self.fixed_one.iter().any(|i| zero.binary_search(i).is_ok()) {
            return Err(Error::contract("coordinate fixed to both bounds"));
        }
        Ok(())
    }
}

/// Oracles over polytopes `{x : lower ≤ x ≤ upper, Ex = e}` whose faces are
/// obtained by pinning coordinates to their bounds.
pub trait InFaceOracle: Send + Sync {
    /// Bounds `(lower, upper)` of coordinate `i`.
    fn bounds(&self, i: usize) -> (f64, f64);

    /// Extreme point of the face described by `fixings` minimizing
    /// (or, with `maximize`, maximizing) `⟨direction, ·⟩`.
    fn face_extreme_point(
        &self,
        direction: &[f64],
        fixings: &FaceFixings,
        maximize: bool,
    ) -> Result<Atom>;

    fn face_fixings(&self, x: &[f64]) -> FaceFixings {
        let mut fix = FaceFixings::default();
        for (i, &xi) in x.iter().enumerate() {
            let (lo, up) = self.bounds(i);
            if (xi - lo).abs() <= FACE_PIN_TOLERANCE {
                fix.fixed_zero.push(i);
            } else if (up - xi).abs() <= FACE_PIN_TOLERANCE {
                fix.fixed_one.push(i);
            }
        }
        fix
    }

    /// Largest `γ ≥ 0` keeping `x − γd` inside the coordinate bounds.
    fn max_step(&self, x: &[f64], d: &[f64]) -> f64 {
        let mut gmax = f64::INFINITY;
        for (i, (&xi, &di)) in x.iter().zip(d).enumerate() {
            let (lo, up) = self.bounds(i);
            let limit = if di > 0.0 {
                (xi - lo) / di
            } else if di < 0.0 {
                (up - xi) / -di
            } else {
                continue;
            };
            gmax = gmax.min(limit.max(0.0));
        }
        gmax
    }

    /// Moves coordinates that crossed a bound through rounding back onto it.
    fn snap_to_bounds(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            let (lo, up) = self.bounds(i);
            if *xi < lo {
                *xi = lo;
            } else if *xi > up {
                *xi = up;
            }
        }
    }
}

/// In-face FW vertex `s` and in-face away vertex `a` at the feasible point `x`.
pub fn inface_extreme_point(
    lmo: &dyn LinearOracle,
    direction: &[f64],
    x: &[f64],
) -> Result<(Atom, Atom)> {
    let inface = lmo
        .in_face()
        .ok_or_else(|| Error::UnsupportedOracle(lmo.name().to_string()))?;
    crate::error::check_dim(lmo.dim(), direction.len())?;
    crate::error::check_dim(lmo.dim(), x.len())?;
    let fix = inface.face_fixings(x);
    let s = inface.face_extreme_point(direction, &fix, false)?;
    let a = inface.face_extreme_point(direction, &fix, true)?;
    Ok((s, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inface_on_simplex_vertex_is_that_vertex() {
        let lmo = SimplexOracle::new(3, 1.0);
        let (s, a) = inface_extreme_point(&lmo, &[5.0, -1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.to_dense(), vec![1.0, 0.0, 0.0]);
        assert_eq!(a.to_dense(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn inface_on_simplex_edge() {
        let lmo = SimplexOracle::new(3, 1.0);
        let (s, a) = inface_extreme_point(&lmo, &[1.0, -1.0, -5.0], &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(s.to_dense(), vec![0.0, 1.0, 0.0]);
        assert_eq!(a.to_dense(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn inface_on_box_face() {
        let lmo = BoxOracle::uniform(2, 0.0, 1.0);
        let (s, a) = inface_extreme_point(&lmo, &[0.0, 1.0], &[1.0, 0.5]).unwrap();
        assert_eq!(s.to_dense(), vec![1.0, 0.0]);
        assert_eq!(a.to_dense(), vec![1.0, 1.0]);
    }

    #[test]
    fn inface_unsupported() {
        let lmo = KSparseOracle::new(4, 2, 1.0);
        let err = inface_extreme_point(&lmo, &[1.0; 4], &[0.0; 4]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedOracle(_)));
    }

    #[test]
    fn inconsistent_fixings_rejected() {
        let fix = FaceFixings {
            fixed_zero: vec![1, 2],
            fixed_one: vec![2],
        };
        assert!(fix.validate().is_err());
    }

    #[test]
    fn ratio_test_respects_bounds() {
        let lmo = SimplexOracle::new(3, 1.0);
        let x = [0.2, 0.5, 0.3];
        // moving away from e1 towards e3
        let d = [1.0, 0.0, -1.0];
        let inface = lmo.in_face().unwrap();
        assert!((inface.max_step(&x, &d) - 0.2).abs() < 1e-15);
    }
}
