use std::collections::VecDeque;

use super::{Atom, LinearOracle};
use crate::error::{check_dim, Error, Result};

pub const DEFAULT_CACHE_CAPACITY: usize = 5_000;
pub const DEFAULT_LAZY_TOLERANCE: f64 = 2.0;

/// Result of a lazified oracle query.
#[derive(Debug, Clone)]
pub struct LazyOutcome {
    pub atom: Atom,
    /// `true` when the vertex came from the cache without an exact oracle call.
    pub hit: bool,
    /// Updated gap estimate.
    pub phi: f64,
}

/// Bounded list of previously returned vertices; the oldest is evicted first.
#[derive(Debug, Clone)]
pub struct VertexCache {
    atoms: VecDeque<Atom>,
    capacity: usize,
}

impl Default for VertexCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY)
    }
}

impl VertexCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            atoms: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    /// Appends `atom` unless an identical one is stored.
    pub fn insert(&mut self, atom: Atom) {
        if self.atoms.contains(&atom) {
            return;
        }
        if self.atoms.len() == self.capacity {
            self.atoms.pop_front();
        }
        self.atoms.push_back(atom);
    }

    /// Cached vertex minimizing `⟨g, ·⟩` and its value; first stored wins ties.
    pub fn best(&self, g: &[f64]) -> Option<(&Atom, f64)> {
        let mut best: Option<(&Atom, f64)> = None;
        for a in &self.atoms {
            let val = a.dot(g);
            if best.is_none_or(|(_, b)| val < b) {
                best = Some((a, val));
            }
        }
        best
    }

    /// Returns a vertex with `⟨g, x − v⟩ ≥ phi / lazy_tolerance`, from the
    /// cache if possible. On a miss the exact oracle is queried; if even its
    /// vertex falls short of the threshold the estimate is halved.
    pub fn cached_extreme_point(
        &mut self,
        lmo: &dyn LinearOracle,
        g: &[f64],
        x: &[f64],
        phi: f64,
        lazy_tolerance: f64,
    ) -> Result<LazyOutcome> {
        check_dim(g.len(), x.len())?;
        if !(phi > 0.0) {
            return Err(Error::contract("gap estimate must be positive"));
        }
        if !(lazy_tolerance >= 1.0) {
            return Err(Error::contract("lazy tolerance must be at least 1"));
        }
        let gx = crate::linalg::dot(g, x);
        let threshold = phi / lazy_tolerance;
        if let Some((atom, val)) = self.best(g) {
            if gx - val >= threshold {
                return Ok(LazyOutcome {
                    atom: atom.clone(),
                    hit: true,
                    phi,
                });
            }
        }
        let atom = lmo.extreme_point(g)?;
        let gap = gx - atom.dot(g);
        self.insert(atom.clone());
        let phi = if gap < threshold { phi / 2.0 } else { phi };
        Ok(LazyOutcome {
            atom,
            hit: false,
            phi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmo::SimplexOracle;

    #[test]
    fn empty_cache_misses() {
        let lmo = SimplexOracle::new(3, 1.0);
        let mut cache = VertexCache::default();
        let out = cache
            .cached_extreme_point(&lmo, &[1.0, 0.0, 2.0], &[0.0, 0.0, 1.0], 1.0, 2.0)
            .unwrap();
        assert!(!out.hit);
        assert_eq!(out.atom.to_dense(), vec![0.0, 1.0, 0.0]);
        assert_eq!(out.phi, 1.0);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn hit_when_cached_minimizer_clears_threshold() {
        let lmo = SimplexOracle::new(3, 1.0);
        let mut cache = VertexCache::default();
        cache.insert(Atom::Dense(vec![0.0, 1.0, 0.0]));
        // true gap 2, phi below it
        let out = cache
            .cached_extreme_point(&lmo, &[1.0, 0.0, 2.0], &[0.0, 0.0, 1.0], 1.5, 2.0)
            .unwrap();
        assert!(out.hit);
        assert_eq!(out.phi, 1.5);
    }

    #[test]
    fn two_step_trace_on_simplex() {
        // f = ½‖x − y‖², y = (0.6, 0.4, 0), start at e3
        let lmo = SimplexOracle::new(3, 1.0);
        let y = [0.6, 0.4, 0.0];
        let grad = |x: &[f64]| -> Vec<f64> { x.iter().zip(&y).map(|(a, b)| a - b).collect() };
        let mut cache = VertexCache::default();
        let x0 = [0.0, 0.0, 1.0];
        let g0 = grad(&x0);
        // gap at x0 is 1 - (-0.6) = 1.6; phi0 = 0.8
        let first = cache
            .cached_extreme_point(&lmo, &g0, &x0, 0.8, 2.0)
            .unwrap();
        assert!(!first.hit);
        assert_eq!(first.atom.to_dense(), vec![1.0, 0.0, 0.0]);
        // step γ = 0.5 towards e1
        let x1 = [0.5, 0.0, 0.5];
        let g1 = grad(&x1);
        // cached e1 gives ⟨g1, x1 − e1⟩ = 0.3 < 0.8/2
        let second = cache
            .cached_extreme_point(&lmo, &g1, &x1, 0.8, 2.0)
            .unwrap();
        assert!(!second.hit);
        // exact vertex e2 gives 0.6 ≥ 0.4, phi kept
        assert_eq!(second.atom.to_dense(), vec![0.0, 1.0, 0.0]);
        assert_eq!(second.phi, 0.8);
        // with a smaller estimate the cached e2 is reused
        let third = cache
            .cached_extreme_point(&lmo, &g1, &x1, 0.5, 2.0)
            .unwrap();
        assert!(third.hit);
        assert_eq!(third.atom.to_dense(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn halves_when_exact_vertex_falls_short() {
        let lmo = SimplexOracle::new(2, 1.0);
        let mut cache = VertexCache::default();
        let out = cache
            .cached_extreme_point(&lmo, &[1.0, 0.9], &[0.5, 0.5], 1.0, 2.0)
            .unwrap();
        assert!(!out.hit);
        assert_eq!(out.phi, 0.5);
    }

    #[test]
    fn capacity_evicts_oldest() {
        let mut cache = VertexCache::new(2);
        for i in 0..3 {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            cache.insert(Atom::Dense(v));
        }
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.iter().next().unwrap().to_dense(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn bad_parameters() {
        let lmo = SimplexOracle::new(2, 1.0);
        let mut cache = VertexCache::default();
        assert!(cache
            .cached_extreme_point(&lmo, &[1.0, 0.0], &[1.0, 0.0], 0.0, 2.0)
            .is_err());
        assert!(cache
            .cached_extreme_point(&lmo, &[1.0, 0.0], &[1.0, 0.0], 1.0, 0.5)
            .is_err());
    }
}
