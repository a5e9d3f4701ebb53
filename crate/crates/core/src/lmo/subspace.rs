use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::{Atom, LinearOracle};
use crate::error::{check_dim, Error, Result};

type Map = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

const PROBES: usize = 5;
const PROBE_TOLERANCE: f64 = 1e-10;

/// Oracle over a reduced space linked to an inner oracle by `deflate`/`inflate`
/// maps, e.g. the fixed-point subspace of a symmetry group.
pub struct SubspaceOracle<L> {
    inner: L,
    reduced_dim: usize,
    deflate: Box<Map>,
    inflate: Box<Map>,
    name: String,
}

impl<L: LinearOracle> SubspaceOracle<L> {
    /// Fails unless `deflate(inflate(z)) = z` on a few pseudo-random probes.
    pub fn new(
        inner: L,
        reduced_dim: usize,
        deflate: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        inflate: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut rng = SplitMix64::seed_from_u64(0x5ab5_9ace);
        for _ in 0..PROBES {
            let z: Vec<f64> = (0..reduced_dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let full = inflate(&z);
            check_dim(inner.dim(), full.len())?;
            let back = deflate(&full);
            check_dim(reduced_dim, back.len())?;
            let err = z
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err > PROBE_TOLERANCE {
                return Err(Error::contract(format!(
                    "deflate ∘ inflate deviates from identity by {err:e}"
                )));
            }
        }
        let name = format!("subspace({})", inner.name());
        Ok(Self {
            inner,
            reduced_dim,
            deflate: Box::new(deflate),
            inflate: Box::new(inflate),
            name,
        })
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn inflate(&self, z: &[f64]) -> Vec<f64> {
        (self.inflate)(z)
    }

    pub fn deflate(&self, y: &[f64]) -> Vec<f64> {
        (self.deflate)(y)
    }
}

impl<L: LinearOracle> LinearOracle for SubspaceOracle<L> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.reduced_dim
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        check_dim(self.reduced_dim, g.len())?;
        let full = self.inner.extreme_point(&(self.inflate)(g))?;
        Ok(Atom::Dense((self.deflate)(&full.to_dense())))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.reduced_dim && self.inner.contains(&(self.inflate)(x), tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmo::{BoxOracle, SimplexOracle};

    #[test]
    fn identity_maps_reproduce_inner() {
        let inner = SimplexOracle::new(3, 1.0);
        let sub = SubspaceOracle::new(inner.clone(), 3, |y| y.to_vec(), |z| z.to_vec()).unwrap();
        let g = [0.2, -0.3, 0.1];
        assert_eq!(
            sub.extreme_point(&g).unwrap(),
            inner.extreme_point(&g).unwrap()
        );
    }

    #[test]
    fn two_orbit_simplex() {
        let sub = SubspaceOracle::new(
            SimplexOracle::new(4, 1.0),
            2,
            |y| vec![y[0] + y[1], y[2] + y[3]],
            |z| vec![z[0] / 2.0, z[0] / 2.0, z[1] / 2.0, z[1] / 2.0],
        )
        .unwrap();
        assert_eq!(
            sub.extreme_point(&[1.0, -1.0]).unwrap().to_dense(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn scaling_maps_over_box() {
        let inner = BoxOracle::uniform(2, -1.0, 3.0);
        let sub = SubspaceOracle::new(
            inner.clone(),
            2,
            |y| y.iter().map(|v| v / 2.0).collect(),
            |z| z.iter().map(|v| 2.0 * v).collect(),
        )
        .unwrap();
        let g = [0.5, -0.25];
        let full = inner.extreme_point(&[1.0, -0.5]).unwrap().to_dense();
        let expect: Vec<f64> = full.iter().map(|v| v / 2.0).collect();
        assert_eq!(sub.extreme_point(&g).unwrap().to_dense(), expect);
    }

    #[test]
    fn non_inverse_maps_rejected() {
        let res = SubspaceOracle::new(
            SimplexOracle::new(2, 1.0),
            2,
            |y| y.to_vec(),
            |z| z.iter().map(|v| 2.0 * v).collect(),
        );
        assert!(matches!(res, Err(Error::Contract(_))));
    }
}
