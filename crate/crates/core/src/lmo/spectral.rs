use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::{Atom, LinearOracle};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, matvec, matvec_t, norm};

/// Relative change of the Rayleigh quotient at which power iteration stops.
pub const EIGEN_TOLERANCE: f64 = 1e-9;
pub const EIGEN_MAX_ITERATIONS: usize = 10_000;
const START_SEED: u64 = 0x5eed_0f_c0de;

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = SplitMix64::seed_from_u64(START_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Flips `v` (and `partner`) so that the first clearly nonzero entry of `v` is positive.
fn fix_sign(v: &mut [f64], partner: Option<&mut [f64]>) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            if let Some(p) = partner {
                p.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
}

/// Leading eigenpair of a symmetric positive semidefinite operator of size `n`
/// by power iteration from a fixed pseudo-random start.
///
/// Returns `(rho, v)` with `v` unit. An operator that annihilates the iterate
/// yields `rho = 0`.
pub fn leading_eigenpair(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> Result<(f64, Vec<f64>)> {
    if n == 0 {
        return Err(Error::contract("eigenproblem of size zero"));
    }
    let mut v = start_vector(n);
    let mut w = vec![0.0; n];
    let mut prev = f64::NAN;
    for k in 0..EIGEN_MAX_ITERATIONS {
        apply(&v, &mut w);
        let rho = dot(&v, &w);
        let nw = norm(&w);
        if !nw.is_finite() {
            return Err(Error::numerical(k, "non-finite value in power iteration"));
        }
        if nw == 0.0 {
            return Ok((0.0, v));
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (rho - prev).abs() <= EIGEN_TOLERANCE * rho.abs() {
            return Ok((rho, v));
        }
        prev = rho;
    }
    Err(Error::numerical(
        EIGEN_MAX_ITERATIONS,
        "power iteration did not converge",
    ))
}

/// Nuclear-norm ball `{X ∈ R^{rows×cols} : ‖X‖_nuc ≤ tau}`.
#[derive(Debug, Clone)]
pub struct NuclearBallOracle {
    rows: usize,
    cols: usize,
    tau: f64,
}

impl NuclearBallOracle {
    pub fn new(rows: usize, cols: usize, tau: f64) -> Self {
        Self { rows, cols, tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

impl LinearOracle for NuclearBallOracle {
    fn name(&self) -> &str {
        "nuclear"
    }

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        check_dim(self.dim(), g.len())?;
        if !(self.tau > 0.0) {
            return Err(Error::contract("radius must be positive"));
        }
        let (m, n) = (self.rows, self.cols);
        let unit = |len: usize| {
            let mut e = vec![0.0; len];
            e[0] = 1.0;
            e
        };
        if g.iter().all(|&x| x == 0.0) {
            return Ok(Atom::RankOne {
                scale: -self.tau,
                u: unit(m),
                v: unit(n),
            });
        }
        let mut tmp = vec![0.0; m];
        let (_, mut v) = leading_eigenpair(n, |x, out| {
            matvec(g, m, n, x, &mut tmp);
            matvec_t(g, m, n, &tmp, out);
        })?;
        let mut u = vec![0.0; m];
        matvec(g, m, n, &v, &mut u);
        let sigma = norm(&u);
        if sigma == 0.0 {
            u = unit(m);
        } else {
            u.iter_mut().for_each(|x| *x /= sigma);
        }
        fix_sign(&mut v, Some(&mut u));
        Ok(Atom::RankOne {
            scale: -self.tau,
            u,
            v,
        })
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let mat = DMatrix::from_row_slice(self.rows, self.cols, x);
        mat.singular_values().sum() <= self.tau + tol * (1.0 + self.tau)
    }
}

/// Spectraplex `{X ⪰ 0 : tr X = tau}` over symmetric `n × n` matrices.
#[derive(Debug, Clone)]
pub struct SpectraplexOracle {
    n: usize,
    tau: f64,
}

impl SpectraplexOracle {
    pub fn new(n: usize, tau: f64) -> Self {
        Self { n, tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn side(&self) -> usize {
        self.n
    }
}

impl LinearOracle for SpectraplexOracle {
    fn name(&self) -> &str {
        "spectraplex"
    }

    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        check_dim(self.dim(), g.len())?;
        if !(self.tau > 0.0) {
            return Err(Error::contract("trace must be positive"));
        }
        let n = self.n;
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = 0.5 * (g[i * n + j] + g[j * n + i]);
            }
        }
        // Gershgorin bound makes shift·I − S positive semidefinite
        let shift = (0..n)
            .map(|i| s[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut v = if shift == 0.0 {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        } else {
            leading_eigenpair(n, |x, out| {
                matvec(&s, n, n, x, out);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = shift * xi - *o;
                }
            })?
            .1
        };
        fix_sign(&mut v, None);
        Ok(Atom::SymmetricRankOne { scale: self.tau, v })
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        let n = self.n;
        if x.len() != n * n {
            return false;
        }
        let symmetric = (0..n).all(|i| (0..i).all(|j| (x[i * n + j] - x[j * n + i]).abs() <= tol));
        let trace: f64 = (0..n).map(|i| x[i * n + i]).sum();
        if !symmetric || (trace - self.tau).abs() > tol * (1.0 + self.tau) {
            return false;
        }
        let mat = DMatrix::from_row_slice(n, n, x);
        let min_eig = mat.symmetric_eigenvalues().min();
        min_eig >= -tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    #[test]
    fn nuclear_diagonal() {
        let lmo = NuclearBallOracle::new(2, 2, 1.0);
        let a = lmo.extreme_point(&[3.0, 0.0, 0.0, 1.0]).unwrap();
        let d = a.to_dense();
        for (x, y) in d.iter().zip([-1.0, 0.0, 0.0, 0.0]) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(a.validate().is_ok());
    }

    #[test]
    fn nuclear_zero_matrix() {
        let lmo = NuclearBallOracle::new(2, 2, 1.0);
        let a = lmo.extreme_point(&[0.0; 4]).unwrap();
        assert_eq!(a.dot(&[0.0; 4]), 0.0);
        assert!(a.validate().is_ok());
    }

    #[test]
    fn nuclear_random_pair_certificate() {
        let mut rng = SplitMix64::seed_from_u64(5);
        let g: Vec<f64> = (0..25).map(|_| rng.sample(StandardNormal)).collect();
        let lmo = NuclearBallOracle::new(5, 5, 1.0);
        let out = lmo.extreme_point(&g).unwrap().dot(&g);
        for _ in 0..1000 {
            let mut u: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
            let mut v: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
            let (nu, nv) = (norm(&u), norm(&v));
            u.iter_mut().for_each(|x| *x /= nu);
            v.iter_mut().for_each(|x| *x /= nv);
            let cand = Atom::RankOne { scale: -1.0, u, v }.dot(&g);
            assert!(out <= cand + 1e-7);
        }
    }

    #[test]
    fn spectraplex_diagonal() {
        let lmo = SpectraplexOracle::new(2, 1.0);
        let d = lmo
            .extreme_point(&[1.0, 0.0, 0.0, -2.0])
            .unwrap()
            .to_dense();
        for (x, y) in d.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((x - y).abs() < 1e-6);
        }
        let lmo = SpectraplexOracle::new(2, 3.0);
        let d = lmo
            .extreme_point(&[1.0, 0.0, 0.0, -2.0])
            .unwrap()
            .to_dense();
        assert!((d[3] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn spectraplex_matches_dense_eigensolver() {
        let mut rng = SplitMix64::seed_from_u64(6);
        let n = 6;
        let raw: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = raw[i * n + j] + raw[j * n + i];
            }
        }
        let lmo = SpectraplexOracle::new(n, 2.0);
        let atom = lmo.extreme_point(&g).unwrap();
        let min_eig = DMatrix::from_row_slice(n, n, &g)
            .symmetric_eigenvalues()
            .min();
        assert!(atom.dot(&g) <= 2.0 * min_eig + 1e-7);
        assert!(lmo.contains(&atom.to_dense(), 1e-9));
    }

    #[test]
    fn power_iteration_is_deterministic() {
        let lmo = NuclearBallOracle::new(3, 4, 2.0);
        let g: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        assert_eq!(
            lmo.extreme_point(&g).unwrap(),
            lmo.extreme_point(&g).unwrap()
        );
    }
}
