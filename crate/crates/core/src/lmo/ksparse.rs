use super::{Atom, LinearOracle};
use crate::error::{check_dim, Error, Result};

/// K-sparse polytope `B₁(K·tau) ∩ B∞(tau)`.
#[derive(Debug, Clone)]
pub struct KSparseOracle {
    n: usize,
    k: usize,
    tau: f64,
}

impl KSparseOracle {
    pub fn new(n: usize, k: usize, tau: f64) -> Self {
        Self { n, k, tau }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

impl LinearOracle for KSparseOracle {
    fn name(&self) -> &str {
        "ksparse"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        check_dim(self.n, g.len())?;
        if self.k == 0 || self.k > self.n {
            return Err(Error::contract(format!(
                "K={} outside 1..={}",
                self.k, self.n
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::contract("radius must be positive"));
        }
        let mut idx: Vec<usize> = (0..self.n).collect();
        // stable sort keeps smaller indices first among equal magnitudes
        idx.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
        let mut v = vec![0.0; self.n];
        for &i in &idx[..self.k] {
            v[i] = if g[i] < 0.0 { self.tau } else { -self.tau };
        }
        Ok(Atom::Dense(v))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n
            && x.iter().all(|v| v.abs() <= self.tau + tol)
            && x.iter().map(|v| v.abs()).sum::<f64>() <= self.k as f64 * self.tau + tol
    }
}
