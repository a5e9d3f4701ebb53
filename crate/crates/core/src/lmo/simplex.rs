use super::{Atom, FaceFixings, InFaceOracle, LinearOracle};
use crate::error::{check_dim, Error, Result};

/// Scaled probability simplex `{x ≥ 0 : Σx = tau}`.
#[derive(Debug, Clone)]
pub struct SimplexOracle {
    n: usize,
    tau: f64,
}

impl SimplexOracle {
    pub fn new(n: usize, tau: f64) -> Self {
        Self { n, tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn vertex(&self, i: usize) -> Atom {
        let mut v = vec![0.0; self.n];
        v[i] = self.tau;
        Atom::Dense(v)
    }

    fn check(&self, len: usize) -> Result<()> {
        if self.n == 0 {
            return Err(Error::contract("simplex over an empty vector"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::contract("simplex radius must be positive"));
        }
        check_dim(self.n, len)
    }
}

impl LinearOracle for SimplexOracle {
    fn name(&self) -> &str {
        "simplex"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        self.check(g.len())?;
        let i = crate::linalg::argmin(g).ok_or_else(|| Error::contract("empty direction"))?;
        Ok(self.vertex(i))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n
            && x.iter().all(|&v| v >= -tol)
            && (x.iter().sum::<f64>() - self.tau).abs() <= tol * (1.0 + self.tau)
    }

    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        Some(self)
    }
}

impl InFaceOracle for SimplexOracle {
    fn bounds(&self, _i: usize) -> (f64, f64) {
        (0.0, self.tau)
    }

    fn face_extreme_point(&self, g: &[f64], fix: &FaceFixings, maximize: bool) -> Result<Atom> {
        self.check(g.len())?;
        fix.validate()?;
        if let Some(&i) = fix.fixed_one.first() {
            if fix.fixed_one.len() > 1 {
                return Err(Error::InfeasibleFace);
            }
            return Ok(self.vertex(i));
        }
        let mut free = vec![true; self.n];
        for &i in &fix.fixed_zero {
            free[i] = false;
        }
        let mut best: Option<usize> = None;
        for i in (0..self.n).filter(|&i| free[i]) {
            let better = match best {
                None => true,
                Some(b) if maximize => g[i] > g[b],
                Some(b) => g[i] < g[b],
            };
            if better {
                best = Some(i);
            }
        }
        best.map(|i| self.vertex(i)).ok_or(Error::InfeasibleFace)
    }
}
