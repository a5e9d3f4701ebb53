use super::{Atom, FaceFixings, InFaceOracle, LinearOracle};
use crate::error::{check_dim, Error, Result};

/// Hypersimplex: convex hull of 0/tau vectors with exactly K entries at tau.
#[derive(Debug, Clone)]
pub struct HypersimplexOracle {
    n: usize,
    k: usize,
    tau: f64,
}

impl HypersimplexOracle {
    pub fn new(n: usize, k: usize, tau: f64) -> Self {
        Self { n, k, tau }
    }

    fn check(&self, len: usize) -> Result<()> {
        check_dim(self.n, len)?;
        if self.k == 0 || self.k > self.n {
            return Err(Error::contract(format!(
                "K={} outside 1..={}",
                self.k, self.n
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::contract("radius must be positive"));
        }
        Ok(())
    }

    /// Sets `count` of the `candidates` to tau, picking smallest (or largest) `g`.
    fn fill(
        &self,
        g: &[f64],
        mut candidates: Vec<usize>,
        count: usize,
        maximize: bool,
        v: &mut [f64],
    ) {
        if maximize {
            candidates.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
        } else {
            candidates.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
        }
        for &i in &candidates[..count] {
            v[i] = self.tau;
        }
    }
}

impl LinearOracle for HypersimplexOracle {
    fn name(&self) -> &str {
        "hypersimplex"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        self.check(g.len())?;
        let mut v = vec![0.0; self.n];
        self.fill(g, (0..self.n).collect(), self.k, false, &mut v);
        Ok(Atom::Dense(v))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n
            && x.iter().all(|&v| v >= -tol && v <= self.tau + tol)
            && (x.iter().sum::<f64>() - self.k as f64 * self.tau).abs()
                <= tol * (1.0 + self.k as f64 * self.tau)
    }

    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        Some(self)
    }
}

impl InFaceOracle for HypersimplexOracle {
    fn bounds(&self, _i: usize) -> (f64, f64) {
        (0.0, self.tau)
    }

    fn face_extreme_point(&self, g: &[f64], fix: &FaceFixings, maximize: bool) -> Result<Atom> {
        self.check(g.len())?;
        fix.validate()?;
        let mut pinned = vec![false; self.n];
        let mut v = vec![0.0; self.n];
        for &i in &fix.fixed_zero {
            pinned[i] = true;
        }
        for &i in &fix.fixed_one {
            pinned[i] = true;
            v[i] = self.tau;
        }
        let remaining = self
            .k
            .checked_sub(fix.fixed_one.len())
            .ok_or(Error::InfeasibleFace)?;
        let free: Vec<usize> = (0..self.n).filter(|&i| !pinned[i]).collect();
        if remaining > free.len() {
            return Err(Error::InfeasibleFace);
        }
        self.fill(g, free, remaining, maximize, &mut v);
        Ok(Atom::Dense(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_entries() {
        let lmo = HypersimplexOracle::new(4, 2, 1.0);
        let v = lmo.extreme_point(&[5.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(v.to_dense(), vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn k_equals_n_is_forced() {
        let lmo = HypersimplexOracle::new(3, 3, 1.5);
        assert_eq!(
            lmo.extreme_point(&[4.0, -1.0, 0.0]).unwrap().to_dense(),
            vec![1.5; 3]
        );
    }

    #[test]
    fn tie_rule() {
        let lmo = HypersimplexOracle::new(3, 1, 2.0);
        assert_eq!(
            lmo.extreme_point(&[0.0; 3]).unwrap().to_dense(),
            vec![2.0, 0.0, 0.0]
        );
    }

    #[test]
    fn face_respects_pins() {
        let lmo = HypersimplexOracle::new(4, 2, 1.0);
        let fix = FaceFixings {
            fixed_zero: vec![1],
            fixed_one: vec![2],
        };
        let g = [0.0, -9.0, 5.0, -1.0];
        let s = lmo.face_extreme_point(&g, &fix, false).unwrap();
        assert_eq!(s.to_dense(), vec![0.0, 0.0, 1.0, 1.0]);
        let a = lmo.face_extreme_point(&g, &fix, true).unwrap();
        assert_eq!(a.to_dense(), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn overfull_face_is_infeasible() {
        let lmo = HypersimplexOracle::new(3, 1, 1.0);
        let fix = FaceFixings {
            fixed_zero: vec![],
            fixed_one: vec![0, 1],
        };
        assert!(matches!(
            lmo.face_extreme_point(&[0.0; 3], &fix, false),
            Err(Error::InfeasibleFace)
        ));
    }
}
