use super::{Atom, FaceFixings, InFaceOracle, LinearOracle};
use crate::error::{check_dim, Error, Result};

/// Axis-aligned box `{lower ≤ x ≤ upper}`.
#[derive(Debug, Clone)]
pub struct BoxOracle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxOracle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::contract("box lower bound exceeds upper bound"));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        assert!(lower <= upper, "box lower bound exceeds upper bound");
        Self {
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn pick(&self, i: usize, gi: f64, maximize: bool) -> f64 {
        let gi = if maximize { -gi } else { gi };
        if gi < 0.0 {
            self.upper[i]
        } else {
            self.lower[i]
        }
    }
}

impl LinearOracle for BoxOracle {
    fn name(&self) -> &str {
        "box"
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        check_dim(self.dim(), g.len())?;
        Ok(Atom::Dense(
            g.iter()
                .enumerate()
                .map(|(i, &gi)| self.pick(i, gi, false))
                .collect(),
        ))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
    }

    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        Some(self)
    }
}

impl InFaceOracle for BoxOracle {
    fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    fn face_extreme_point(&self, g: &[f64], fix: &FaceFixings, maximize: bool) -> Result<Atom> {
        check_dim(self.dim(), g.len())?;
        fix.validate()?;
        let mut v: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, &gi)| self.pick(i, gi, maximize))
            .collect();
        for &i in &fix.fixed_zero {
            v[i] = self.lower[i];
        }
        for &i in &fix.fixed_one {
            v[i] = self.upper[i];
        }
        Ok(Atom::Dense(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_rule() {
        let lmo = BoxOracle::uniform(2, -1.0, 1.0);
        assert_eq!(
            lmo.extreme_point(&[1.0, -1.0]).unwrap().to_dense(),
            vec![-1.0, 1.0]
        );
        assert_eq!(
            lmo.extreme_point(&[0.0, 0.0]).unwrap().to_dense(),
            vec![-1.0, -1.0]
        );
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(BoxOracle::new(vec![1.0], vec![0.0]).is_err());
    }
}
