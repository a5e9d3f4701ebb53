use std::sync::Arc;

use super::{Atom, LinearOracle};
use crate::error::{check_dim, Error, Result};

/// Cartesian product of oracles acting on consecutive coordinate blocks.
#[derive(Clone)]
pub struct ProductOracle {
    blocks: Vec<Arc<dyn LinearOracle>>,
    offsets: Vec<usize>,
}

impl ProductOracle {
    pub fn new(blocks: Vec<Arc<dyn LinearOracle>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::contract("product of zero oracles"));
        }
        let mut offsets = vec![0];
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.dim());
        }
        Ok(Self { blocks, offsets })
    }

    pub fn blocks(&self) -> &[Arc<dyn LinearOracle>] {
        &self.blocks
    }

    /// Block `i` occupies `offsets[i]..offsets[i + 1]`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

impl std::fmt::Debug for ProductOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.blocks.iter().map(|b| b.name()).collect();
        f.debug_struct("ProductOracle")
            .field("blocks", &names)
            .finish()
    }
}

impl LinearOracle for ProductOracle {
    fn name(&self) -> &str {
        "product"
    }

    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        check_dim(self.dim(), g.len())?;
        let mut out = vec![0.0; self.dim()];
        for (i, b) in self.blocks.iter().enumerate() {
            let r = self.offsets[i]..self.offsets[i + 1];
            b.extreme_point(&g[r.clone()])?.write_dense(&mut out[r]);
        }
        Ok(Atom::Dense(out))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && self
                .blocks
                .iter()
                .enumerate()
                .all(|(i, b)| b.contains(&x[self.offsets[i]..self.offsets[i + 1]], tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmo::{BoxOracle, SimplexOracle};

    #[test]
    fn concatenates_blocks() {
        let p = ProductOracle::new(vec![
            Arc::new(SimplexOracle::new(2, 1.0)),
            Arc::new(BoxOracle::uniform(1, -1.0, 1.0)),
        ])
        .unwrap();
        assert_eq!(p.offsets(), &[0, 2, 3]);
        assert_eq!(
            p.extreme_point(&[1.0, 0.0, -2.0]).unwrap().to_dense(),
            vec![0.0, 1.0, 1.0]
        );
        assert!(p.contains(&[0.5, 0.5, 0.0], 1e-12));
    }
}
