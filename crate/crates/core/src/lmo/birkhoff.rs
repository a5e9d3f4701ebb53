use super::{Atom, FaceFixings, InFaceOracle, LinearOracle};
use crate::error::{check_dim, Error, Result};

/// Minimum-cost perfect assignment on an `n × n` cost matrix.
///
/// Shortest augmenting paths with row/column potentials, `O(n³)`. Cells with
/// infinite cost are forbidden. Returns `sigma` with row `i` assigned to column
/// `sigma[i]`, or `None` if no assignment avoids the forbidden cells.
pub fn min_cost_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> Option<Vec<usize>> {
    const INF: f64 = f64::INFINITY;
    // 1-based with index 0 as the virtual column used to seed each augmentation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let c = cost(i0 - 1, j - 1);
                if c.is_finite() {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return None;
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0; n];
    for j in 1..=n {
        sigma[p[j] - 1] = j - 1;
    }
    Some(sigma)
}

/// Birkhoff polytope of `n × n` doubly stochastic matrices (row-major).
#[derive(Debug, Clone)]
pub struct BirkhoffOracle {
    n: usize,
}

impl BirkhoffOracle {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn side(&self) -> usize {
        self.n
    }
}

impl LinearOracle for BirkhoffOracle {
    fn name(&self) -> &str {
        "birkhoff"
    }

    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn extreme_point(&self, g: &[f64]) -> Result<Atom> {
        self.face_extreme_point(g, &FaceFixings::default(), false)
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        let n = self.n;
        if x.len() != n * n || x.iter().any(|&v| v < -tol) {
            return false;
        }
        (0..n).all(|i| {
            let row: f64 = x[i * n..(i + 1) * n].iter().sum();
            let col: f64 = (0..n).map(|r| x[r * n + i]).sum();
            (row - 1.0).abs() <= tol && (col - 1.0).abs() <= tol
        })
    }

    fn in_face(&self) -> Option<&dyn InFaceOracle> {
        Some(self)
    }
}

impl InFaceOracle for BirkhoffOracle {
    fn bounds(&self, _i: usize) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn face_extreme_point(&self, g: &[f64], fix: &FaceFixings, maximize: bool) -> Result<Atom> {
        let n = self.n;
        check_dim(n * n, g.len())?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("non-finite assignment cost"));
        }
        fix.validate()?;
        let mut sigma = vec![usize::MAX; n];
        let mut col_taken = vec![false; n];
        for &c in &fix.fixed_one {
            let (i, j) = (c / n, c % n);
            if sigma[i] != usize::MAX || col_taken[j] {
                return Err(Error::contract("row or column fixed to one twice"));
            }
            sigma[i] = j;
            col_taken[j] = true;
        }
        let mut forbidden = vec![false; n * n];
        for &c in &fix.fixed_zero {
            forbidden[c] = true;
        }
        let rows: Vec<usize> = (0..n).filter(|&i| sigma[i] == usize::MAX).collect();
        let cols: Vec<usize> = (0..n).filter(|&j| !col_taken[j]).collect();
        let sign = if maximize { -1.0 } else { 1.0 };
        let sub = min_cost_assignment(rows.len(), |r, c| {
            let cell = rows[r] * n + cols[c];
            if forbidden[cell] {
                f64::INFINITY
            } else {
                sign * g[cell]
            }
        })
        .ok_or(Error::InfeasibleFace)?;
        for (r, &c) in sub.iter().enumerate() {
            sigma[rows[r]] = cols[c];
        }
        Ok(Atom::Permutation(sigma))
    }
}
