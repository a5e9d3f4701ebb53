use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

/// Structured extreme point.
///
/// Matrices are flattened row-major: entry `(i, j)` of an `m × n` matrix lives
/// at index `i * n + j`.
#[derive(Debug, Clone)]
pub enum Atom {
    Dense(Vec<f64>),
    /// `n × n` permutation matrix with ones at `(i, sigma[i])`.
    Permutation(Vec<usize>),
    /// `scale · u vᵀ` with unit `u`, `v`.
    RankOne {
        scale: f64,
        u: Vec<f64>,
        v: Vec<f64>,
    },
    /// `scale · v vᵀ` with unit `v`.
    SymmetricRankOne {
        scale: f64,
        v: Vec<f64>,
    },
}

impl Atom {
    pub fn dim(&self) -> usize {
        match self {
            Atom::Dense(x) => x.len(),
            Atom::Permutation(p) => p.len() * p.len(),
            Atom::RankOne { u, v, .. } => u.len() * v.len(),
            Atom::SymmetricRankOne { v, .. } => v.len() * v.len(),
        }
    }

    /// `⟨self, y⟩`
    pub fn dot(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(self.dim(), y.len());
        match self {
            Atom::Dense(x) => dot(x, y),
            Atom::Permutation(p) => {
                let n = p.len();
                p.iter().enumerate().map(|(i, &j)| y[i * n + j]).sum()
            }
            Atom::RankOne { scale, u, v } => {
                let n = v.len();
                let s: f64 = u
                    .iter()
                    .enumerate()
                    .map(|(i, ui)| ui * dot(&y[i * n..(i + 1) * n], v))
                    .sum();
                scale * s
            }
            Atom::SymmetricRankOne { scale, v } => {
                let n = v.len();
                let s: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| vi * dot(&y[i * n..(i + 1) * n], v))
                    .sum();
                scale * s
            }
        }
    }

    /// `y += alpha · self`
    pub fn add_scaled_to(&self, alpha: f64, y: &mut [f64]) {
        debug_assert_eq!(self.dim(), y.len());
        match self {
            Atom::Dense(x) => axpy(alpha, x, y),
            Atom::Permutation(p) => {
                let n = p.len();
                for (i, &j) in p.iter().enumerate() {
                    y[i * n + j] += alpha;
                }
            }
            Atom::RankOne { scale, u, v } => {
                let n = v.len();
                for (i, ui) in u.iter().enumerate() {
                    axpy(alpha * scale * ui, v, &mut y[i * n..(i + 1) * n]);
                }
            }
            Atom::SymmetricRankOne { scale, v } => {
                let n = v.len();
                for (i, vi) in v.iter().enumerate() {
                    axpy(alpha * scale * vi, v, &mut y[i * n..(i + 1) * n]);
                }
            }
        }
    }

    pub fn write_dense(&self, out: &mut [f64]) {
        out.fill(0.0);
        self.add_scaled_to(1.0, out);
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write_dense(&mut out);
        out
    }

    /// `⟨self, other⟩` without materializing structured atoms when possible.
    pub fn dot_atom(&self, other: &Atom) -> f64 {
        match (self, other) {
            (Atom::Permutation(p), Atom::Permutation(q)) => {
                p.iter().zip(q).filter(|(a, b)| a == b).count() as f64
            }
            (Atom::Dense(x), o) | (o, Atom::Dense(x)) => o.dot(x),
            (
                Atom::RankOne {
                    scale: s1,
                    u: u1,
                    v: v1,
                },
                Atom::RankOne {
                    scale: s2,
                    u: u2,
                    v: v2,
                },
            ) if u1.len() == u2.len() && v1.len() == v2.len() => {
                s1 * s2 * dot(u1, u2) * dot(v1, v2)
            }
            (
                Atom::SymmetricRankOne { scale: s1, v: v1 },
                Atom::SymmetricRankOne { scale: s2, v: v2 },
            ) if v1.len() == v2.len() => {
                let c = dot(v1, v2);
                s1 * s2 * c * c
            }
            (a, b) => a.dot(&b.to_dense()),
        }
    }

    /// Checks the structural invariants of the representation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Atom::Dense(_) => Ok(()),
            Atom::Permutation(p) => {
                let mut seen = vec![false; p.len()];
                for &j in p {
                    if j >= p.len() || std::mem::replace(&mut seen[j], true) {
                        return Err(Error::contract("permutation is not a bijection"));
                    }
                }
                Ok(())
            }
            Atom::RankOne { u, v, .. } => {
                unit(u)?;
                unit(v)
            }
            Atom::SymmetricRankOne { v, .. } => unit(v),
        }
    }
}

fn unit(v: &[f64]) -> Result<()> {
    if (dot(v, v).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::contract("rank-one factor is not a unit vector"));
    }
    Ok(())
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Exact structural equality: identical permutations or bitwise-identical
/// floating-point data. Near duplicates compare unequal.
impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Atom::Dense(a), Atom::Dense(b)) => bits_eq(a, b),
            (Atom::Permutation(a), Atom::Permutation(b)) => a == b,
            (
                Atom::RankOne {
                    scale: s1,
                    u: u1,
                    v: v1,
                },
                Atom::RankOne {
                    scale: s2,
                    u: u2,
                    v: v2,
                },
            ) => s1.to_bits() == s2.to_bits() && bits_eq(u1, u2) && bits_eq(v1, v2),
            (
                Atom::SymmetricRankOne { scale: s1, v: v1 },
                Atom::SymmetricRankOne { scale: s2, v: v2 },
            ) => s1.to_bits() == s2.to_bits() && bits_eq(v1, v2),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn permutation_layout() {
        let p = Atom::Permutation(vec![1, 0]);
        assert_eq!(p.to_dense(), vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(p.dot(&[1.0, 2.0, 3.0, 4.0]), 5.0);
        assert!(p.validate().is_ok());
        assert!(Atom::Permutation(vec![1, 1]).validate().is_err());
    }

    #[test]
    fn rank_one_layout() {
        let a = Atom::RankOne {
            scale: 2.0,
            u: vec![1.0, 0.0],
            v: vec![0.0, 1.0, 0.0],
        };
        assert_eq!(a.to_dense(), vec![0.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn equality_is_bitwise() {
        assert_eq!(Atom::Dense(vec![1.0, 0.0]), Atom::Dense(vec![1.0, 0.0]));
        assert_ne!(Atom::Dense(vec![1.0, 0.0]), Atom::Dense(vec![1.0, -0.0]));
        assert_ne!(
            Atom::Dense(vec![1.0, 0.0]),
            Atom::Dense(vec![1.0 + f64::EPSILON, 0.0])
        );
    }

    fn unit_vec(raw: Vec<f64>) -> Vec<f64> {
        let n = dot(&raw, &raw).sqrt().max(1e-3);
        raw.iter().map(|x| x / n).collect()
    }

    proptest! {
        #[test]
        fn structured_products_match_dense(
            u in proptest::collection::vec(-1.0f64..1.0, 3),
            v in proptest::collection::vec(-1.0f64..1.0, 3),
            w in proptest::collection::vec(-1.0f64..1.0, 3),
            y in proptest::collection::vec(-2.0f64..2.0, 9),
            perm in Just(vec![2usize, 0, 1]).prop_shuffle(),
        ) {
            let atoms = vec![
                Atom::Dense(y.clone()),
                Atom::Permutation(perm),
                Atom::RankOne { scale: -1.5, u: unit_vec(u.clone()), v: unit_vec(v.clone()) },
                Atom::RankOne { scale: 0.5, u: unit_vec(w.clone()), v: unit_vec(u) },
                Atom::SymmetricRankOne { scale: 2.0, v: unit_vec(v) },
                Atom::SymmetricRankOne { scale: 1.0, v: unit_vec(w) },
            ];
            for a in &atoms {
                let dense = a.to_dense();
                prop_assert!((a.dot(&y) - dot(&dense, &y)).abs() < 1e-12);
                for b in &atoms {
                    let expect = dot(&dense, &b.to_dense());
                    prop_assert!((a.dot_atom(b) - expect).abs() < 1e-12);
                }
            }
        }
    }
}
