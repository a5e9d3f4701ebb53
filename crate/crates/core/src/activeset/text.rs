//! Plain-text active-set format used for warm starts.
//!
//! One atom per line, fields separated by single spaces:
//!
//! ```text
//! <weight> dense <x_1> ... <x_n>
//! <weight> perm <sigma_1> ... <sigma_n>
//! <weight> rank1 <scale> <m> <n> <u_1> ... <u_m> <v_1> ... <v_n>
//! <weight> symrank1 <scale> <n> <v_1> ... <v_n>
//! ```
//!
//! Permutations are 0-based. Blank lines and lines starting with `#` are
//! ignored. Floats are written in shortest round-trip form.

use std::fmt::Write as _;

use super::ActiveSet;
use crate::error::{Error, Result};
use crate::lmo::Atom;

fn push_floats(out: &mut String, xs: &[f64]) {
    for x in xs {
        let _ = write!(out, " {x:e}");
    }
}

impl ActiveSet {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, w) in self.atoms().iter().zip(self.weights()) {
            let _ = write!(out, "{w:e}");
            match a {
                Atom::Dense(x) => {
                    out.push_str(" dense");
                    push_floats(&mut out, x);
                }
                Atom::Permutation(p) => {
                    out.push_str(" perm");
                    for j in p {
                        let _ = write!(out, " {j}");
                    }
                }
                Atom::RankOne { scale, u, v } => {
                    let _ = write!(out, " rank1 {scale:e} {} {}", u.len(), v.len());
                    push_floats(&mut out, u);
                    push_floats(&mut out, v);
                }
                Atom::SymmetricRankOne { scale, v } => {
                    let _ = write!(out, " symrank1 {scale:e} {}", v.len());
                    push_floats(&mut out, v);
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let err = |reason: &str| Error::Parse {
                line: lineno,
                reason: reason.to_string(),
            };
            let mut fields = line.split_whitespace();
            let float = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected a number"))
            };
            let count = |s: Option<&str>| -> Result<usize> {
                s.and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected a count"))
            };
            let weight = float(fields.next())?;
            let kind = fields.next().ok_or_else(|| err("missing atom kind"))?;
            let atom = match kind {
                "dense" => Atom::Dense(
                    fields
                        .by_ref()
                        .map(|s| s.parse().map_err(|_| err("bad coordinate")))
                        .collect::<Result<_>>()?,
                ),
                "perm" => Atom::Permutation(
                    fields
                        .by_ref()
                        .map(|s| s.parse().map_err(|_| err("bad permutation index")))
                        .collect::<Result<_>>()?,
                ),
                "rank1" => {
                    let scale = float(fields.next())?;
                    let m = count(fields.next())?;
                    let n = count(fields.next())?;
                    let u = (0..m)
                        .map(|_| float(fields.next()))
                        .collect::<Result<_>>()?;
                    let v = (0..n)
                        .map(|_| float(fields.next()))
                        .collect::<Result<_>>()?;
                    Atom::RankOne { scale, u, v }
                }
                "symrank1" => {
                    let scale = float(fields.next())?;
                    let n = count(fields.next())?;
                    let v = (0..n)
                        .map(|_| float(fields.next()))
                        .collect::<Result<_>>()?;
                    Atom::SymmetricRankOne { scale, v }
                }
                _ => return Err(err("unknown atom kind")),
            };
            if fields.next().is_some() {
                return Err(err("trailing fields"));
            }
            atom.validate().map_err(|e| err(&e.to_string()))?;
            atoms.push(atom);
            weights.push(weight);
        }
        if atoms.is_empty() {
            return Err(Error::Parse {
                line: 0,
                reason: "no atoms".into(),
            });
        }
        ActiveSet::from_weighted(atoms, weights)
    }
}
