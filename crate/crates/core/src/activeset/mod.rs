//! Convex decompositions `x = Σ λ_k v_k` of the iterate.
//!
//! [`ActiveSet`] stores the atoms, their weights and the materialized iterate.
//! For quadratic objectives a [`QuadCache`] can follow the set and answer
//! away/local-FW queries from cached inner products; it is kept in sync
//! through a journal of [`SetEvent`]s recorded by the set's mutations.

mod quadratic;
mod text;

pub use quadratic::{
    quad_correction, CorrectionConfig, CorrectionKind, CorrectionReport, QuadCache,
};

use crate::error::{check_dim, Error, Result};
use crate::lmo::Atom;

/// Atoms whose weight falls below this value are removed.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// The iterate is recomputed from scratch after this many mutations.
pub const REMATERIALIZE_EVERY: usize = 100;

/// Structural change recorded for cache synchronization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetEvent {
    /// A new atom was appended with zero weight.
    Inserted,
    /// `x ← (1−γ)x + γ v_j`
    Toward {
        j: usize,
        gamma: f64,
    },
    /// `x ← (1+γ)x − γ v_j`
    Away {
        j: usize,
        gamma: f64,
    },
    /// `x ← x − γ(v_a − v_s)`
    Pairwise {
        a: usize,
        s: usize,
        gamma: f64,
    },
    Removed(usize),
    /// Weights changed in a way not described by the events above.
    Reweighted,
    /// The set was rebuilt.
    Reset,
}

/// Index positions of the away atom (largest `⟨g, v⟩`) and the local FW atom
/// (smallest `⟨g, v⟩`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub away: usize,
    pub away_value: f64,
    pub local_fw: usize,
    pub local_fw_value: f64,
}

/// Receiving atom of a pairwise step.
#[derive(Debug, Clone)]
pub enum Target {
    Existing(usize),
    /// Merged with an identical stored atom if one exists.
    New(Atom),
}

#[derive(Debug, Clone)]
pub struct ActiveSet {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
    x: Vec<f64>,
    mutations: usize,
    journal: Option<Vec<SetEvent>>,
}

impl ActiveSet {
    pub fn singleton(atom: Atom) -> Self {
        let x = atom.to_dense();
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
            x,
            mutations: 0,
            journal: None,
        }
    }

    /// Builds a set from positive weights; they are normalized to sum to one.
    pub fn from_weighted(atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        check_dim(atoms.len(), weights.len())?;
        let first = atoms
            .first()
            .ok_or_else(|| Error::contract("active set needs at least one atom"))?;
        let dim = first.dim();
        for a in &atoms {
            check_dim(dim, a.dim())?;
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::contract("active-set weights must be positive"));
        }
        let mut set = Self {
            atoms,
            weights,
            x: vec![0.0; dim],
            mutations: 0,
            journal: None,
        };
        set.rematerialize();
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Materialized iterate.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn find(&self, atom: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// Largest deviation between the stored iterate and `Σ λ_k v_k`.
    pub fn materialization_error(&self) -> f64 {
        let mut y = vec![0.0; self.dim()];
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            a.add_scaled_to(*w, &mut y);
        }
        y.iter()
            .zip(&self.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Away and local FW atoms by direct inner products; ties go to the
    /// smallest index.
    pub fn argminmax(&self, grad: &[f64]) -> Result<Extremes> {
        check_dim(self.dim(), grad.len())?;
        let values: Vec<f64> = self.atoms.iter().map(|a| a.dot(grad)).collect();
        extremes_of(&values)
    }

    /// Starts recording [`SetEvent`]s.
    pub fn enable_journal(&mut self) {
        self.journal.get_or_insert_with(Vec::new);
    }

    pub(crate) fn take_journal(&mut self) -> Vec<SetEvent> {
        self.journal
            .as_mut()
            .map(std::mem::take)
            .unwrap_or_default()
    }

    fn log(&mut self, e: SetEvent) {
        if let Some(j) = self.journal.as_mut() {
            j.push(e);
        }
    }

    fn insert(&mut self, atom: Atom) -> Result<usize> {
        check_dim(self.dim(), atom.dim())?;
        if let Some(i) = self.find(&atom) {
            return Ok(i);
        }
        self.atoms.push(atom);
        self.weights.push(0.0);
        self.log(SetEvent::Inserted);
        Ok(self.atoms.len() - 1)
    }

    /// Frank-Wolfe step `x ← (1−γ)x + γv`.
    pub fn apply_fw(&mut self, v: Atom, gamma: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::contract(format!("FW step {gamma} outside [0, 1]")));
        }
        if gamma == 0.0 {
            return Ok(());
        }
        check_dim(self.dim(), v.dim())?;
        if gamma == 1.0 {
            self.x = v.to_dense();
            self.atoms = vec![v];
            self.weights = vec![1.0];
            self.log(SetEvent::Reset);
            return self.finish();
        }
        let j = self.insert(v)?;
        for w in &mut self.weights {
            *w *= 1.0 - gamma;
        }
        self.weights[j] += gamma;
        for xi in &mut self.x {
            *xi *= 1.0 - gamma;
        }
        self.atoms[j].add_scaled_to(gamma, &mut self.x);
        self.log(SetEvent::Toward { j, gamma });
        self.finish()
    }

    /// Largest away step from atom `j`: `λ_j / (1 − λ_j)`.
    pub fn away_step_max(&self, j: usize) -> f64 {
        let w = self.weights[j];
        if w >= 1.0 {
            f64::INFINITY
        } else {
            w / (1.0 - w)
        }
    }

    /// Away step `x ← (1+γ)x − γ v_j`, `0 ≤ γ ≤ λ_j/(1−λ_j)`.
    pub fn apply_away(&mut self, j: usize, gamma: f64) -> Result<()> {
        self.check_index(j)?;
        let gmax = self.away_step_max(j);
        if !(gamma >= 0.0 && gamma <= gmax * (1.0 + 1e-12)) || !gamma.is_finite() {
            return Err(Error::contract(format!(
                "away step {gamma} outside [0, {gmax}]"
            )));
        }
        if gamma == 0.0 {
            return Ok(());
        }
        for w in &mut self.weights {
            *w *= 1.0 + gamma;
        }
        self.weights[j] = if gamma >= gmax {
            0.0
        } else {
            self.weights[j] - gamma
        };
        for xi in &mut self.x {
            *xi *= 1.0 + gamma;
        }
        self.atoms[j].add_scaled_to(-gamma, &mut self.x);
        self.log(SetEvent::Away { j, gamma });
        self.finish()
    }

    /// Moves weight `γ ≤ λ_away` from the away atom to the target.
    pub fn apply_pairwise(&mut self, away: usize, target: Target, gamma: f64) -> Result<()> {
        self.check_index(away)?;
        let wa = self.weights[away];
        if !(gamma >= 0.0 && gamma <= wa * (1.0 + 1e-12)) {
            return Err(Error::contract(format!(
                "pairwise step {gamma} exceeds the away weight {wa}"
            )));
        }
        if gamma == 0.0 {
            return Ok(());
        }
        let s = match target {
            Target::Existing(s) => {
                self.check_index(s)?;
                s
            }
            Target::New(atom) => self.insert(atom)?,
        };
        if s == away {
            return Ok(());
        }
        let gamma = gamma.min(wa);
        self.weights[away] = if gamma == wa { 0.0 } else { wa - gamma };
        self.weights[s] += gamma;
        self.atoms[away].add_scaled_to(-gamma, &mut self.x);
        self.atoms[s].add_scaled_to(gamma, &mut self.x);
        self.log(SetEvent::Pairwise { a: away, s, gamma });
        self.finish()
    }

    /// Replaces all weights (e.g. after a correction step).
    pub fn replace_weights(&mut self, weights: &[f64]) -> Result<()> {
        check_dim(self.len(), weights.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::contract("replacement weights must be nonnegative"));
        }
        if !weights.iter().any(|w| *w > WEIGHT_FLOOR) {
            return Err(Error::contract("replacement weights are all zero"));
        }
        self.weights.copy_from_slice(weights);
        self.drop_small();
        self.rematerialize();
        self.bump();
        Ok(())
    }

    /// Normalizes the weights and recomputes the iterate from the atoms.
    pub fn rematerialize(&mut self) {
        let sum: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= sum;
        }
        self.x.fill(0.0);
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            a.add_scaled_to(*w, &mut self.x);
        }
        self.log(SetEvent::Reweighted);
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "atom index {i} out of range for {} atoms",
                self.len()
            )))
        }
    }

    /// Removes atoms below the floor, keeping the iterate consistent.
    /// Returns whether any atom had a nonzero weight removed.
    fn drop_small(&mut self) -> bool {
        let mut nonzero = false;
        let mut i = self.len();
        while i > 0 {
            i -= 1;
            if self.weights[i] < WEIGHT_FLOOR && self.len() > 1 {
                let w = self.weights[i];
                if w != 0.0 {
                    self.atoms[i].add_scaled_to(-w, &mut self.x);
                    nonzero = true;
                }
                self.atoms.remove(i);
                self.weights.remove(i);
                self.log(SetEvent::Removed(i));
            }
        }
        nonzero
    }

    fn bump(&mut self) {
        self.mutations += 1;
        if self.mutations % REMATERIALIZE_EVERY == 0 {
            self.rematerialize();
        }
    }

    fn finish(&mut self) -> Result<()> {
        let dropped = self.drop_small();
        let sum: f64 = self.weights.iter().sum();
        if dropped || (sum - 1.0).abs() > 1e-13 {
            for w in &mut self.weights {
                *w /= sum;
            }
            for xi in &mut self.x {
                *xi /= sum;
            }
            self.log(SetEvent::Reweighted);
        }
        self.bump();
        Ok(())
    }
}

pub(crate) fn extremes_of(values: &[f64]) -> Result<Extremes> {
    if values.is_empty() {
        return Err(Error::contract("argminmax over an empty active set"));
    }
    let (mut lo, mut hi) = (0, 0);
    for (i, &v) in values.iter().enumerate() {
        if v < values[lo] {
            lo = i;
        }
        if v > values[hi] {
            hi = i;
        }
    }
    Ok(Extremes {
        away: hi,
        away_value: values[hi],
        local_fw: lo,
        local_fw_value: values[lo],
    })
}
