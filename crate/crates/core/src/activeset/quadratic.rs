use super::{extremes_of, ActiveSet, Extremes, SetEvent};
use crate::error::{check_dim, Error, Result};
use crate::linalg::dot;
use crate::objective::Quadratic;

/// Inner-product tables for an active set under `f(x) = ½xᵀAx + bᵀx + c`.
///
/// `gram[i][j] = ⟨Av_j, v_i⟩`, `bdot[i] = ⟨b, v_i⟩` and
/// `gdot[i] = ⟨∇f(x), v_i⟩`, the last one updated incrementally.
#[derive(Debug, Clone)]
pub struct QuadCache {
    gram: Vec<Vec<f64>>,
    bdot: Vec<f64>,
    gdot: Vec<f64>,
    /// `gdot[i]` must be recomputed from the final weights.
    stale: Vec<bool>,
}

impl QuadCache {
    /// Builds the tables and starts journaling on `aset`.
    pub fn new(q: &dyn Quadratic, aset: &mut ActiveSet) -> Result<Self> {
        check_dim(q.dim(), aset.dim())?;
        aset.enable_journal();
        aset.take_journal();
        let mut cache = Self {
            gram: Vec::new(),
            bdot: Vec::new(),
            gdot: Vec::new(),
            stale: Vec::new(),
        };
        cache.rebuild(q, aset);
        Ok(cache)
    }

    fn rebuild(&mut self, q: &dyn Quadratic, aset: &ActiveSet) {
        self.gram.clear();
        self.bdot.clear();
        self.gdot.clear();
        self.stale.clear();
        for k in 0..aset.len() {
            self.push_column(q, aset, k);
        }
        self.refresh_stale(aset);
    }

    /// Adds table entries for atom `k`, which must be the next unseen one.
    fn push_column(&mut self, q: &dyn Quadratic, aset: &ActiveSet, k: usize) {
        debug_assert_eq!(self.gram.len(), k);
        let atoms = aset.atoms();
        let mut av = vec![0.0; aset.dim()];
        q.apply(&atoms[k].to_dense(), &mut av);
        let col: Vec<f64> = (0..=k).map(|i| atoms[i].dot(&av)).collect();
        for (i, row) in self.gram.iter_mut().enumerate() {
            row.push(col[i]);
        }
        self.gram.push(col);
        self.bdot.push(atoms[k].dot(q.linear()));
        self.gdot.push(f64::NAN);
        self.stale.push(true);
    }

    fn refresh_stale(&mut self, aset: &ActiveSet) {
        let w = aset.weights();
        for i in 0..self.gdot.len() {
            if self.stale[i] {
                self.gdot[i] = dot(&self.gram[i], w) + self.bdot[i];
                self.stale[i] = false;
            }
        }
    }

    /// Replays the journal of `aset` onto the tables.
    pub fn sync(&mut self, q: &dyn Quadratic, aset: &mut ActiveSet) {
        for event in aset.take_journal() {
            match event {
                SetEvent::Inserted => {
                    let k = self.gram.len();
                    self.push_column(q, aset, k);
                }
                SetEvent::Toward { j, gamma } => {
                    for i in 0..self.gdot.len() {
                        self.gdot[i] = (1.0 - gamma) * (self.gdot[i] - self.bdot[i])
                            + gamma * self.gram[i][j]
                            + self.bdot[i];
                    }
                }
                SetEvent::Away { j, gamma } => {
                    for i in 0..self.gdot.len() {
                        self.gdot[i] = (1.0 + gamma) * (self.gdot[i] - self.bdot[i])
                            - gamma * self.gram[i][j]
                            + self.bdot[i];
                    }
                }
                SetEvent::Pairwise { a, s, gamma } => {
                    for i in 0..self.gdot.len() {
                        self.gdot[i] -= gamma * (self.gram[i][a] - self.gram[i][s]);
                    }
                }
                SetEvent::Removed(k) => {
                    self.gram.remove(k);
                    for row in &mut self.gram {
                        row.remove(k);
                    }
                    self.bdot.remove(k);
                    self.gdot.remove(k);
                    self.stale.remove(k);
                }
                SetEvent::Reweighted => self.stale.fill(true),
                SetEvent::Reset => {
                    self.gram.clear();
                    self.bdot.clear();
                    self.gdot.clear();
                    self.stale.clear();
                    for k in 0..aset.len() {
                        self.push_column(q, aset, k);
                    }
                }
            }
        }
        self.refresh_stale(aset);
    }

    pub fn len(&self) -> usize {
        self.gdot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gdot.is_empty()
    }

    /// Cached `⟨∇f(x), v_i⟩` for every atom.
    pub fn gradient_products(&self) -> &[f64] {
        &self.gdot
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn linear_products(&self) -> &[f64] {
        &self.bdot
    }

    /// Away and local FW atoms from the cached products.
    pub fn argminmax(&self) -> Result<Extremes> {
        extremes_of(&self.gdot)
    }

    /// Largest relative deviation `|cached − ⟨grad, v_i⟩| / (1 + |⟨grad, v_i⟩|)`.
    pub fn max_drift(&self, grad: &[f64], aset: &ActiveSet) -> f64 {
        aset.atoms()
            .iter()
            .zip(&self.gdot)
            .map(|(a, c)| {
                let direct = a.dot(grad);
                (c - direct).abs() / (1.0 + direct.abs())
            })
            .fold(0.0, f64::max)
    }

    /// `½λᵀGλ + λᵀ bdot`, i.e. `f(Σλ_k v_k) − c`.
    pub fn weight_objective(&self, lambda: &[f64]) -> f64 {
        let quad: f64 = self
            .gram
            .iter()
            .zip(lambda)
            .map(|(row, li)| li * dot(row, lambda))
            .sum();
        0.5 * quad + dot(lambda, &self.bdot)
    }
}

/// When and how the linear-solve correction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectionConfig {
    /// Run the correction every `trigger_interval`-th iteration.
    pub trigger_interval: usize,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            trigger_interval: 100,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trigger_interval == 0 {
            return Err(Error::contract("trigger interval must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionKind {
    /// Fewer than two atoms, a near-singular system, or no decrease.
    Skipped,
    /// The affine minimizer had nonnegative weights and replaced them.
    Affine,
    /// Ratio-test step towards the affine minimizer, dropping atoms.
    Wolfe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionReport {
    pub improved: bool,
    pub kind: CorrectionKind,
    /// Solution `λ̃` of the affine system, when it was solved.
    pub affine_weights: Option<Vec<f64>>,
    pub atoms_before: usize,
    pub atoms_after: usize,
    pub value_before: f64,
    pub value_after: f64,
}

const CONDITION_LIMIT: f64 = 1e12;

/// Solves `M z = r` by Gaussian elimination with partial pivoting.
/// Returns `None` when the pivot ratio exceeds [`CONDITION_LIMIT`].
fn lu_solve(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[p][k] == 0.0 || !m[p][k].is_finite() {
            return None;
        }
        m.swap(k, p);
        r.swap(k, p);
        pivots.push(m[k][k].abs());
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                r[i] -= f * r[k];
            }
        }
    }
    let hi = pivots.iter().cloned().fold(0.0, f64::max);
    let lo = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi / lo > CONDITION_LIMIT {
        return None;
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * z[j]).sum();
        z[i] = (r[i] - s) / m[i][i];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Minimizes `f` over the affine hull of the active atoms and moves the
/// weights there, or as far as the simplex allows (Wolfe's ratio step).
pub fn quad_correction(
    aset: &mut ActiveSet,
    cache: &mut QuadCache,
    q: &dyn Quadratic,
) -> Result<CorrectionReport> {
    cache.sync(q, aset);
    let n = aset.len();
    let lambda = aset.weights().to_vec();
    let before = cache.weight_objective(&lambda);
    let mut report = CorrectionReport {
        improved: false,
        kind: CorrectionKind::Skipped,
        affine_weights: None,
        atoms_before: n,
        atoms_after: n,
        value_before: before,
        value_after: before,
    };
    if n < 2 {
        return Ok(report);
    }
    let reference = (0..n)
        .max_by(|&a, &b| lambda[a].total_cmp(&lambda[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let g = &cache.gram;
    let bd = &cache.bdot;
    let mut m = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for k in (0..n).filter(|&k| k != reference) {
        m.push(
            (0..n)
                .map(|j| g[k][j] - g[reference][j])
                .collect::<Vec<f64>>(),
        );
        r.push(bd[reference] - bd[k]);
    }
    m.push(vec![1.0; n]);
    r.push(1.0);
    let Some(tilde) = lu_solve(m, r) else {
        return Ok(report);
    };
    report.affine_weights = Some(tilde.clone());
    let (candidate, kind) = if tilde.iter().all(|&v| v >= 0.0) {
        (tilde, CorrectionKind::Affine)
    } else {
        let mut theta = f64::INFINITY;
        let mut block = 0;
        for k in 0..n {
            if tilde[k] < 0.0 {
                let ratio = lambda[k] / (lambda[k] - tilde[k]);
                if ratio < theta {
                    theta = ratio;
                    block = k;
                }
            }
        }
        let mut w: Vec<f64> = lambda
            .iter()
            .zip(&tilde)
            .map(|(l, t)| ((1.0 - theta) * l + theta * t).max(0.0))
            .collect();
        w[block] = 0.0;
        (w, CorrectionKind::Wolfe)
    };
    let sum: f64 = candidate.iter().sum();
    let normalized: Vec<f64> = candidate.iter().map(|v| v / sum).collect();
    let after = cache.weight_objective(&normalized);
    let removes = kind == CorrectionKind::Wolfe;
    if !(after <= before + 1e-12 * (1.0 + before.abs())) || (after >= before && !removes) {
        return Ok(report);
    }
    aset.replace_weights(&normalized)?;
    cache.sync(q, aset);
    report.kind = kind;
    report.improved = after < before;
    report.atoms_after = aset.len();
    report.value_after = cache.weight_objective(aset.weights());
    Ok(report)
}
