//! Seeded benchmark problems.
//!
//! Every instance is addressed by a canonical id such as
//! `simplex_ls:m=50,n=100,seed=7`. Omitted parameters take desk-scale
//! defaults. Random tensors are drawn from independent SplitMix64 streams
//! derived from the seed, so regeneration is bitwise reproducible.

mod design;
mod fits;
mod poisson;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub use design::{
    a_criterion_from, d_criterion_from, gen_a_criterion, gen_d_criterion, Criterion,
    DesignObjective,
};
pub use fits::{
    gen_birkhoff, gen_ksparse_projection, gen_nuclear, gen_simplex_ls, gen_spectrahedron,
    simplex_ls_from,
};
pub use poisson::{gen_poisson, poisson_from, PoissonObjective, EXP_CLIP};

use crate::activeset::ActiveSet;
use crate::error::{Error, Result};
use crate::lmo::LinearOracle;
use crate::objective::Objective;

pub const DEFAULT_MISSING_FRACTION: f64 = 0.5;
pub const DEFAULT_POISSON_ALPHA: f64 = 0.1;
pub const DEFAULT_POISSON_BOUND: f64 = 10.0;
/// Samples per feature when `n_samples` is not given.
pub const DEFAULT_SAMPLES_PER_FEATURE: usize = 5;

/// Independent random stream number `k` of `seed`.
pub(crate) fn stream(seed: u64, k: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// A generated problem: objective, oracle and a default starting decomposition.
#[derive(Clone)]
pub struct ProblemInstance {
    pub spec: ProblemSpec,
    pub objective: Arc<dyn Objective>,
    pub lmo: Arc<dyn LinearOracle>,
    /// Starting active set; point-based solvers start from its iterate.
    pub start: ActiveSet,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("id", &self.spec.to_string())
            .field("dim", &self.objective.dim())
            .field("lmo", &self.lmo.name())
            .finish()
    }
}

impl ProblemInstance {
    pub fn id(&self) -> String {
        self.spec.to_string()
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn is_quadratic(&self) -> bool {
        self.objective.quadratic().is_some()
    }

    pub fn x0(&self) -> Vec<f64> {
        self.start.x().to_vec()
    }
}

/// Vertex minimizing the gradient at the origin, the usual starting point.
pub(crate) fn origin_start(obj: &dyn Objective, lmo: &dyn LinearOracle) -> Result<ActiveSet> {
    let n = obj.dim();
    let mut g = vec![0.0; n];
    obj.gradient_into(&vec![0.0; n], &mut g);
    Ok(ActiveSet::singleton(lmo.extreme_point(&g)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    Birkhoff,
    Nuclear,
    ACriterion,
    DCriterion,
    Poisson,
    SimplexLs,
    KSparse,
    Spectrahedron,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::Birkhoff,
        ProblemKind::Nuclear,
        ProblemKind::ACriterion,
        ProblemKind::DCriterion,
        ProblemKind::Poisson,
        ProblemKind::SimplexLs,
        ProblemKind::KSparse,
        ProblemKind::Spectrahedron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Birkhoff => "birkhoff",
            ProblemKind::Nuclear => "nuclear",
            ProblemKind::ACriterion => "a_criterion",
            ProblemKind::DCriterion => "d_criterion",
            ProblemKind::Poisson => "poisson",
            ProblemKind::SimplexLs => "simplex_ls",
            ProblemKind::KSparse => "ksparse",
            ProblemKind::Spectrahedron => "spectrahedron",
        }
    }

    /// Parameter names with their defaults, in canonical order. `None`
    /// marks an optional parameter that is omitted when unset.
    fn params(self) -> &'static [(&'static str, Option<&'static str>)] {
        match self {
            ProblemKind::Birkhoff => &[("n", Some("6")), ("seed", Some("0"))],
            ProblemKind::Nuclear => &[
                ("n", Some("8")),
                ("k", Some("2")),
                ("tau", None),
                ("missing", Some("0.5")),
                ("seed", Some("0")),
            ],
            ProblemKind::ACriterion | ProblemKind::DCriterion => {
                &[("m", Some("30")), ("n", Some("5")), ("seed", Some("0"))]
            }
            ProblemKind::Poisson => &[
                ("n_features", Some("10")),
                ("n_samples", None),
                ("alpha", Some("0.1")),
                ("bound", Some("10")),
                ("seed", Some("0")),
            ],
            ProblemKind::SimplexLs => &[("m", Some("50")), ("n", Some("100")), ("seed", Some("0"))],
            ProblemKind::KSparse => &[("n", Some("20")), ("k", Some("3")), ("seed", Some("0"))],
            ProblemKind::Spectrahedron => &[
                ("n", Some("8")),
                ("tau", Some("2")),
                ("missing", Some("0.5")),
                ("seed", Some("0")),
            ],
        }
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::ProblemId {
                id: s.to_string(),
                reason: "unknown problem".into(),
            })
    }
}

/// Parsed problem id: a kind plus its full parameter list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    params: BTreeMap<String, String>,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        let params = kind
            .params()
            .iter()
            .filter_map(|(k, d)| d.map(|d| (k.to_string(), d.to_string())))
            .collect();
        Self { kind, params }
    }

    /// Sets a parameter, checking the name and that the value parses as a number.
    pub fn set(mut self, key: &str, value: impl ToString) -> Result<Self> {
        let value = value.to_string();
        if !self.kind.params().iter().any(|(k, _)| *k == key) {
            return Err(self.id_error(format!("unknown parameter `{key}`")));
        }
        if value.parse::<f64>().is_err() {
            return Err(self.id_error(format!("parameter `{key}` is not a number")));
        }
        self.params.insert(key.to_string(), value);
        Ok(self)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        self.set("seed", seed).expect("every problem takes a seed")
    }

    pub fn seed(&self) -> u64 {
        self.get_usize("seed").unwrap_or(0) as u64
    }

    fn id_error(&self, reason: String) -> Error {
        Error::ProblemId {
            id: self.to_string(),
            reason,
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(|v| v.parse().ok())
    }

    fn get_usize(&self, key: &str) -> Result<usize> {
        let raw = self
            .params
            .get(key)
            .ok_or_else(|| self.id_error(format!("missing `{key}`")))?;
        raw.parse()
            .map_err(|_| self.id_error(format!("`{key}` must be a nonnegative integer")))
    }

    fn need(&self, key: &str) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| self.id_error(format!("missing `{key}`")))
    }

    /// Size descriptor without the seed, e.g. `m=50,n=100`.
    pub fn dimension_label(&self) -> String {
        self.render(false)
    }

    fn render(&self, with_seed: bool) -> String {
        self.kind
            .params()
            .iter()
            .filter(|(k, _)| with_seed || *k != "seed")
            .filter_map(|(k, _)| self.params.get(*k).map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let seed = self.seed();
        let mut inst = match self.kind {
            ProblemKind::Birkhoff => gen_birkhoff(self.get_usize("n")?, seed),
            ProblemKind::Nuclear => gen_nuclear(
                self.get_usize("n")?,
                self.get_usize("k")?,
                self.get("tau"),
                self.need("missing")?,
                seed,
            ),
            ProblemKind::ACriterion => {
                gen_a_criterion(self.get_usize("m")?, self.get_usize("n")?, seed)
            }
            ProblemKind::DCriterion => {
                gen_d_criterion(self.get_usize("m")?, self.get_usize("n")?, seed)
            }
            ProblemKind::Poisson => {
                let p = self.get_usize("n_features")?;
                let s = match self.params.get("n_samples") {
                    Some(_) => self.get_usize("n_samples")?,
                    None => DEFAULT_SAMPLES_PER_FEATURE * p,
                };
                gen_poisson(s, p, self.need("alpha")?, self.need("bound")?, seed)
            }
            ProblemKind::SimplexLs => {
                gen_simplex_ls(self.get_usize("m")?, self.get_usize("n")?, seed)
            }
            ProblemKind::KSparse => {
                gen_ksparse_projection(self.get_usize("n")?, self.get_usize("k")?, seed)
            }
            ProblemKind::Spectrahedron => gen_spectrahedron(
                self.get_usize("n")?,
                self.need("tau")?,
                self.need("missing")?,
                seed,
            ),
        }
        .map_err(|e| match e {
            Error::Contract(reason) => self.id_error(reason),
            other => other,
        })?;
        inst.spec = self.clone();
        Ok(inst)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.render(true))
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let kind: ProblemKind = name.parse().map_err(|_| Error::ProblemId {
            id: s.to_string(),
            reason: format!("unknown problem `{name}`"),
        })?;
        let mut spec = ProblemSpec::new(kind);
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::ProblemId {
                id: s.to_string(),
                reason: format!("expected key=value, found `{part}`"),
            })?;
            spec = spec.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::ProblemId { reason, .. } => Error::ProblemId {
                    id: s.to_string(),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(spec)
    }
}

/// Builds the instance named by `id`.
pub fn generate(id: &str) -> Result<ProblemInstance> {
    id.parse::<ProblemSpec>()?.build()
}

/// The desk-scale grid: one spec per problem kind.
pub fn desk_scale() -> Vec<ProblemSpec> {
    ProblemKind::ALL.into_iter().map(ProblemSpec::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::finite_difference_error;
    use rand::Rng;

    #[test]
    fn ids_round_trip_and_default() {
        let s: ProblemSpec = "simplex_ls:m=50,n=100,seed=7".parse().unwrap();
        assert_eq!(s.to_string(), "simplex_ls:m=50,n=100,seed=7");
        assert_eq!(s.dimension_label(), "m=50,n=100");
        let s: ProblemSpec = "ksparse:seed=3".parse().unwrap();
        assert_eq!(s.to_string(), "ksparse:n=20,k=3,seed=3");
        let s: ProblemSpec = "nuclear".parse().unwrap();
        assert_eq!(s.to_string(), "nuclear:n=8,k=2,missing=0.5,seed=0");
        assert_eq!(s.clone().with_seed(9).seed(), 9);
        for bad in ["nope", "birkhoff:x=1", "birkhoff:n", "birkhoff:n=abc"] {
            assert!(
                matches!(bad.parse::<ProblemSpec>(), Err(Error::ProblemId { .. })),
                "{bad}"
            );
        }
        assert!(generate("birkhoff:n=1.5").is_err());
        assert!(generate("ksparse:n=5,k=5").is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        for spec in desk_scale() {
            let a = spec.clone().with_seed(11).build().unwrap();
            let b = spec.clone().with_seed(11).build().unwrap();
            let c = spec.clone().with_seed(12).build().unwrap();
            let x = a.x0();
            let mut ga = vec![0.0; a.dim()];
            let mut gb = vec![0.0; a.dim()];
            let mut gc = vec![0.0; a.dim()];
            a.objective.gradient_into(&x, &mut ga);
            b.objective.gradient_into(&x, &mut gb);
            c.objective.gradient_into(&x, &mut gc);
            assert_eq!(
                ga.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                gb.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                "{spec}"
            );
            assert_eq!(
                a.objective.value(&x).to_bits(),
                b.objective.value(&x).to_bits()
            );
            assert_ne!(ga, gc, "{spec}");
            assert_eq!(a.id(), spec.clone().with_seed(11).to_string());
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for spec in desk_scale() {
            let inst = spec.build().unwrap();
            let lmo = inst.lmo.clone();
            let n = inst.dim();
            let mut rng = stream(99, 1);
            for _ in 0..5 {
                // Random feasible point: mix of the start and three random vertices.
                let mut x: Vec<f64> = inst.x0().iter().map(|v| 0.4 * v).collect();
                for _ in 0..3 {
                    let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    lmo.extreme_point(&g).unwrap().add_scaled_to(0.2, &mut x);
                }
                assert!(inst.objective.in_domain(&x), "{spec}");
                let err = finite_difference_error(inst.objective.as_ref(), &x, 1e-6);
                assert!(err <= 1e-5, "{spec}: {err}");
            }
        }
    }

    #[test]
    fn quadratic_instances_are_exact() {
        for spec in desk_scale() {
            let inst = spec.build().unwrap();
            let Some(q) = inst.objective.quadratic() else {
                continue;
            };
            let n = inst.dim();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut ax = vec![0.0; n];
            q.apply(&x, &mut ax);
            let mut g = vec![0.0; n];
            inst.objective.gradient_into(&x, &mut g);
            for i in 0..n {
                assert_eq!(g[i], ax[i] + q.linear()[i], "{spec}");
            }
        }
    }

    #[test]
    fn starts_are_feasible() {
        for spec in desk_scale() {
            let inst = spec.build().unwrap();
            assert!(inst.lmo.contains(&inst.x0(), 1e-9), "{spec}");
            assert!(inst.objective.in_domain(&inst.x0()), "{spec}");
        }
    }
}
