//! Quadratic fitting problems.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{origin_start, stream, ProblemInstance, ProblemKind, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, matvec, matvec_t};
use crate::lmo::{
    BirkhoffOracle, KSparseOracle, LinearOracle, NuclearBallOracle, SimplexOracle,
    SpectraplexOracle,
};
use crate::objective::{Objective, QuadraticObjective};

fn normals(seed: u64, k: u64, len: usize) -> Vec<f64> {
    let mut rng = stream(seed, k);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Row-major `n × n` 0/1 mask with roughly `missing` of the entries absent.
/// With `symmetric`, entry `(i, j)` is present iff `(j, i)` is.
fn mask(n: usize, missing: f64, symmetric: bool, seed: u64, k: u64) -> Vec<f64> {
    let mut rng = stream(seed, k);
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if symmetric && j < i {
                m[i * n + j] = m[j * n + i];
            } else if rng.random::<f64>() >= missing {
                m[i * n + j] = 1.0;
            }
        }
    }
    m
}

/// `½ Σ_P (x − y)²` with `P` given by a 0/1 mask.
fn masked_fit(mask: Vec<f64>, y: &[f64]) -> QuadraticObjective {
    let b: Vec<f64> = mask.iter().zip(y).map(|(m, y)| -m * y).collect();
    let c = 0.5 * mask.iter().zip(y).map(|(m, y)| m * y * y).sum::<f64>();
    QuadraticObjective::diagonal(mask, b, c)
}

fn instance(
    spec: ProblemSpec,
    objective: impl Objective + 'static,
    lmo: impl LinearOracle + 'static,
) -> Result<ProblemInstance> {
    let objective: Arc<dyn Objective> = Arc::new(objective);
    let lmo: Arc<dyn LinearOracle> = Arc::new(lmo);
    let start = origin_start(objective.as_ref(), lmo.as_ref())?;
    Ok(ProblemInstance {
        spec,
        objective,
        lmo,
        start,
    })
}

fn spec(kind: ProblemKind, params: &[(&str, String)], seed: u64) -> ProblemSpec {
    params
        .iter()
        .fold(ProblemSpec::new(kind).with_seed(seed), |s, (k, v)| {
            s.set(k, v).expect("generator parameters are valid")
        })
}

/// `(1/n²)‖X − X̃‖²` over the Birkhoff polytope, `X̃` uniform in `(0, 1)`.
pub fn gen_birkhoff(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::contract("birkhoff needs n ≥ 2"));
    }
    let mut rng = stream(seed, 1);
    let target: Vec<f64> = (0..n * n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        })
        .collect();
    let s = 2.0 / (n * n) as f64;
    instance(
        spec(ProblemKind::Birkhoff, &[("n", n.to_string())], seed),
        QuadraticObjective::scaled_distance(s, &target),
        BirkhoffOracle::new(n),
    )
}

/// `(1/m)‖Ax + b‖²` over the probability simplex, Gaussian `A` and `b`.
pub fn gen_simplex_ls(m: usize, n: usize, seed: u64) -> Result<ProblemInstance> {
    if m == 0 || n == 0 {
        return Err(Error::contract("simplex_ls needs m, n ≥ 1"));
    }
    let a = normals(seed, 1, m * n);
    let b = normals(seed, 2, m);
    let mut inst = simplex_ls_from(a, b, n)?;
    inst.spec = inst.spec.with_seed(seed);
    Ok(inst)
}

/// Least squares over the simplex from explicit row-major `A` (`m × n`) and `b`.
pub fn simplex_ls_from(a: Vec<f64>, b: Vec<f64>, n: usize) -> Result<ProblemInstance> {
    let m = b.len();
    if m == 0 || n == 0 || a.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            found: a.len(),
        });
    }
    let w = 2.0 / m as f64;
    let mut lin = vec![0.0; n];
    matvec_t(&a, m, n, &b, &mut lin);
    lin.iter_mut().for_each(|v| *v *= w);
    let c = dot(&b, &b) / m as f64;
    let obj = QuadraticObjective::new(lin, c, move |x, out| {
        let mut ax = vec![0.0; m];
        matvec(&a, m, n, x, &mut ax);
        matvec_t(&a, m, n, &ax, out);
        out.iter_mut().for_each(|v| *v *= w);
    });
    instance(
        spec(
            ProblemKind::SimplexLs,
            &[("m", m.to_string()), ("n", n.to_string())],
            0,
        ),
        obj,
        SimplexOracle::new(n, 1.0),
    )
}

/// `‖x − y‖²` over `B₁(K) ∩ B∞`, `y = x̃/‖x̃‖₁` with `x̃ ∈ {1..100}ⁿ`.
pub fn gen_ksparse_projection(n: usize, k: usize, seed: u64) -> Result<ProblemInstance> {
    if k == 0 || k >= n {
        return Err(Error::contract("ksparse needs 1 ≤ K < n"));
    }
    let mut rng = stream(seed, 1);
    let raw: Vec<f64> = (0..n)
        .map(|_| rng.random_range(1..=100u32) as f64)
        .collect();
    let total: f64 = raw.iter().sum();
    let y: Vec<f64> = raw.iter().map(|v| v / total).collect();
    instance(
        spec(
            ProblemKind::KSparse,
            &[("n", n.to_string()), ("k", k.to_string())],
            seed,
        ),
        QuadraticObjective::scaled_distance(2.0, &y),
        KSparseOracle::new(n, k, 1.0),
    )
}

/// Matrix completion over the nuclear-norm ball. `X̃ = UVᵀ` with Gaussian
/// `n × k` factors; `tau` defaults to 1.25‖X̃‖_nuc.
pub fn gen_nuclear(
    n: usize,
    k: usize,
    tau: Option<f64>,
    missing: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if k == 0 || k > n {
        return Err(Error::contract("nuclear needs 1 ≤ k ≤ n"));
    }
    if !(0.0..1.0).contains(&missing) {
        return Err(Error::contract("missing fraction must lie in [0, 1)"));
    }
    let u = DMatrix::from_row_slice(n, k, &normals(seed, 1, n * k));
    let v = DMatrix::from_row_slice(n, k, &normals(seed, 2, n * k));
    let target = &u * v.transpose();
    let nuc: f64 = target.singular_values().sum();
    let explicit = tau;
    let tau = tau.unwrap_or(1.25 * nuc);
    if !(tau > 0.0) {
        return Err(Error::contract("nuclear radius must be positive"));
    }
    let y: Vec<f64> = target.transpose().iter().copied().collect();
    let mut params = vec![("n", n.to_string()), ("k", k.to_string())];
    params.push(("missing", missing.to_string()));
    let mut s = spec(ProblemKind::Nuclear, &params, seed);
    if let Some(t) = explicit {
        s = s.set("tau", t)?;
    }
    instance(
        s,
        masked_fit(mask(n, missing, false, seed, 3), &y),
        NuclearBallOracle::new(n, n, tau),
    )
}

/// Symmetric matrix completion over the spectraplex of trace `tau`.
/// `Y = tau·WWᵀ/tr(WWᵀ)` with Gaussian `W`, so `Y` is feasible.
pub fn gen_spectrahedron(n: usize, tau: f64, missing: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::contract("spectrahedron needs n ≥ 1"));
    }
    if !(1.0..=8.0).contains(&tau) {
        return Err(Error::contract("spectrahedron trace must lie in [1, 8]"));
    }
    if !(0.0..1.0).contains(&missing) {
        return Err(Error::contract("missing fraction must lie in [0, 1)"));
    }
    let w = DMatrix::from_row_slice(n, n, &normals(seed, 1, n * n));
    let g = &w * w.transpose();
    let y: Vec<f64> = (&g * (tau / g.trace())).iter().copied().collect();
    let params = [
        ("n", n.to_string()),
        ("tau", tau.to_string()),
        ("missing", missing.to_string()),
    ];
    instance(
        spec(ProblemKind::Spectrahedron, &params, seed),
        masked_fit(mask(n, missing, true, seed, 2), &y),
        SpectraplexOracle::new(n, tau),
    )
}
