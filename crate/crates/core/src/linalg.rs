//! Dense slice kernels shared by the oracles, step rules and active sets.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, y: &mut [f64]) {
    for yi in y.iter_mut() {
        *yi *= alpha;
    }
}

/// `out = x - gamma * d`
#[inline]
pub fn step_point(x: &[f64], d: &[f64], gamma: f64, out: &mut [f64]) {
    for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
        *o = xi - gamma * di;
    }
}

/// Row-major `rows x cols` matrix times vector.
pub fn matvec(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate().take(rows) {
        *o = dot(&m[i * cols..(i + 1) * cols], v);
    }
}

/// Row-major `rows x cols` matrix transposed times vector.
pub fn matvec_t(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    out[..cols].fill(0.0);
    for i in 0..rows {
        axpy(v[i], &m[i * cols..(i + 1) * cols], &mut out[..cols]);
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Index of the smallest entry; the first one wins on ties.
pub fn argmin(a: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in a.iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the largest entry; the first one wins on ties.
pub fn argmax(a: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in a.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
