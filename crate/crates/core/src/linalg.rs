//! Small dense-vector kernels plus the matrix-free solvers the operators need:
//! conjugate gradient, Lanczos extreme eigenvalues and Hutchinson traces.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A` given as a matvec.
/// Fails with a numeric error if the relative residual is not reached within
/// `max_iter` iterations.
pub fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgStats)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = norm_sq(&r);
    for it in 1..=max_iter {
        apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numeric(format!(
                "conjugate gradient met a non-positive curvature {pap:e} at iteration {it}"
            )));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = norm_sq(&r);
        let rel = rr_new.sqrt() / b_norm;
        if rel <= tol {
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Err(Error::Numeric(format!(
        "conjugate gradient did not reach relative residual {tol:e} in {max_iter} iterations \
         (last {:e})",
        rr.sqrt() / b_norm
    )))
}

#[derive(Debug, Clone, Copy)]
pub struct ExtremeEigenvalues {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ExtremeEigenvalues {
    pub fn spectral_radius(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

/// Lanczos with full reorthogonalization from a random start. Stops when both
/// Ritz extremes move by less than `tol` (relative) over ten steps, when the
/// Krylov space is exhausted, or after `max_steps`.
pub fn lanczos_extremes<F>(
    mut apply: F,
    n: usize,
    tol: f64,
    max_steps: usize,
    rng: &mut impl Rng,
) -> Result<ExtremeEigenvalues>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let max_steps = max_steps.min(n).max(1);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let q_norm = norm(&q);
    q.iter_mut().for_each(|x| *x /= q_norm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut last = (f64::NAN, f64::NAN);
    let mut last_check = 0;
    let mut scale = 0.0f64;
    loop {
        let k = basis.len();
        apply(&basis[k - 1], &mut w)?;
        let a = dot(&w, &basis[k - 1]);
        alphas.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm(&w);
        scale = scale.max(a.abs()).max(b);
        let (lo, hi) = tridiagonal_extremes(&alphas, &betas);
        let exhausted = b <= 1e-12 * scale.max(f64::MIN_POSITIVE) || k >= max_steps;
        if k - last_check >= 10 || exhausted {
            let moved = (lo - last.0).abs().max((hi - last.1).abs());
            if exhausted || moved <= tol * scale.max(1e-300) {
                return Ok(ExtremeEigenvalues {
                    min: lo,
                    max: hi,
                    steps: k,
                });
            }
            last = (lo, hi);
            last_check = k;
        }
        betas.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

fn tridiagonal_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let ev = t.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// Stochastic estimate of a normalized trace with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct TraceEstimate {
    /// Estimate of `Tr(A) / N`.
    pub value: f64,
    pub std_err: f64,
    pub probes: usize,
}

fn summarize(samples: &[f64]) -> TraceEstimate {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    TraceEstimate {
        value: mean,
        std_err: (var / k).sqrt(),
        probes: samples.len(),
    }
}

fn rademacher_probe(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Hutchinson estimate of `Tr(A)/N` from `probes` Rademacher vectors.
pub fn hutchinson_trace<F>(
    mut apply: F,
    n: usize,
    probes: usize,
    rng: &mut impl Rng,
) -> Result<TraceEstimate>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    let mut out = vec![0.0; n];
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        let v = rademacher_probe(n, rng);
        apply(&v, &mut out)?;
        samples.push(dot(&v, &out) / n as f64);
    }
    Ok(summarize(&samples))
}

/// Hutchinson estimate of `Tr(A²)/N` for symmetric `A`, using `vᵀA²v = ‖Av‖²`.
pub fn hutchinson_trace_sq<F>(
    mut apply: F,
    n: usize,
    probes: usize,
    rng: &mut impl Rng,
) -> Result<TraceEstimate>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    let mut out = vec![0.0; n];
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        let v = rademacher_probe(n, rng);
        apply(&v, &mut out)?;
        samples.push(norm_sq(&out) / n as f64);
    }
    Ok(summarize(&samples))
}
