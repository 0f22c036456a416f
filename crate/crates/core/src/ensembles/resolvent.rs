//! Centered resolvents `M(λ) = (λI - J)⁻¹ - (Tr(λI - J)⁻¹ / N) I`.

use std::sync::Arc;

use super::{Kernel, MatrixOperator};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, hutchinson_trace, lanczos_extremes};
use crate::rng::{self, Domain};

/// Relative residual for every resolvent solve.
pub const CG_TOL: f64 = 1e-10;
/// Required gap between `λ` and the top of the spectrum.
pub const SPECTRAL_MARGIN: f64 = 1e-3;
/// Probes for the trace when it cannot be computed exactly.
pub const TRACE_PROBES: usize = 64;

#[derive(Debug)]
struct ResolventKernel {
    j: MatrixOperator,
    lambda: f64,
    mean_trace: f64,
}

impl ResolventKernel {
    fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.j.dim();
        let (x, _) = conjugate_gradient(
            |p, out| {
                self.j.apply_into(p, out)?;
                for (o, x) in out.iter_mut().zip(p) {
                    *o = self.lambda * x - *o;
                }
                Ok(())
            },
            v,
            CG_TOL,
            10 * n,
        )?;
        Ok(x)
    }
}

impl Kernel for ResolventKernel {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let x = self.solve(v)?;
        for ((o, xi), vi) in out.iter_mut().zip(&x).zip(v) {
            *o = xi - self.mean_trace * vi;
        }
        Ok(())
    }
}

fn domain_check(lambda: f64, top: f64, label: &str) -> Result<()> {
    if !(lambda > top + SPECTRAL_MARGIN) {
        return Err(Error::Domain(format!(
            "resolvent point {lambda} is not above the spectrum of {label} (top eigenvalue {top}, \
             margin {SPECTRAL_MARGIN})"
        )));
    }
    Ok(())
}

/// Centered resolvent applied by conjugate gradient. The trace is exact
/// when the spectrum is known or the coupling is dense; otherwise it is a
/// Hutchinson estimate over [`TRACE_PROBES`] probes and the top eigenvalue
/// comes from Lanczos.
pub fn centered_resolvent(
    j: &MatrixOperator,
    lambda: f64,
    sigma_psi_sq: f64,
) -> Result<MatrixOperator> {
    let n = j.dim();
    let seed = j.seed().unwrap_or(0);
    let (mean_trace, spectrum) = match j.eigenvalues() {
        Some(ev) => {
            let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            domain_check(lambda, top, j.label())?;
            let inv: Vec<f64> = ev.iter().map(|&x| 1.0 / (lambda - x)).collect();
            let mean = inv.iter().sum::<f64>() / n as f64;
            let spec: Arc<[f64]> = inv.iter().map(|x| x - mean).collect();
            (mean, Some(spec))
        }
        None => {
            let ext = lanczos_extremes(
                |v, out| j.apply_into(v, out),
                n,
                1e-10,
                400,
                &mut rng::stream(seed, Domain::Lanczos),
            )?;
            domain_check(lambda, ext.max, j.label())?;
            let raw = ResolventKernel {
                j: j.clone(),
                lambda,
                mean_trace: 0.0,
            };
            let est = hutchinson_trace(
                |v, out| raw.apply(v, out),
                n,
                TRACE_PROBES,
                &mut rng::stream(seed, Domain::Probes),
            )?;
            (est.value, None)
        }
    };
    let kernel = Arc::new(ResolventKernel {
        j: j.clone(),
        lambda,
        mean_trace,
    });
    MatrixOperator::from_kernel(
        n,
        kernel,
        sigma_psi_sq,
        format!("resolvent[{}](lambda={lambda})", j.label()),
        j.seed(),
        spectrum,
    )
}

/// For `J² = I`: `M(λ) = (J - (Tr J / N) I) / (λ² - 1)`, with no solves.
pub fn involution_resolvent(j: &MatrixOperator, lambda: f64) -> Result<MatrixOperator> {
    if !j.is_involution() {
        return Err(Error::InvalidArgument(format!(
            "{} is not known to square to the identity",
            j.label()
        )));
    }
    domain_check(lambda, 1.0, j.label())?;
    let n = j.dim() as f64;
    let m = j.exact_trace().unwrap_or(0.0) / n;
    let d = lambda * lambda - 1.0;
    let s2 = (1.0 - m * m) / (d * d);
    Ok(j.affine(
        -m / d,
        1.0 / d,
        s2,
        format!("resolvent[{}](lambda={lambda})", j.label()),
    ))
}

/// Centered resolvent through the operator's factored eigenbasis.
pub fn spectral_resolvent(j: &MatrixOperator, lambda: f64) -> Result<MatrixOperator> {
    let ev = j
        .known_spectrum()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no known spectrum", j.label())))?;
    let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    domain_check(lambda, top, j.label())?;
    let n = j.dim() as f64;
    let mean = ev.iter().map(|&x| 1.0 / (lambda - x)).sum::<f64>() / n;
    let f = |x: f64| 1.0 / (lambda - x) - mean;
    let kernel = j.kernel().map_spectrum(&f).ok_or_else(|| {
        Error::InvalidArgument(format!("{} has no factored eigenbasis", j.label()))
    })?;
    let spec: Arc<[f64]> = ev.iter().map(|&x| f(x)).collect();
    let s2 = spec.iter().map(|x| x * x).sum::<f64>() / n;
    MatrixOperator::from_kernel(
        j.dim(),
        kernel,
        s2,
        format!("resolvent[{}](lambda={lambda})", j.label()),
        j.seed(),
        Some(spec),
    )
}
