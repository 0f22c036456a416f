//! Raw magnitudes behind the semi-random conditions: delocalization, bounded
//! operator norm, near-orthogonal rows and near-constant row norms.
//!
//! Ψ = S M S differs from M only by signs, so every quantity here is read
//! off `|M_ij|` and `(M Mᵀ)_ij` directly. No pass/fail verdict is attached;
//! the `*_ratio` helpers report each magnitude against `N^{-1/2}`.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use super::{MatrixOperator, DENSE_CAP};
use crate::error::{Error, Result};
use crate::linalg::{dot, lanczos_extremes};
use crate::rng::{self, Domain};

/// Index pairs sampled in probe mode.
pub const PROBE_PAIRS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticMode {
    Dense,
    Probe,
}

impl std::str::FromStr for DiagnosticMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "probe" => Ok(Self::Probe),
            _ => Err(Error::InvalidArgument(format!(
                "unknown diagnostic mode {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDiagnostics {
    pub dim: usize,
    pub mode: DiagnosticMode,
    pub sigma_psi_sq: f64,
    pub psi_inf_norm: f64,
    pub psi_op_norm: f64,
    pub max_offdiag_gram: f64,
    pub max_diag_gram_dev: f64,
}

impl EnsembleDiagnostics {
    pub fn inf_norm_ratio(&self) -> f64 {
        self.psi_inf_norm * (self.dim as f64).sqrt()
    }

    pub fn offdiag_ratio(&self) -> f64 {
        self.max_offdiag_gram * (self.dim as f64).sqrt()
    }

    pub fn diag_dev_ratio(&self) -> f64 {
        self.max_diag_gram_dev * (self.dim as f64).sqrt()
    }
}

impl fmt::Display for EnsembleDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dim={} mode={} sigma_psi_sq={:.16e} psi_inf_norm={:.16e} psi_op_norm={:.16e} \
             max_offdiag_gram={:.16e} max_diag_gram_dev={:.16e} inf_norm_x_sqrt_n={:.6} \
             offdiag_x_sqrt_n={:.6}",
            self.dim,
            match self.mode {
                DiagnosticMode::Dense => "dense",
                DiagnosticMode::Probe => "probe",
            },
            self.sigma_psi_sq,
            self.psi_inf_norm,
            self.psi_op_norm,
            self.max_offdiag_gram,
            self.max_diag_gram_dev,
            self.inf_norm_ratio(),
            self.offdiag_ratio(),
        )
    }
}

fn column(op: &MatrixOperator, j: usize) -> Result<Vec<f64>> {
    let mut e = vec![0.0; op.dim()];
    e[j] = 1.0;
    op.apply(&e)
}

fn op_norm(op: &MatrixOperator) -> Result<f64> {
    let seed = op.seed().unwrap_or(0);
    let ext = lanczos_extremes(
        |v, out| op.apply_into(v, out),
        op.dim(),
        1e-10,
        400,
        &mut rng::stream(seed, Domain::Lanczos),
    )?;
    Ok(ext.spectral_radius())
}

pub fn check_semi_random(op: &MatrixOperator, mode: DiagnosticMode) -> Result<EnsembleDiagnostics> {
    let n = op.dim();
    let s2 = op.sigma_psi_sq();
    let psi_op_norm = op_norm(op)?;
    match mode {
        DiagnosticMode::Dense => {
            if n > DENSE_CAP {
                return Err(Error::Resource(format!(
                    "dense diagnostics need N <= {DENSE_CAP}, got {n}"
                )));
            }
            let mut m = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                m.set_column(j, &nalgebra::DVector::from_vec(column(op, j)?));
            }
            let psi_inf_norm = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let gram = &m * m.transpose();
            let mut off = 0.0f64;
            let mut diag = 0.0f64;
            for j in 0..n {
                for i in 0..n {
                    let g = gram[(i, j)];
                    if i == j {
                        diag = diag.max((g - s2).abs());
                    } else {
                        off = off.max(g.abs());
                    }
                }
            }
            Ok(EnsembleDiagnostics {
                dim: n,
                mode,
                sigma_psi_sq: s2,
                psi_inf_norm,
                psi_op_norm,
                max_offdiag_gram: off,
                max_diag_gram_dev: diag,
            })
        }
        DiagnosticMode::Probe => {
            let mut r = rng::stream(op.seed().unwrap_or(0), Domain::Probes);
            let mut cols: HashMap<usize, Vec<f64>> = HashMap::new();
            let get = |j: usize, cols: &mut HashMap<usize, Vec<f64>>| -> Result<()> {
                if let std::collections::hash_map::Entry::Vacant(e) = cols.entry(j) {
                    e.insert(column(op, j)?);
                }
                Ok(())
            };
            let mut off = 0.0f64;
            for _ in 0..PROBE_PAIRS {
                let i = r.random_range(0..n);
                let mut j = r.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                get(i, &mut cols)?;
                get(j, &mut cols)?;
                off = off.max(dot(&cols[&i], &cols[&j]).abs());
            }
            let mut inf = 0.0f64;
            let mut diag = 0.0f64;
            for c in cols.values() {
                inf = c.iter().fold(inf, |a, x| a.max(x.abs()));
                diag = diag.max((dot(c, c) - s2).abs());
            }
            Ok(EnsembleDiagnostics {
                dim: n,
                mode,
                sigma_psi_sq: s2,
                psi_inf_norm: inf,
                psi_op_norm,
                max_offdiag_gram: off,
                max_diag_gram_dev: diag,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_signed_hadamard, build_signed_sine};

    #[test]
    fn identity_fails_delocalization_without_error() {
        let d = check_semi_random(
            &MatrixOperator::identity(32).unwrap(),
            DiagnosticMode::Dense,
        )
        .unwrap();
        assert_eq!(d.psi_inf_norm, 1.0);
        assert_eq!(d.max_offdiag_gram, 0.0);
        assert!((d.psi_op_norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn signed_sine_entries() {
        let n = 512;
        let d =
            check_semi_random(&build_signed_sine(n, 1).unwrap(), DiagnosticMode::Dense).unwrap();
        // largest |sin(2π m / L)| over integers m is cos(π / (2L)) for odd L
        let l = (2 * n + 1) as f64;
        let want = 2.0 * (std::f64::consts::PI / (2.0 * l)).cos() / l.sqrt();
        assert!((d.psi_inf_norm - want).abs() < 1e-12);
        assert!((d.psi_inf_norm - 2.0 / l.sqrt()).abs() < 1e-6);
        assert!(d.max_diag_gram_dev <= 1e-10);
        assert!(d.max_offdiag_gram <= 1e-10);
    }

    #[test]
    fn signed_hadamard_norm_and_probe_mode() {
        let op = build_signed_hadamard(1024, 2).unwrap();
        let d = check_semi_random(&op, DiagnosticMode::Probe).unwrap();
        assert!((d.psi_op_norm - 1.0).abs() < 1e-6);
        assert!(d.max_diag_gram_dev < 1e-10);
        assert!(d.psi_inf_norm > 0.0 && d.psi_inf_norm <= 1.0);
    }
}
