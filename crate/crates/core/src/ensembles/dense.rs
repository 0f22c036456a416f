//! Dense random couplings: Wigner (SK) and sample-covariance (Hopfield).

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DenseKernel, MatrixOperator};
use crate::error::{Error, Result};
use crate::rng::{self, Domain, StreamRng};

/// Largest dimension stored densely.
pub const DENSE_CAP: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntryKind {
    #[default]
    Rademacher,
    GaussianSymmetric,
}

impl EntryKind {
    fn draw(self, rng: &mut StreamRng) -> f64 {
        match self {
            EntryKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryKind::GaussianSymmetric => rng.sample(StandardNormal),
        }
    }
}

impl std::str::FromStr for EntryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(EntryKind::Rademacher),
            "gaussian" | "gaussian_symmetric" | "gaussian-symmetric" => {
                Ok(EntryKind::GaussianSymmetric)
            }
            _ => Err(Error::InvalidArgument(format!("unknown entry kind {s:?}"))),
        }
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    if n > DENSE_CAP {
        return Err(Error::Resource(format!(
            "dense coupling of dimension {n} exceeds the cap {DENSE_CAP}"
        )));
    }
    Ok(())
}

fn frobenius_per_dim(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>() / m.nrows() as f64
}

/// `J = W / sqrt(N)` with symmetric `W`, unit off-diagonal and variance-2
/// diagonal entries. `σψ²` is set to the realized `Tr(J²)/N`.
pub fn build_wigner_coupling(n: usize, seed: u64, kind: EntryKind) -> Result<MatrixOperator> {
    check_cap(n)?;
    let mut rng = rng::stream(seed, Domain::Entries);
    let s = 1.0 / (n as f64).sqrt();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut x = kind.draw(&mut rng) * s;
            if i == j {
                x *= std::f64::consts::SQRT_2;
            }
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    let s2 = frobenius_per_dim(&m);
    MatrixOperator::from_kernel(
        n,
        Arc::new(DenseKernel { m }),
        s2,
        "wigner",
        Some(seed),
        None,
    )
}

/// `J = XᵀX / sqrt(MN)` for an `M × N` matrix `X` of unit-variance entries,
/// `M = round(phi N)`.
pub fn build_wishart_coupling(
    n: usize,
    phi: f64,
    seed: u64,
    kind: EntryKind,
) -> Result<MatrixOperator> {
    check_cap(n)?;
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "phi must be positive, got {phi}"
        )));
    }
    let rows = ((phi * n as f64).round() as usize).max(1);
    let mut rng = rng::stream(seed, Domain::Entries);
    let x = DMatrix::<f64>::from_fn(rows, n, |_, _| kind.draw(&mut rng));
    let mut m = x.transpose() * &x;
    m /= ((rows * n) as f64).sqrt();
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    let s2 = frobenius_per_dim(&m);
    MatrixOperator::from_kernel(
        n,
        Arc::new(DenseKernel { m }),
        s2,
        format!("wishart(phi={phi},M={rows})"),
        Some(seed),
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wigner_is_symmetric_with_unit_scale() {
        let j = build_wigner_coupling(200, 3, EntryKind::Rademacher).unwrap();
        let m = j.dense_matrix().unwrap();
        assert_eq!(m, &m.transpose());
        // off-diagonal entries are ±1/sqrt(N), diagonal ±sqrt(2/N)
        assert!((m[(0, 1)].abs() - 1.0 / 200f64.sqrt()).abs() < 1e-15);
        assert!((m[(5, 5)].abs() - (2.0 / 200.0f64).sqrt()).abs() < 1e-15);
        let g = build_wigner_coupling(200, 3, EntryKind::GaussianSymmetric).unwrap();
        assert!((g.sigma_psi_sq() - 1.0).abs() < 0.15);
    }

    #[test]
    fn wishart_is_psd_and_symmetric() {
        let j = build_wishart_coupling(120, 1.5, 2, EntryKind::Rademacher).unwrap();
        let m = j.dense_matrix().unwrap();
        assert_eq!(m, &m.transpose());
        let ev = j.eigenvalues().unwrap();
        assert!(ev.iter().all(|&x| x > -1e-10));
        assert!(j.label().contains("M=180"));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            build_wigner_coupling(DENSE_CAP + 1, 1, EntryKind::Rademacher),
            Err(Error::Resource(_))
        ));
    }
}
