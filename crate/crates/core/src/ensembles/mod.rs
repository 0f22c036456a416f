//! Semi-random operators `M = S Ψ S`, the random couplings of the Ising
//! models, and their centered resolvents, all exposed through matrix-vector
//! products.
//!
//! Every operator except [`build_random_orthogonal`] is immutable and can be
//! applied concurrently. The random orthogonal one grows its Householder
//! store on first contact with a new direction and serializes its products
//! behind a lock; share it between calls, not between threads that need
//! parallel throughput.

mod dense;
mod diagnostics;
mod dice;
mod resolvent;
mod transforms;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub use dense::{build_wigner_coupling, build_wishart_coupling, EntryKind, DENSE_CAP};
pub use diagnostics::{check_semi_random, DiagnosticMode, EnsembleDiagnostics};
pub use dice::{HaarDice, DEFAULT_BYTE_CAP};
pub use resolvent::{centered_resolvent, involution_resolvent, spectral_resolvent};
pub use transforms::{dst_matvec, fwht, fwht_in_place, DstPath, SineTransform};

/// A symmetric linear map given by its action on vectors.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()>;

    /// Dense storage, when the operator keeps one.
    fn dense(&self) -> Option<&DMatrix<f64>> {
        None
    }

    /// Kernel of `f(A)` when the eigenbasis is available in factored form.
    fn map_spectrum(&self, _f: &dyn Fn(f64) -> f64) -> Option<Arc<dyn Kernel>> {
        None
    }
}

/// An `N × N` symmetric operator with its variance constant `σψ²`.
#[derive(Clone)]
pub struct MatrixOperator {
    dim: usize,
    sigma_psi_sq: f64,
    label: String,
    seed: Option<u64>,
    spectrum: Option<Arc<[f64]>>,
    kernel: Arc<dyn Kernel>,
}

impl fmt::Debug for MatrixOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixOperator")
            .field("dim", &self.dim)
            .field("sigma_psi_sq", &self.sigma_psi_sq)
            .field("label", &self.label)
            .field("seed", &self.seed)
            .finish()
    }
}

impl MatrixOperator {
    /// Wraps a custom kernel. `spectrum`, if given, must be the full list of
    /// eigenvalues.
    pub fn from_kernel(
        dim: usize,
        kernel: Arc<dyn Kernel>,
        sigma_psi_sq: f64,
        label: impl Into<String>,
        seed: Option<u64>,
        spectrum: Option<Arc<[f64]>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "operator dimension must be positive".into(),
            ));
        }
        if let Some(s) = &spectrum {
            if s.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "spectrum has {} values for dimension {dim}",
                    s.len()
                )));
            }
        }
        Ok(Self {
            dim,
            sigma_psi_sq,
            label: label.into(),
            seed,
            spectrum,
            kernel,
        })
    }

    /// Dense symmetric matrix. Symmetry is checked exactly.
    pub fn from_dense(
        m: DMatrix<f64>,
        label: impl Into<String>,
        sigma_psi_sq: f64,
    ) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument(
                "dense operator must be square".into(),
            ));
        }
        if m != m.transpose() {
            return Err(Error::InvalidArgument(
                "dense operator must be symmetric".into(),
            ));
        }
        let n = m.nrows();
        Self::from_kernel(
            n,
            Arc::new(DenseKernel { m }),
            sigma_psi_sq,
            label,
            None,
            None,
        )
    }

    pub fn identity(n: usize) -> Result<Self> {
        let spectrum: Arc<[f64]> = vec![1.0; n].into();
        let k = Arc::new(AffineKernel::scalar(1.0));
        Self::from_kernel(n, k, 1.0, "identity", None, Some(spectrum))
    }

    pub fn zero(n: usize) -> Result<Self> {
        let spectrum: Arc<[f64]> = vec![0.0; n].into();
        let k = Arc::new(AffineKernel::scalar(0.0));
        Self::from_kernel(n, k, 0.0, "zero", None, Some(spectrum))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_psi_sq(&self) -> f64 {
        self.sigma_psi_sq
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_sigma_psi_sq(mut self, s: f64) -> Self {
        self.sigma_psi_sq = s;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    /// Eigenvalues known by construction (not computed).
    pub fn known_spectrum(&self) -> Option<&Arc<[f64]>> {
        self.spectrum.as_ref()
    }

    /// Eigenvalues: the known ones, or a dense symmetric eigensolve when the
    /// operator is stored densely.
    pub fn eigenvalues(&self) -> Option<Arc<[f64]>> {
        if let Some(s) = &self.spectrum {
            return Some(Arc::clone(s));
        }
        let m = self.kernel.dense()?;
        Some(m.clone().symmetric_eigenvalues().iter().copied().collect())
    }

    pub fn dense_matrix(&self) -> Option<&DMatrix<f64>> {
        self.kernel.dense()
    }

    /// `Tr(A)` when it is available without estimation.
    pub fn exact_trace(&self) -> Option<f64> {
        if let Some(s) = &self.spectrum {
            return Some(s.iter().sum());
        }
        self.kernel.dense().map(|m| m.trace())
    }

    /// `true` when the known spectrum is contained in {-1, +1}.
    pub fn is_involution(&self) -> bool {
        self.spectrum
            .as_ref()
            .is_some_and(|s| s.iter().all(|&x| (x.abs() - 1.0).abs() < 1e-12))
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.dim || out.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "operator {} of dimension {} applied to a vector of length {}",
                self.label,
                self.dim,
                v.len()
            )));
        }
        self.kernel.apply(v, out)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `a I + b A`, sharing this operator's kernel.
    pub fn affine(&self, a: f64, b: f64, sigma_psi_sq: f64, label: impl Into<String>) -> Self {
        let spectrum = self
            .spectrum
            .as_ref()
            .map(|s| s.iter().map(|&x| a + b * x).collect::<Arc<[f64]>>());
        Self {
            dim: self.dim,
            sigma_psi_sq,
            label: label.into(),
            seed: self.seed,
            spectrum,
            kernel: Arc::new(AffineKernel {
                a,
                b,
                inner: Some(Arc::clone(&self.kernel)),
            }),
        }
    }
}

#[derive(Debug)]
struct DenseKernel {
    m: DMatrix<f64>,
}

impl Kernel for DenseKernel {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        // symmetric, so row i equals column i, which is contiguous
        for (o, col) in out.iter_mut().zip(self.m.column_iter()) {
            *o = col.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    fn dense(&self) -> Option<&DMatrix<f64>> {
        Some(&self.m)
    }
}

#[derive(Debug)]
struct AffineKernel {
    a: f64,
    b: f64,
    inner: Option<Arc<dyn Kernel>>,
}

impl AffineKernel {
    fn scalar(a: f64) -> Self {
        Self {
            a,
            b: 0.0,
            inner: None,
        }
    }
}

impl Kernel for AffineKernel {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.inner {
            Some(k) => {
                k.apply(v, out)?;
                for (o, x) in out.iter_mut().zip(v) {
                    *o = self.a * x + self.b * *o;
                }
            }
            None => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = self.a * x;
                }
            }
        }
        Ok(())
    }

    fn map_spectrum(&self, f: &dyn Fn(f64) -> f64) -> Option<Arc<dyn Kernel>> {
        let (a, b) = (self.a, self.b);
        match &self.inner {
            Some(k) => k.map_spectrum(&|x| f(a + b * x)),
            None => Some(Arc::new(AffineKernel::scalar(f(a)))),
        }
    }
}

#[derive(Debug)]
struct SineKernel {
    signs: Arc<[f64]>,
    dst: SineTransform,
}

impl Kernel for SineKernel {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let tmp: Vec<f64> = v
            .iter()
            .zip(self.signs.iter())
            .map(|(x, s)| x * s)
            .collect();
        self.dst.apply(&tmp, out)?;
        out.iter_mut()
            .zip(self.signs.iter())
            .for_each(|(o, s)| *o *= s);
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Basis {
    /// Columns of `D H`.
    Hadamard { signs: Arc<[f64]> },
    /// Columns of a lazily sampled Haar matrix.
    Haar(Arc<HaarDice>),
}

/// `Q diag(d) Qᵀ` for an orthogonal `Q` given in factored form.
#[derive(Debug)]
struct DiagonalizedKernel {
    basis: Basis,
    diag: Arc<[f64]>,
}

impl Kernel for DiagonalizedKernel {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.basis {
            Basis::Hadamard { signs } => {
                for ((o, x), s) in out.iter_mut().zip(v).zip(signs.iter()) {
                    *o = x * s;
                }
                fwht_in_place(out)?;
                out.iter_mut()
                    .zip(self.diag.iter())
                    .for_each(|(o, d)| *o *= d);
                fwht_in_place(out)?;
                out.iter_mut().zip(signs.iter()).for_each(|(o, s)| *o *= s);
            }
            Basis::Haar(u) => {
                let mut tmp = vec![0.0; v.len()];
                u.apply_transpose(v, &mut tmp)?;
                tmp.iter_mut()
                    .zip(self.diag.iter())
                    .for_each(|(t, d)| *t *= d);
                u.apply(&tmp, out)?;
            }
        }
        Ok(())
    }

    fn map_spectrum(&self, f: &dyn Fn(f64) -> f64) -> Option<Arc<dyn Kernel>> {
        Some(Arc::new(DiagonalizedKernel {
            basis: self.basis.clone(),
            diag: self.diag.iter().map(|&x| f(x)).collect(),
        }))
    }
}

#[derive(Debug)]
struct GaugeKernel {
    h: Arc<[f64]>,
    inner: Arc<dyn Kernel>,
}

impl Kernel for GaugeKernel {
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let tmp: Vec<f64> = v.iter().zip(self.h.iter()).map(|(x, h)| h * x).collect();
        self.inner.apply(&tmp, out)?;
        out.iter_mut().zip(self.h.iter()).for_each(|(o, h)| *o *= h);
        Ok(())
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    Ok(())
}

fn check_pow2(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "Hadamard-based operators need N = 2^k ≥ 2, got {n}"
        )));
    }
    Ok(())
}

fn involution_spectrum(n: usize, trace: f64) -> Arc<[f64]> {
    let t = trace.round() as i64;
    let plus = ((n as i64 + t) / 2).clamp(0, n as i64) as usize;
    (0..n).map(|i| if i < plus { 1.0 } else { -1.0 }).collect()
}

/// `S C S` with i.i.d. random signs drawn from `seed`.
pub fn build_signed_sine(n: usize, seed: u64) -> Result<MatrixOperator> {
    check_dim(n)?;
    let signs = rng::signs(n, &mut rng::stream(seed, Domain::Signs));
    let op = sine_operator(signs, DstPath::Fft)?;
    Ok(MatrixOperator {
        seed: Some(seed),
        label: "signed-sine".into(),
        ..op
    })
}

/// `S C S` with the given ±1 signs; all-ones gives the deterministic sine
/// matrix.
pub fn sine_operator(signs: Vec<f64>, path: DstPath) -> Result<MatrixOperator> {
    let n = signs.len();
    check_dim(n)?;
    check_signs(&signs)?;
    let dst = SineTransform::new(n, path);
    let spectrum = involution_spectrum(n, dst.trace());
    let kernel = Arc::new(SineKernel {
        signs: signs.into(),
        dst,
    });
    MatrixOperator::from_kernel(n, kernel, 1.0, "sine", None, Some(spectrum))
}

fn check_signs(h: &[f64]) -> Result<()> {
    if let Some((i, &x)) = h.iter().enumerate().find(|(_, &x)| x != 1.0 && x != -1.0) {
        return Err(Error::InvalidArgument(format!(
            "sign vector entry {i} is {x}, expected ±1"
        )));
    }
    Ok(())
}

/// `S H Λ H S` with `S`, `Λ` i.i.d. ±1 diagonals.
pub fn build_signed_hadamard(n: usize, seed: u64) -> Result<MatrixOperator> {
    check_pow2(n)?;
    let signs: Arc<[f64]> = rng::signs(n, &mut rng::stream(seed, Domain::Signs)).into();
    let diag: Arc<[f64]> = rng::signs(n, &mut rng::stream(seed, Domain::Spectrum)).into();
    let kernel = Arc::new(DiagonalizedKernel {
        basis: Basis::Hadamard { signs },
        diag: Arc::clone(&diag),
    });
    MatrixOperator::from_kernel(n, kernel, 1.0, "signed-hadamard", Some(seed), Some(diag))
}

/// `U Λ Uᵀ` with Haar `U` (lazily sampled) and `Λ` i.i.d. ±1.
pub fn build_random_orthogonal(n: usize, seed: u64) -> Result<MatrixOperator> {
    build_random_orthogonal_with_cap(n, seed, DEFAULT_BYTE_CAP)
}

pub fn build_random_orthogonal_with_cap(
    n: usize,
    seed: u64,
    cap_bytes: usize,
) -> Result<MatrixOperator> {
    check_dim(n)?;
    let diag: Arc<[f64]> = rng::signs(n, &mut rng::stream(seed, Domain::Spectrum)).into();
    let dice = HaarDice::with_cap(n, rng::stream(seed, Domain::Haar), cap_bytes);
    let kernel = Arc::new(DiagonalizedKernel {
        basis: Basis::Haar(Arc::new(dice)),
        diag: Arc::clone(&diag),
    });
    MatrixOperator::from_kernel(n, kernel, 1.0, "random-orthogonal", Some(seed), Some(diag))
}

/// `D H P Λ Pᵀ H D` with random signs `D`, a seeded shuffle `P` and the given
/// spectrum `Λ`. `σψ²` is the mean of `Λ²`.
pub fn build_sign_perm(spectrum: &[f64], seed: u64) -> Result<MatrixOperator> {
    let n = spectrum.len();
    check_pow2(n)?;
    if spectrum.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("spectrum must be finite".into()));
    }
    let signs: Arc<[f64]> = rng::signs(n, &mut rng::stream(seed, Domain::Signs)).into();
    let perm = rng::permutation(n, &mut rng::stream(seed, Domain::Permutation));
    let diag: Arc<[f64]> = perm.iter().map(|&p| spectrum[p]).collect();
    let s2 = diag.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let kernel = Arc::new(DiagonalizedKernel {
        basis: Basis::Hadamard { signs },
        diag: Arc::clone(&diag),
    });
    MatrixOperator::from_kernel(n, kernel, s2, "sign-perm", Some(seed), Some(diag))
}

/// `diag(h) A diag(h)` for a ±1 vector `h`.
pub fn gauge_conjugate(op: &MatrixOperator, h: &[f64]) -> Result<MatrixOperator> {
    if h.len() != op.dim() {
        return Err(Error::InvalidArgument(format!(
            "gauge vector has length {} for dimension {}",
            h.len(),
            op.dim()
        )));
    }
    check_signs(h)?;
    // a diagonal ±1 similarity keeps the spectrum
    let spectrum = op.eigenvalues();
    Ok(MatrixOperator {
        label: format!("gauge({})", op.label),
        spectrum,
        kernel: Arc::new(GaugeKernel {
            h: h.into(),
            inner: Arc::clone(&op.kernel),
        }),
        ..op.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use crate::rng::gaussian_vec;

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = norm(a).max(norm(b)).max(1e-300);
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    fn check_linear_symmetric(op: &MatrixOperator, trials: usize) {
        let n = op.dim();
        let mut r = rng::stream(77, Domain::Custom(3));
        for _ in 0..trials {
            let u = gaussian_vec(n, 1.0, &mut r);
            let v = gaussian_vec(n, 1.0, &mut r);
            let (a, b) = (0.7, -1.3);
            let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let mu = op.apply(&u).unwrap();
            let mv = op.apply(&v).unwrap();
            let lhs = op.apply(&comb).unwrap();
            let rhs: Vec<f64> = mu.iter().zip(&mv).map(|(x, y)| a * x + b * y).collect();
            assert!(rel_close(&lhs, &rhs, 1e-10), "{}", op.label());
            let s1 = dot(&u, &mv);
            let s2 = dot(&mu, &v);
            assert!(
                (s1 - s2).abs() <= 1e-10 * (norm(&u) * norm(&mv)),
                "{}",
                op.label()
            );
        }
    }

    fn check_involution(op: &MatrixOperator) {
        let v = gaussian_vec(op.dim(), 1.0, &mut rng::stream(5, Domain::Custom(4)));
        let m2 = op.apply(&op.apply(&v).unwrap()).unwrap();
        assert!(rel_close(&m2, &v, 1e-9), "{}", op.label());
    }

    #[test]
    fn structured_operators_are_linear_symmetric_involutions() {
        let ops = vec![
            build_signed_sine(300, 1).unwrap(),
            build_signed_hadamard(256, 1).unwrap(),
            build_random_orthogonal(200, 1).unwrap(),
        ];
        for op in &ops {
            check_linear_symmetric(op, 16);
            check_involution(op);
            assert!(op.is_involution());
            assert_eq!(op.sigma_psi_sq(), 1.0);
        }
        let sp = build_sign_perm(
            &(0..128)
                .map(|i| (i as f64 / 40.0).cos())
                .collect::<Vec<_>>(),
            3,
        )
        .unwrap();
        check_linear_symmetric(&sp, 16);
    }

    #[test]
    fn seeds_change_the_operator() {
        let v = gaussian_vec(64, 1.0, &mut rng::stream(1, Domain::Custom(9)));
        for build in [
            build_signed_sine,
            build_signed_hadamard,
            build_random_orthogonal,
        ] {
            let a = build(64, 1).unwrap().apply(&v).unwrap();
            let b = build(64, 2).unwrap().apply(&v).unwrap();
            let c = build(64, 1).unwrap().apply(&v).unwrap();
            assert_ne!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn sine_spectrum_matches_trace() {
        let op = sine_operator(vec![1.0; 101], DstPath::Direct).unwrap();
        let mut tr = 0.0;
        for j in 0..101 {
            let mut e = vec![0.0; 101];
            e[j] = 1.0;
            tr += op.apply(&e).unwrap()[j];
        }
        assert!((op.exact_trace().unwrap() - tr).abs() < 1e-9);
    }

    #[test]
    fn gauge_with_unit_field_is_identical() {
        let op = build_signed_hadamard(128, 4).unwrap();
        let g = gauge_conjugate(&op, &vec![1.0; 128]).unwrap();
        let v = gaussian_vec(128, 1.0, &mut rng::stream(2, Domain::Custom(1)));
        assert_eq!(op.apply(&v).unwrap(), g.apply(&v).unwrap());
        let mut h = vec![1.0; 128];
        h[3] = 0.5;
        assert!(gauge_conjugate(&op, &h).is_err());
    }

    #[test]
    fn dimension_checks() {
        assert!(build_signed_hadamard(100, 1).is_err());
        assert!(build_signed_sine(1, 1).is_err());
        let op = build_signed_sine(8, 1).unwrap();
        assert!(op.apply(&[1.0; 7]).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(MatrixOperator::from_dense(m, "bad", 1.0).is_err());
    }

    #[test]
    fn affine_and_spectrum_map_agree() {
        let op = build_signed_hadamard(64, 9).unwrap();
        let v = gaussian_vec(64, 1.0, &mut rng::stream(3, Domain::Custom(1)));
        let aff = op.affine(0.5, 2.0, 1.0, "aff");
        let mapped = op.kernel().map_spectrum(&|x| 0.5 + 2.0 * x).unwrap();
        let mut out = vec![0.0; 64];
        mapped.apply(&v, &mut out).unwrap();
        assert!(rel_close(&aff.apply(&v).unwrap(), &out, 1e-12));
    }
}
