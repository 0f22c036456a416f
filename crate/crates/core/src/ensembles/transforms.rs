//! Orthonormal Walsh-Hadamard and the odd-length discrete sine transform.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// In-place orthonormal Walsh-Hadamard transform (natural ordering).
/// The matrix is symmetric with entries `±1/sqrt(N)`, so applying it twice
/// is the identity.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "Walsh-Hadamard length must be a power of two, got {n}"
        )));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DstPath {
    /// O(N²) with an incremental phase index into a sine table.
    Direct,
    /// Odd-extension FFT of length `2N + 1`.
    Fft,
}

/// The symmetric orthogonal sine matrix
/// `C_ij = 2 sin(2π i j / L) / sqrt(L)`, `L = 2N + 1`, `i, j = 1..N`.
#[derive(Clone)]
pub struct SineTransform {
    n: usize,
    path: DstPath,
    table: Arc<[f64]>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform")
            .field("n", &self.n)
            .field("path", &self.path)
            .finish()
    }
}

impl SineTransform {
    pub fn new(n: usize, path: DstPath) -> Self {
        let l = 2 * n + 1;
        let scale = 2.0 / (l as f64).sqrt();
        let table: Arc<[f64]> = (0..l)
            .map(|m| scale * (2.0 * PI * m as f64 / l as f64).sin())
            .collect();
        let fft = match path {
            DstPath::Direct => None,
            DstPath::Fft => Some(FftPlanner::new().plan_fft_forward(l)),
        };
        Self {
            n,
            path,
            table,
            fft,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn path(&self) -> DstPath {
        self.path
    }

    /// Entry `C_ij` with 1-based indices.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.table[(i * j) % (2 * self.n + 1)]
    }

    /// `Tr(C)`. The eigenvalues are ±1, so this is an integer up to rounding.
    pub fn trace(&self) -> f64 {
        let l = 2 * self.n + 1;
        (1..=self.n).map(|i| self.table[(i * i) % l]).sum()
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.n || out.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "sine transform of size {} applied to length {}",
                self.n,
                v.len()
            )));
        }
        match &self.fft {
            None => self.apply_direct(v, out),
            Some(fft) => self.apply_fft(fft.as_ref(), v, out),
        }
        Ok(())
    }

    fn apply_direct(&self, v: &[f64], out: &mut [f64]) {
        let l = 2 * self.n + 1;
        for (i, o) in (1..=self.n).zip(out.iter_mut()) {
            let mut idx = 0;
            let mut acc = 0.0;
            for &x in v {
                idx += i;
                if idx >= l {
                    idx -= l;
                }
                acc += self.table[idx] * x;
            }
            *o = acc;
        }
    }

    fn apply_fft(&self, fft: &dyn Fft<f64>, v: &[f64], out: &mut [f64]) {
        let l = 2 * self.n + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); l];
        for (j, &x) in v.iter().enumerate() {
            buf[j + 1].re = x;
            buf[l - 1 - j].re = -x;
        }
        fft.process(&mut buf);
        // X_k = -2i Σ_j v_j sin(2π k j / L)
        let s = 1.0 / (l as f64).sqrt();
        for (k, o) in out.iter_mut().enumerate() {
            *o = -buf[k + 1].im * s;
        }
    }
}

/// `C v` by the direct path.
pub fn dst_matvec(v: &[f64]) -> Vec<f64> {
    let t = SineTransform::new(v.len(), DstPath::Direct);
    let mut out = vec![0.0; v.len()];
    t.apply(v, &mut out).expect("lengths match by construction");
    out
}
