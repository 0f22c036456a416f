//! Haar-distributed orthogonal matrices applied lazily ("Householder dice").
//!
//! The matrix is kept in the factored form `U = A · diag(I_k, Ũ) · B`, where
//! `A = A_1 ⋯ A_k` and `B = B_k ⋯ B_1` are Householder reflectors and `Ũ` is a
//! still-unrevealed Haar matrix on the trailing `N - k` coordinates. Each
//! product that touches a new direction of `Ũ` reveals one column (or row)
//! of it with a fresh uniform unit vector and appends one reflector to each
//! side. Earlier answers are never contradicted, so the sequence of products
//! is consistent with a single Haar draw.

use std::sync::Mutex;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};
use crate::rng::StreamRng;

/// Tail norms below this fraction of the full norm are treated as zero.
const TAIL_TOL: f64 = 1e-13;

/// Default cap on reflector storage (bytes).
pub const DEFAULT_BYTE_CAP: usize = 1 << 30;

/// Unit Householder vector acting on coordinates `offset..N`; a zero vector
/// stands for the identity.
#[derive(Debug, Clone)]
struct Reflector {
    offset: usize,
    v: Vec<f64>,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.offset..];
        let c = 2.0 * dot(&self.v, tail);
        if c != 0.0 {
            for (t, v) in tail.iter_mut().zip(&self.v) {
                *t -= c * v;
            }
        }
    }

    fn from_direction(offset: usize, mut v: Vec<f64>) -> Self {
        let nn = norm_sq(&v);
        if nn > 0.0 {
            let s = 1.0 / nn.sqrt();
            v.iter_mut().for_each(|x| *x *= s);
        } else {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        Self { offset, v }
    }

    /// Maps the tail vector `t` onto a multiple of its first coordinate axis.
    fn to_axis(offset: usize, t: &[f64]) -> Self {
        let tn = norm_sq(t).sqrt();
        let mut v = t.to_vec();
        v[0] += if t[0] >= 0.0 { tn } else { -tn };
        Self::from_direction(offset, v)
    }

    /// Swaps the first tail axis with the unit vector `g`.
    fn axis_to(offset: usize, g: &[f64]) -> Self {
        let mut v: Vec<f64> = g.iter().map(|x| -x).collect();
        v[0] += 1.0;
        Self::from_direction(offset, v)
    }
}

#[derive(Debug)]
struct DiceState {
    a: Vec<Reflector>,
    b: Vec<Reflector>,
    rng: StreamRng,
    bytes: usize,
}

/// Lazily sampled Haar orthogonal matrix. Products mutate the internal
/// reflector store, so calls are serialized by an internal lock.
#[derive(Debug)]
pub struct HaarDice {
    n: usize,
    cap_bytes: usize,
    state: Mutex<DiceState>,
}

impl HaarDice {
    pub fn new(n: usize, rng: StreamRng) -> Self {
        Self::with_cap(n, rng, DEFAULT_BYTE_CAP)
    }

    pub fn with_cap(n: usize, rng: StreamRng, cap_bytes: usize) -> Self {
        Self {
            n,
            cap_bytes,
            state: Mutex::new(DiceState {
                a: Vec::new(),
                b: Vec::new(),
                rng,
                bytes: 0,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of revealed directions.
    pub fn revealed(&self) -> usize {
        self.lock().a.len()
    }

    pub fn stored_bytes(&self) -> usize {
        self.lock().bytes
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, DiceState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "Haar operator of size {} applied to length {}",
                self.n,
                v.len()
            )));
        }
        Ok(())
    }

    fn reserve(&self, st: &mut DiceState, k: usize) -> Result<()> {
        let add = 2 * (self.n - k) * std::mem::size_of::<f64>();
        if st.bytes + add > self.cap_bytes {
            return Err(Error::Resource(format!(
                "Householder store would exceed {} bytes ({} directions revealed, N = {})",
                self.cap_bytes, k, self.n
            )));
        }
        st.bytes += add;
        Ok(())
    }

    fn random_unit(rng: &mut StreamRng, len: usize) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..len)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let nn = norm_sq(&g);
            if nn > 0.0 {
                let s = 1.0 / nn.sqrt();
                return g.into_iter().map(|x| x * s).collect();
            }
        }
    }

    fn tail_is_live(u: &[f64], k: usize) -> bool {
        let total = norm_sq(u);
        k < u.len() && norm_sq(&u[k..]) > TAIL_TOL * TAIL_TOL * total && total > 0.0
    }

    /// `out = U v`
    pub fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(v)?;
        out.copy_from_slice(v);
        let mut guard = self.lock();
        let st = &mut *guard;
        for r in &st.b {
            r.apply(out);
        }
        let k = st.b.len();
        if Self::tail_is_live(out, k) {
            self.reserve(st, k)?;
            let b = Reflector::to_axis(k, &out[k..]);
            b.apply(out);
            let g = Self::random_unit(&mut st.rng, self.n - k);
            st.a.push(Reflector::axis_to(k, &g));
            st.b.push(b);
        } else {
            out[k..].iter_mut().for_each(|x| *x = 0.0);
        }
        for r in st.a.iter().rev() {
            r.apply(out);
        }
        Ok(())
    }

    /// `out = Uᵀ w`
    pub fn apply_transpose(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(w)?;
        out.copy_from_slice(w);
        let mut guard = self.lock();
        let st = &mut *guard;
        for r in &st.a {
            r.apply(out);
        }
        let k = st.a.len();
        if Self::tail_is_live(out, k) {
            self.reserve(st, k)?;
            let a = Reflector::to_axis(k, &out[k..]);
            a.apply(out);
            let g = Self::random_unit(&mut st.rng, self.n - k);
            st.b.push(Reflector::axis_to(k, &g));
            st.a.push(a);
        } else {
            out[k..].iter_mut().for_each(|x| *x = 0.0);
        }
        for r in st.b.iter().rev() {
            r.apply(out);
        }
        Ok(())
    }
}
