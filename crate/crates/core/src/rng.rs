//! Seeded, domain-separated random streams.
//!
//! Every random draw in the crate goes through [`stream`]: the user-facing
//! seed picks the ChaCha key and a [`Domain`] picks the stream id, so the
//! initialization, the sign vectors, the spectrum and the permutation of one
//! seed are independent of each other and reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha20Rng;

/// Purpose of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Init,
    Signs,
    Spectrum,
    Permutation,
    Haar,
    Entries,
    Probes,
    Field,
    Lanczos,
    /// Free-form stream for tests and callers that need more substreams.
    Custom(u64),
}

impl Domain {
    fn stream_id(self) -> u64 {
        match self {
            Domain::Init => 1,
            Domain::Signs => 2,
            Domain::Spectrum => 3,
            Domain::Permutation => 4,
            Domain::Haar => 5,
            Domain::Entries => 6,
            Domain::Probes => 7,
            Domain::Field => 8,
            Domain::Lanczos => 9,
            Domain::Custom(k) => 0x1000_0000_0000_0000 | k,
        }
    }
}

pub fn stream(seed: u64, domain: Domain) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(domain.stream_id());
    rng
}

pub fn signs(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

pub fn gaussian_vec(n: usize, sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Uniformly random permutation of `0..n` (Fisher-Yates).
pub fn permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}
