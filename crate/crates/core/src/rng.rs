//! Seeded random streams with hierarchical splitting.
//!
//! A stream is identified by a 64-bit seed plus a path of labels. The
//! ChaCha key is a SHA-256 digest of that identity, so a child stream obtained
//! with [`RandomStream::split`] never depends on how many draws its parent has
//! consumed, nor on which thread consumes it.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::Real;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    path: Vec<String>,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::at(seed, Vec::new())
    }

    fn at(seed: u64, path: Vec<String>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"auscult/stream");
        hasher.update(seed.to_le_bytes());
        for label in &path {
            hasher.update((label.len() as u64).to_le_bytes());
            hasher.update(label.as_bytes());
        }
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed,
            path,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Independent child stream; does not advance `self`.
    pub fn split(&self, label: impl Into<String>) -> Self {
        let mut path = self.path.clone();
        path.push(label.into());
        Self::at(self.seed, path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.gen::<f64>()
    }

    /// Uniform integer in `[lo, hi]` (both inclusive).
    pub fn randint(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn choose<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("choice from empty slice")
    }

    /// Bernoulli gate: `true` with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// `n` i.i.d. standard normal draws.
    pub fn normal_vec<T: Real>(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| T::lit(self.normal())).collect()
    }
}
