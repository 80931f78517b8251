//! Deterministic seeded RNG used everywhere randomness is needed.
//!
//! All draws go through ChaCha20 so that identical (config, seed) pairs
//! reproduce bit-identical runs on any platform. Separate purposes derive
//! separate streams (`SeededRng::derive`) so adding a consumer never shifts
//! another consumer's draws.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub struct SeededRng {
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { inner: ChaCha20Rng::seed_from_u64(seed) }
    }

    /// Independent stream for a named purpose under a base seed.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeededRng { inner: rng }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.gen::<f64>()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1: f64 = self.inner.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = self.inner.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn gen_range(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.gen_range(lo..hi)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// `count` distinct indices from `0..n`, ascending (partial Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = self.gen_range(i, n);
            pool.swap(i, j);
        }
        let mut picked = pool[..count].to_vec();
        picked.sort_unstable();
        picked
    }

    /// Uniform random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.gen_range(0, i + 1);
            p.swap(i, j);
        }
        p
    }
}
