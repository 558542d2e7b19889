//! Seeded pseudorandom generator.
//!
//! Backed by ChaCha8 (`rand_chacha`), whose output is specified independently
//! of platform and endianness. Substreams use ChaCha's 64-bit stream id, so
//! `Rng::substream(seed, i)` never overlaps `Rng::substream(seed, j)`.

use rand::seq::index;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::Scalar;

#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub const ALGORITHM: &'static str = "ChaCha8";

    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream `stream` of the generator seeded with `seed`.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// `amount` distinct indices from `0..n`, in random order.
    pub fn sample_indices(&mut self, n: usize, amount: usize) -> Vec<usize> {
        index::sample(&mut self.inner, n, amount).into_vec()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

/// `n` uniform draws in `[0, 1)`.
pub fn rng_uniform<T: Scalar>(rng: &mut Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.uniform())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let a: Vec<f64> = rng_uniform(&mut Rng::new(42), 64);
        let b: Vec<f64> = rng_uniform(&mut Rng::new(42), 64);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn draws_in_unit_interval() {
        let mut rng = Rng::new(7);
        for v in rng_uniform::<f64>(&mut rng, 10_000) {
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn distinct_seeds_diverge() {
        let a: Vec<f64> = rng_uniform(&mut Rng::new(1), 8);
        let b: Vec<f64> = rng_uniform(&mut Rng::new(2), 8);
        assert!(a.iter().zip(&b).any(|(x, y)| x != y));
    }

    #[test]
    fn substreams_differ() {
        let a = Rng::substream(5, 0).next_u64();
        let b = Rng::substream(5, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, Rng::substream(5, 0).next_u64());
    }
}
