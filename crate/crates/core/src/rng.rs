//! Seeded randomness.
//!
//! Every stream is a ChaCha8 generator keyed by the scenario seed. Stream 0
//! belongs to the global message generator and scenario setup; node `i`
//! moves with its own stream `i + 1`, so per-tick mobility does not depend on
//! the order in which nodes are stepped.

use rand::distributions::uniform::SampleUniform;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::NodeId;

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn for_node(seed: u64, node: NodeId) -> Self {
        Self::with_stream(seed, u64::from(node.0) + 1)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from the closed interval `[lo, hi]`; returns `lo` when
    /// the interval is a single point.
    pub fn uniform<T>(&mut self, lo: T, hi: T) -> T
    where
        T: SampleUniform + PartialOrd + Copy,
    {
        if lo < hi {
            self.inner.gen_range(lo..=hi)
        } else {
            lo
        }
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.inner.gen_bool(p.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..100 {
            assert_eq!(a.uniform(0.0, 1.0f64).to_bits(), b.uniform(0.0, 1.0f64).to_bits());
        }
    }

    #[test]
    fn node_streams_differ() {
        let mut a = Rng::for_node(7, NodeId(0));
        let mut b = Rng::for_node(7, NodeId(1));
        let xs: Vec<u64> = (0..8).map(|_| a.uniform(0, u64::MAX)).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.uniform(0, u64::MAX)).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn degenerate_interval() {
        let mut r = Rng::new(1);
        assert_eq!(r.uniform(3.0, 3.0), 3.0);
    }
}
