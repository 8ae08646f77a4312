//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, stream, index)`, so a batch can be split
//! across threads by partitioning the index range and the result is identical
//! to a sequential pass.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

const TWO_POW_52: f64 = 4_503_599_627_370_496.0;

/// Standard normal quantile function.
pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Maps a raw 64-bit word to the open interval (0, 1).
#[inline]
fn open_unit(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) / TWO_POW_52
}

/// A seeded family of independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    seed: u64,
    stream: u64,
}

impl CounterStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// The same seed on a different stream id.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    fn positioned(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        // one u64 consumes two 32-bit words
        rng.set_word_pos(u128::from(index) * 2);
        rng
    }

    /// Fills `out` with the uniforms at indices `start..start + out.len()`.
    pub fn fill_uniform(&self, start: u64, out: &mut [f64]) {
        let mut rng = self.positioned(start);
        for v in out.iter_mut() {
            *v = open_unit(rng.next_u64());
        }
    }

    /// Fills `out` with standard normals (inverse-CDF of the uniform stream).
    pub fn fill_normal(&self, start: u64, out: &mut [f64]) {
        self.fill_uniform(start, out);
        for v in out.iter_mut() {
            *v = std_normal_quantile(*v);
        }
    }

    /// Sequential cursor starting at `index`.
    pub fn cursor(&self, index: u64) -> Cursor {
        Cursor {
            rng: self.positioned(index),
        }
    }
}

/// Sequential reader over one stream.
#[derive(Debug, Clone)]
pub struct Cursor {
    rng: ChaCha8Rng,
}

impl Cursor {
    /// Uniform on (0, 1).
    pub fn uniform(&mut self) -> f64 {
        open_unit(self.rng.next_u64())
    }

    /// Uniform on (lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform())
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }

    /// A point drawn uniformly from the probability simplex of dimension `n`.
    pub fn simplex(&mut self, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| -self.uniform().ln()).collect();
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        w
    }
}
