//! Reproducible named random streams.
//!
//! A stream is identified by `(master_seed, label)`. The pair is hashed with
//! SHA-256 and the digest seeds a ChaCha8 generator, so a stream's draws depend
//! on nothing but its own identity: adding a new consumer under a new label
//! never shifts the draws seen by existing ones.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(master_seed: u64, label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}

/// Derive a 64-bit seed from `(master_seed, label)`; used to key whole runs.
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    let d = digest(master_seed, label);
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Open the stream named `label` under `master_seed`.
///
/// # Panics
///
/// Panics if `label` is empty.
pub fn derive_stream(master_seed: u64, label: &str) -> RngStream {
    assert!(!label.is_empty(), "stream label must be non-empty");
    RngStream {
        label: label.to_owned(),
        rng: ChaCha8Rng::from_seed(digest(master_seed, label)),
    }
}

#[derive(Clone, Debug)]
pub struct RngStream {
    label: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform draw on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[lo, hi)`; returns `lo` when the interval is degenerate.
    pub fn uniform_between(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.uniform();
        if hi <= lo {
            lo
        } else {
            lo + u * (hi - lo)
        }
    }

    /// `true` with probability `p`; `p` outside `[0, 1]` is clamped.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p.clamp(0.0, 1.0)
    }

    /// Uniform integer on the closed range `[lo, hi]`.
    ///
    /// Uses rejection on the high bits so every value is exactly equally likely.
    pub fn int_in_range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty integer range [{lo}, {hi}]");
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return self.rng.next_u64() as i64;
        }
        let span = span as u64;
        let zone = u64::MAX - (u64::MAX % span);
        loop {
            let x = self.rng.next_u64();
            if x < zone {
                return lo + (x % span) as i64;
            }
        }
    }

    /// Index drawn with probability proportional to `weights`.
    ///
    /// # Panics
    ///
    /// Panics if the weights are empty, negative, or sum to zero.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(
            !weights.is_empty() && total > 0.0 && weights.iter().all(|w| *w >= 0.0),
            "categorical weights must be non-negative with a positive sum"
        );
        let target = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        // Rounding can leave `target` a hair above the running sum.
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
