//! Seeded random stream used by dataset splitting and augmentation.
//!
//! The generator is SplitMix64 (64-bit state, state seeded directly with the
//! user seed). All derived draws are defined here so that results depend
//! only on the seed and the draw order, never on a library's sampling code:
//!
//! * `next_f64`: top 53 bits of one output, scaled by 2^-53, in `[0, 1)`.
//! * `uniform(lo, hi)`: `lo + (hi - lo) * next_f64()`.
//! * `bernoulli(p)`: `next_f64() < p`.
//! * `below(n)`: Lemire's multiply-shift with rejection, unbiased.
//! * `shuffle`: Fisher-Yates from the last index down, `j = below(i + 1)`.
//!
//! Independent streams for parallel work come from [`RngState::for_stream`].

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: SplitMix64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Stream `index` of `seed`: the state is the first output of a
    /// generator seeded with `first_output(seed) ^ index`.
    pub fn for_stream(seed: u64, index: u64) -> Self {
        let base = SplitMix64::seed_from_u64(seed).next_u64();
        let state = SplitMix64::seed_from_u64(base ^ index).next_u64();
        Self {
            seed,
            inner: SplitMix64::seed_from_u64(state),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = self.next_u64() as u128 * n as u128;
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_splitmix_outputs() {
        // first outputs of the reference splitmix64.c for seed 1477776061723855037
        let mut r = RngState::new(1477776061723855037);
        assert_eq!(r.next_u64(), 1985237415132408290);
        assert_eq!(r.next_u64(), 2979275885539914483);
    }

    #[test]
    fn floats_in_unit_interval() {
        let mut r = RngState::new(7);
        for _ in 0..10_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            let v = r.uniform(-15.0, 15.0);
            assert!((-15.0..15.0).contains(&v));
        }
    }

    #[test]
    fn bernoulli_edges() {
        let mut r = RngState::new(3);
        assert!((0..1000).all(|_| !r.bernoulli(0.0)));
        assert!((0..1000).all(|_| r.bernoulli(1.0)));
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let mut r = RngState::new(11);
        let mut hist = [0u32; 6];
        for _ in 0..60_000 {
            hist[r.below(6) as usize] += 1;
        }
        for h in hist {
            assert!((9_000..11_000).contains(&h), "{hist:?}");
        }
        assert_eq!(r.below(1), 0);
    }

    #[test]
    fn shuffle_is_a_deterministic_permutation() {
        let mut a: Vec<u32> = (0..100).collect();
        let mut b = a.clone();
        RngState::new(42).shuffle(&mut a);
        RngState::new(42).shuffle(&mut b);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        let mut c: Vec<u32> = (0..100).collect();
        RngState::new(43).shuffle(&mut c);
        assert_ne!(a, c);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let x: Vec<u64> = (0..4).map(|i| RngState::for_stream(9, i).next_u64()).collect();
        let y: Vec<u64> = (0..4).map(|i| RngState::for_stream(9, i).next_u64()).collect();
        assert_eq!(x, y);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(x[i], x[j]);
            }
        }
        assert_eq!(RngState::for_stream(9, 2).seed(), 9);
    }
}
