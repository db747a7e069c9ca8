//! Minimal deterministic PRNG.
//!
//! Model generation and harness sampling must be byte-reproducible across
//! platforms and releases, so the crate carries its own splitmix64 instead
//! of depending on an external generator whose stream may change.

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[0, n)`.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as usize % n
    }

    /// Derive an independent stream for a sub-task, keyed by an index.
    pub fn fork(&self, key: u64) -> SplitMix64 {
        let mut base = SplitMix64::new(self.state ^ key.wrapping_mul(0xA24B_AED4_963E_E407));
        base.next_u64();
        base
    }
}
