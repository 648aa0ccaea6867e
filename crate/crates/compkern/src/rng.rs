//! Counter-based random number generation.
//!
//! All randomness in this crate (fold shuffles, synthetic data) flows through
//! [`CounterRng`], a SplitMix64 stream evaluated at `seed XOR golden * counter`.
//! The generator is stateless apart from the counter, so a (seed, counter)
//! pair always yields the same draw on every platform and thread layout.
//! Normal variates use the Box-Muller transform on the uniform stream.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Deterministic counter-based generator (SplitMix64 core, Box-Muller normals).
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
    cached_normal: Option<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl CounterRng {
    /// Create a stream for `seed`. Distinct seeds give independent streams.
    pub fn new(seed: u64) -> Self {
        CounterRng {
            seed,
            counter: 0,
            cached_normal: None,
        }
    }

    /// Derive an independent substream, e.g. one per replicate.
    pub fn substream(seed: u64, stream: u64) -> Self {
        CounterRng::new(splitmix64(seed ^ GOLDEN.wrapping_mul(stream.wrapping_add(1))))
    }

    /// Next raw 64-bit draw.
    pub fn next_u64(&mut self) -> u64 {
        let z = self.seed.wrapping_add(GOLDEN.wrapping_mul(self.counter.wrapping_add(1)));
        self.counter += 1;
        splitmix64(z)
    }

    /// Uniform draw in the half-open interval [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in (0, 1]; safe as a logarithm argument.
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be > 0.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Modulo bias is < 2^-53 * n for the sizes used here.
        (self.next_f64() * n as f64) as usize % n
    }

    /// Standard normal draw (Box-Muller, pairs cached).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }
}
